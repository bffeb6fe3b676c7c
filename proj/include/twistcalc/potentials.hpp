#pragma once

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "twistcalc/geometry.hpp"

namespace twistcalc {

using cplx = std::complex<double>;
using MultiIndex = std::vector<int>;

// All multi-indices of length dim with |alpha| <= max_order, graded by |alpha|.
std::vector<MultiIndex> multi_indices(int dim, int max_order);
int order_of(const MultiIndex& alpha);
double factorial(int n);
double multi_factorial(const MultiIndex& alpha);

// v0(z) = eta(|z|) * angular(z/|z|)
struct Envelope {
    std::function<double(double)> eta;
    std::function<cplx(const Point&)> angular;
    double eta0 = 0.5;  // doubling window half-width, in (0, 1)
    double B0 = 2.0;    // doubling and angular bound

    cplx v0(const Point& z) const;
};

// Returns d^alpha v(z) for every alpha of multi_indices(dim, order), in that order.
using DerivativeOracle = std::function<std::vector<cplx>(const Point& z, int order)>;

struct ClassVPotential {
    std::string name;
    int dim = 3;
    std::function<cplx(const Point&)> v;
    Envelope envelope;
    double C = 1.0;  // declared constant of the derivative bound
    DerivativeOracle oracle;
    int oracle_max_order = 0;
};

// |z|^{-1} in three dimensions; the only supported dimension.
ClassVPotential coulomb(int dim = 3);
Envelope coulomb_envelope();
// eta(t) = t^{-1} (1 + |ln t|)^{-eps}
Envelope log_modified_envelope(double eps);

// d^alpha v at z for all |alpha| <= order: the oracle when it covers the order, else central
// differences with step 1e-3 |z| per axis.
std::vector<cplx> potential_derivatives(const ClassVPotential& pot, const Point& z, int order);
std::vector<cplx> finite_difference_derivatives(const std::function<cplx(const Point&)>& v,
                                                const Point& z, int order, double step);

struct DoublingReport {
    double worst_ratio = 0.0;  // sup over windows of sup eta / eta(t)
    double witness_t = 0.0;
    bool ok = false;  // worst_ratio <= B0
};

DoublingReport check_doubling(const Envelope& env, const std::vector<double>& t_samples,
                              int subdivisions = 64);

struct ClassVReport {
    // order_ratio[n] = sup_samples max_{|alpha|=n} |z|^n |D^alpha v| / (n! |v0|)
    std::vector<double> order_ratio;
    double inferred_C = 0.0;  // smallest C with order_ratio[n] <= C^{n+1} for all n
    bool within_declared = false;
    std::vector<double> shell_radius;  // lower edge of each dyadic shell in |z|
    std::vector<double> shell_C;
    bool divergent = false;  // the fitted C blows up towards the singular point
    double angular_min = 0.0;
    double angular_max = 0.0;
    bool angular_ok = false;
    DoublingReport doubling;
    bool used_oracle = false;

    bool ok() const { return !divergent && angular_ok && doubling.ok && within_declared; }
};

// Sampled check of the class conditions. Samples must avoid z = 0.
ClassVReport verify_class_v(const ClassVPotential& pot, const std::vector<Point>& samples,
                            int max_order, double divergence_factor = 4.0);

// int |f|^2 / |t|^2 dt over int |grad f|^2 dt for radial f in three dimensions. The bound is 4.
double hardy_ratio(const std::function<double(double)>& f,
                   const std::function<double(double)>& df = nullptr);

struct Particle {
    enum class Kind { External, Internal, Nuclear };
    Kind kind;
    int index;  // 0-based within its kind
};

std::string describe(const Particle& p);

struct Pairing {
    Particle a;
    Particle b;
    ClassVPotential potential;
    double coupling = 1.0;
};

std::string describe(const Pairing& p);

// V(x; y) = sum over pairings of coupling * v(X_a - X_b).
class PairAssembly {
public:
    PairAssembly(MoleculeConfig config, std::vector<Pairing> pairings);

    // Every unordered pair among external, internal and nuclear particles with Coulomb
    // couplings: +1 for electron pairs, -Z for electron-nucleus, Z Z' for nucleus pairs.
    static PairAssembly physical(const MoleculeConfig& config);

    const MoleculeConfig& config() const { return config_; }
    const std::vector<Pairing>& pairings() const { return pairings_; }

    Point coordinate(const Particle& p, const PointTuple& x, const PointTuple& y) const;
    // Throws SingularityError when a pair coincides.
    cplx evaluate(const PointTuple& x, const PointTuple& y) const;

private:
    MoleculeConfig config_;
    std::vector<Pairing> pairings_;
};

std::function<cplx(const PointTuple&, const PointTuple&)> assemble_potential(const PairAssembly& a);

}  // namespace twistcalc
