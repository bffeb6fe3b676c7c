#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "twistcalc/geometry.hpp"
#include "twistcalc/potentials.hpp"
#include "twistcalc/twist.hpp"

namespace twistcalc {

// P = sum_ab second(a,b) D_a D_b + sum_a first(a) D_a + zeroth with D = -i d, acting on the
// joint variables w = (x, y); indices below ext_vars are external.
struct CoefficientSet {
    Eigen::MatrixXcd second;
    Eigen::VectorXcd first;
    cplx zeroth = 0.0;
};

using CoefficientField = std::function<CoefficientSet(const Eigen::VectorXd& x, const Eigen::VectorXd& y)>;
using ScalarCoefficient = std::function<cplx(const Eigen::VectorXd& x, const Eigen::VectorXd& y)>;

struct ProductBall {
    PointTuple centers;
    double radius = 0.0;
    bool contains(const Eigen::VectorXd& x_flat) const;
};

class Diff2Operator {
public:
    Diff2Operator(int ext_vars, int int_vars, CoefficientField field,
                  bool constant_coefficients = false);

    // -Laplacian over all joint variables; principal symbol |xi|^2 + |eta|^2.
    static Diff2Operator negative_laplacian(int ext_vars, int int_vars);

    struct Terms {
        std::map<std::pair<int, int>, ScalarCoefficient> second;
        std::map<int, ScalarCoefficient> first;
        ScalarCoefficient zeroth;
    };
    static Diff2Operator from_terms(int ext_vars, int int_vars, Terms terms,
                                    bool constant_coefficients = false);

    int external_vars() const { return ext_; }
    int internal_vars() const { return int_; }
    int vars() const { return ext_ + int_; }
    bool constant_coefficients() const { return constant_; }

    CoefficientSet coefficients(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;
    // Symmetric real part of the principal coefficient matrix.
    Eigen::MatrixXd principal_real(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;
    cplx principal_symbol(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& xi, const Eigen::VectorXd& eta) const;
    // e^{-i w.zeta} P e^{i w.zeta}
    cplx total_symbol(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& xi,
                      const Eigen::VectorXd& eta) const;

    std::optional<ProductBall> domain;  // external-variable domain; none means everywhere

private:
    int ext_;
    int int_;
    CoefficientField field_;
    bool constant_;
};

struct SymbolSample {
    Eigen::VectorXd x;
    Eigen::VectorXd y;
    Eigen::VectorXd xi;
    Eigen::VectorXd eta;
};

// Halton covectors on the unit sphere scaled to |xi|^2 + |eta|^2 in [1, 1e4], per point.
std::vector<SymbolSample> covector_samples(
    const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& points, int per_point,
    int ext_vars, int int_vars, std::uint64_t seed);

struct EllipticityCertificate {
    int sign = 0;                  // sigma0
    double constant = 0.0;         // min over points of lambda_min(sigma0 Re A): exact inf over covectors
    double worst_ratio = INFINITY;  // min over samples of sigma0 Re sigma / |zeta|^2
    std::size_t samples = 0;
};

// Throws NonEllipticError with a witness covector when Re sigma_P vanishes or changes sign.
EllipticityCertificate ellipticity_certificate(const Diff2Operator& P,
                                               const std::vector<SymbolSample>& samples);

enum class TwistDirection {
    Forward,  // G = F
    Inverse,  // G = F^{-1}
};

// Coefficients of the conjugated derivatives, evaluated at (x, y) with y' = G^{-1}(x; y):
// U_G^{-1}-type identities D_x -> D_x + J1 D_y + J2 and D_y -> J3 D_y + J4.
struct JCoefficients {
    Eigen::MatrixXd J1;   // (m d) x (p d), (d_x G)^T at y'
    Eigen::VectorXcd J2;  // m d, purely imaginary
    Eigen::MatrixXd J3;   // (p d) x (p d), (d_y G)^T at y'
    Eigen::VectorXcd J4;  // p d, purely imaginary
    double rho_plus = 1.0;   // |Det d_y G(x; y)|^{1/2}
    double rho_minus = 1.0;  // |Det d_y G^{-1}(x; y)|^{1/2}
};

JCoefficients j_coefficients(const TwistMap& t, TwistDirection dir, const PointTuple& x,
                             const PointTuple& y);

struct HalfDensities {
    double plus;
    double minus;
};
HalfDensities half_densities(const TwistMap& t, TwistDirection dir, const PointTuple& x,
                             const PointTuple& y);

// sigma_P(x; F(x;y); xi + J1(F^{-1}) eta; J3(F^{-1}) eta)
cplx twisted_principal_symbol(const Diff2Operator& P, const TwistMap& t, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& y, const Eigen::VectorXd& xi,
                              const Eigen::VectorXd& eta);

// Top-order part of e^{-i phi} P e^{i phi} for phi(x, y') = x.xi + F^{-1}(x; y').eta at
// y' = F(x; y); the phase gradient comes from forward-mode differentiation of a Newton solve.
cplx exponential_conjugation_symbol(const Diff2Operator& P, const TwistMap& t,
                                    const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                    const Eigen::VectorXd& xi, const Eigen::VectorXd& eta);

// U P U^{-1} with coefficients composed with F; lower-order terms differentiate the J
// coefficients by fourth-order central differences.
Diff2Operator conjugate_operator(const Diff2Operator& P, const TwistMap& t);

struct TwistedEllipticityReport {
    int sign = 0;
    double base_constant = 0.0;  // C_P of the untwisted operator at the twisted points
    double M = 0.0;              // sup ||J1(F^{-1})||
    double C = 0.0;              // two-sided bound C^{-1}|eta| <= |J3(F^{-1}) eta| <= C|eta|
    double S = 0.0;              // sqrt(1 + 4 M^2)
    double constant = 0.0;       // min(1/4, C^{-2}, C^{-2} S^{-2}) C_P
    double worst_ratio = INFINITY;
    double worst_margin = INFINITY;  // min over samples of ratio / regime bound - 1
    std::size_t samples = 0;
    bool ok = false;
    std::string witness;
};

TwistedEllipticityReport twisted_ellipticity(const Diff2Operator& P, const TwistMap& t,
                                             const std::vector<SymbolSample>& samples,
                                             double rel_tol = 1e-6);

// chi(x) = prod_j s(|x_j - c_j|), s = 1 up to inner_radius and 0 beyond support.radius.
struct ExternalCutoff {
    ProductBall support;
    double inner_radius = 0.0;
    int dim = 3;
    double value(const Eigen::VectorXd& x_flat) const;
};

// Lower-order coefficients chi c; principal part chi A + sigma0 C_P (1 - chi) I.
Diff2Operator extend_operator(const Diff2Operator& P, const ExternalCutoff& chi, int sign,
                              double constant);

enum class PairCase {
    NuclearNuclear,
    ExternalExternal,
    ExternalNuclear,
    ExternalInternal,
    NuclearInternal,
    InternalInternal,
};

PairCase classify_pair(const Pairing& p);
std::string to_string(PairCase c);

struct TwistedPair {
    PairCase kind;
    cplx value = 0.0;
    Point argument;           // X_a - X_b after the twist
    Point untwisted;          // anchor difference: the singular locus sits at zero
    Eigen::VectorXd direction;  // d argument / d x_j' = direction[j'] * I
};

// Pair potential with internal coordinates pushed through the twist, case by case.
TwistedPair twisted_pair(const Pairing& p, const TwistMap& t, const PointTuple& x,
                         const PointTuple& y);

// d^alpha_{x_j'} for every |alpha| <= order: direction^|alpha| (d^alpha v)(argument).
std::vector<cplx> twisted_pair_derivatives(const Pairing& p, const TwistMap& t, const PointTuple& x,
                                           const PointTuple& y, int jprime, int order);

struct TwistedDerivativeReport {
    // order_ratio[n] = sup |d^alpha_{x_j'} w| / (n! eta(|untwisted|)) over samples and j'
    std::vector<double> order_ratio;
    double fitted_C = 0.0;
    std::vector<double> subset_C;  // fits on disjoint halves of the samples
    bool stable = false;
    double chain_rule_error = 0.0;  // first derivatives against central differences
};

TwistedDerivativeReport twisted_derivative_bound(
    const Pairing& p, const TwistMap& t,
    const std::vector<std::pair<PointTuple, PointTuple>>& samples, int order,
    double stability_tolerance = 1.5);

struct Hamiltonian {
    MoleculeConfig config;
    Diff2Operator kinetic;
    PairAssembly potential;
    double shift = 0.0;
    cplx potential_at(const PointTuple& x, const PointTuple& y) const {
        return potential.evaluate(x, y) + shift;
    }
};

// Validates ellipticity of the kinetic part on the given points.
Hamiltonian assemble_hamiltonian(const MoleculeConfig& config, const PairAssembly& potential,
                                 Diff2Operator kinetic, double shift,
                                 const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& points);

// sum_a (D_a - A_a)^2 + V_ext, with div A taken by central differences.
Diff2Operator magnetic_operator(
    int ext_vars, int int_vars,
    std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> vector_potential,
    std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)> external_potential);

// H_1 (which = 1) or H_2 (which = 2) on doubled externals (x, x'): -Laplacian in every variable
// plus V evaluated on x (H_1) or x' (H_2), the other block being a spectator.
Hamiltonian doubled_hamiltonian(const MoleculeConfig& config, int which);

}  // namespace twistcalc
