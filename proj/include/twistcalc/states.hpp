#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <optional>
#include <string>

#include "twistcalc/geometry.hpp"
#include "twistcalc/grid.hpp"

namespace twistcalc {

// H = sum_i (D_i - A_i)^2 + V on N particles in R^d, D = -i grad. A is constant (zero when empty).
struct PointHamiltonian {
    int dim = 3;
    int particles = 1;
    std::function<double(const PointTuple&)> potential;
    Eigen::VectorXd vector_potential;  // N d entries or empty
    // Distance from a configuration to the singular locus of V; empty means V is smooth.
    std::function<double(const PointTuple&)> singular_distance;

    // -Laplacian plus every electron-electron, electron-nucleus and nucleus-nucleus Coulomb term,
    // with all N electrons as arguments. Requires d = 3.
    static PointHamiltonian coulomb(const MoleculeConfig& config);
};

// H = -Laplacian + V on a periodic grid whose axes hold N particles of dimension d.
struct GridHamiltonian {
    GridGeometry grid;
    int dim = 1;
    std::function<double(const Eigen::VectorXd&)> potential;

    int particles() const { return grid.dims() / dim; }
    Eigen::VectorXcd apply(const Eigen::VectorXcd& v) const;
};

enum class StateKind { Hydrogenic, Gaussian, Harmonium, GridEigen, File };
const char* to_string(StateKind k);

// psi(w) = exp(-(w - c)^T A (w - c) / 2 + i p.w) on the joint coordinates w in R^{N d}. It is the
// ground state of (D - p)^2 + (w - c)^T A^2 (w - c) with energy tr A.
struct GaussianParameters {
    Eigen::MatrixXd A;
    Eigen::VectorXd center;
    Eigen::VectorXd momentum;
    // True when A has no coupling between distinct particles.
    bool separable(int dim) const;
};

enum class Quadrature { Exact, Analytic, GaussHermite, Grid, QuasiMonteCarlo };
const char* to_string(Quadrature q);

struct BoundState {
    StateKind kind = StateKind::Gaussian;
    int dim = 3;
    int particles = 1;
    std::function<cplx(const PointTuple&)> value;
    // Gradient over all N d coordinates.
    std::function<Eigen::VectorXcd(const PointTuple&)> gradient;
    // Closed-form Laplacian when available.
    std::function<cplx(const PointTuple&)> laplacian;
    double energy = 0.0;
    std::optional<double> norm_squared;  // closed form when known

    // Internal quadrature hints.
    Quadrature preferred = Quadrature::QuasiMonteCarlo;
    double gaussian_scale = 1.0;  // |psi|^2 decays at least like exp(-|y|^2 / (2 s^2)) per particle
    std::optional<GaussianParameters> gaussian;
    std::optional<GridWavefunction> grid;  // values over all N d axes

    std::optional<PointHamiltonian> point_hamiltonian;
    std::optional<GridHamiltonian> grid_hamiltonian;
    double residual = NAN;
    double residual_tolerance = 1e-8;

    bool certified() const { return std::isfinite(residual) && residual <= residual_tolerance; }
    // Throws DomainError naming the state when uncertified.
    void require_certified() const;
};

struct ResidualOptions {
    double exclusion_radius = 1e-2;
    int samples = 1 << 15;
    std::uint64_t seed = 20240601;
};

// ||(H - E) psi|| / ||psi|| by Gaussian-importance quasi-Monte Carlo with points within
// exclusion_radius of the singular locus dropped from the numerator.
double residual_check(const PointHamiltonian& H, const BoundState& psi, const ResidualOptions& opts = {});
// Spectral residual on the grid.
double residual_check(const GridHamiltonian& H, const BoundState& psi);

// psi = exp(-Z|x|/2), E = -Z^2/4 for -Laplacian - Z/|x|, d = 3.
BoundState hydrogenic_state(double Z, int dim = 3);
// psi = (1 + r12/4) exp(-(|x1|^2 + |x2|^2)/16), E = 1 for
// -Laplacian_1 - Laplacian_2 + spring (|x1|^2 + |x2|^2) + 1/r12; only spring = 1/64 is solvable here.
BoundState harmonium_state(double spring = 1.0 / 64.0, int dim = 3);
BoundState gaussian_state(int dim, int particles, GaussianParameters params);
// Product of isotropic factors exp(-|x_i - c_i|^2 / (2 w_i^2) + i p_i.x_i).
BoundState separable_gaussian_state(int dim, const PointTuple& centers, const std::vector<double>& widths,
                                    const PointTuple& momenta);

struct EigenOptions {
    double tolerance = 1e-8;  // on ||H v - E v|| with ||v|| = 1
    int krylov = 120;
    int max_restarts = 400;
    std::uint64_t seed = 7;
};
// Lowest eigenpair by restarted Lanczos with full reorthogonalisation.
BoundState grid_eigensolve(const GridHamiltonian& H, const EigenOptions& opts = {});

// Reads the binary grid format; certified when a Hamiltonian is supplied and the residual is small.
BoundState file_state(const std::string& path, int dim, double energy,
                      const std::optional<GridHamiltonian>& H = std::nullopt, double tolerance = 1e-8);

// Same state with a different energy, recertified against its Hamiltonian.
BoundState with_energy(const BoundState& psi, double energy);

// Lowest eigenpair of a Hermitian operator given as a matrix-free product.
struct EigenPair {
    double value = 0.0;
    Eigen::VectorXcd vector;
    double residual = 0.0;
    int iterations = 0;
};
EigenPair lowest_eigenpair(const std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)>& H, Eigen::Index n,
                           const EigenOptions& opts = {});

}  // namespace twistcalc
