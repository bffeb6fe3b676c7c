#pragma once

#include <optional>

#include "twistcalc/grid.hpp"
#include "twistcalc/states.hpp"
#include "twistcalc/twist.hpp"

namespace twistcalc {

struct QuadratureOptions {
    std::optional<Quadrature> method;  // defaults to the state's preference
    int gauss_hermite_order = 40;      // per internal coordinate; the error compares with 2/3 of it
    int qmc_nodes = 1 << 14;           // per replica
    int qmc_replicas = 8;
    std::uint64_t seed = 20240601;
};

struct DensityValue {
    double value = 0.0;
    double error = 0.0;  // quadrature error estimate
    Quadrature method = Quadrature::Exact;
};

struct MatrixValue {
    cplx value = 0.0;
    double error = 0.0;
    Quadrature method = Quadrature::Exact;
};

struct CurrentValue {
    Eigen::VectorXd value;  // k d entries
    double error = 0.0;
    Quadrature method = Quadrature::Exact;
};

// Gauss-Hermite nodes and weights for the weight exp(-t^2) by Golub-Welsch.
struct GaussHermiteRule {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
};
GaussHermiteRule gauss_hermite(int order);

// rho_k(x) = int |psi(x; y)|^2 dy with x the first k particles. k = N needs no integration.
DensityValue reduce_density(const BoundState& psi, int k, const PointTuple& x, const QuadratureOptions& opts = {});
// gamma_k(x, x') = int conj(psi(x; y)) psi(x'; y) dy.
MatrixValue reduce_density_matrix(const BoundState& psi, int k, const PointTuple& x, const PointTuple& x_prime,
                                  const QuadratureOptions& opts = {});
// C(x) = Im int conj(grad_x psi(x; y)) psi(x; y) dy, conjugate on the gradient factor.
CurrentValue current_density(const BoundState& psi, int k, const PointTuple& x, const QuadratureOptions& opts = {});

// psi(x; .) on a grid over the N - k internal particles.
GridWavefunction internal_slice(const BoundState& psi, const PointTuple& x, const GridGeometry& internal_grid);

struct TwistedValue {
    double twisted = 0.0;      // ||U_x psi(x; .)||^2
    double grid_direct = 0.0;  // ||psi(x; .)||^2 on the same grid
    DensityValue direct;       // reduce_density with the state's quadrature
    double discrepancy = 0.0;  // |twisted - direct| / |direct|
};
TwistedValue twisted_density(const BoundState& psi, const TwistMap& t, const PointTuple& x,
                             const GridGeometry& internal_grid, const QuadratureOptions& opts = {});

// Twist on doubled externals (x, x') with base (x0, x0'): m = 2k and N + k electrons.
TwistMap doubled_twist(const MoleculeConfig& config, const PointTuple& x0, const PointTuple& x0_prime, Cutoff tau,
                       double eta0 = 0.5, std::optional<double> delta0 = std::nullopt);

struct TwistedMatrixValue {
    cplx twisted = 0.0;      // <U Psi_1, U Psi_2> with Psi_1 = psi(x; .), Psi_2 = psi(x'; .)
    cplx grid_direct = 0.0;  // <Psi_1, Psi_2> on the grid
    MatrixValue direct;
    double discrepancy = 0.0;
};
TwistedMatrixValue twisted_density_matrix(const BoundState& psi, const TwistMap& doubled, const PointTuple& x,
                                          const PointTuple& x_prime, const GridGeometry& internal_grid,
                                          const QuadratureOptions& opts = {});

}  // namespace twistcalc
