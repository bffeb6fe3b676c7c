#pragma once

#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "twistcalc/grid.hpp"
#include "twistcalc/operators.hpp"

namespace twistcalc {

// sigma(w; zeta) on the joint variables w = (x, y) with dual zeta = (xi, eta).
struct SymbolFunction {
    int order = 0;
    std::function<cplx(const Eigen::VectorXd& w, const Eigen::VectorXd& zeta)> eval;
    bool position_independent = false;

    static SymbolFunction constant(cplx c);
    static SymbolFunction multiplier(int order, std::function<cplx(const Eigen::VectorXd& zeta)> m);
    // Total symbol of a differential operator, with w split at its external variable count.
    static SymbolFunction of_operator(const Diff2Operator& P);
};

// Sampled constants C(|alpha|, |beta|) of the S^k bound for |alpha| + |beta| <= max_total, where
// alpha differentiates in w and beta in zeta.
struct SeminormReport {
    std::map<std::pair<int, int>, double> constants;
    double worst() const;
};

SeminormReport sample_seminorms(const SymbolFunction& sigma, const std::vector<Eigen::VectorXd>& positions,
                                const std::vector<Eigen::VectorXd>& frequencies, int max_total = 2);

// sigma(w, D) u on the periodic grid: an exact Fourier multiplier for position-independent symbols,
// otherwise the direct sum N^{-1} sum_k sigma(w_j, kappa_k) u_hat_k e^{i kappa_k (w_j + L)}.
GridWavefunction quantize(const SymbolFunction& sigma, const GridWavefunction& u);

// (vol / N^2 sum_k (1 + |kappa_k|^2)^s |u_hat_k|^2)^{1/2}
double sobolev_norm(const GridWavefunction& u, double s);

// Radial smooth step: 1 on |zeta| <= inner, 0 on |zeta| >= outer.
struct FrequencyCutoff {
    double inner = 1.0;
    double outer = 2.0;
    double operator()(const Eigen::VectorXd& zeta) const;
};

using GridOperator = std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)>;

// P applied spectrally on the joint grid: sum C_ab D_a D_b u + sum b_a D_a u + c u, with D_a the
// multiplier kappa_a (Nyquist read as -n/2, matching quantize).
GridOperator grid_operator(const Diff2Operator& P, const GridGeometry& g);

// q1 = (1 - tau_P) / sigma_P with sigma_P the principal symbol; R3 = Q1 P - I;
// Q = (I - R3) Q1 = 2 Q1 - Q1 P Q1; R = I - Q P = R3^2.
struct Parametrix {
    GridGeometry grid;
    FrequencyCutoff tau;
    SymbolFunction q1;
    GridOperator P;
    GridOperator Q1;
    GridOperator R3;
    GridOperator Q;
    GridOperator R;
    bool constant_coefficients = false;
    EllipticityCertificate certificate;

    // Constant coefficients only: R is the multiplier (1 - q1 sigma)^2.
    SymbolFunction remainder_symbol() const;

private:
    friend Parametrix build_parametrix(const Diff2Operator&, const GridGeometry&, FrequencyCutoff, int,
                                       std::uint64_t);
    SymbolFunction sigma_;
};

// Requires P elliptic on the grid points (certificate over per_point covectors each).
Parametrix build_parametrix(const Diff2Operator& P_hat, const GridGeometry& grid, FrequencyCutoff tau = {},
                            int per_point = 8, std::uint64_t seed = 20240601);

// Seeded band-limited test function with spectral support in K/2 <= |kappa| <= K (per the grid's
// wavenumber units), normalised in L2.
GridWavefunction band_test_function(const GridGeometry& g, double K, std::uint64_t seed);

}  // namespace twistcalc
