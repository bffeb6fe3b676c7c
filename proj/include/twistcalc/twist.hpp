#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <functional>
#include <optional>
#include <random>
#include <string>

#include "twistcalc/geometry.hpp"

namespace twistcalc {

// tau in C_c^infinity with tau(0) = 1 and tau(u) = 0 for |u| >= 1.
struct Cutoff {
    int dim = 3;
    std::function<double(const Point&)> value;
    std::function<Point(const Point&)> gradient;
    std::function<Eigen::MatrixXd(const Point&)> hessian;
    double sup_gradient = 0.0;  // C(tau)

    // exp(1 - 1/(1 - |u|^2)) inside the unit ball.
    static Cutoff bump(int dim);
};

// Checks tau(0) == 1 and vanishing on sampled points with |u| >= 1.
void validate_cutoff(const Cutoff& tau);

struct JacobianSlice {
    Eigen::MatrixXd dx;          // d_x f(x; z), d x (m d)
    Eigen::MatrixXd dz;          // d_z f(x; z), d x d
    Eigen::MatrixXd dz_inverse;  // d_z f^{-1}(x; f(x; z)) = (d_z f)^{-1}
    Eigen::MatrixXd dx_inverse;  // d_x f^{-1}(x; f(x; z)) = -(d_z f)^{-1} d_x f
};

// F(x; y) = (f(x; y_1), ..., f(x; y_p)) with its block Jacobians.
struct LiftedMap {
    PointTuple image;
    Eigen::MatrixXd dx;          // (p d) x (m d)
    Eigen::MatrixXd dy;          // block diagonal (p d) x (p d)
    Eigen::MatrixXd dx_inverse;  // d_x F^{-1} at F(x; y)
    Eigen::MatrixXd dy_inverse;  // d_y F^{-1} at F(x; y)
};

// log |det d_z f(x; z)| and its partial gradients.
struct LogDetDerivatives {
    double value = 0.0;
    Eigen::VectorXd dx;  // m d
    Eigen::VectorXd dz;  // d
};

class TwistMap {
public:
    // delta0 defaults to min(r0/2, r0 min(eta0, 1-eta0) / (m C(tau))); an override must respect
    // both bounds. r0 defaults to the separation radius; an override may only shrink it.
    static TwistMap build(const MoleculeConfig& config, const PointTuple& base, Cutoff tau,
                          double eta0 = 0.5, std::optional<double> delta0 = std::nullopt,
                          std::optional<double> r0 = std::nullopt);

    int dim() const { return dim_; }
    int external_count() const { return int(base_.size()); }
    const PointTuple& base() const { return base_; }
    const MoleculeConfig& config() const { return config_; }
    const Cutoff& cutoff() const { return tau_; }
    double r0() const { return r0_; }
    double delta0() const { return delta0_; }
    double eta0() const { return eta0_; }
    // f(x; z) = z whenever |z| >= support_radius().
    double support_radius() const { return support_radius_; }

    bool in_domain(const PointTuple& x) const;
    void require_domain(const PointTuple& x) const;

    // tau((z - x0_j) / r0) for each j.
    Eigen::VectorXd weights(const Point& z) const;

    Point forward(const PointTuple& x, const Point& z) const;
    Point inverse(const PointTuple& x, const Point& w, double tol = 1e-12, int max_iter = 100) const;
    Eigen::MatrixXd dz(const PointTuple& x, const Point& z) const;
    Eigen::MatrixXd dx(const Point& z) const;
    JacobianSlice jacobians(const PointTuple& x, const Point& z) const;
    LogDetDerivatives log_det_derivatives(const PointTuple& x, const Point& z) const;

    LiftedMap lift(const PointTuple& x, const PointTuple& y) const;
    PointTuple lift_inverse(const PointTuple& x, const PointTuple& y) const;

    // Same maps without the domain check, for stencils that straddle the boundary.
    Point forward_unchecked(const PointTuple& x, const Point& z) const;
    Point inverse_unchecked(const PointTuple& x, const Point& w, double tol = 1e-12,
                            int max_iter = 100) const;

private:
    MoleculeConfig config_;
    PointTuple base_;
    Cutoff tau_;
    int dim_ = 0;
    double r0_ = 0.0;
    double delta0_ = 0.0;
    double eta0_ = 0.5;
    double support_radius_ = 0.0;
};

struct BoundsCertificate {
    double pinning_error = 0.0;
    double lipschitz_margin = 0.0;     // min over pairs of r0^{-1} C(tau)|z-z'| - |tau(.) - tau(.)|
    double max_dz_deviation = 0.0;     // sup ||d_z f - I||
    double deviation_bound = 0.0;      // min(eta0, 1 - eta0)
    double lower_lipschitz = INFINITY;  // inf |f(z) - f(z')| / |z - z'|
    double upper_lipschitz = 0.0;
    double inverse_sum_min = INFINITY;  // ||d_z f|| + ||(d_z f)^{-1}||
    double inverse_sum_max = 0.0;
    double inverse_sum_constant = 0.0;  // c with 1/c <= sum <= c
    double outside_support_error = 0.0;
    bool ok = false;
    std::string witness;
};

BoundsCertificate certify_bounds(const TwistMap& t, const std::vector<PointTuple>& x_samples,
                                 const std::vector<Point>& z_samples);

// Analytic inverse Jacobians against central differences of the inverse map at w = f(x; z):
// d_z f^{-1} = (d_z f)^{-1}, d_{x_j} f^{-1} = -tau_j(z) (d_z f)^{-1}, and the assembled d_x f^{-1}.
// Errors are relative to max(||analytic||, ||(d_z f)^{-1}||).
struct InverseJacobianCheck {
    double dz_error = 0.0;
    double dxj_error = 0.0;
    double dx_error = 0.0;
    double max() const { return std::max({dz_error, dxj_error, dx_error}); }
};
InverseJacobianCheck check_inverse_jacobians(const TwistMap& t, const PointTuple& x, const Point& z,
                                             double step = 1e-5);

Point sample_ball(const Point& center, double radius, std::mt19937_64& rng);
// Uniform in the product of balls B(x0_j, fraction * delta0).
PointTuple sample_domain(const TwistMap& t, std::mt19937_64& rng, double fraction = 0.999);

}  // namespace twistcalc
