#include "twistcalc/twist.hpp"

#include <cmath>

#include "twistcalc/errors.hpp"

namespace twistcalc {

namespace {

double bump_radial_slope(double s) {
    if (s >= 1.0) return 0.0;
    const double q = 1.0 - s * s;
    return 2.0 * s / (q * q) * std::exp(1.0 - 1.0 / q);
}

double maximise_bump_slope() {
    // Coarse scan, then golden section around the best cell.
    const int n = 2000;
    int best = 0;
    for (int i = 1; i < n; ++i)
        if (bump_radial_slope(double(i) / n) > bump_radial_slope(double(best) / n)) best = i;
    double a = std::max(0.0, double(best - 1) / n), b = std::min(1.0, double(best + 1) / n);
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 100; ++it) {
        const double c = b - g * (b - a), d = a + g * (b - a);
        if (bump_radial_slope(c) > bump_radial_slope(d)) b = d;
        else a = c;
    }
    return bump_radial_slope(0.5 * (a + b));
}

}  // namespace

Cutoff Cutoff::bump(int dim) {
    Cutoff c;
    c.dim = dim;
    c.value = [](const Point& u) {
        const double s2 = u.squaredNorm();
        if (s2 >= 1.0) return 0.0;
        return std::exp(1.0 - 1.0 / (1.0 - s2));
    };
    c.gradient = [](const Point& u) -> Point {
        const double s2 = u.squaredNorm();
        if (s2 >= 1.0) return Point::Zero(u.size());
        const double q = 1.0 - s2;
        const double t = std::exp(1.0 - 1.0 / q);
        return (-2.0 * t / (q * q)) * u;
    };
    c.hessian = [](const Point& u) -> Eigen::MatrixXd {
        const double s2 = u.squaredNorm();
        const auto n = u.size();
        if (s2 >= 1.0) return Eigen::MatrixXd::Zero(n, n);
        const double q = 1.0 - s2;
        const double t = std::exp(1.0 - 1.0 / q);
        // tau = exp(1 - 1/q(s2)); phi = d tau / d s2, phi' = d^2 tau / d s2^2.
        const double phi = -t / (q * q);
        const double dphi = t * (-2.0 / (q * q * q) + 1.0 / (q * q * q * q));
        return 2.0 * phi * Eigen::MatrixXd::Identity(n, n) + 4.0 * dphi * u * u.transpose();
    };
    static const double sup = maximise_bump_slope();
    c.sup_gradient = sup;
    return c;
}

void validate_cutoff(const Cutoff& tau) {
    if (!tau.value || !tau.gradient || !tau.hessian) throw ConfigError("cutoff is missing a callable");
    if (tau.value(Point::Zero(tau.dim)) != 1.0) throw ConfigError("cutoff must equal 1 at the origin");
    if (!(tau.sup_gradient > 0.0)) throw ConfigError("cutoff gradient bound must be positive");
    for (int a = 0; a < tau.dim; ++a)
        for (double s : {1.0, 1.5, 3.0}) {
            Point u = Point::Zero(tau.dim);
            u[a] = s;
            if (tau.value(u) != 0.0 || tau.value(-u) != 0.0)
                throw ConfigError("cutoff must vanish outside the unit ball");
        }
}

TwistMap TwistMap::build(const MoleculeConfig& config, const PointTuple& base, Cutoff tau,
                         double eta0, std::optional<double> delta0, std::optional<double> r0) {
    if (base.empty()) throw DimensionError("twist needs at least one external point");
    require_dimension(base, config.dim, "twist base");
    if (tau.dim != config.dim) throw DimensionError("cutoff dimension mismatch");
    if (!(eta0 > 0.0 && eta0 < 1.0)) throw DomainError("eta0 must lie in (0, 1)");
    validate_cutoff(tau);

    TwistMap t;
    t.config_ = config;
    t.base_ = base;
    t.dim_ = config.dim;
    t.eta0_ = eta0;
    t.r0_ = separation_radius(config, base);
    if (r0) {
        if (!(*r0 > 0.0)) throw DomainError("r0 must be positive");
        if (*r0 > t.r0_) throw DomainError("r0 override exceeds the separation radius");
        t.r0_ = *r0;
    }
    const double m = double(base.size());
    const double slack = std::min(eta0, 1.0 - eta0);
    const double natural = std::min(t.r0_ / 2.0, t.r0_ * slack / (m * tau.sup_gradient));
    if (delta0) {
        if (!(*delta0 > 0.0)) throw DomainError("delta0 must be positive");
        if (*delta0 > t.r0_ / 2.0) throw DomainError("delta0 exceeds r0/2");
        if (*delta0 > natural * (1.0 + 1e-12))
            throw DomainError("delta0 violates the Jacobian deviation bound");
        t.delta0_ = *delta0;
    } else {
        t.delta0_ = natural;
    }
    double far = 0.0;
    for (const auto& p : base) far = std::max(far, p.norm());
    t.support_radius_ = far + t.r0_;
    t.tau_ = std::move(tau);
    return t;
}

bool TwistMap::in_domain(const PointTuple& x) const {
    if (x.size() != base_.size()) return false;
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (x[j].size() != dim_) return false;
        if (!((x[j] - base_[j]).norm() < delta0_)) return false;
    }
    return true;
}

void TwistMap::require_domain(const PointTuple& x) const {
    if (x.size() != base_.size()) throw DimensionError("external tuple has wrong length");
    require_dimension(x, dim_, "external tuple");
    if (!in_domain(x)) throw DomainError("external configuration outside the twist domain");
}

Eigen::VectorXd TwistMap::weights(const Point& z) const {
    Eigen::VectorXd w(Eigen::Index(base_.size()));
    for (std::size_t j = 0; j < base_.size(); ++j) w[Eigen::Index(j)] = tau_.value((z - base_[j]) / r0_);
    return w;
}

Point TwistMap::forward_unchecked(const PointTuple& x, const Point& z) const {
    Point out = z;
    for (std::size_t j = 0; j < base_.size(); ++j) {
        const double w = tau_.value((z - base_[j]) / r0_);
        if (w != 0.0) out += w * (x[j] - base_[j]);
    }
    return out;
}

Point TwistMap::forward(const PointTuple& x, const Point& z) const {
    require_domain(x);
    if (z.size() != dim_) throw DimensionError("point has wrong dimension");
    return forward_unchecked(x, z);
}

Eigen::MatrixXd TwistMap::dz(const PointTuple& x, const Point& z) const {
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(dim_, dim_);
    for (std::size_t j = 0; j < base_.size(); ++j) {
        const Point g = tau_.gradient((z - base_[j]) / r0_) / r0_;
        a += (x[j] - base_[j]) * g.transpose();
    }
    return a;
}

Eigen::MatrixXd TwistMap::dx(const Point& z) const {
    const auto w = weights(z);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dim_, dim_ * Eigen::Index(base_.size()));
    for (Eigen::Index j = 0; j < w.size(); ++j)
        out.block(0, j * dim_, dim_, dim_) = w[j] * Eigen::MatrixXd::Identity(dim_, dim_);
    return out;
}

Point TwistMap::inverse_unchecked(const PointTuple& x, const Point& w, double tol,
                                  int max_iter) const {
    Point z = w;
    Point r = forward_unchecked(x, z) - w;
    for (int it = 0; it < max_iter; ++it) {
        const double rn = r.norm();
        Point cand = z - dz(x, z).partialPivLu().solve(r);
        Point rc = forward_unchecked(x, cand) - w;
        if (rn <= tol) {
            // One polishing Newton step, kept only if it helps.
            return rc.norm() < rn ? cand : z;
        }
        if (!(rc.norm() < rn)) {
            // Contraction z <- w - displacement(z); its Lipschitz constant is below min(eta0, 1-eta0).
            cand = w - (forward_unchecked(x, z) - z);
            rc = forward_unchecked(x, cand) - w;
            if (!(rc.norm() < rn)) break;
        }
        z = cand;
        r = rc;
    }
    if (r.norm() <= tol) return z;
    throw ConvergenceError("twist inverse did not converge");
}

Point TwistMap::inverse(const PointTuple& x, const Point& w, double tol, int max_iter) const {
    require_domain(x);
    if (w.size() != dim_) throw DimensionError("point has wrong dimension");
    return inverse_unchecked(x, w, tol, max_iter);
}

JacobianSlice TwistMap::jacobians(const PointTuple& x, const Point& z) const {
    require_domain(x);
    JacobianSlice s;
    s.dx = dx(z);
    s.dz = dz(x, z);
    s.dz_inverse = s.dz.inverse();
    s.dx_inverse = -s.dz_inverse * s.dx;
    return s;
}

LogDetDerivatives TwistMap::log_det_derivatives(const PointTuple& x, const Point& z) const {
    const Eigen::MatrixXd a = dz(x, z);
    const Eigen::MatrixXd ainv = a.inverse();
    LogDetDerivatives out;
    out.value = std::log(std::abs(a.determinant()));
    out.dx = Eigen::VectorXd::Zero(dim_ * Eigen::Index(base_.size()));
    out.dz = Eigen::VectorXd::Zero(dim_);
    for (std::size_t j = 0; j < base_.size(); ++j) {
        const Point u = (z - base_[j]) / r0_;
        const Point g = tau_.gradient(u) / r0_;
        // d/dx_j log det A = A^{-T} g_j, d/dz log det A = sum_j r0^{-2} H_j A^{-1} (x_j - x0_j)
        out.dx.segment(Eigen::Index(j) * dim_, dim_) = ainv.transpose() * g;
        out.dz += tau_.hessian(u) * (ainv * (x[j] - base_[j])) / (r0_ * r0_);
    }
    return out;
}

LiftedMap TwistMap::lift(const PointTuple& x, const PointTuple& y) const {
    require_domain(x);
    require_dimension(y, dim_, "internal tuple");
    const auto p = Eigen::Index(y.size());
    const auto md = dim_ * Eigen::Index(base_.size());
    LiftedMap out;
    out.dx = Eigen::MatrixXd::Zero(p * dim_, md);
    out.dy = Eigen::MatrixXd::Zero(p * dim_, p * dim_);
    out.dx_inverse = Eigen::MatrixXd::Zero(p * dim_, md);
    out.dy_inverse = Eigen::MatrixXd::Zero(p * dim_, p * dim_);
    for (Eigen::Index k = 0; k < p; ++k) {
        const Point& yk = y[std::size_t(k)];
        out.image.push_back(forward_unchecked(x, yk));
        const Eigen::MatrixXd a = dz(x, yk);
        const Eigen::MatrixXd ainv = a.inverse();
        const Eigen::MatrixXd b = dx(yk);
        out.dx.block(k * dim_, 0, dim_, md) = b;
        out.dy.block(k * dim_, k * dim_, dim_, dim_) = a;
        out.dx_inverse.block(k * dim_, 0, dim_, md) = -ainv * b;
        out.dy_inverse.block(k * dim_, k * dim_, dim_, dim_) = ainv;
    }
    return out;
}

PointTuple TwistMap::lift_inverse(const PointTuple& x, const PointTuple& y) const {
    require_domain(x);
    PointTuple out;
    for (const auto& yk : y) out.push_back(inverse_unchecked(x, yk));
    return out;
}

BoundsCertificate certify_bounds(const TwistMap& t, const std::vector<PointTuple>& x_samples,
                                 const std::vector<Point>& z_samples) {
    BoundsCertificate c;
    const double eta0 = t.eta0();
    c.deviation_bound = std::min(eta0, 1.0 - eta0);
    c.lipschitz_margin = INFINITY;
    const double lip = t.cutoff().sup_gradient / t.r0();
    const double slack = 1e-12;
    const int d = t.dim();
    auto fail = [&](const std::string& w) {
        if (c.witness.empty()) c.witness = w;
    };

    for (std::size_t i = 0; i + 1 < z_samples.size(); ++i) {
        const Point& z = z_samples[i];
        const Point& zz = z_samples[i + 1];
        const double dist = (z - zz).norm();
        for (const auto& x0 : t.base()) {
            const double lhs =
                std::abs(t.cutoff().value((z - x0) / t.r0()) - t.cutoff().value((zz - x0) / t.r0()));
            c.lipschitz_margin = std::min(c.lipschitz_margin, lip * dist - lhs);
        }
    }
    if (c.lipschitz_margin < -slack) fail("cutoff Lipschitz bound violated");

    std::vector<Point> far;
    for (int a = 0; a < d; ++a) {
        Point e = Point::Zero(d);
        e[a] = t.support_radius() * (1.0 + 1e-9);
        far.push_back(e);
        far.push_back(-e);
    }
    for (const auto& z : z_samples)
        if (z.norm() >= t.support_radius()) far.push_back(z);
    for (const auto& x : x_samples) {
        t.require_domain(x);
        for (std::size_t j = 0; j < x.size(); ++j)
            c.pinning_error = std::max(c.pinning_error, (t.forward(x, t.base()[j]) - x[j]).norm());
        for (const auto& n : t.config().nuclei)
            c.pinning_error = std::max(c.pinning_error, (t.forward(x, n.position) - n.position).norm());
        for (std::size_t i = 0; i < z_samples.size(); ++i) {
            const Point& z = z_samples[i];
            const Eigen::MatrixXd a = t.dz(x, z);
            const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(d, d);
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
            const double smax = svd.singularValues()(0);
            const double smin = svd.singularValues()(d - 1);
            c.max_dz_deviation = std::max(c.max_dz_deviation, (a - id).operatorNorm());
            const double sum = smax + 1.0 / smin;
            c.inverse_sum_min = std::min(c.inverse_sum_min, sum);
            c.inverse_sum_max = std::max(c.inverse_sum_max, sum);
            if (i + 1 < z_samples.size()) {
                const Point& zz = z_samples[i + 1];
                const double dist = (z - zz).norm();
                if (dist > 0.0) {
                    const double ratio = (t.forward(x, z) - t.forward(x, zz)).norm() / dist;
                    c.lower_lipschitz = std::min(c.lower_lipschitz, ratio);
                    c.upper_lipschitz = std::max(c.upper_lipschitz, ratio);
                }
            }
        }
        for (const auto& z : far) {
            c.outside_support_error = std::max(c.outside_support_error, (t.forward(x, z) - z).norm());
            c.outside_support_error =
                std::max(c.outside_support_error, (t.dz(x, z) - Eigen::MatrixXd::Identity(d, d)).norm());
            c.outside_support_error = std::max(c.outside_support_error, t.dx(z).norm());
        }
    }
    const double q = c.deviation_bound;
    c.inverse_sum_constant = 1.0 + q + 1.0 / (1.0 - q);
    if (c.pinning_error > 1e-12) fail("pinning identity violated");
    if (c.max_dz_deviation > q + slack) fail("Jacobian deviation exceeds min(eta0, 1-eta0)");
    if (c.lower_lipschitz < 1.0 - eta0 - slack || c.upper_lipschitz > 1.0 + eta0 + slack)
        fail("bi-Lipschitz bound violated");
    if (c.inverse_sum_max > c.inverse_sum_constant + slack ||
        c.inverse_sum_min < 1.0 / c.inverse_sum_constant - slack)
        fail("two-sided Jacobian norm bound violated");
    if (c.outside_support_error != 0.0) fail("twist is not the identity outside its support");
    c.ok = c.witness.empty();
    return c;
}

Point sample_ball(const Point& center, double radius, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unif;
    Point dir(center.size());
    do {
        for (Eigen::Index i = 0; i < dir.size(); ++i) dir[i] = normal(rng);
    } while (dir.norm() == 0.0);
    dir.normalize();
    const double r = radius * std::pow(unif(rng), 1.0 / double(center.size()));
    return center + r * dir;
}

PointTuple sample_domain(const TwistMap& t, std::mt19937_64& rng, double fraction) {
    PointTuple x;
    for (const auto& c : t.base()) x.push_back(sample_ball(c, fraction * t.delta0(), rng));
    return x;
}

InverseJacobianCheck check_inverse_jacobians(const TwistMap& t, const PointTuple& x, const Point& z,
                                             double step) {
    t.require_domain(x);
    const int d = t.dim();
    const int m = t.external_count();
    const JacobianSlice J = t.jacobians(x, z);
    const Point w = t.forward(x, z);
    const Eigen::VectorXd tau = t.weights(z);
    const double scale = J.dz_inverse.norm();
    InverseJacobianCheck out;

    Eigen::MatrixXd fd_dz(d, d);
    for (int a = 0; a < d; ++a) {
        Point wp = w, wm = w;
        wp[a] += step;
        wm[a] -= step;
        fd_dz.col(a) = (t.inverse_unchecked(x, wp, 1e-15) - t.inverse_unchecked(x, wm, 1e-15)) / (2.0 * step);
    }
    out.dz_error = (fd_dz - J.dz_inverse).norm() / std::max(J.dz_inverse.norm(), scale);

    Eigen::MatrixXd fd_dx(d, m * d);
    for (int j = 0; j < m; ++j)
        for (int a = 0; a < d; ++a) {
            PointTuple xp = x, xm = x;
            xp[std::size_t(j)][a] += step;
            xm[std::size_t(j)][a] -= step;
            fd_dx.col(j * d + a) =
                (t.inverse_unchecked(xp, w, 1e-15) - t.inverse_unchecked(xm, w, 1e-15)) / (2.0 * step);
        }
    for (int j = 0; j < m; ++j) {
        const Eigen::MatrixXd analytic = -tau[j] * J.dz_inverse;
        out.dxj_error = std::max(out.dxj_error, (fd_dx.middleCols(j * d, d) - analytic).norm() /
                                                    std::max(analytic.norm(), scale));
    }
    out.dx_error = (fd_dx - J.dx_inverse).norm() / std::max(J.dx_inverse.norm(), scale);
    return out;
}

}  // namespace twistcalc
