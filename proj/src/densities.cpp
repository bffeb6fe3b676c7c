#include "twistcalc/densities.hpp"

#include <array>
#include <cmath>
#include <random>

#include "twistcalc/errors.hpp"
#include "twistcalc/unitary.hpp"

namespace twistcalc {

GaussHermiteRule gauss_hermite(int order) {
    if (order < 1) throw DomainError("Gauss-Hermite order must be positive");
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(order, order);
    for (int i = 1; i < order; ++i) J(i, i - 1) = J(i - 1, i) = std::sqrt(0.5 * i);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    GaussHermiteRule r;
    r.nodes = es.eigenvalues();
    r.weights = std::sqrt(M_PI) * es.eigenvectors().row(0).transpose().array().square();
    return r;
}

namespace {

using Integrand = std::function<Eigen::VectorXcd(const PointTuple& y)>;

struct Integral {
    Eigen::VectorXcd value;
    double error = 0.0;
    Quadrature method = Quadrature::Exact;
};

constexpr std::array<int, 16> kPrimes{2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

double radical_inverse(std::uint64_t i, int base) {
    double inv = 1.0 / base, f = inv, r = 0.0;
    while (i > 0) {
        r += f * double(i % std::uint64_t(base));
        i /= std::uint64_t(base);
        f *= inv;
    }
    return r;
}

Eigen::VectorXd internal_center(const BoundState& psi, int k) {
    const int ny = (psi.particles - k) * psi.dim;
    if (psi.gaussian) return psi.gaussian->center.tail(ny);
    return Eigen::VectorXd::Zero(ny);
}

bool x_y_decoupled(const BoundState& psi, int k) {
    if (!psi.gaussian) return false;
    const int nx = k * psi.dim;
    const int ny = (psi.particles - k) * psi.dim;
    return psi.gaussian->A.block(0, nx, nx, ny).isZero(0.0);
}

Integral gauss_hermite_integral(const BoundState& psi, int k, const Integrand& F, int order) {
    const int ny = (psi.particles - k) * psi.dim;
    const double total = std::pow(double(order), ny);
    if (total > 5e6) throw UnsupportedError("tensor Gauss-Hermite grid too large; use quasi-Monte Carlo");
    const auto rule = gauss_hermite(order);
    const Eigen::VectorXd c = internal_center(psi, k);
    const double scale = std::sqrt(2.0) * psi.gaussian_scale;
    std::vector<int> idx(static_cast<std::size_t>(ny), 0);
    Eigen::VectorXcd acc;
    for (std::size_t n = 0; n < std::size_t(total); ++n) {
        Eigen::VectorXd y(ny);
        double w = 1.0;
        for (int a = 0; a < ny; ++a) {
            const double t = rule.nodes[idx[std::size_t(a)]];
            y[a] = c[a] + scale * t;
            w *= rule.weights[idx[std::size_t(a)]] * std::exp(t * t) * scale;
        }
        const Eigen::VectorXcd f = F(unflatten(y, psi.dim)) * w;
        if (n == 0) acc = f;
        else acc += f;
        for (int a = ny - 1; a >= 0; --a) {
            if (++idx[std::size_t(a)] < order) break;
            idx[std::size_t(a)] = 0;
        }
    }
    return {acc, 0.0, Quadrature::GaussHermite};
}

Integral grid_integral(const BoundState& psi, int k, const Integrand& F) {
    if (!psi.grid) throw DimensionError("grid quadrature needs a grid state");
    const auto& g = psi.grid->geometry;
    const int nx = k * psi.dim;
    const int ny = g.dims() - nx;
    GridGeometry internal;
    for (int a = nx; a < g.dims(); ++a) {
        internal.points.push_back(g.points[std::size_t(a)]);
        internal.half_width.push_back(g.half_width[std::size_t(a)]);
    }
    Eigen::VectorXcd full, half;
    for (std::size_t i = 0; i < internal.size(); ++i) {
        const Eigen::VectorXcd f = F(unflatten(internal.point(i), psi.dim));
        if (i == 0) {
            full = Eigen::VectorXcd::Zero(f.size());
            half = Eigen::VectorXcd::Zero(f.size());
        }
        full += f;
        const auto id = internal.index(i);
        bool even = true;
        for (int a = 0; a < ny; ++a) even = even && id[std::size_t(a)] % 2 == 0;
        if (even) half += f;
    }
    const double cell = internal.cell_volume();
    full *= cell;
    half *= cell * std::pow(2.0, ny);
    return {full, (full - half).norm(), Quadrature::Grid};
}

Integral qmc_integral(const BoundState& psi, int k, const Integrand& F, const QuadratureOptions& opts) {
    const int ny = (psi.particles - k) * psi.dim;
    const int uniforms = ny + (ny % 2);
    if (uniforms > int(kPrimes.size())) throw UnsupportedError("too many internal coordinates for Halton points");
    if (opts.qmc_replicas < 2 || opts.qmc_nodes < 1) throw DomainError("quasi-Monte Carlo needs >= 2 replicas");
    const Eigen::VectorXd c = internal_center(psi, k);
    const double s = psi.gaussian_scale;
    const double log_norm = -0.5 * ny * std::log(2.0 * M_PI * s * s);
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> unif;
    std::vector<Eigen::VectorXcd> reps;
    for (int r = 0; r < opts.qmc_replicas; ++r) {
        std::vector<double> shift(static_cast<std::size_t>(uniforms));
        for (auto& v : shift) v = unif(rng);
        Eigen::VectorXcd acc;
        for (int i = 1; i <= opts.qmc_nodes; ++i) {
            Eigen::VectorXd z(ny);
            for (int a = 0; a < uniforms; a += 2) {
                double u1 = radical_inverse(std::uint64_t(i), kPrimes[std::size_t(a)]) + shift[std::size_t(a)];
                double u2 = radical_inverse(std::uint64_t(i), kPrimes[std::size_t(a + 1)]) + shift[std::size_t(a + 1)];
                u1 = std::max(u1 - std::floor(u1), 1e-300);
                u2 -= std::floor(u2);
                const double rad = std::sqrt(-2.0 * std::log(u1));
                z[a] = rad * std::cos(2.0 * M_PI * u2);
                if (a + 1 < ny) z[a + 1] = rad * std::sin(2.0 * M_PI * u2);
            }
            const double inv_p = std::exp(-(log_norm - 0.5 * z.squaredNorm()));
            const Eigen::VectorXcd f = F(unflatten(c + s * z, psi.dim)) * inv_p;
            if (i == 1) acc = f;
            else acc += f;
        }
        reps.push_back(acc / double(opts.qmc_nodes));
    }
    Eigen::VectorXcd mean = Eigen::VectorXcd::Zero(reps.front().size());
    for (const auto& v : reps) mean += v;
    mean /= double(reps.size());
    double var = 0.0;
    for (const auto& v : reps) var += (v - mean).squaredNorm();
    var /= double(reps.size() - 1);
    return {mean, std::sqrt(var / double(reps.size())), Quadrature::QuasiMonteCarlo};
}

Integral integrate_internal(const BoundState& psi, int k, const Integrand& F, const QuadratureOptions& opts) {
    if (k < 1 || k > psi.particles) throw DimensionError("k must lie in 1..N");
    psi.require_certified();
    if (k == psi.particles) return {F({}), 0.0, Quadrature::Exact};
    Quadrature m = opts.method.value_or(psi.preferred);
    if (m == Quadrature::Analytic && !x_y_decoupled(psi, k)) m = Quadrature::GaussHermite;
    if (m == Quadrature::GaussHermite && psi.grid) m = Quadrature::Grid;
    switch (m) {
        case Quadrature::Exact:
            throw DomainError("exact reduction needs k = N");
        case Quadrature::Analytic: {
            // psi factors as psi_x(x) psi_y(y) with |psi_y(c_y)| = 1 at the internal centre.
            const int ny = (psi.particles - k) * psi.dim;
            const int nx = k * psi.dim;
            const Eigen::MatrixXd Ayy = psi.gaussian->A.block(nx, nx, ny, ny);
            const double norm_y = std::pow(M_PI, 0.5 * ny) / std::sqrt(Ayy.determinant());
            return {F(unflatten(internal_center(psi, k), psi.dim)) * norm_y, 0.0, Quadrature::Analytic};
        }
        case Quadrature::GaussHermite: {
            const int n = opts.gauss_hermite_order;
            Integral hi = gauss_hermite_integral(psi, k, F, n);
            const Integral lo = gauss_hermite_integral(psi, k, F, std::max(1, (2 * n) / 3));
            hi.error = (hi.value - lo.value).norm();
            return hi;
        }
        case Quadrature::Grid:
            return grid_integral(psi, k, F);
        case Quadrature::QuasiMonteCarlo:
            return qmc_integral(psi, k, F, opts);
    }
    throw DomainError("unknown quadrature");
}

PointTuple concat(const PointTuple& a, const PointTuple& b) {
    PointTuple out = a;
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

void check_externals(const BoundState& psi, int k, const PointTuple& x) {
    if (int(x.size()) != k) throw DimensionError("external tuple must hold k points");
    require_dimension(x, psi.dim, "external tuple");
}

}  // namespace

DensityValue reduce_density(const BoundState& psi, int k, const PointTuple& x, const QuadratureOptions& opts) {
    check_externals(psi, k, x);
    const Integral I = integrate_internal(
        psi, k, [&](const PointTuple& y) { return Eigen::VectorXcd::Constant(1, std::norm(psi.value(concat(x, y)))); },
        opts);
    return {I.value[0].real(), I.error, I.method};
}

MatrixValue reduce_density_matrix(const BoundState& psi, int k, const PointTuple& x, const PointTuple& x_prime,
                                  const QuadratureOptions& opts) {
    check_externals(psi, k, x);
    check_externals(psi, k, x_prime);
    const Integral I = integrate_internal(
        psi, k,
        [&](const PointTuple& y) {
            return Eigen::VectorXcd::Constant(1, std::conj(psi.value(concat(x, y))) * psi.value(concat(x_prime, y)));
        },
        opts);
    return {I.value[0], I.error, I.method};
}

CurrentValue current_density(const BoundState& psi, int k, const PointTuple& x, const QuadratureOptions& opts) {
    check_externals(psi, k, x);
    if (!psi.gradient) throw UnsupportedError("state has no gradient");
    const int nx = k * psi.dim;
    const Integral I = integrate_internal(
        psi, k,
        [&](const PointTuple& y) {
            const PointTuple w = concat(x, y);
            const cplx v = psi.value(w);
            const Eigen::VectorXcd g = psi.gradient(w).head(nx);
            Eigen::VectorXcd out(nx);
            for (int a = 0; a < nx; ++a) out[a] = cplx((std::conj(g[a]) * v).imag(), 0.0);
            return out;
        },
        opts);
    return {I.value.real(), I.error, I.method};
}

GridWavefunction internal_slice(const BoundState& psi, const PointTuple& x, const GridGeometry& internal_grid) {
    if (internal_grid.dims() != int(psi.particles - x.size()) * psi.dim)
        throw DimensionError("internal grid axes differ from the internal coordinates");
    return GridWavefunction::sample(internal_grid,
                                    [&](const Eigen::VectorXd& y) { return psi.value(concat(x, unflatten(y, psi.dim))); });
}

TwistedValue twisted_density(const BoundState& psi, const TwistMap& t, const PointTuple& x,
                             const GridGeometry& internal_grid, const QuadratureOptions& opts) {
    const int k = t.external_count();
    if (t.dim() != psi.dim || t.config().electrons != psi.particles || t.config().external != k)
        throw DimensionError("twist and state disagree on N, k or d");
    TwistedValue out;
    out.direct = reduce_density(psi, k, x, opts);
    const GridWavefunction theta = internal_slice(psi, x, internal_grid);
    const double u = apply_U(t, x, theta).norm();
    const double n = theta.norm();
    out.twisted = u * u;
    out.grid_direct = n * n;
    out.discrepancy = std::abs(out.twisted - out.direct.value) / std::max(std::abs(out.direct.value), 1e-300);
    return out;
}

TwistMap doubled_twist(const MoleculeConfig& config, const PointTuple& x0, const PointTuple& x0_prime, Cutoff tau,
                       double eta0, std::optional<double> delta0) {
    if (x0.size() != std::size_t(config.external) || x0_prime.size() != x0.size())
        throw DimensionError("doubled twist needs two k-tuples");
    MoleculeConfig doubled = config;
    doubled.external = 2 * config.external;
    doubled.electrons = config.electrons + config.external;
    return TwistMap::build(doubled, concat(x0, x0_prime), std::move(tau), eta0, delta0);
}

TwistedMatrixValue twisted_density_matrix(const BoundState& psi, const TwistMap& doubled, const PointTuple& x,
                                          const PointTuple& x_prime, const GridGeometry& internal_grid,
                                          const QuadratureOptions& opts) {
    const int k = int(x.size());
    if (doubled.external_count() != 2 * k) throw DimensionError("doubled twist needs 2k external points");
    TwistedMatrixValue out;
    out.direct = reduce_density_matrix(psi, k, x, x_prime, opts);
    const GridWavefunction a = internal_slice(psi, x, internal_grid);
    const GridWavefunction b = internal_slice(psi, x_prime, internal_grid);
    const PointTuple xx = concat(x, x_prime);
    out.twisted = apply_U(doubled, xx, a).inner(apply_U(doubled, xx, b));
    out.grid_direct = a.inner(b);
    out.discrepancy = std::abs(out.twisted - out.direct.value) / std::max(std::abs(out.direct.value), 1e-300);
    return out;
}

}  // namespace twistcalc
