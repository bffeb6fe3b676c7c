#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "twistcalc/densities.hpp"
#include "twistcalc/errors.hpp"

using namespace twistcalc;

namespace {

Point p1(double a) { return Point::Constant(1, a); }
Point p3(double a, double b, double c) { return (Point(3) << a, b, c).finished(); }

BoundState correlated_1d() {
    GaussianParameters p;
    p.A = (Eigen::Matrix2d() << 1.0, 0.3, 0.3, 0.8).finished();
    p.center = Eigen::Vector2d(0.3, 0.0);
    p.momentum = Eigen::Vector2d(0.4, 0.0);
    return gaussian_state(1, 2, p);
}

}  // namespace

TEST_CASE("Gauss-Hermite integrates polynomials exactly") {
    const auto rule = gauss_hermite(12);
    CHECK(rule.nodes.size() == 12);
    // int t^{2j} e^{-t^2} dt = Gamma(j + 1/2)
    for (int j = 0; j < 12; ++j) {
        double q = 0.0;
        for (int i = 0; i < 12; ++i) q += rule.weights[i] * std::pow(rule.nodes[i], 2 * j);
        CHECK(q == Catch::Approx(std::tgamma(j + 0.5)).epsilon(1e-12));
        double odd = 0.0;
        for (int i = 0; i < 12; ++i) odd += rule.weights[i] * std::pow(rule.nodes[i], 2 * j + 1);
        CHECK(std::abs(odd) <= 1e-12 * std::tgamma(j + 1.0));
    }
}

TEST_CASE("correlated Gaussian density matches its closed form") {
    const auto psi = correlated_1d();
    // |psi|^2 = exp(-(w-c)^T A (w-c)); integrating y gives sqrt(pi / A_yy) exp(-(x-c)^2 (A_xx - A_xy^2 / A_yy)).
    for (double x : {-1.0, 0.0, 0.4, 1.7}) {
        const double u = x - 0.3;
        const double expect = std::sqrt(M_PI / 0.8) * std::exp(-u * u * (1.0 - 0.09 / 0.8));
        for (auto method : {Quadrature::Analytic, Quadrature::GaussHermite}) {
            QuadratureOptions o;
            o.method = method;
            const auto v = reduce_density(psi, 1, {p1(x)}, o);
            CHECK(v.value == Catch::Approx(expect).epsilon(1e-12));
            // The closed form needs x and y decoupled; this state falls back to Gauss-Hermite.
            CHECK(v.method == Quadrature::GaussHermite);
        }
    }
}

TEST_CASE("density integrates to the norm") {
    const auto psi = correlated_1d();
    // Trapezoid over x on a wide window: spectrally accurate for Gaussians.
    double s = 0.0;
    const double h = 0.05;
    for (double x = -12; x <= 12; x += h) s += reduce_density(psi, 1, {p1(x)}).value * h;
    const double norm2 = M_PI / std::sqrt(0.8 - 0.09);
    CHECK(s == Catch::Approx(norm2).epsilon(1e-6));
    REQUIRE(psi.norm_squared);
    CHECK(*psi.norm_squared == Catch::Approx(norm2).epsilon(1e-12));
}

TEST_CASE("density matrix is Hermitian with the density on its diagonal") {
    const auto psi = correlated_1d();
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    for (int i = 0; i < 20; ++i) {
        const PointTuple x{p1(g(rng))}, xp{p1(g(rng))};
        const auto a = reduce_density_matrix(psi, 1, x, xp);
        const auto b = reduce_density_matrix(psi, 1, xp, x);
        CHECK(std::abs(a.value - std::conj(b.value)) <= 1e-12 * std::abs(a.value));
        const double rho = reduce_density(psi, 1, x).value;
        CHECK(std::abs(reduce_density_matrix(psi, 1, x, x).value - rho) <= 1e-10 * rho);
    }
}

TEST_CASE("current density of real and moving states") {
    const auto real = separable_gaussian_state(3, {p3(0, 0, 0), p3(1, 0, 0)}, {1.0, 1.5}, {p3(0, 0, 0), p3(0, 0, 0)});
    const auto moving = separable_gaussian_state(3, {p3(0, 0, 0), p3(1, 0, 0)}, {1.0, 1.5}, {p3(0.3, 0, -0.2), p3(0, 0, 0)});
    for (const auto& x : {p3(0.1, 0.2, 0.3), p3(-1, 0.5, 2)}) {
        CHECK(current_density(real, 1, {x}).value.norm() <= 1e-12);
        const auto c = current_density(moving, 1, {x});
        const double rho = reduce_density(moving, 1, {x}).value;
        CHECK((c.value + p3(0.3, 0, -0.2) * rho).norm() <= 1e-12 * rho);
    }
}

TEST_CASE("harmonium: Gauss-Hermite against quasi-Monte Carlo") {
    const auto psi = harmonium_state();
    const PointTuple x{p3(1.0, 0.5, -0.3)};
    QuadratureOptions gh;
    gh.method = Quadrature::GaussHermite;
    QuadratureOptions qmc;
    qmc.method = Quadrature::QuasiMonteCarlo;
    qmc.qmc_nodes = 1 << 16;
    const auto a = reduce_density(psi, 1, x, gh);
    const auto b = reduce_density(psi, 1, x, qmc);
    CHECK(a.error < 1e-3 * a.value);
    CHECK(std::abs(a.value - b.value) <= 3 * std::hypot(a.error, b.error));
    CHECK(a.value == Catch::Approx(b.value).epsilon(1e-3));
}

TEST_CASE("harmonium density integrates to the closed-form norm") {
    const auto psi = harmonium_state();
    // Radial integral of rho over x by Gauss-Laguerre-like trapezoid in r with angular average at 6 points.
    QuadratureOptions o;
    o.gauss_hermite_order = 24;
    double s = 0.0;
    const double h = 0.25;
    const std::vector<Point> dirs{p3(1, 0, 0), p3(-1, 0, 0), p3(0, 1, 0), p3(0, -1, 0), p3(0, 0, 1), p3(0, 0, -1)};
    for (double r = h / 2; r < 40; r += h) {
        double avg = 0.0;
        for (const auto& u : dirs) avg += reduce_density(psi, 1, {r * u}, o).value;
        s += 4 * M_PI * r * r * avg / 6 * h;
    }
    // rho is not radial in general, but harmonium's marginal is: psi depends on |x1|, |x2| and r12.
    CHECK(s == Catch::Approx(*psi.norm_squared).epsilon(1e-4));
}

TEST_CASE("uncertified states are refused") {
    const auto bad = with_energy(hydrogenic_state(1.0), -1.0);
    CHECK_THROWS_AS(reduce_density(bad, 1, {p3(1, 0, 0)}), DomainError);
}

TEST_CASE("twisted density equals the direct density on the toy family") {
    const auto m = MoleculeConfig::make(1, 2, 1, {{p1(6.0), 1.0}});
    const auto psi = separable_gaussian_state(1, {p1(0.7), p1(0.0)}, {1.0, 1.0}, {p1(0.0), p1(0.0)});
    const auto g = GridGeometry::uniform(1, 128, 8.0);
    const auto t = TwistMap::build(m, {p1(0.0)}, Cutoff::bump(1));
    for (double frac : {0.1, 0.6, 0.9}) {
        const PointTuple x{p1(frac * t.delta0())};
        const auto v = twisted_density(psi, t, x, g);
        CHECK(v.discrepancy <= 1e-8);
        CHECK(std::abs(v.twisted - v.grid_direct) <= 1e-8 * v.grid_direct);
    }
}

TEST_CASE("doubled twist reproduces the density matrix") {
    const auto m = MoleculeConfig::make(1, 2, 1, {{p1(6.0), 1.0}});
    const auto psi = correlated_1d();
    const auto g = GridGeometry::uniform(1, 512, 16.0);
    const auto t = doubled_twist(m, {p1(0.0)}, {p1(-6.0)}, Cutoff::bump(1));
    CHECK(t.external_count() == 2);
    CHECK(t.config().electrons == 3);
    const PointTuple x{p1(0.5 * t.delta0())}, xp{p1(-6.0 - 0.4 * t.delta0())};
    const auto v = twisted_density_matrix(psi, t, x, xp, g);
    CHECK(v.discrepancy <= 1e-8);
}
