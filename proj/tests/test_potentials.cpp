#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "twistcalc/errors.hpp"
#include "twistcalc/potentials.hpp"

using namespace twistcalc;

namespace {

Point p3(double a, double b, double c) { return (Point(3) << a, b, c).finished(); }

std::vector<Point> shell_samples(double rmin, double rmax, int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(std::log(rmin), std::log(rmax));
    std::vector<Point> out;
    for (int i = 0; i < n; ++i) {
        Point z = p3(g(rng), g(rng), g(rng));
        out.push_back(z.normalized() * std::exp(u(rng)));
    }
    return out;
}

}  // namespace

TEST_CASE("multi-index enumeration counts binomials") {
    CHECK(multi_indices(3, 0).size() == 1);
    CHECK(multi_indices(3, 2).size() == 10);
    CHECK(multi_indices(2, 4).size() == 15);
    for (const auto& a : multi_indices(3, 3)) CHECK(order_of(a) <= 3);
    CHECK(multi_factorial({2, 0, 3}) == 12.0);
}

TEST_CASE("Coulomb derivatives fit the class bound with C at most one") {
    const auto v = coulomb();
    const auto rep = verify_class_v(v, shell_samples(0.1, 10.0, 400, 1), 2);
    CHECK(rep.used_oracle);
    CHECK(rep.inferred_C <= 1.0 + 1e-6);
    CHECK_FALSE(rep.divergent);
    CHECK(rep.ok());
}

TEST_CASE("Coulomb oracle matches finite differences") {
    const auto v = coulomb();
    const Point z = p3(0.7, -0.4, 1.1);
    const auto exact = potential_derivatives(v, z, 2);
    const auto fd = finite_difference_derivatives(v.v, z, 2, 1e-3 * z.norm());
    REQUIRE(exact.size() == fd.size());
    for (std::size_t i = 0; i < exact.size(); ++i) CHECK(std::abs(exact[i] - fd[i]) <= 1e-5 * (1 + std::abs(exact[i])));
}

TEST_CASE("a polynomial numerator over |z| still fits a finite C") {
    auto v = coulomb();
    v.name = "poly";
    v.v = [](const Point& z) { return cplx((1.0 + 0.5 * z[0]) / z.norm()); };
    v.oracle = nullptr;
    v.oracle_max_order = 0;
    v.C = 10.0;
    const auto rep = verify_class_v(v, shell_samples(0.2, 1.0, 100, 2), 2);
    CHECK_FALSE(rep.used_oracle);
    CHECK(std::isfinite(rep.inferred_C));
    CHECK_FALSE(rep.divergent);
}

TEST_CASE("an essential singularity is flagged as divergent") {
    auto v = coulomb();
    v.name = "essential";
    v.v = [](const Point& z) { return cplx(std::exp(1.0 / z.norm()) / z.norm()); };
    v.oracle = nullptr;
    v.oracle_max_order = 0;
    std::vector<Point> s;
    for (double r = 0.4; r > 0.05; r *= 0.8) s.push_back(p3(r, 0, 0));
    const auto rep = verify_class_v(v, s, 2);
    CHECK(rep.divergent);
    CHECK_FALSE(rep.ok());
}

TEST_CASE("envelope doubling with eta0 one half gives B0 = 2") {
    const auto env = coulomb_envelope();
    std::vector<double> ts;
    for (double t = 0.01; t < 100; t *= 1.7) ts.push_back(t);
    const auto rep = check_doubling(env, ts);
    CHECK(rep.worst_ratio == Catch::Approx(2.0).epsilon(1e-9));
    CHECK(rep.ok);
    CHECK(check_doubling(log_modified_envelope(0.5), ts).worst_ratio < 4.0);
}

TEST_CASE("Hardy quotient against closed-form radial integrals") {
    // Gaussian: (1/2) sqrt(pi)/2 ... ratio 4/3 exactly.
    CHECK(hardy_ratio([](double r) { return std::exp(-r * r / 2); }) == Catch::Approx(4.0 / 3.0).epsilon(1e-6));
    // r e^{-r}: both integrals equal 1/4.
    CHECK(hardy_ratio([](double r) { return r * std::exp(-r); }) == Catch::Approx(1.0).epsilon(1e-6));
    // e^{-r}: 1/2 over 1/4.
    CHECK(hardy_ratio([](double r) { return std::exp(-r); }) == Catch::Approx(2.0).epsilon(1e-6));
    CHECK_THROWS_AS(hardy_ratio([](double) { return 0.0; }), Error);
}

TEST_CASE("Hardy quotient stays below 4 on the test family") {
    std::vector<std::function<double(double)>> family;
    for (double a : {0.1, 0.5, 1.0, 4.0, 20.0}) {
        family.push_back([a](double r) { return std::exp(-a * r * r); });
        family.push_back([a](double r) { return std::exp(-a * r); });
        family.push_back([a](double r) { return r * r * std::exp(-a * r); });
        family.push_back([a](double r) {
            const double u = r / (1.0 + a);
            return u < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - u * u)) * std::cos(a * r) : 0.0;
        });
    }
    for (const auto& f : family) {
        const double q = hardy_ratio(f);
        CHECK(q > 0.0);
        CHECK(q <= 4.0 + 1e-6);
    }
}

TEST_CASE("pair assembly sums pairings and reports singularities") {
    const auto m = MoleculeConfig::make(3, 2, 1, {{p3(0, 0, 2), 2.0}});
    const PairAssembly single(m, {{{Particle::Kind::External, 0}, {Particle::Kind::Internal, 0}, coulomb(), 1.0}});
    CHECK(single.evaluate({p3(1, 0, 0)}, {p3(0, 0, 0)}).real() == Catch::Approx(1.0));

    const auto phys = PairAssembly::physical(m);
    const PointTuple x{p3(1, 0, 0)}, y{p3(0, 1, 0)};
    const double expect = 1.0 / std::sqrt(2.0) - 2.0 / std::sqrt(5.0) - 2.0 / std::sqrt(5.0);
    CHECK(phys.evaluate(x, y).real() == Catch::Approx(expect).epsilon(1e-14));

    auto pairs = phys.pairings();
    std::reverse(pairs.begin(), pairs.end());
    CHECK(PairAssembly(m, pairs).evaluate(x, y).real() == Catch::Approx(expect).epsilon(1e-14));
    CHECK(assemble_potential(phys)(x, y).real() == Catch::Approx(expect).epsilon(1e-14));

    try {
        phys.evaluate({p3(0, 0, 2)}, y);
        FAIL("expected a singularity");
    } catch (const SingularityError& e) {
        CHECK(e.pairing.find('n') != std::string::npos);
    }
    CHECK_THROWS_AS(coulomb(2), UnsupportedError);
}
