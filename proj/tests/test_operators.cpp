#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "twistcalc/errors.hpp"
#include "twistcalc/operators.hpp"

using namespace twistcalc;

namespace {

Point p3(double a, double b, double c) { return (Point(3) << a, b, c).finished(); }

struct Setup {
    MoleculeConfig m = MoleculeConfig::make(3, 2, 1, {{p3(0, 0, 0), 1.0}});
    TwistMap t = TwistMap::build(m, {p3(1.5, 0, 0)}, Cutoff::bump(3));
};

Eigen::VectorXd random_vec(std::mt19937_64& rng, int n, double s = 1.0) {
    std::normal_distribution<double> g(0.0, s);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = g(rng);
    return v;
}

Diff2Operator anisotropic(int ext, int in) {
    Diff2Operator::Terms terms;
    for (int a = 0; a < ext + in; ++a)
        terms.second[{a, a}] = [a](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
            return cplx(1.5 + 0.5 * std::sin(x.sum() + y.sum() + a), 0.3 * std::cos(y.sum()));
        };
    terms.second[{0, ext}] = [](const Eigen::VectorXd&, const Eigen::VectorXd&) { return cplx(0.2); };
    terms.second[{ext, 0}] = [](const Eigen::VectorXd&, const Eigen::VectorXd&) { return cplx(0.2); };
    terms.first[1] = [](const Eigen::VectorXd& x, const Eigen::VectorXd&) { return cplx(x[0], 1.0); };
    terms.zeroth = [](const Eigen::VectorXd&, const Eigen::VectorXd& y) { return cplx(y.squaredNorm()); };
    return Diff2Operator::from_terms(ext, in, terms);
}

}  // namespace

TEST_CASE("symbols of explicit operators") {
    std::mt19937_64 rng(1);
    const auto L = Diff2Operator::negative_laplacian(3, 3);
    const auto P = anisotropic(3, 3);
    for (int i = 0; i < 50; ++i) {
        const auto x = random_vec(rng, 3), y = random_vec(rng, 3), xi = random_vec(rng, 3, 5), eta = random_vec(rng, 3, 5);
        CHECK(L.principal_symbol(x, y, xi, eta).real() == Catch::Approx(xi.squaredNorm() + eta.squaredNorm()));

        Eigen::VectorXd z(6);
        z << xi, eta;
        cplx expect = 0.0;
        for (int a = 0; a < 6; ++a) {
            const cplx c(1.5 + 0.5 * std::sin(x.sum() + y.sum() + a), 0.3 * std::cos(y.sum()));
            expect += c * z[a] * z[a];
        }
        expect += 2 * 0.2 * z[0] * z[3];
        const cplx principal = expect;
        expect += cplx(x[0], 1.0) * z[1] + y.squaredNorm();
        CHECK(std::abs(P.total_symbol(x, y, xi, eta) - expect) <= 1e-12 * std::abs(expect));
        CHECK(std::abs(P.principal_symbol(x, y, xi, eta) - principal) <= 1e-12 * std::abs(principal));
    }
}

TEST_CASE("ellipticity certificate for the Laplacian and an indefinite operator") {
    std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> pts{{Eigen::VectorXd::Zero(3), Eigen::VectorXd::Ones(3)}};
    const auto samples = covector_samples(pts, 200, 3, 3, 5);
    CHECK(samples.size() == 200);
    for (const auto& s : samples) {
        const double r2 = s.xi.squaredNorm() + s.eta.squaredNorm();
        CHECK(r2 >= 1.0 - 1e-12);
        CHECK(r2 <= 1e4 * (1 + 1e-12));
    }
    const auto cert = ellipticity_certificate(Diff2Operator::negative_laplacian(3, 3), samples);
    CHECK(cert.sign == 1);
    CHECK(cert.constant == Catch::Approx(1.0));

    Diff2Operator::Terms terms;
    terms.second[{0, 0}] = [](const Eigen::VectorXd&, const Eigen::VectorXd&) { return cplx(1.0); };
    terms.second[{4, 4}] = [](const Eigen::VectorXd&, const Eigen::VectorXd&) { return cplx(-1.0); };
    try {
        ellipticity_certificate(Diff2Operator::from_terms(3, 3, terms), samples);
        FAIL("expected NonEllipticError");
    } catch (const NonEllipticError& e) {
        CHECK(e.witness.size() == 12);
    }
}

TEST_CASE("twisted principal symbol agrees with exponential conjugation") {
    Setup s;
    std::mt19937_64 rng(2);
    const auto P = anisotropic(3, 3);
    for (int i = 0; i < 200; ++i) {
        const PointTuple x = sample_domain(s.t, rng);
        const Point y = sample_ball(s.t.base()[0], 1.2 * s.t.r0(), rng);
        const auto xi = random_vec(rng, 3, 3), eta = random_vec(rng, 3, 3);
        const cplx a = twisted_principal_symbol(P, s.t, flatten(x), y, xi, eta);
        const cplx b = exponential_conjugation_symbol(P, s.t, flatten(x), y, xi, eta);
        CHECK(std::abs(a - b) <= 1e-10 * std::abs(a));
    }
}

TEST_CASE("conjugated operator carries the twisted principal symbol") {
    Setup s;
    std::mt19937_64 rng(3);
    const auto P = anisotropic(3, 3);
    const auto Q = conjugate_operator(P, s.t);
    REQUIRE(Q.domain);
    for (int i = 0; i < 20; ++i) {
        const auto x = flatten(sample_domain(s.t, rng));
        const Point y = sample_ball(s.t.base()[0], s.t.r0(), rng);
        const auto xi = random_vec(rng, 3), eta = random_vec(rng, 3);
        const cplx a = Q.principal_symbol(x, y, xi, eta);
        const cplx b = twisted_principal_symbol(P, s.t, x, y, xi, eta);
        CHECK(std::abs(a - b) <= 1e-10 * std::abs(b));
    }
}

TEST_CASE("J coefficients against finite differences of the twist") {
    Setup s;
    std::mt19937_64 rng(4);
    const PointTuple x = sample_domain(s.t, rng);
    const Point y = sample_ball(s.t.base()[0], 0.8 * s.t.r0(), rng);
    const auto jf = j_coefficients(s.t, TwistDirection::Forward, x, {y});
    // Forward direction: G = F evaluated at y' = F^{-1}(x; y).
    const Point yp = s.t.inverse(x, y);
    const double h = 1e-6;
    for (int a = 0; a < 3; ++a) {
        Point e = Point::Zero(3);
        e[a] = h;
        PointTuple xp = x, xm = x;
        xp[0] += e;
        xm[0] -= e;
        const Point dfx = (s.t.forward(xp, yp) - s.t.forward(xm, yp)) / (2 * h);
        const Point dfy = (s.t.forward(x, yp + e) - s.t.forward(x, yp - e)) / (2 * h);
        CHECK((jf.J1.row(a).transpose() - dfx).norm() <= 1e-7);
        CHECK((jf.J3.row(a).transpose() - dfy).norm() <= 1e-7);
    }
    CHECK(jf.J2.real().norm() == 0.0);
    CHECK(jf.J4.real().norm() == 0.0);
    CHECK(jf.rho_plus * jf.rho_plus == Catch::Approx(std::abs(s.t.dz(x, y).determinant())).epsilon(1e-12));
}

TEST_CASE("twisted ellipticity bound holds for elliptic operators") {
    Setup s;
    std::mt19937_64 rng(5);
    std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> pts;
    for (int i = 0; i < 20; ++i)
        pts.emplace_back(flatten(sample_domain(s.t, rng)), sample_ball(s.t.base()[0], 1.2 * s.t.r0(), rng));
    const auto samples = covector_samples(pts, 50, 3, 3, 6);
    for (const auto& P : {Diff2Operator::negative_laplacian(3, 3), anisotropic(3, 3)}) {
        const auto r = twisted_ellipticity(P, s.t, samples);
        INFO(r.witness);
        CHECK(r.ok);
        CHECK(r.S == Catch::Approx(std::sqrt(1 + 4 * r.M * r.M)));
        CHECK(r.constant ==
              Catch::Approx(std::min({0.25, 1 / (r.C * r.C), 1 / (r.C * r.C * r.S * r.S)}) * r.base_constant));
        CHECK(r.worst_ratio >= r.constant * (1 - 1e-6));
    }
}

TEST_CASE("twisted pair derivatives follow factorial growth") {
    Setup s;
    const auto phys = PairAssembly::physical(s.m);
    std::mt19937_64 rng(7);
    std::vector<std::pair<PointTuple, PointTuple>> samples;
    while (samples.size() < 200) {
        const PointTuple x = sample_domain(s.t, rng);
        const Point y = sample_ball(s.t.base()[0], 1.5 * s.t.r0(), rng);
        if ((y - s.t.base()[0]).norm() < 0.05 || y.norm() < 0.05) continue;
        samples.push_back({x, {y}});
    }
    for (const auto& p : phys.pairings()) {
        INFO(describe(p));
        const auto r = twisted_derivative_bound(p, s.t, samples, 4);
        CHECK(r.stable);
        CHECK(std::isfinite(r.fitted_C));
        CHECK(r.chain_rule_error <= 1e-5);
    }
}

TEST_CASE("extension and magnetic operators") {
    Setup s;
    const auto P = anisotropic(3, 3);
    ExternalCutoff chi{ProductBall{s.t.base(), 0.5}, 0.2, 3};
    const auto E = extend_operator(P, chi, 1, 0.7);
    const Eigen::VectorXd y = Eigen::VectorXd::Constant(3, 0.3);
    const Eigen::VectorXd inside = flatten(s.t.base()) + Eigen::VectorXd::Constant(3, 0.05);
    const Eigen::VectorXd outside = flatten(s.t.base()) + Eigen::VectorXd::Constant(3, 1.0);
    CHECK((E.coefficients(inside, y).second - P.coefficients(inside, y).second).norm() == 0.0);
    CHECK((E.coefficients(outside, y).second - 0.7 * Eigen::MatrixXcd::Identity(6, 6)).norm() == 0.0);
    CHECK(chi.value(inside) == 1.0);
    CHECK(chi.value(outside) == 0.0);

    const Eigen::Vector<double, 6> A{0.1, -0.2, 0.3, 0.0, 0.5, -0.4};
    const auto M = magnetic_operator(
        3, 3, [A](const Eigen::VectorXd&, const Eigen::VectorXd&) { return Eigen::VectorXd(A); },
        [](const Eigen::VectorXd& x, const Eigen::VectorXd&) { return x.squaredNorm(); });
    const Eigen::VectorXd xi = Eigen::VectorXd::Constant(3, 1.0), eta = Eigen::VectorXd::Constant(3, -2.0);
    Eigen::VectorXd z(6);
    z << xi, eta;
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(3, 0.5);
    CHECK(std::abs(M.total_symbol(x, y, xi, eta) - ((z - A).squaredNorm() + x.squaredNorm())) <= 1e-9);
}

TEST_CASE("doubled Hamiltonians evaluate V on one block") {
    const auto m = MoleculeConfig::make(3, 2, 1, {{p3(0, 0, 0), 1.0}});
    const auto H1 = doubled_hamiltonian(m, 1);
    const auto H2 = doubled_hamiltonian(m, 2);
    const auto phys = PairAssembly::physical(m);
    const Point x = p3(1, 0, 0), xp = p3(0, 2, 0), y = p3(0, 0, 1.5);
    CHECK(H1.potential_at({x, xp}, {y}) == phys.evaluate({x}, {y}) + H1.shift);
    CHECK(H2.potential_at({x, xp}, {y}) == phys.evaluate({xp}, {y}) + H2.shift);
    CHECK(H1.kinetic.vars() == 9);
}

TEST_CASE("pair cases are classified") {
    const auto m = MoleculeConfig::make(3, 3, 1, {{p3(0, 0, 0), 1.0}, {p3(3, 0, 0), 1.0}});
    std::map<PairCase, int> count;
    const auto phys = PairAssembly::physical(m);
    for (const auto& p : phys.pairings()) ++count[classify_pair(p)];
    CHECK(count[PairCase::NuclearNuclear] == 1);
    CHECK(count[PairCase::ExternalExternal] == 0);
    CHECK(count[PairCase::ExternalNuclear] == 2);
    CHECK(count[PairCase::ExternalInternal] == 2);
    CHECK(count[PairCase::NuclearInternal] == 4);
    CHECK(count[PairCase::InternalInternal] == 1);
}
