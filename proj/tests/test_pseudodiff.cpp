#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "twistcalc/errors.hpp"
#include "twistcalc/pseudodiff.hpp"

using namespace twistcalc;

namespace {

Diff2Operator one_minus_laplacian(int dims) {
    Diff2Operator::Terms terms;
    auto one = [](const Eigen::VectorXd&, const Eigen::VectorXd&) { return cplx(1.0); };
    for (int a = 0; a < dims; ++a) terms.second[{a, a}] = one;
    terms.zeroth = one;
    return Diff2Operator::from_terms(dims, 0, terms, true);
}

// -d(a d) + 1 with a = 2 + sin w.
Diff2Operator sine_operator() {
    Diff2Operator::Terms terms;
    terms.second[{0, 0}] = [](const Eigen::VectorXd& w, const Eigen::VectorXd&) { return cplx(2.0 + std::sin(w[0])); };
    terms.first[0] = [](const Eigen::VectorXd& w, const Eigen::VectorXd&) { return cplx(0.0, -std::cos(w[0])); };
    terms.zeroth = [](const Eigen::VectorXd&, const Eigen::VectorXd&) { return cplx(1.0); };
    return Diff2Operator::from_terms(1, 0, terms);
}

}  // namespace

TEST_CASE("Sobolev norm of a single Fourier mode") {
    const double L = M_PI;
    const auto g = GridGeometry::uniform(1, 64, L);
    for (int k : {0, 1, 5, -7}) {
        const auto u = GridWavefunction::sample(g, [k](const Eigen::VectorXd& w) { return std::exp(cplx(0, k * w[0])); });
        for (double s : {-2.0, 0.0, 1.0, 2.0})
            CHECK(sobolev_norm(u, s) == Catch::Approx(std::sqrt(2 * L) * std::pow(1.0 + k * k, s / 2)).epsilon(1e-12));
    }
}

TEST_CASE("quantisation of a multiplier matches the direct sum") {
    const auto g = GridGeometry::uniform(1, 32, 2.0);
    const auto u = band_test_function(g, 6.0, 3);
    auto m = [](const Eigen::VectorXd& z) { return cplx(1.0 + z.squaredNorm(), 0.5 * z[0]); };
    const auto fast = quantize(SymbolFunction::multiplier(2, m), u);
    SymbolFunction slow{2, [m](const Eigen::VectorXd&, const Eigen::VectorXd& z) { return m(z); }, false};
    CHECK((quantize(slow, u).values - fast.values).norm() <= 1e-12 * fast.values.norm());

    // A position-dependent multiplication symbol acts pointwise.
    SymbolFunction mult{0, [](const Eigen::VectorXd& w, const Eigen::VectorXd&) { return cplx(std::cos(w[0])); }, false};
    const auto mu = quantize(mult, u);
    for (std::size_t i = 0; i < g.size(); ++i)
        CHECK(std::abs(mu.values[Eigen::Index(i)] - std::cos(g.point(i)[0]) * u.values[Eigen::Index(i)]) <= 1e-12);
}

TEST_CASE("symbol seminorms of 1 + |zeta|^2") {
    const auto sigma = SymbolFunction::of_operator(one_minus_laplacian(2));
    std::vector<Eigen::VectorXd> pos{Eigen::VectorXd::Zero(2), Eigen::VectorXd::Ones(2)};
    std::vector<Eigen::VectorXd> freq;
    for (double r : {0.0, 1.0, 10.0, 100.0}) freq.push_back(Eigen::Vector2d(r, 0.5 * r));
    const auto rep = sample_seminorms(sigma, pos, freq);
    CHECK(rep.constants.at({0, 0}) == Catch::Approx(1.0).epsilon(1e-6));
    CHECK(rep.constants.at({0, 1}) <= 2.0 + 1e-5);
    CHECK(rep.constants.at({0, 2}) == Catch::Approx(2.0).epsilon(1e-3));
    CHECK(rep.constants.at({1, 0}) <= 1e-6);
    CHECK(rep.worst() < 3.0);
    CHECK_THROWS_AS(sample_seminorms(sigma, pos, freq, 3), UnsupportedError);
}

TEST_CASE("frequency cutoff is a smooth step") {
    FrequencyCutoff tau;
    CHECK(tau(Eigen::VectorXd::Constant(1, 0.5)) == 1.0);
    CHECK(tau(Eigen::VectorXd::Constant(1, 2.5)) == 0.0);
    double prev = 1.0;
    for (double r = 1.0; r <= 2.0; r += 0.05) {
        const double v = tau(Eigen::VectorXd::Constant(1, r));
        CHECK(v <= prev);
        CHECK(v >= 0.0);
        prev = v;
    }
}

TEST_CASE("band test functions live in the requested annulus") {
    const auto g = GridGeometry::uniform(1, 128, M_PI);
    const auto u = band_test_function(g, 16.0, 9);
    CHECK(u.norm() == Catch::Approx(1.0));
    const auto f = fft_forward(g, u.values);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double k = g.wavevector(i).norm();
        if (k < 8.0 - 1e-12 || k > 16.0 + 1e-12) CHECK(std::abs(f[Eigen::Index(i)]) <= 1e-12);
    }
}

TEST_CASE("grid operator applies the differential operator spectrally") {
    const auto g = GridGeometry::uniform(1, 64, M_PI);
    const auto Pg = grid_operator(sine_operator(), g);
    const auto u = GridWavefunction::sample(g, [](const Eigen::VectorXd& w) { return cplx(std::cos(3 * w[0])); });
    const auto Pu = Pg(u.values);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double w = g.point(i)[0];
        // -d((2 + sin w)(-3 sin 3w)) + cos 3w
        const double expect = 3 * std::cos(w) * std::sin(3 * w) + 9 * (2 + std::sin(w)) * std::cos(3 * w) + std::cos(3 * w);
        CHECK(std::abs(Pu[Eigen::Index(i)] - expect) <= 1e-11);
    }
}

TEST_CASE("constant-coefficient parametrix remainder is the closed-form multiplier") {
    const auto g = GridGeometry::uniform(1, 256, M_PI);
    const auto par = build_parametrix(one_minus_laplacian(1), g);
    CHECK(par.constant_coefficients);
    CHECK(par.certificate.constant == Catch::Approx(1.0));
    for (double K : {2.0, 4.0, 8.0, 32.0}) {
        const auto u = band_test_function(g, K, 17);
        const Eigen::VectorXcd Ru = par.R(u.values);
        const auto ref = quantize(par.remainder_symbol(), u);
        CHECK((Ru - ref.values).norm() <= 1e-12 * u.values.norm());
        // Beyond the cutoff the remainder symbol is (1 - sigma / |zeta|^2)^2 = |zeta|^-4.
        if (K >= 4.0) CHECK(Ru.norm() <= std::pow(2.0 / K, 4) * u.values.norm() * (1 + 1e-12));
    }
}

TEST_CASE("variable-coefficient remainder gains order as the band doubles") {
    const auto g = GridGeometry::uniform(1, 256, M_PI);
    const auto par = build_parametrix(sine_operator(), g);
    CHECK_FALSE(par.constant_coefficients);
    for (double s : {-2.0, 0.0, 2.0}) {
        std::vector<double> ratio;
        for (double K : {8.0, 16.0, 32.0, 64.0}) {
            const auto u = band_test_function(g, K, 23);
            const GridWavefunction Ru(g, par.R(u.values));
            ratio.push_back(sobolev_norm(Ru, s) / sobolev_norm(u, s));
            // Smoothing of order two: the s + 2 norm stays comparable.
            CHECK(sobolev_norm(Ru, s + 2) / sobolev_norm(u, s) < 1.0);
        }
        for (std::size_t i = 1; i < ratio.size(); ++i) CHECK(ratio[i - 1] / ratio[i] >= 2.0);
    }
}

TEST_CASE("non-elliptic operators are refused") {
    Diff2Operator::Terms terms;
    terms.second[{0, 0}] = [](const Eigen::VectorXd& w, const Eigen::VectorXd&) { return cplx(std::sin(w[0])); };
    CHECK_THROWS_AS(build_parametrix(Diff2Operator::from_terms(1, 0, terms), GridGeometry::uniform(1, 32, M_PI)),
                    NonEllipticError);
}
