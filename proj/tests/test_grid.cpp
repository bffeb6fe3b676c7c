#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <random>

#include "twistcalc/errors.hpp"
#include "twistcalc/grid.hpp"

using namespace twistcalc;

TEST_CASE("grid layout and wavenumbers") {
    GridGeometry g{{4, 6}, {1.0, 3.0}};
    CHECK(g.size() == 24);
    CHECK(g.spacing(0) == 0.5);
    CHECK(g.coordinate(1, 0) == -3.0);
    CHECK(g.index(7) == std::vector<int>{1, 1});
    CHECK(g.point(7)[0] == -0.5);
    CHECK(g.cell_volume() == 0.5);
    CHECK(g.wavenumber(0, 1) == Catch::Approx(M_PI));
    CHECK(g.wavenumber(0, 2) == Catch::Approx(-2 * M_PI));
    CHECK(g.is_nyquist(0, 2));
    CHECK(g.wavenumber(0, 3) == Catch::Approx(-M_PI));
    // The box ends at the last grid point, L - h, on the right.
    CHECK(g.contains_ball(Eigen::VectorXd::Zero(1), 0.45, 0));
    CHECK_FALSE(g.contains_ball(Eigen::VectorXd::Zero(1), 0.5, 0));
    CHECK_FALSE(g.contains_ball(Eigen::VectorXd::Constant(1, -0.5), 0.5, 0));
    CHECK_THROWS(GridGeometry({{0}, {1.0}}).validate());
}

TEST_CASE("DFT round trip and Parseval") {
    const auto g = GridGeometry::uniform(2, 16, 2.0);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n;
    Eigen::VectorXcd v(Eigen::Index(g.size()));
    for (auto& c : v) c = cplx(n(rng), n(rng));
    const auto f = fft_forward(g, v);
    CHECK((fft_inverse(g, f) - v).norm() <= 1e-13 * v.norm());
    CHECK(f.squaredNorm() == Catch::Approx(double(g.size()) * v.squaredNorm()));
    // Mode 0 is the plain sum.
    CHECK(std::abs(f[0] - v.sum()) <= 1e-12 * v.norm());
}

TEST_CASE("spectral derivatives of trigonometric polynomials are exact") {
    const auto g = GridGeometry::uniform(1, 32, M_PI);
    const auto f = GridWavefunction::sample(g, [](const Eigen::VectorXd& w) {
        return cplx(std::sin(3 * w[0]) + std::cos(5 * w[0]), 0.0);
    });
    const auto d = spectral_D(g, f.values, 0);
    const auto lap = spectral_negative_laplacian(g, f.values);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double w = g.point(i)[0];
        const cplx df(3 * std::cos(3 * w) - 5 * std::sin(5 * w), 0.0);
        CHECK(std::abs(d[Eigen::Index(i)] - cplx(0, -1) * df) <= 1e-12);
        CHECK(std::abs(lap[Eigen::Index(i)] - (9 * std::sin(3 * w) + 25 * std::cos(5 * w))) <= 1e-11);
    }
    const auto m = apply_multiplier(g, f.values, [](const Eigen::VectorXd& k) { return cplx(1.0 + k.squaredNorm()); });
    CHECK((m - (f.values + lap)).norm() <= 1e-11);
}

TEST_CASE("trigonometric interpolation reproduces band-limited functions off grid") {
    const auto g = GridGeometry::uniform(2, 16, M_PI);
    auto fn = [](const Eigen::VectorXd& w) { return cplx(std::cos(2 * w[0] - w[1]), std::sin(3 * w[1])); };
    const auto f = GridWavefunction::sample(g, fn);
    const TrigInterpolant I(f);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-M_PI, M_PI);
    for (int i = 0; i < 50; ++i) {
        Eigen::VectorXd w(2);
        w << u(rng), u(rng);
        CHECK(std::abs(I(w) - fn(w)) <= 1e-12);
    }
    CHECK(band_fraction(f) >= 0.25);
    CHECK(band_fraction(f) <= 0.5);
}

TEST_CASE("norm and inner product use the cell volume") {
    const auto g = GridGeometry::uniform(1, 256, 10.0);
    const auto f = GridWavefunction::sample(g, [](const Eigen::VectorXd& w) { return cplx(std::exp(-w.squaredNorm() / 2)); });
    CHECK(f.norm() * f.norm() == Catch::Approx(std::sqrt(M_PI)).epsilon(1e-12));
    CHECK(f.inner(f).real() == Catch::Approx(std::sqrt(M_PI)).epsilon(1e-12));
}

TEST_CASE("binary wavefunction files round trip") {
    const auto g = GridGeometry{{3, 5}, {1.5, 2.5}};
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n;
    GridWavefunction f(g);
    for (auto& c : f.values) c = cplx(n(rng), n(rng));
    const auto path = std::filesystem::temp_directory_path() / "twistcalc_grid_roundtrip.bin";
    write_wavefunction(path.string(), f);
    CHECK(std::filesystem::file_size(path) == 8 + 8 + 8 + 2 * 8 + 2 * 8 + 15 * 16);
    const auto back = read_wavefunction(path.string());
    CHECK(back.geometry.points == g.points);
    CHECK(back.geometry.half_width == g.half_width);
    CHECK(back.values == f.values);
    std::filesystem::remove(path);
    CHECK_THROWS(read_wavefunction(path.string()));
}
