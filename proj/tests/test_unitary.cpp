#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "twistcalc/errors.hpp"
#include "twistcalc/unitary.hpp"

using namespace twistcalc;

namespace {

Point p1(double a) { return Point::Constant(1, a); }

struct Toy {
    MoleculeConfig m = MoleculeConfig::make(1, 2, 1, {{p1(6.0), 1.0}});
    TwistMap t = TwistMap::build(m, {p1(0.0)}, Cutoff::bump(1));
    GridGeometry g = GridGeometry::uniform(1, 128, 8.0);
    // theta(x; y) = exp(-(y - 0.3 x)^2 / 2 - (x - 0.7)^2 / 2) (1 + 0.2 i x y)
    ExternalFamily family = [this](const PointTuple& x) {
        const double xv = x[0][0];
        return GridWavefunction::sample(g, [xv](const Eigen::VectorXd& y) {
            const double u = y[0] - 0.3 * xv;
            return std::exp(-u * u / 2 - (xv - 0.7) * (xv - 0.7) / 2) * cplx(1.0, 0.2 * xv * y[0]);
        });
    };
};

}  // namespace

TEST_CASE("U is the identity at the base point and unitary off it") {
    Toy s;
    const auto theta = s.family({p1(0.0)});
    CHECK(band_fraction(theta) <= 0.25);
    CHECK((apply_U(s.t, s.t.base(), theta).values - theta.values).norm() <= 1e-14 * theta.values.norm());
    for (double frac : {0.2, 0.6, 0.95}) {
        const PointTuple x{p1(frac * s.t.delta0())};
        const auto th = s.family(x);
        CHECK(unitarity_defect(s.t, x, th) <= 1e-8);
        const auto back = apply_U_inverse(s.t, x, apply_U(s.t, x, th));
        CHECK((back.values - th.values).norm() <= 1e-8 * th.values.norm());
    }
}

TEST_CASE("U acts as the half-density composition") {
    Toy s;
    const PointTuple x{p1(0.5 * s.t.delta0())};
    const auto theta = s.family(x);
    const auto Ut = apply_U(s.t, x, theta);
    for (std::size_t i = 0; i < s.g.size(); i += 7) {
        const Point y = s.g.point(i);
        const Point fy = s.t.forward(x, y);
        const double u = fy[0] - 0.3 * x[0][0];
        const cplx expect = std::sqrt(std::abs(s.t.dz(x, y).determinant())) *
                            std::exp(-u * u / 2 - (x[0][0] - 0.7) * (x[0][0] - 0.7) / 2) *
                            cplx(1.0, 0.2 * x[0][0] * fy[0]);
        CHECK(std::abs(Ut.values[Eigen::Index(i)] - expect) <= 1e-10);
    }
}

TEST_CASE("conjugation identities hold to grid accuracy") {
    Toy s;
    const PointTuple x{p1(0.6 * s.t.delta0())};
    for (auto id : {ConjugationIdentity::ForwardExternal, ConjugationIdentity::InverseExternal,
                    ConjugationIdentity::ForwardInternal, ConjugationIdentity::InverseInternal}) {
        INFO(to_string(id));
        const auto r = conjugation_residual(s.t, x, id, s.family);
        CHECK(r.reference_norm > 0.0);
        CHECK(r.residual <= 1e-6);
    }
    CHECK(double_conjugation_residual(s.t, x, s.family).residual <= 1e-6);
}

TEST_CASE("the internal grid must hold every cutoff ball") {
    Toy s;
    CHECK_NOTHROW(validate_internal_grid(s.t, s.g));
    CHECK_THROWS(validate_internal_grid(s.t, GridGeometry::uniform(1, 64, 5.0)));
    // The third particle block is too narrow for B(x0, r0).
    CHECK_THROWS(validate_internal_grid(s.t, GridGeometry{{16, 16, 16}, {8, 8, 3}}));
}
