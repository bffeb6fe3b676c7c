#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "twistcalc/errors.hpp"
#include "twistcalc/geometry.hpp"

using namespace twistcalc;

namespace {

Point p3(double a, double b, double c) { return (Point(3) << a, b, c).finished(); }

MoleculeConfig water_like() {
    return MoleculeConfig::make(3, 3, 2, {{p3(0, 0, 0), 8.0}, {p3(1.8, 0, 0), 1.0}, {p3(0, 1.8, 0), 1.0}});
}

}  // namespace

TEST_CASE("nuclear repulsion is the pairwise Coulomb sum in three dimensions") {
    const auto m = water_like();
    const double expect = 8.0 / 1.8 + 8.0 / 1.8 + 1.0 / (1.8 * std::sqrt(2.0));
    CHECK(m.nuclear_repulsion == Catch::Approx(expect).epsilon(1e-15));
    CHECK(pairwise_nuclear_repulsion(m.nuclei) == Catch::Approx(expect).epsilon(1e-15));
    const auto one_d = MoleculeConfig::make(1, 1, 1, {{Point::Constant(1, 0.0), 1.0}});
    CHECK(one_d.nuclear_repulsion == 0.0);
    CHECK(one_d.internal() == 0);
}

TEST_CASE("classification finds each collision set") {
    const auto m = water_like();
    CHECK(classify_configuration(m, {p3(1, 1, 1), p3(-1, 0, 0)}).region == Region::Admissible);

    const auto cc = classify_configuration(m, {p3(1, 1, 1), p3(1, 1, 1)});
    CHECK(cc.region == Region::ElectronCollision);
    REQUIRE(cc.witness);
    CHECK(*cc.witness == std::pair<int, int>{1, 2});

    const auto rr = classify_configuration(m, {p3(1, 1, 1), p3(0, 1.8, 0)});
    CHECK(rr.region == Region::NuclearCollision);
    CHECK(*rr.witness == std::pair<int, int>{2, 3});

    const PointTuple x{p3(1, 1, 1), p3(-1, 0, 0)};
    const PointTuple xp{p3(2, 2, 2), p3(1, 1, 1)};
    const auto cross = classify_configuration(m, x, xp);
    CHECK(cross.region == Region::CrossCollision);
    CHECK(*cross.witness == std::pair<int, int>{1, 2});

    const PointTuple xp_bad{p3(0, 0, 0), p3(3, 3, 3)};
    const auto second = classify_configuration(m, x, xp_bad);
    CHECK(second.region == Region::NuclearCollision);
    CHECK(second.tuple == 1);

    CHECK(classify_configuration(m, {p3(1, 1, 1), p3(1, 1, 1.05)}, std::nullopt, 0.1).region ==
          Region::ElectronCollision);
}

TEST_CASE("separation radius is the smallest base distance") {
    const auto m = water_like();
    CHECK(separation_radius(m, {p3(3, 0, 0), p3(-1, 0, 0)}) == Catch::Approx(1.0));
    CHECK(separation_radius(m, {p3(0.9, 0, 0), p3(0, 0, 5)}) == Catch::Approx(0.9));
    CHECK_THROWS_AS(separation_radius(m, {p3(0, 0, 0), p3(0, 0, 5)}), NotAdmissibleError);
    CHECK_THROWS_AS(separation_radius(m, {p3(0, 0, 5), p3(0, 0, 5)}), NotAdmissibleError);
}

TEST_CASE("flatten and unflatten are inverse") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n;
    for (int trial = 0; trial < 20; ++trial) {
        PointTuple x;
        for (int j = 0; j < 1 + trial % 4; ++j) x.push_back(p3(n(rng), n(rng), n(rng)));
        const auto back = unflatten(flatten(x), 3);
        REQUIRE(back.size() == x.size());
        for (std::size_t j = 0; j < x.size(); ++j) CHECK(back[j] == x[j]);
    }
    CHECK_THROWS_AS(unflatten(Eigen::VectorXd::Zero(4), 3), DimensionError);
}

TEST_CASE("configuration sizes are validated") {
    CHECK_THROWS(MoleculeConfig::make(3, 1, 2, {{p3(0, 0, 0), 1.0}}));
    CHECK_THROWS(MoleculeConfig::make(4, 1, 1, {{Point::Zero(4), 1.0}}));
    CHECK_THROWS(MoleculeConfig::make(3, 1, 1, {{p3(0, 0, 0), -1.0}}));
    const auto m = water_like();
    CHECK_THROWS_AS(classify_configuration(m, {p3(1, 1, 1), Point::Zero(2)}), DimensionError);
}
