#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "twistcalc/config.hpp"
#include "twistcalc/errors.hpp"

using namespace twistcalc;

TEST_CASE("sections, comments and repeated keys") {
    const auto c = Config::parse(R"(
# leading comment
[molecule]
dim = 3
electrons = 2   # trailing comment
external = 1
nucleus = 1 @ 0, 0, 0
nucleus = 2 @ 0 0 1.4

[twist]
x0 = 1, 0, 0
eta0 = 0.25
)");
    CHECK(c.has_section("molecule"));
    CHECK_FALSE(c.has_section("grid"));
    CHECK(c.integer("molecule", "electrons") == 2);
    CHECK(c.all("molecule", "nucleus").size() == 2);
    CHECK(c.number("twist", "eta0") == 0.25);
    CHECK(c.number_or("twist", "missing", 7.0) == 7.0);
    CHECK_FALSE(c.find("twist", "missing"));
    CHECK_THROWS_AS(c.get("twist", "missing"), ConfigError);
    CHECK_NOTHROW(c.require_known("twist", {"x0", "eta0"}));
    CHECK_THROWS_AS(c.require_known("twist", {"x0"}), ConfigError);

    const auto m = molecule_from(c);
    CHECK(m.nuclei.size() == 2);
    CHECK(m.nuclei[1].position[2] == 1.4);
    CHECK(m.nuclear_repulsion == Catch::Approx(2.0 / 1.4));
}

TEST_CASE("number lists and point tuples") {
    CHECK(parse_number("pi", "t") == M_PI);
    CHECK(parse_number("-1e-3", "t") == -1e-3);
    CHECK_THROWS_AS(parse_number("1.0x", "t"), ConfigError);
    CHECK(parse_numbers("1, 2 3,4", "t") == std::vector<double>{1, 2, 3, 4});
    const auto pts = parse_points("0, 0, 1 | 2 3 4", 3, "t");
    REQUIRE(pts.size() == 2);
    CHECK(pts[1][2] == 4.0);
    CHECK_THROWS_AS(parse_points("0, 0 | 1, 2, 3", 3, "t"), ConfigError);
}

TEST_CASE("malformed input is rejected with a location") {
    CHECK_THROWS_AS(Config::parse("key = 1\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse("[a]\nnovalue\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse("[a\nk = 1\n"), ConfigError);
    try {
        Config::parse("[a]\nk = 1\n\n[b]\nbroken line\n", "f.cfg");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("f.cfg:5") != std::string::npos);
    }
    const auto c = Config::parse("[molecule]\ndim = 3\nelectrons = 1\nexternal = 2\nnucleus = 1 @ 0,0,0\n");
    CHECK_THROWS_AS(molecule_from(c), ConfigError);
    CHECK_THROWS_AS(Config::load("/nonexistent/twistcalc.cfg"), ConfigError);
}

TEST_CASE("hash is the SHA-256 of the text") {
    // Digests computed independently with Python's hashlib.
    CHECK(config_hash(Config::parse("")) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(config_hash(Config::parse("[a]\nk = abc\n")) == "313463364109ed5dba62bc03149daf215932c6485ff76d27e39a2608ce9913cf");
}
