#include <catch2/catch_amalgamated.hpp>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "twistcalc/cli.hpp"

using namespace twistcalc;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
    fs::path dir;
};

Run run(const std::string& command, const std::string& config, std::vector<std::string> extra = {}) {
    static int counter = 0;
    const fs::path dir = fs::temp_directory_path() / ("twistcalc_cli_" + std::to_string(++counter));
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path cfg = dir / "run.cfg";
    std::ofstream(cfg) << config;
    std::vector<std::string> args{"twistcalc", "--config", cfg.string(), "--out", (dir / "out").string()};
    for (auto& e : extra) args.push_back(e);
    args.push_back(command);
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(int(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str(), dir / "out"};
}

nlohmann::json report(const Run& r, const std::string& stem) {
    std::ifstream f(r.dir / (stem + ".json"));
    REQUIRE(f);
    return nlohmann::json::parse(f);
}

const std::string kToy = R"([molecule]
dim = 1
electrons = 2
external = 1
nucleus = 1 @ 6

[twist]
x0 = 0

[grid]
points = 128
half_width = 8

[state]
kind = gaussian
centers = 0.7 | 0
widths = 1, 1

[samples]
count = 200
)";

}  // namespace

TEST_CASE("twist-verify on the toy passes and writes a versioned report") {
    const auto r = run("twist-verify", kToy, {"--seed", "5"});
    INFO(r.out << r.err);
    CHECK(r.code == kExitPass);
    const auto j = report(r, "twist-verify");
    CHECK(j["schema_version"] == kSchemaVersion);
    CHECK(j["seed"] == 5);
    CHECK(j["config_hash"].get<std::string>().size() == 64);
    bool saw_conjugation = false;
    for (const auto& c : j["checks"]) {
        CHECK(c["pass"] == true);
        if (c["name"] == "conjugation_forward-internal") saw_conjugation = true;
    }
    CHECK(saw_conjugation);
    CHECK(fs::exists(r.dir / "twist-verify.csv"));
}

TEST_CASE("runs are deterministic given config and seed") {
    const auto a = report(run("twist-verify", kToy), "twist-verify");
    const auto b = report(run("twist-verify", kToy), "twist-verify");
    CHECK(a["checks"] == b["checks"]);
    CHECK(a["config_hash"] == b["config_hash"]);
}

TEST_CASE("trivial twist without internal electrons exits 0") {
    const auto r = run("twist-verify", "[molecule]\ndim = 3\nelectrons = 1\nexternal = 1\nnucleus = 1 @ 0,0,0\n"
                                       "[twist]\nx0 = 2, 0, 0\n[samples]\ncount = 50\n");
    INFO(r.err);
    CHECK(r.code == kExitPass);
}

TEST_CASE("invariant violations and config errors exit 2") {
    CHECK(run("twist-verify", kToy + "[tolerances]\nbogus = 1\n").code == kExitConfig);
    std::string bad = kToy;
    bad.replace(bad.find("x0 = 0"), 6, "x0 = 0\ndelta0 = 3.5");
    const auto r = run("twist-verify", bad);
    CHECK(r.code == kExitConfig);
    CHECK(r.err.find("delta0") != std::string::npos);
    CHECK(run("twist-verify", "[molecule]\ndim = 1\n").code == kExitConfig);
    CHECK(run("density", kToy + "[unknown]\nk = 1\n").code == kExitConfig);
    CHECK(run("twist-verify", kToy, {"--format", "xml"}).code == kExitConfig);
}

TEST_CASE("tightened tolerances fail with exit 1") {
    const auto r = run("twist-verify", kToy, {"--tol-scale", "1e-12"});
    CHECK(r.code == kExitCheckFailed);
    CHECK(r.out.find("FAIL") != std::string::npos);
}

TEST_CASE("ellipticity reports the constants and refuses indefinite operators") {
    const std::string base = "[molecule]\ndim = 1\nelectrons = 2\nexternal = 1\nnucleus = 1 @ 6\n[twist]\nx0 = 0\n"
                             "[samples]\ncount = 10\nper_point = 20\n";
    const auto ok = run("ellipticity", base + "[operator]\nkind = laplacian\n");
    CHECK(ok.code == kExitPass);
    const auto j = report(ok, "ellipticity")["constants"];
    CHECK(j["C_P"] == 1.0);
    CHECK(j["S"].get<double>() == Catch::Approx(std::sqrt(1 + 4 * std::pow(j["M"].get<double>(), 2))));
    const double C = j["C"], S = j["S"];
    CHECK(j["bound"].get<double>() == Catch::Approx(std::min({0.25, 1 / (C * C), 1 / (C * C * S * S)})));

    const auto bad = run("ellipticity", base + "[operator]\nkind = diagonal\ndiagonal = 1, -1\n");
    CHECK(bad.code == kExitCheckFailed);
    CHECK(report(bad, "ellipticity")["witness"].size() == 4);
}

TEST_CASE("density scan writes direct and twisted columns") {
    std::string cfg = kToy;
    cfg.replace(cfg.find("x0 = 0\n"), 7, "");
    cfg.replace(cfg.find("points = 128\nhalf_width = 8"), 27, "points = 256\nhalf_width = 16");
    const auto r = run("density", cfg + "[scan]\npoint = 0.3\npoint = 1.1\n");
    INFO(r.out << r.err);
    CHECK(r.code == kExitPass);
    std::ifstream f(r.dir / "density.csv");
    std::string header;
    std::getline(f, header);
    CHECK(header == "x1_1,rho_direct,error,rho_twisted,discrepancy");
    int rows = 0;
    for (std::string line; std::getline(f, line);) {
        ++rows;
        CHECK(std::stod(line.substr(line.rfind(',') + 1)) <= 1e-8);
    }
    CHECK(rows == 2);
}

TEST_CASE("analyticity scan across a nucleus flags the cusp") {
    const std::string cfg = "[molecule]\ndim = 3\nelectrons = 1\nexternal = 1\nnucleus = 2 @ 0,0,0\n"
                            "[state]\nkind = hydrogenic\n"
                            "[analyticity]\ncenter = 0.1, 0, 0\ndirection = 1, 0, 0\nradius = 0.5\nexpect = cusp\n";
    const auto r = run("analyticity", cfg);
    CHECK(r.code == kExitPass);
    CHECK(report(r, "analyticity")["scan"]["cusp"] == true);
    CHECK(fs::exists(r.dir / "analyticity_line.csv"));
    std::string wrong = cfg;
    wrong.replace(wrong.find("expect = cusp"), 13, "expect = pass");
    CHECK(run("analyticity", wrong).code == kExitCheckFailed);
}

TEST_CASE("parametrix on 1 - Laplacian is exact") {
    const auto r = run("parametrix", "[parametrix]\ncoefficient = constant\npoints = 256\nhalf_width = pi\n", {"--format", "json"});
    CHECK(r.code == kExitPass);
    const auto j = report(r, "parametrix");
    CHECK(j["checks"][0]["value"].get<double>() <= 1e-12);
    CHECK_FALSE(fs::exists(r.dir / "parametrix.csv"));
}

TEST_CASE("gamma and current commands") {
    const std::string mol = "[molecule]\ndim = 1\nelectrons = 2\nexternal = 1\nnucleus = 1 @ 6\n";
    const auto g = run("gamma", mol + "[grid]\npoints = 512\nhalf_width = 16\n[state]\nkind = gaussian\n"
                                      "centers = 0.3 | 0\nmatrix = 1, 0.3, 0.3, 0.8\nmomenta = 0.4 | 0\n"
                                      "[scan]\npair = 0 => -6\n");
    INFO(g.out << g.err);
    CHECK(g.code == kExitPass);
    const auto c = run("current", mol + "[state]\nkind = gaussian\ncenters = 0 | 1\nwidths = 1, 2\nmomenta = 0.5 | 0\n"
                                        "[scan]\nfrom = -1\nto = 1\ncount = 5\n");
    CHECK(c.code == kExitPass);
}

TEST_CASE("help and bad flags") {
    std::ostringstream out, err;
    const char* help[] = {"twistcalc", "--help"};
    CHECK(run_cli(2, help, out, err) == kExitPass);
    CHECK(out.str().find("twist-verify") != std::string::npos);
    const char* missing[] = {"twistcalc", "density"};
    CHECK(run_cli(2, missing, out, err) == kExitConfig);
}
