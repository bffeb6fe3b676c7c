#include "twistcalc/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>
#include <sstream>

#include "twistcalc/analyticity.hpp"
#include "twistcalc/densities.hpp"
#include "twistcalc/errors.hpp"
#include "twistcalc/operators.hpp"
#include "twistcalc/pseudodiff.hpp"
#include "twistcalc/unitary.hpp"

namespace twistcalc {

using nlohmann::json;

namespace {

struct Options {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = kDefaultSeed;
    std::string format;
    double tol_scale = 1.0;
};

const std::map<std::string, double> kDefaultTolerances{
    {"pinning", 1e-14},   {"roundtrip", 1e-10}, {"jacobian", 1e-6},   {"conjugation", 1e-6},
    {"unitarity", 1e-8},  {"density", 1e-8},    {"hermitian", 1e-12}, {"diagonal", 1e-10},
    {"current", 1e-10},   {"parametrix", 1e-12}, {"ellipticity", 1e-6},
};

class Report {
public:
    Report(std::string command, const Config& c, const Options& o) : command_(std::move(command)) {
        doc_["schema_version"] = kSchemaVersion;
        doc_["command"] = command_;
        doc_["config"] = c.source();
        doc_["config_hash"] = config_hash(c);
        doc_["seed"] = o.seed;
        doc_["tol_scale"] = o.tol_scale;
        doc_["checks"] = json::array();
        for (const auto& [k, v] : kDefaultTolerances) tol_[k] = c.number_or("tolerances", k, v) * o.tol_scale;
        c.require_known("tolerances", [] {
            std::set<std::string> keys;
            for (const auto& [k, v] : kDefaultTolerances) keys.insert(k);
            keys.insert("order_gain");
            return keys;
        }());
        order_gain_ = c.number_or("tolerances", "order_gain", 2.0);
    }

    double tol(const std::string& k) const { return tol_.at(k); }
    double order_gain() const { return order_gain_; }

    // value <= tolerance passes.
    void check(const std::string& name, double value, double tolerance) {
        add(name, value, tolerance, "<=", value <= tolerance);
    }
    // value >= bound passes.
    void check_at_least(const std::string& name, double value, double bound) {
        add(name, value, bound, ">=", value >= bound);
    }
    void flag(const std::string& name, bool ok, const std::string& detail = "") {
        json j{{"name", name}, {"pass", ok}};
        if (!detail.empty()) j["detail"] = detail;
        doc_["checks"].push_back(j);
        ok_ = ok_ && ok;
    }

    json& doc() { return doc_; }
    bool ok() const { return ok_; }

    void print(std::ostream& out) const {
        for (const auto& c : doc_["checks"]) {
            out << std::left << std::setw(34) << c["name"].get<std::string>();
            if (c.contains("value"))
                out << " " << std::scientific << std::setprecision(3) << c["value"].get<double>() << " "
                    << c["relation"].get<std::string>() << " " << c["tolerance"].get<double>();
            out << "  " << (c["pass"].get<bool>() ? "PASS" : "FAIL") << "\n";
            if (c.contains("detail")) out << "    " << c["detail"].get<std::string>() << "\n";
        }
        out << std::defaultfloat;
    }

private:
    void add(const std::string& name, double value, double tolerance, const char* rel, bool ok) {
        doc_["checks"].push_back(
            {{"name", name}, {"value", value}, {"tolerance", tolerance}, {"relation", rel}, {"pass", ok}});
        ok_ = ok_ && ok;
    }

    std::string command_;
    json doc_;
    std::map<std::string, double> tol_;
    double order_gain_ = 2.0;
    bool ok_ = true;
};

struct Csv {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

struct Outputs {
    std::filesystem::path dir;
    bool csv = true;
    bool json = true;
};

Outputs outputs_from(const Config& c, const Options& o) {
    c.require_known("output", {"directory", "format"});
    Outputs out;
    out.dir = o.out_dir.empty() ? c.find("output", "directory").value_or("twistcalc-out") : o.out_dir;
    std::string f = o.format.empty() ? c.find("output", "format").value_or("both") : o.format;
    if (f != "csv" && f != "json" && f != "both") throw ConfigError("format must be csv, json or both");
    out.csv = f != "json";
    out.json = f != "csv";
    return out;
}

void write_csv(const std::filesystem::path& p, const Csv& t) {
    std::ofstream f(p);
    if (!f) throw ConfigError("cannot write '" + p.string() + "'");
    for (std::size_t i = 0; i < t.header.size(); ++i) f << (i ? "," : "") << t.header[i];
    f << "\n" << std::setprecision(17);
    for (const auto& r : t.rows) {
        for (std::size_t i = 0; i < r.size(); ++i) f << (i ? "," : "") << r[i];
        f << "\n";
    }
}

void emit(const Outputs& o, const std::string& stem, Report& rep, const std::vector<std::pair<std::string, Csv>>& tables) {
    std::filesystem::create_directories(o.dir);
    if (o.csv)
        for (const auto& [suffix, t] : tables) write_csv(o.dir / (stem + suffix + ".csv"), t);
    if (o.json) {
        std::ofstream f(o.dir / (stem + ".json"));
        if (!f) throw ConfigError("cannot write report into '" + o.dir.string() + "'");
        f << rep.doc().dump(2) << "\n";
    }
}

json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

PointTuple offset_tuple(const PointTuple& x, double s) {
    PointTuple out = x;
    for (auto& p : out) p[0] -= s;
    return out;
}

Cutoff cutoff_from(const Config& c, int dim) {
    const std::string profile = c.find("twist", "profile").value_or("bump");
    if (profile != "bump") throw ConfigError("unknown cutoff profile '" + profile + "' (supported: bump)");
    return Cutoff::bump(dim);
}

// Twist whose base sits offset_fraction * delta0 away from x along the first axis, so x lies inside
// Omega(delta0) with a nontrivial twist.
TwistMap scan_twist(const Config& c, const MoleculeConfig& m, const PointTuple& x) {
    const double frac = c.number_or("scan", "offset_fraction", 0.5);
    if (!(frac >= 0.0 && frac < 1.0)) throw ConfigError("[scan] offset_fraction must lie in [0, 1)");
    const double eta0 = c.number_or("twist", "eta0", 0.5);
    const TwistMap probe = TwistMap::build(m, x, cutoff_from(c, m.dim), eta0);
    double shift = frac * probe.delta0();
    for (int attempt = 0; attempt < 8; ++attempt) {
        TwistMap t = TwistMap::build(m, offset_tuple(x, shift), cutoff_from(c, m.dim), eta0);
        if (t.in_domain(x)) return t;
        shift *= 0.5;
    }
    throw DomainError("no admissible twist base found near the scan point");
}

std::vector<PointTuple> scan_points(const Config& c, const MoleculeConfig& m) {
    c.require_known("scan", {"point", "from", "to", "count", "pair", "offset_fraction"});
    std::vector<PointTuple> pts;
    for (std::size_t i = 0; i < c.all("scan", "point").size(); ++i)
        pts.push_back(parse_points(c.all("scan", "point")[i], m.dim, c.source() + " [scan] point"));
    if (c.has("scan", "from")) {
        const PointTuple a = c.points("scan", "from", m.dim), b = c.points("scan", "to", m.dim);
        const int n = c.integer("scan", "count");
        if (n < 2) throw ConfigError("[scan] count must be >= 2");
        if (a.size() != b.size()) throw ConfigError("[scan] from and to differ in length");
        for (int i = 0; i < n; ++i) {
            PointTuple p;
            for (std::size_t j = 0; j < a.size(); ++j) p.push_back(a[j] + (b[j] - a[j]) * (double(i) / (n - 1)));
            pts.push_back(p);
        }
    }
    for (const auto& p : pts)
        if (int(p.size()) != m.external) throw ConfigError("scan points must hold k = external points");
    return pts;
}


std::vector<double> row_of(const PointTuple& p) {
    const Eigen::VectorXd f = flatten(p);
    return std::vector<double>(f.data(), f.data() + f.size());
}

std::vector<std::string> coordinate_header(const MoleculeConfig& m, const std::string& prefix) {
    std::vector<std::string> h;
    for (int j = 0; j < m.external; ++j)
        for (int a = 0; a < m.dim; ++a) h.push_back(prefix + std::to_string(j + 1) + "_" + std::to_string(a + 1));
    return h;
}

// ---------------------------------------------------------------- commands

int cmd_twist_verify(const Config& c, const Options& o, std::ostream& out) {
    Report rep("twist-verify", c, o);
    const MoleculeConfig m = molecule_from(c);
    const TwistMap t = twist_from(c, m);
    c.require_known("samples", {"count", "per_point"});
    const int n = c.integer_or("samples", "count", 1000);
    std::mt19937_64 rng(o.seed);

    std::vector<PointTuple> xs;
    for (int i = 0; i < n; ++i) xs.push_back(sample_domain(t, rng));
    std::vector<Point> anchors = t.base();
    for (const auto& nu : m.nuclei) anchors.push_back(nu.position);

    double pin = 0.0;
    for (const auto& x : xs) {
        for (std::size_t j = 0; j < x.size(); ++j) pin = std::max(pin, (t.forward(x, t.base()[j]) - x[j]).norm());
        for (const auto& nu : m.nuclei) pin = std::max(pin, (t.forward(x, nu.position) - nu.position).norm());
    }
    rep.check("pinning", pin, rep.tol("pinning"));

    std::vector<Point> zs;
    for (int i = 0; i < n; ++i) zs.push_back(sample_ball(anchors[std::size_t(i) % anchors.size()], 1.2 * t.r0(), rng));
    double rt = 0.0, jac = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto& x = xs[std::size_t(i)];
        const auto& z = zs[std::size_t(i)];
        rt = std::max(rt, (t.inverse(x, t.forward(x, z)) - z).norm());
        jac = std::max(jac, check_inverse_jacobians(t, x, z).max());
    }
    rep.check("inverse_roundtrip", rt, rep.tol("roundtrip"));
    rep.check("inverse_jacobian_identities", jac, rep.tol("jacobian"));

    const BoundsCertificate cert = certify_bounds(t, xs, zs);
    rep.flag("lipschitz_and_jacobian_bounds", cert.ok, cert.witness);
    rep.doc()["bounds"] = {{"pinning_error", cert.pinning_error},
                           {"lipschitz_margin", cert.lipschitz_margin},
                           {"max_dz_deviation", cert.max_dz_deviation},
                           {"deviation_bound", cert.deviation_bound},
                           {"lower_lipschitz", cert.lower_lipschitz},
                           {"upper_lipschitz", cert.upper_lipschitz},
                           {"inverse_sum_constant", cert.inverse_sum_constant},
                           {"outside_support_error", cert.outside_support_error}};
    rep.doc()["twist"] = {{"r0", t.r0()}, {"delta0", t.delta0()}, {"eta0", t.eta0()},
                          {"C_tau", t.cutoff().sup_gradient}, {"support_radius", t.support_radius()}};

    Csv conj{{"identity", "residual", "tolerance"}, {}};
    if (c.has_section("grid") && m.internal() > 0) {
        const GridGeometry g = internal_grid_from(c, m);
        PointTuple x = t.base();
        const double frac = c.number_or("twist", "probe_fraction", 0.6);
        x[0][0] += frac * t.delta0();
        ExternalFamily family;
        if (c.has_section("state")) {
            const BoundState psi = state_from(c, m);
            family = [psi, g](const PointTuple& xx) { return internal_slice(psi, xx, g); };
        } else {
            family = [g, d = m.dim](const PointTuple& xx) {
                const double s = flatten(xx).sum();
                return GridWavefunction::sample(g, [&](const Eigen::VectorXd& y) {
                    const double r2 = y.squaredNorm();
                    return std::exp(-0.5 * r2) * cplx(1.0 + 0.3 * s, 0.2 * s * y.sum() / d);
                });
            };
        }
        const GridWavefunction theta = family(x);
        rep.doc()["grid"] = {{"band_fraction", band_fraction(theta)}, {"probe", to_json(flatten(x))}};
        rep.check("unitarity_defect", unitarity_defect(t, x, theta), rep.tol("unitarity"));
        int id_index = 0;
        for (auto id : {ConjugationIdentity::ForwardExternal, ConjugationIdentity::InverseExternal,
                        ConjugationIdentity::ForwardInternal, ConjugationIdentity::InverseInternal}) {
            const double r = conjugation_residual(t, x, id, family).residual;
            rep.check(std::string("conjugation_") + to_string(id), r, rep.tol("conjugation"));
            conj.rows.push_back({double(id_index++), r, rep.tol("conjugation")});
        }
        const double dbl = double_conjugation_residual(t, x, family).residual;
        rep.check("double_conjugation", dbl, rep.tol("conjugation"));
        conj.rows.push_back({4.0, dbl, rep.tol("conjugation")});
    } else {
        rep.doc()["grid"] = "absent: conjugation identities not run";
    }
    rep.print(out);
    emit(outputs_from(c, o), "twist-verify", rep, {{"", conj}});
    return rep.ok() ? kExitPass : kExitCheckFailed;
}

Diff2Operator operator_from(const Config& c, int ext, int in) {
    c.require_known("operator", {"kind", "diagonal"});
    const std::string kind = c.find("operator", "kind").value_or("laplacian");
    const int n = ext + in;
    if (kind == "laplacian") return Diff2Operator::negative_laplacian(ext, in);
    if (kind == "diagonal") {
        const auto diag = c.numbers("operator", "diagonal");
        if (int(diag.size()) != n) throw ConfigError("[operator] diagonal needs one entry per joint variable");
        Diff2Operator::Terms terms;
        for (int a = 0; a < n; ++a) {
            const double v = diag[std::size_t(a)];
            terms.second[{a, a}] = [v](const Eigen::VectorXd&, const Eigen::VectorXd&) { return cplx(v, 0.0); };
        }
        return Diff2Operator::from_terms(ext, in, terms, true);
    }
    throw ConfigError("unknown operator kind '" + kind + "' (supported: laplacian, diagonal)");
}

int cmd_ellipticity(const Config& c, const Options& o, std::ostream& out) {
    Report rep("ellipticity", c, o);
    const MoleculeConfig m = molecule_from(c);
    const TwistMap t = twist_from(c, m);
    const int ext = m.external * m.dim, in = m.internal() * m.dim;
    const Diff2Operator P = operator_from(c, ext, in);
    c.require_known("samples", {"count", "per_point"});
    const int count = c.integer_or("samples", "count", 100);
    const int per = c.integer_or("samples", "per_point", 100);
    std::mt19937_64 rng(o.seed);
    std::vector<Point> anchors = t.base();
    for (const auto& nu : m.nuclei) anchors.push_back(nu.position);
    std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> pts;
    for (int i = 0; i < count; ++i) {
        PointTuple y;
        for (int k = 0; k < m.internal(); ++k)
            y.push_back(sample_ball(anchors[std::size_t(i + k) % anchors.size()], 1.2 * t.r0(), rng));
        pts.emplace_back(flatten(sample_domain(t, rng)), in > 0 ? flatten(y) : Eigen::VectorXd());
    }
    const auto samples = covector_samples(pts, per, ext, in, o.seed);
    try {
        const auto base = ellipticity_certificate(P, samples);
        const auto r = twisted_ellipticity(P, t, samples, rep.tol("ellipticity"));
        rep.doc()["constants"] = {{"sign", r.sign},      {"C_P", base.constant}, {"C_P_twisted_points", r.base_constant},
                                  {"M", r.M},            {"C", r.C},             {"S", r.S},
                                  {"bound", r.constant}, {"worst_ratio", r.worst_ratio},
                                  {"worst_margin", r.worst_margin}, {"samples", r.samples}};
        rep.check_at_least("twisted_ratio_over_bound", r.worst_ratio / r.constant, 1.0 - rep.tol("ellipticity"));
        rep.flag("twisted_ellipticity", r.ok, r.witness);
    } catch (const NonEllipticError& e) {
        rep.doc()["witness"] = e.witness;
        rep.flag("ellipticity", false, e.what());
    }
    rep.print(out);
    emit(outputs_from(c, o), "ellipticity", rep, {});
    return rep.ok() ? kExitPass : kExitCheckFailed;
}

QuadratureOptions quadrature_from(const Config& c, const Options& o) {
    QuadratureOptions q;
    q.seed = o.seed;
    q.gauss_hermite_order = c.integer_or("state", "gauss_hermite_order", q.gauss_hermite_order);
    return q;
}

int cmd_density(const Config& c, const Options& o, std::ostream& out) {
    Report rep("density", c, o);
    const MoleculeConfig m = molecule_from(c);
    const BoundState psi = state_from(c, m);
    const auto pts = scan_points(c, m);
    const bool twisted = c.has_section("grid") && m.internal() > 0;
    const QuadratureOptions q = quadrature_from(c, o);
    Csv t{coordinate_header(m, "x"), {}};
    for (const char* h : {"rho_direct", "error", "rho_twisted", "discrepancy"}) t.header.push_back(h);
    double worst = 0.0;
    for (const auto& x : pts) {
        std::vector<double> row = row_of(x);
        if (twisted) {
            const TwistMap tw = scan_twist(c, m, x);
            const TwistedValue v = twisted_density(psi, tw, x, internal_grid_from(c, m), q);
            row.insert(row.end(), {v.direct.value, v.direct.error, v.twisted, v.discrepancy});
            worst = std::max(worst, v.discrepancy);
        } else {
            const DensityValue v = reduce_density(psi, m.external, x, q);
            row.insert(row.end(), {v.value, v.error, NAN, NAN});
        }
        t.rows.push_back(row);
    }
    rep.doc()["state"] = {{"kind", to_string(psi.kind)}, {"energy", psi.energy}, {"residual", psi.residual}};
    if (twisted) rep.check("direct_vs_twisted", worst, rep.tol("density"));
    rep.print(out);
    emit(outputs_from(c, o), "density", rep, {{"", t}});
    return rep.ok() ? kExitPass : kExitCheckFailed;
}

int cmd_gamma(const Config& c, const Options& o, std::ostream& out) {
    Report rep("gamma", c, o);
    const MoleculeConfig m = molecule_from(c);
    const BoundState psi = state_from(c, m);
    c.require_known("scan", {"point", "from", "to", "count", "pair", "offset_fraction"});
    const bool twisted = c.has_section("grid") && m.internal() > 0;
    const QuadratureOptions q = quadrature_from(c, o);
    Csv t{coordinate_header(m, "x"), {}};
    for (const auto& h : coordinate_header(m, "xp")) t.header.push_back(h);
    for (const char* h : {"gamma_re", "gamma_im", "error", "twisted_re", "twisted_im", "discrepancy"})
        t.header.push_back(h);
    double worst = 0.0, herm = 0.0, diag = 0.0;
    const double frac = c.number_or("scan", "offset_fraction", 0.5);
    for (const auto& entry : c.all("scan", "pair")) {
        const auto arrow = entry.find("=>");
        if (arrow == std::string::npos) throw ConfigError("[scan] pair needs 'x-tuple => x'-tuple'");
        const PointTuple x = parse_points(entry.substr(0, arrow), m.dim, "[scan] pair");
        const PointTuple xp = parse_points(entry.substr(arrow + 2), m.dim, "[scan] pair");
        if (int(x.size()) != m.external || int(xp.size()) != m.external)
            throw ConfigError("[scan] pair tuples must hold k points");
        std::vector<double> row = row_of(x);
        for (double v : row_of(xp)) row.push_back(v);
        const MatrixValue g = reduce_density_matrix(psi, m.external, x, xp, q);
        const MatrixValue gt = reduce_density_matrix(psi, m.external, xp, x, q);
        herm = std::max(herm, std::abs(g.value - std::conj(gt.value)) / std::max(std::abs(g.value), 1e-300));
        const double rho = reduce_density(psi, m.external, x, q).value;
        const cplx gd = reduce_density_matrix(psi, m.external, x, x, q).value;
        diag = std::max(diag, std::abs(gd - rho) / std::max(rho, 1e-300));
        row.insert(row.end(), {g.value.real(), g.value.imag(), g.error});
        if (twisted) {
            const double eta0 = c.number_or("twist", "eta0", 0.5);
            const TwistMap probe = doubled_twist(m, x, xp, cutoff_from(c, m.dim), eta0);
            const double s = frac * probe.delta0();
            const TwistMap tw = doubled_twist(m, offset_tuple(x, s), offset_tuple(xp, s), cutoff_from(c, m.dim), eta0);
            const TwistedMatrixValue v = twisted_density_matrix(psi, tw, x, xp, internal_grid_from(c, m), q);
            row.insert(row.end(), {v.twisted.real(), v.twisted.imag(), v.discrepancy});
            worst = std::max(worst, v.discrepancy);
        } else {
            row.insert(row.end(), {NAN, NAN, NAN});
        }
        t.rows.push_back(row);
    }
    if (t.rows.empty()) throw ConfigError("[scan] needs at least one pair");
    rep.check("hermitian_symmetry", herm, rep.tol("hermitian"));
    rep.check("diagonal_equals_density", diag, rep.tol("diagonal"));
    if (twisted) rep.check("direct_vs_doubled_twist", worst, rep.tol("density"));
    rep.print(out);
    emit(outputs_from(c, o), "gamma", rep, {{"", t}});
    return rep.ok() ? kExitPass : kExitCheckFailed;
}

int cmd_current(const Config& c, const Options& o, std::ostream& out) {
    Report rep("current", c, o);
    const MoleculeConfig m = molecule_from(c);
    const BoundState psi = state_from(c, m);
    const auto pts = scan_points(c, m);
    const QuadratureOptions q = quadrature_from(c, o);
    Csv t{coordinate_header(m, "x"), {}};
    for (const auto& h : coordinate_header(m, "C")) t.header.push_back(h);
    t.header.push_back("error");
    // Closed form for Gaussian states whose external block decouples: C = -p_x rho.
    const bool reference = psi.gaussian && psi.gaussian->A.block(0, m.external * m.dim, m.external * m.dim,
                                                                 m.internal() * m.dim).isZero(0.0);
    double worst = 0.0;
    for (const auto& x : pts) {
        const CurrentValue cv = current_density(psi, m.external, x, q);
        std::vector<double> row = row_of(x);
        for (Eigen::Index a = 0; a < cv.value.size(); ++a) row.push_back(cv.value[a]);
        row.push_back(cv.error);
        t.rows.push_back(row);
        if (reference) {
            const double rho = reduce_density(psi, m.external, x, q).value;
            const Eigen::VectorXd expect = -psi.gaussian->momentum.head(cv.value.size()) * rho;
            worst = std::max(worst, (cv.value - expect).norm() / std::max(rho, 1e-300));
        }
    }
    if (reference) rep.check("current_closed_form", worst, rep.tol("current"));
    rep.doc()["sign_convention"] = "Im of conj(grad psi) psi: e^{ipx} states give -p rho";
    rep.print(out);
    emit(outputs_from(c, o), "current", rep, {{"", t}});
    return rep.ok() ? kExitPass : kExitCheckFailed;
}

int cmd_analyticity(const Config& c, const Options& o, std::ostream& out) {
    Report rep("analyticity", c, o);
    const MoleculeConfig m = molecule_from(c);
    const BoundState psi = state_from(c, m);
    c.require_known("analyticity", {"center", "direction", "radius", "max_order", "expect", "samples"});
    const PointTuple center = c.points("analyticity", "center", m.dim);
    const PointTuple dir = c.points("analyticity", "direction", m.dim);
    if (int(center.size()) != m.external || dir.size() != center.size())
        throw ConfigError("[analyticity] center and direction must hold k points");
    AnalyticityOptions ao;
    ao.max_order = c.integer_or("analyticity", "max_order", 10);
    const double radius = c.number("analyticity", "radius");
    const QuadratureOptions q = quadrature_from(c, o);
    auto f = [&](const Eigen::VectorXd& x) { return reduce_density(psi, m.external, unflatten(x, m.dim), q).value; };
    const AnalyticityReport r = analyticity_scan(f, flatten(center), flatten(dir), radius, ao);
    json fits = json::object();
    for (int ch = 0; ch < 3; ++ch)
        fits[to_string(Characterization(ch))] = {{"A", r.fits[std::size_t(ch)]}, {"pass", r.verdicts[std::size_t(ch)]}};
    rep.doc()["scan"] = {{"center", to_json(r.center)}, {"direction", to_json(r.direction)},
                         {"radius", r.radius},          {"radii", r.radii},
                         {"max_order", r.max_order},    {"derivatives", r.derivatives},
                         {"characterizations", fits},   {"growth_rate", r.growth_rate},
                         {"stable", r.stable},          {"resolved", r.resolved},
                         {"left_slope", r.left_slope},  {"right_slope", r.right_slope},
                         {"jump", r.jump},              {"cusp", r.cusp},
                         {"pass", r.pass}};
    if (auto e = c.find("analyticity", "expect")) {
        if (*e != "pass" && *e != "cusp") throw ConfigError("[analyticity] expect must be pass or cusp");
        rep.flag("verdict_" + *e, *e == "pass" ? r.pass : r.cusp);
    }
    const auto line = line_scan(f, flatten(center), flatten(dir), radius, c.integer_or("analyticity", "samples", 201));
    Csv lt{{"t", "value", "chebyshev_fit"}, {}};
    for (const auto& s : line) lt.rows.push_back({s.t, s.value, s.fit});
    Csv dt{{"order", "derivative", "A_factorial", "A_power"}, {}};
    for (std::size_t n = 0; n < r.derivatives.size(); ++n)
        dt.rows.push_back({double(n), r.derivatives[n], r.fitted(Characterization::Factorial),
                           r.fitted(Characterization::Power)});
    rep.print(out);
    out << "verdict: " << (r.pass ? "analytic (stable factorial fit)" : "cusp") << "\n";
    emit(outputs_from(c, o), "analyticity", rep, {{"_line", lt}, {"", dt}});
    return rep.ok() ? kExitPass : kExitCheckFailed;
}

int cmd_parametrix(const Config& c, const Options& o, std::ostream& out) {
    Report rep("parametrix", c, o);
    c.require_known("parametrix", {"coefficient", "dims", "points", "half_width", "bands", "sobolev"});
    const std::string kind = c.find("parametrix", "coefficient").value_or("constant");
    const int dims = c.integer_or("parametrix", "dims", 1);
    const int n = c.integer_or("parametrix", "points", 256);
    const double L = c.number_or("parametrix", "half_width", M_PI);
    const GridGeometry g = GridGeometry::uniform(dims, n, L);
    std::vector<double> bands{8, 16, 32, 64};
    if (c.has("parametrix", "bands")) bands = c.numbers("parametrix", "bands");
    std::vector<double> sob{-2, 0, 2};
    if (c.has("parametrix", "sobolev")) sob = c.numbers("parametrix", "sobolev");

    auto one = [](const Eigen::VectorXd&, const Eigen::VectorXd&) { return cplx(1.0, 0.0); };
    Diff2Operator::Terms terms;
    terms.zeroth = one;
    bool constant = true;
    if (kind == "constant") {
        for (int a = 0; a < dims; ++a) terms.second[{a, a}] = one;
    } else if (kind == "sine") {
        // -d(a d) + 1 with a = 2 + sin(w_1), i.e. a D^2 - i a' D + 1 on the first axis.
        if (dims != 1) throw ConfigError("[parametrix] sine coefficient is one-dimensional");
        terms.second[{0, 0}] = [](const Eigen::VectorXd& w, const Eigen::VectorXd&) { return cplx(2.0 + std::sin(w[0])); };
        terms.first[0] = [](const Eigen::VectorXd& w, const Eigen::VectorXd&) { return cplx(0.0, -std::cos(w[0])); };
        constant = false;
    } else {
        throw ConfigError("unknown [parametrix] coefficient '" + kind + "' (supported: constant, sine)");
    }
    const Diff2Operator P = Diff2Operator::from_terms(dims, 0, terms, constant);
    Parametrix par;
    try {
        par = build_parametrix(P, g);
    } catch (const NonEllipticError& e) {
        rep.flag("ellipticity", false, e.what());
        rep.print(out);
        emit(outputs_from(c, o), "parametrix", rep, {});
        return kExitCheckFailed;
    }
    Csv t{{"band", "sobolev", "remainder_ratio", "smoothing_ratio", "closed_form_residual"}, {}};
    double worst_closed = 0.0;
    std::map<double, std::vector<double>> ratio;  // per s, over bands
    for (std::size_t b = 0; b < bands.size(); ++b) {
        const GridWavefunction u = band_test_function(g, bands[b], o.seed + b);
        const GridWavefunction Ru(g, par.R(u.values));
        double closed = NAN;
        if (constant) {
            const GridWavefunction ref = quantize(par.remainder_symbol(), u);
            closed = (Ru.values - ref.values).norm() / u.values.norm();
            worst_closed = std::max(worst_closed, closed);
        }
        for (double s : sob) {
            const double r = sobolev_norm(Ru, s) / sobolev_norm(u, s);
            ratio[s].push_back(r);
            t.rows.push_back({bands[b], s, r, sobolev_norm(Ru, s + 2) / sobolev_norm(u, s), closed});
        }
    }
    if (constant) {
        rep.check("closed_form_remainder", worst_closed, rep.tol("parametrix"));
    } else {
        double gain = INFINITY;
        for (const auto& [s, v] : ratio)
            for (std::size_t i = 1; i < v.size(); ++i) gain = std::min(gain, v[i - 1] / v[i]);
        rep.check_at_least("order_gain_per_band_doubling", gain, rep.order_gain());
    }
    rep.doc()["ellipticity_constant"] = par.certificate.constant;
    rep.print(out);
    emit(outputs_from(c, o), "parametrix", rep, {{"", t}});
    return rep.ok() ? kExitPass : kExitCheckFailed;
}

}  // namespace

TwistMap twist_from(const Config& c, const MoleculeConfig& m) {
    c.require_known("twist", {"x0", "eta0", "profile", "delta0", "r0", "probe_fraction"});
    const PointTuple x0 = c.points("twist", "x0", m.dim);
    if (int(x0.size()) != m.external) throw ConfigError("[twist] x0 must hold k = external points");
    std::optional<double> delta0, r0;
    if (c.has("twist", "delta0")) delta0 = c.number("twist", "delta0");
    if (c.has("twist", "r0")) r0 = c.number("twist", "r0");
    return TwistMap::build(m, x0, cutoff_from(c, m.dim), c.number_or("twist", "eta0", 0.5), delta0, r0);
}

GridGeometry internal_grid_from(const Config& c, const MoleculeConfig& m) {
    c.require_known("grid", {"points", "half_width"});
    const int p = m.internal();
    if (p < 1) throw ConfigError("[grid] needs at least one internal particle");
    GridGeometry g = GridGeometry::uniform(p * m.dim, c.integer("grid", "points"), c.number("grid", "half_width"));
    g.validate();
    return g;
}

BoundState state_from(const Config& c, const MoleculeConfig& m) {
    c.require_known("state", {"kind", "charge", "spring", "centers", "widths", "momenta", "matrix", "energy",
                              "path", "potential", "points", "half_width", "coupling", "tolerance",
                              "gauss_hermite_order"});
    const std::string kind = c.get("state", "kind");
    BoundState s;
    if (kind == "hydrogenic") {
        if (m.electrons != 1) throw ConfigError("hydrogenic state needs one electron");
        s = hydrogenic_state(c.number_or("state", "charge", m.nuclei.front().charge), m.dim);
    } else if (kind == "harmonium") {
        if (m.electrons != 2) throw ConfigError("harmonium state needs two electrons");
        s = harmonium_state(c.number_or("state", "spring", 1.0 / 64.0), m.dim);
    } else if (kind == "gaussian") {
        const PointTuple centers = c.points("state", "centers", m.dim);
        if (int(centers.size()) != m.electrons) throw ConfigError("[state] centers needs N points");
        PointTuple momenta(centers.size(), Point::Zero(m.dim));
        if (c.has("state", "momenta")) momenta = c.points("state", "momenta", m.dim);
        if (c.has("state", "matrix")) {
            GaussianParameters p;
            const int n = m.electrons * m.dim;
            const auto a = c.numbers("state", "matrix");
            if (int(a.size()) != n * n) throw ConfigError("[state] matrix needs (N d)^2 entries, row-major");
            p.A = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(a.data(), n, n);
            p.center = flatten(centers);
            p.momentum = flatten(momenta);
            s = gaussian_state(m.dim, m.electrons, p);
        } else {
            const auto w = c.numbers("state", "widths");
            s = separable_gaussian_state(m.dim, centers, w, momenta);
        }
    } else if (kind == "grid-eigen" || kind == "file") {
        GridHamiltonian H;
        H.dim = m.dim;
        if (c.has("state", "potential")) {
            const std::string pot = c.get("state", "potential");
            if (pot != "quadratic") throw ConfigError("[state] potential supports only 'quadratic'");
            H.grid = GridGeometry::uniform(m.electrons * m.dim, c.integer("state", "points"), c.number("state", "half_width"));
            const double k2 = c.number_or("state", "spring", 0.25);
            const double coupling = c.number_or("state", "coupling", 0.0);
            const int d = m.dim;
            H.potential = [k2, coupling, d](const Eigen::VectorXd& w) {
                double v = k2 * w.squaredNorm();
                if (w.size() >= 2 * d) v += coupling * std::cos((w.head(d) - w.segment(d, d)).norm());
                return v;
            };
        }
        if (kind == "grid-eigen") {
            if (!H.potential) throw ConfigError("grid-eigen state needs [state] potential");
            EigenOptions eo;
            eo.tolerance = c.number_or("state", "tolerance", eo.tolerance);
            s = grid_eigensolve(H, eo);
        } else {
            std::optional<GridHamiltonian> h;
            if (H.potential) h = H;
            s = file_state(c.get("state", "path"), m.dim, c.number_or("state", "energy", 0.0), h,
                           c.number_or("state", "tolerance", 1e-8));
        }
        if (s.particles != m.electrons) throw ConfigError("grid state holds a different number of particles");
    } else {
        throw ConfigError("unknown state kind '" + kind + "'");
    }
    if (kind != "file" && c.has("state", "energy")) s = with_energy(s, c.number("state", "energy"));
    if (s.dim != m.dim || s.particles != m.electrons) throw ConfigError("state and [molecule] disagree on N or d");
    return s;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"twistcalc: twist maps, twisted operators and reduced-density verification"};
    app.require_subcommand(1);
    app.fallthrough();
    Options o;
    app.add_option("--config", o.config_path, "configuration file")->required();
    app.add_option("--out", o.out_dir, "report directory (overrides [output] directory)");
    app.add_option("--seed", o.seed, "seed for sampled checks");
    app.add_option("--format", o.format, "report format")->check(CLI::IsMember({"csv", "json", "both"}));
    app.add_option("--tol-scale", o.tol_scale, "multiplier applied to every tolerance")->check(CLI::PositiveNumber);

    using Cmd = int (*)(const Config&, const Options&, std::ostream&);
    const std::vector<std::tuple<std::string, std::string, Cmd>> cmds{
        {"twist-verify", "pinning, inverse, Jacobian, Lipschitz and conjugation-identity checks", cmd_twist_verify},
        {"ellipticity", "ellipticity certificate of the twisted principal symbol", cmd_ellipticity},
        {"density", "reduced density, direct and through the twist", cmd_density},
        {"gamma", "reduced density matrix, direct and through the doubled twist", cmd_gamma},
        {"current", "reduced current density", cmd_current},
        {"analyticity", "factorial-bound scan along a segment", cmd_analyticity},
        {"parametrix", "parametrix remainder on a periodic grid", cmd_parametrix},
    };
    std::map<CLI::App*, Cmd> dispatch;
    for (const auto& [name, help, fn] : cmds) dispatch[app.add_subcommand(name, help)] = fn;

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitPass;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    try {
        const Config cfg = Config::load(o.config_path);
        for (const auto& s : cfg.sections()) {
            static const std::set<std::string> known{"molecule", "twist", "grid",     "state",       "scan",
                                                     "samples",  "output", "tolerances", "analyticity", "parametrix",
                                                     "operator"};
            if (!known.count(s)) throw ConfigError(cfg.source() + ": unknown section [" + s + "]");
        }
        for (const auto& [sub, fn] : dispatch)
            if (sub->parsed()) return fn(cfg, o, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const NonEllipticError& e) {
        err << "non-elliptic: " << e.what() << "\n";
        return kExitCheckFailed;
    } catch (const ConvergenceError& e) {
        err << "check failed: " << e.what() << "\n";
        return kExitCheckFailed;
    } catch (const Error& e) {
        err << "invariant violation: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "output error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}

}  // namespace twistcalc
