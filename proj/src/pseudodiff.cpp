#include "twistcalc/pseudodiff.hpp"

#include <cmath>
#include <memory>
#include <random>

#include "twistcalc/errors.hpp"

namespace twistcalc {

SymbolFunction SymbolFunction::constant(cplx c) {
    return multiplier(0, [c](const Eigen::VectorXd&) { return c; });
}

SymbolFunction SymbolFunction::multiplier(int order, std::function<cplx(const Eigen::VectorXd&)> m) {
    SymbolFunction s;
    s.order = order;
    s.position_independent = true;
    s.eval = [m = std::move(m)](const Eigen::VectorXd&, const Eigen::VectorXd& zeta) { return m(zeta); };
    return s;
}

SymbolFunction SymbolFunction::of_operator(const Diff2Operator& P) {
    SymbolFunction s;
    s.order = 2;
    s.position_independent = P.constant_coefficients();
    const int ext = P.external_vars();
    const int in = P.internal_vars();
    s.eval = [P, ext, in](const Eigen::VectorXd& w, const Eigen::VectorXd& zeta) {
        return P.total_symbol(w.head(ext), w.tail(in), zeta.head(ext), zeta.tail(in));
    };
    return s;
}

double SeminormReport::worst() const {
    double w = 0.0;
    for (const auto& [k, v] : constants) w = std::max(w, v);
    return w;
}

namespace {

// Central differences of f along the unit directions listed in dirs (at most two, possibly equal).
cplx mixed_difference(const std::function<cplx(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& p,
                      const std::vector<int>& dirs, const Eigen::VectorXd& steps) {
    if (dirs.empty()) return f(p);
    auto shifted = [&](std::initializer_list<std::pair<int, double>> moves) {
        Eigen::VectorXd q = p;
        for (auto [i, s] : moves) q[i] += s * steps[i];
        return f(q);
    };
    if (dirs.size() == 1) {
        const int i = dirs[0];
        return (shifted({{i, 1.0}}) - shifted({{i, -1.0}})) / (2.0 * steps[i]);
    }
    const int i = dirs[0], j = dirs[1];
    if (i == j) return (shifted({{i, 1.0}}) - 2.0 * f(p) + shifted({{i, -1.0}})) / (steps[i] * steps[i]);
    return (shifted({{i, 1.0}, {j, 1.0}}) - shifted({{i, 1.0}, {j, -1.0}}) - shifted({{i, -1.0}, {j, 1.0}}) +
            shifted({{i, -1.0}, {j, -1.0}})) /
           (4.0 * steps[i] * steps[j]);
}

}  // namespace

SeminormReport sample_seminorms(const SymbolFunction& sigma, const std::vector<Eigen::VectorXd>& positions,
                                const std::vector<Eigen::VectorXd>& frequencies, int max_total) {
    if (max_total < 0 || max_total > 2) throw UnsupportedError("seminorms are sampled up to total order 2");
    if (positions.empty() || frequencies.empty()) throw DimensionError("seminorm sampling needs samples");
    const int n = int(positions.front().size());
    SeminormReport rep;
    for (const auto& w : positions)
        for (const auto& z : frequencies) {
            if (z.size() != n) throw DimensionError("position and frequency sizes differ");
            Eigen::VectorXd p(2 * n);
            p << w, z;
            Eigen::VectorXd steps(2 * n);
            for (int i = 0; i < n; ++i) {
                steps[i] = 1e-4;
                steps[n + i] = 1e-4 * std::max(1.0, z.norm());
            }
            auto f = [&](const Eigen::VectorXd& q) { return sigma.eval(q.head(n), q.tail(n)); };
            const double weight = 1.0 + z.squaredNorm();
            std::vector<std::vector<int>> patterns{{}};
            for (int i = 0; i < 2 * n && max_total >= 1; ++i) patterns.push_back({i});
            for (int i = 0; i < 2 * n && max_total >= 2; ++i)
                for (int j = i; j < 2 * n; ++j) patterns.push_back({i, j});
            for (const auto& dirs : patterns) {
                int a = 0, b = 0;
                for (int i : dirs) (i < n ? a : b) += 1;
                const double v = std::abs(mixed_difference(f, p, dirs, steps)) *
                                 std::pow(weight, 0.5 * (b - sigma.order));
                double& c = rep.constants[{a, b}];
                c = std::max(c, v);
            }
        }
    return rep;
}

GridWavefunction quantize(const SymbolFunction& sigma, const GridWavefunction& u) {
    const auto& g = u.geometry;
    if (sigma.position_independent) {
        const Eigen::VectorXd w0 = Eigen::VectorXd::Zero(g.dims());
        return GridWavefunction(g, apply_multiplier(g, u.values, [&](const Eigen::VectorXd& k) {
                                    return sigma.eval(w0, k);
                                }));
    }
    const Eigen::VectorXcd hat = fft_forward(g, u.values);
    const std::size_t N = g.size();
    std::vector<Eigen::VectorXd> kappa(N);
    for (std::size_t k = 0; k < N; ++k) kappa[k] = g.wavevector(k);
    Eigen::VectorXcd out(static_cast<Eigen::Index>(N));
    for (std::size_t j = 0; j < N; ++j) {
        const Eigen::VectorXd w = g.point(j);
        Eigen::VectorXd shifted(g.dims());
        for (int a = 0; a < g.dims(); ++a) shifted[a] = w[a] + g.half_width[std::size_t(a)];
        cplx acc = 0.0;
        for (std::size_t k = 0; k < N; ++k) {
            if (hat[Eigen::Index(k)] == cplx(0.0)) continue;
            const double phase = kappa[k].dot(shifted);
            acc += sigma.eval(w, kappa[k]) * hat[Eigen::Index(k)] * cplx(std::cos(phase), std::sin(phase));
        }
        out[Eigen::Index(j)] = acc / double(N);
    }
    return GridWavefunction(g, out);
}

double sobolev_norm(const GridWavefunction& u, double s) {
    const auto& g = u.geometry;
    const Eigen::VectorXcd hat = fft_forward(g, u.values);
    double vol = 1.0;
    for (double L : g.half_width) vol *= 2.0 * L;
    const double N = double(g.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k)
        acc += std::pow(1.0 + g.wavevector(k).squaredNorm(), s) * std::norm(hat[Eigen::Index(k)]);
    return std::sqrt(vol / (N * N) * acc);
}

double FrequencyCutoff::operator()(const Eigen::VectorXd& zeta) const {
    if (!(inner > 0.0 && outer > inner)) throw DomainError("frequency cutoff radii out of order");
    const double r = zeta.norm();
    if (r <= inner) return 1.0;
    if (r >= outer) return 0.0;
    auto psi = [](double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; };
    const double s = (r - inner) / (outer - inner);
    const double a = psi(1.0 - s), b = psi(s);
    return a / (a + b);
}

GridOperator grid_operator(const Diff2Operator& P, const GridGeometry& g) {
    if (g.dims() != P.vars()) throw DimensionError("grid axes differ from operator variables");
    const int ext = P.external_vars();
    const int in = P.internal_vars();
    auto coeffs = std::make_shared<std::vector<CoefficientSet>>();
    coeffs->reserve(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Eigen::VectorXd w = g.point(i);
        coeffs->push_back(P.coefficients(w.head(ext), w.tail(in)));
    }
    const int n = P.vars();
    // Frequencies follow quantize (Nyquist read as -n/2) so constant-coefficient operators agree
    // with their symbol multipliers on every mode.
    return [g, coeffs, n](const Eigen::VectorXcd& u) {
        const Eigen::VectorXcd hat = fft_forward(g, u);
        auto mode = [&](int a, int b) {
            Eigen::VectorXcd h = hat;
            for (std::size_t k = 0; k < g.size(); ++k) {
                const Eigen::VectorXd kap = g.wavevector(k);
                h[Eigen::Index(k)] *= (a >= 0 ? kap[a] : 1.0) * (b >= 0 ? kap[b] : 1.0);
            }
            return Eigen::VectorXcd(fft_inverse(g, h));
        };
        Eigen::VectorXcd out(u.size());
        for (Eigen::Index i = 0; i < u.size(); ++i) out[i] = (*coeffs)[std::size_t(i)].zeroth * u[i];
        for (int a = 0; a < n; ++a) {
            bool used = false;
            for (const auto& c : *coeffs) used = used || c.first[a] != cplx(0.0);
            if (!used) continue;
            const Eigen::VectorXcd D = mode(a, -1);
            for (Eigen::Index i = 0; i < u.size(); ++i) out[i] += (*coeffs)[std::size_t(i)].first[a] * D[i];
        }
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                bool used = false;
                for (const auto& c : *coeffs) used = used || c.second(a, b) != cplx(0.0);
                if (!used) continue;
                const Eigen::VectorXcd DD = mode(a, b);
                for (Eigen::Index i = 0; i < u.size(); ++i) out[i] += (*coeffs)[std::size_t(i)].second(a, b) * DD[i];
            }
        return out;
    };
}

SymbolFunction Parametrix::remainder_symbol() const {
    if (!constant_coefficients) throw UnsupportedError("closed-form remainder needs constant coefficients");
    const auto q1f = q1.eval;
    const auto sf = sigma_.eval;
    return SymbolFunction::multiplier(-2, [q1f, sf](const Eigen::VectorXd& z) {
        const Eigen::VectorXd w0 = Eigen::VectorXd::Zero(z.size());
        const cplx e = 1.0 - q1f(w0, z) * sf(w0, z);
        return e * e;
    });
}

Parametrix build_parametrix(const Diff2Operator& P_hat, const GridGeometry& grid, FrequencyCutoff tau,
                            int per_point, std::uint64_t seed) {
    grid.validate();
    if (grid.dims() != P_hat.vars()) throw DimensionError("grid axes differ from operator variables");
    const int ext = P_hat.external_vars();
    const int in = P_hat.internal_vars();

    std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> pts;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Eigen::VectorXd w = grid.point(i);
        pts.emplace_back(w.head(ext), w.tail(in));
    }
    Parametrix out;
    out.certificate = ellipticity_certificate(P_hat, covector_samples(pts, per_point, ext, in, seed));
    out.grid = grid;
    out.tau = tau;
    out.constant_coefficients = P_hat.constant_coefficients();
    out.sigma_ = SymbolFunction::of_operator(P_hat);

    SymbolFunction q1;
    q1.order = -2;
    q1.position_independent = out.constant_coefficients;
    q1.eval = [P_hat, tau, ext, in](const Eigen::VectorXd& w, const Eigen::VectorXd& z) -> cplx {
        const double cut = 1.0 - tau(z);
        if (cut == 0.0) return 0.0;
        return cut / P_hat.principal_symbol(w.head(ext), w.tail(in), z.head(ext), z.tail(in));
    };
    out.q1 = q1;
    out.P = grid_operator(P_hat, grid);
    out.Q1 = [grid, q1](const Eigen::VectorXcd& u) { return quantize(q1, GridWavefunction(grid, u)).values; };
    const auto P = out.P;
    const auto Q1 = out.Q1;
    out.R3 = [P, Q1](const Eigen::VectorXcd& u) -> Eigen::VectorXcd { return Q1(P(u)) - u; };
    out.Q = [P, Q1](const Eigen::VectorXcd& u) -> Eigen::VectorXcd {
        const Eigen::VectorXcd v = Q1(u);
        return 2.0 * v - Q1(P(v));
    };
    const auto Q = out.Q;
    out.R = [P, Q](const Eigen::VectorXcd& u) -> Eigen::VectorXcd { return u - Q(P(u)); };
    return out;
}

GridWavefunction band_test_function(const GridGeometry& g, double K, std::uint64_t seed) {
    if (!(K > 0.0)) throw DomainError("band must be positive");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Eigen::VectorXcd hat = Eigen::VectorXcd::Zero(Eigen::Index(g.size()));
    bool any = false;
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double r = g.wavevector(k).norm();
        const double re = normal(rng), im = normal(rng);
        bool nyq = false;
        for (int a = 0; a < g.dims(); ++a) nyq = nyq || g.is_nyquist(a, g.index(k)[std::size_t(a)]);
        if (r >= 0.5 * K && r <= K && !nyq) {
            hat[Eigen::Index(k)] = cplx(re, im);
            any = true;
        }
    }
    if (!any) throw DomainError("band contains no grid frequency");
    GridWavefunction u(g, fft_inverse(g, hat));
    u.values /= u.norm();
    return u;
}

}  // namespace twistcalc
