#include "twistcalc/analyticity.hpp"

#include <cmath>

#include "twistcalc/errors.hpp"

namespace twistcalc {

const char* to_string(Characterization c) {
    switch (c) {
        case Characterization::MultiFactorial: return "multi-index-factorial";
        case Characterization::Factorial: return "factorial";
        case Characterization::Power: return "power";
    }
    return "unknown";
}

Eigen::VectorXd chebyshev_coefficients(const Eigen::VectorXd& v) {
    const Eigen::Index n = v.size() - 1;
    if (n < 1) throw DimensionError("Chebyshev fit needs at least two nodes");
    // Values at x_j = cos(pi j / n); discrete cosine transform of type I.
    Eigen::VectorXd c(n + 1);
    for (Eigen::Index k = 0; k <= n; ++k) {
        double acc = 0.0;
        for (Eigen::Index j = 0; j <= n; ++j) {
            const double w = (j == 0 || j == n) ? 0.5 : 1.0;
            acc += w * v[j] * std::cos(M_PI * double(k * j) / double(n));
        }
        c[k] = 2.0 * acc / double(n);
    }
    c[0] *= 0.5;
    c[n] *= 0.5;
    return c;
}

Eigen::VectorXd chebyshev_derivative(const Eigen::VectorXd& c) {
    const Eigen::Index n = c.size() - 1;
    Eigen::VectorXd d = Eigen::VectorXd::Zero(std::max<Eigen::Index>(n, 1));
    if (n == 0) return d;
    // d_{k-1} = d_{k+1} + 2 k c_k, then halve d_0.
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n + 2);
    for (Eigen::Index k = n; k >= 1; --k) e[k - 1] = e[k + 1] + 2.0 * double(k) * c[k];
    e[0] *= 0.5;
    return e.head(n);
}

double chebyshev_evaluate(const Eigen::VectorXd& c, double x) {
    double b1 = 0.0, b2 = 0.0;
    for (Eigen::Index k = c.size() - 1; k >= 1; --k) {
        const double b = 2.0 * x * b1 - b2 + c[k];
        b2 = b1;
        b1 = b;
    }
    return x * b1 - b2 + c[0];
}

namespace {

struct Fit {
    Eigen::VectorXd coeffs;
    bool resolved = false;
};

Fit fit_segment(const std::function<double(double)>& g, double a, double b, const AnalyticityOptions& opts) {
    const int n = opts.nodes;
    Eigen::VectorXd v(n + 1);
    for (int j = 0; j <= n; ++j) {
        const double x = std::cos(M_PI * j / n);
        const double t = 0.5 * (a + b) + 0.5 * (b - a) * x;
        v[j] = g(t);
        if (!std::isfinite(v[j])) throw DomainError("scanned function is not finite on the segment");
    }
    Fit f;
    f.coeffs = chebyshev_coefficients(v);
    const double top = f.coeffs.cwiseAbs().maxCoeff();
    // Resolved when the last quarter of the series sits at the chop level.
    const Eigen::Index tail = f.coeffs.size() / 4;
    f.resolved = top == 0.0 || f.coeffs.tail(tail).cwiseAbs().maxCoeff() <= 1e3 * opts.chop * top;
    for (Eigen::Index k = 0; k < f.coeffs.size(); ++k)
        if (std::abs(f.coeffs[k]) < opts.chop * top) f.coeffs[k] = 0.0;
    return f;
}

// Derivatives in t at the point x_eval of [-1, 1], segment half-length h.
std::vector<double> derivatives_at(Eigen::VectorXd c, double x_eval, double h, int max_order) {
    std::vector<double> d;
    for (int n = 0; n <= max_order; ++n) {
        d.push_back(chebyshev_evaluate(c, x_eval) / std::pow(h, n));
        c = chebyshev_derivative(c);
    }
    return d;
}

double log_weight(Characterization c, int n) {
    if (c == Characterization::Power) return n == 0 ? 0.0 : n * std::log(1.0 + n);
    return std::lgamma(n + 1.0);
}

double fit_constant(const std::vector<double>& d, Characterization c) {
    double A = 0.0;
    for (std::size_t n = 0; n < d.size(); ++n) {
        if (d[n] == 0.0) continue;
        A = std::max(A, std::exp((std::log(std::abs(d[n])) - log_weight(c, int(n))) / double(n + 1)));
    }
    return A;
}

}  // namespace

AnalyticityReport analyticity_scan(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& center, const Eigen::VectorXd& direction, double radius,
                                   const AnalyticityOptions& opts) {
    if (opts.max_order < 1 || opts.max_order > 14) throw DomainError("max order must lie in 1..14");
    if (!(radius > 0.0)) throw DomainError("scan radius must be positive");
    if (center.size() != direction.size()) throw DimensionError("centre and direction sizes differ");
    if (!(direction.norm() > 0.0)) throw DomainError("scan direction must be nonzero");
    AnalyticityReport r;
    r.center = center;
    r.direction = direction.normalized();
    r.radius = radius;
    r.max_order = opts.max_order;
    const Eigen::VectorXd u = r.direction;
    auto g = [&](double t) { return f(center + t * u); };

    r.resolved = true;
    for (int i = 0; i < 3; ++i) {
        const double h = radius / std::pow(2.0, i);
        r.radii[std::size_t(i)] = h;
        const Fit fit = fit_segment(g, -h, h, opts);
        r.resolved = r.resolved && fit.resolved;
        const auto d = derivatives_at(fit.coeffs, 0.0, h, opts.max_order);
        if (i == 0) r.derivatives = d;
        for (int c = 0; c < 3; ++c) r.fits[std::size_t(c)][std::size_t(i)] = fit_constant(d, Characterization(c));
    }
    const auto& A = r.fits[std::size_t(Characterization::Factorial)];
    r.stable = true;
    for (int i = 1; i < 3; ++i) {
        const double prev = A[std::size_t(i - 1)], cur = A[std::size_t(i)];
        r.stable = r.stable && std::abs(cur - prev) <= opts.stability * std::max(prev, 1e-300);
    }
    const double d0 = std::abs(r.derivatives[0]);
    for (int n = 1; n <= opts.max_order; ++n)
        if (d0 > 0.0 && r.derivatives[std::size_t(n)] != 0.0)
            r.growth_rate = std::max(r.growth_rate, std::pow(std::abs(r.derivatives[std::size_t(n)]) / d0, 1.0 / n));

    // One-sided fits on [-radius, 0] and [0, radius], first derivative at the shared endpoint.
    const Fit left = fit_segment(g, -radius, 0.0, opts);
    const Fit right = fit_segment(g, 0.0, radius, opts);
    r.left_slope = derivatives_at(left.coeffs, 1.0, 0.5 * radius, 1)[1];
    r.right_slope = derivatives_at(right.coeffs, -1.0, 0.5 * radius, 1)[1];
    const double scale = std::max({std::abs(r.left_slope), std::abs(r.right_slope), d0 / radius, 1e-300});
    r.jump = std::abs(r.left_slope - r.right_slope) > opts.jump * scale;

    r.cusp = r.jump || !r.stable || !r.resolved;
    r.pass = !r.cusp;
    // The three bounds are inter-derivable at fixed order, so they share the stability verdict.
    r.verdicts = {r.pass, r.pass, r.pass};
    return r;
}

std::vector<LineSample> line_scan(const std::function<double(const Eigen::VectorXd&)>& f,
                                  const Eigen::VectorXd& center, const Eigen::VectorXd& direction, double radius,
                                  int samples, int nodes) {
    if (samples < 2) throw DomainError("line scan needs at least two samples");
    const Eigen::VectorXd u = direction.normalized();
    AnalyticityOptions o;
    o.nodes = nodes;
    const Fit fit = fit_segment([&](double t) { return f(center + t * u); }, -radius, radius, o);
    std::vector<LineSample> out;
    for (int i = 0; i < samples; ++i) {
        const double t = -radius + 2.0 * radius * i / (samples - 1);
        out.push_back({t, f(center + t * u), chebyshev_evaluate(fit.coeffs, t / radius)});
    }
    return out;
}

}  // namespace twistcalc
