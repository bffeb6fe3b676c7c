#include "twistcalc/potentials.hpp"

#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>
#include <map>

#include "twistcalc/errors.hpp"
#include "twistcalc/jet.hpp"

namespace twistcalc {

namespace {

void enumerate_exact(int dim, int n, MultiIndex& cur, int pos, std::vector<MultiIndex>& out) {
    if (pos == dim - 1) {
        cur[std::size_t(pos)] = n;
        out.push_back(cur);
        return;
    }
    for (int e = n; e >= 0; --e) {
        cur[std::size_t(pos)] = e;
        enumerate_exact(dim, n - e, cur, pos + 1, out);
    }
}

double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

}  // namespace

std::vector<MultiIndex> multi_indices(int dim, int max_order) {
    std::vector<MultiIndex> out;
    MultiIndex cur(std::size_t(dim), 0);
    for (int n = 0; n <= max_order; ++n) enumerate_exact(dim, n, cur, 0, out);
    return out;
}

int order_of(const MultiIndex& alpha) {
    int s = 0;
    for (int e : alpha) s += e;
    return s;
}

double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

double multi_factorial(const MultiIndex& alpha) {
    double f = 1.0;
    for (int e : alpha) f *= factorial(e);
    return f;
}

cplx Envelope::v0(const Point& z) const {
    const double r = z.norm();
    return eta(r) * angular(z / r);
}

Envelope coulomb_envelope() {
    Envelope e;
    e.eta = [](double t) { return 1.0 / t; };
    e.angular = [](const Point&) { return cplx(1.0, 0.0); };
    e.eta0 = 0.5;
    e.B0 = 2.0;
    return e;
}

Envelope log_modified_envelope(double eps) {
    Envelope e;
    e.eta = [eps](double t) { return std::pow(1.0 + std::abs(std::log(t)), -eps) / t; };
    e.angular = [](const Point&) { return cplx(1.0, 0.0); };
    e.eta0 = 0.5;
    // t/s <= 2 in the window and |ln t| <= |ln s| + ln 2, so the log factor is at most (1 + ln 2)^eps.
    e.B0 = 2.0 * std::pow(1.0 + std::log(2.0), eps);
    return e;
}

ClassVPotential coulomb(int dim) {
    if (dim != 3) throw UnsupportedError("Coulomb potential is defined for dimension 3 only");
    ClassVPotential p;
    p.name = "coulomb";
    p.dim = 3;
    p.v = [](const Point& z) { return cplx(1.0 / z.norm(), 0.0); };
    p.envelope = coulomb_envelope();
    p.C = 1.0;
    p.oracle_max_order = 12;
    p.oracle = [](const Point& z, int order) {
        Jet r2(3, order);
        for (int i = 0; i < 3; ++i) {
            Jet zi = Jet::variable(3, order, i, z[i]);
            r2 += zi * zi;
        }
        const Jet inv = pow(r2, -0.5);
        std::vector<cplx> out;
        for (const auto& a : multi_indices(3, order)) out.emplace_back(inv.derivative(a), 0.0);
        return out;
    };
    return p;
}

std::vector<cplx> finite_difference_derivatives(const std::function<cplx(const Point&)>& v,
                                                const Point& z, int order, double step) {
    const int dim = int(z.size());
    std::vector<cplx> out;
    for (const auto& alpha : multi_indices(dim, order)) {
        // Tensor product of central differences; the order-a stencil has offsets (a/2 - k) h.
        std::vector<std::vector<std::pair<double, double>>> axis(static_cast<std::size_t>(dim));
        for (int i = 0; i < dim; ++i) {
            const int a = alpha[std::size_t(i)];
            for (int k = 0; k <= a; ++k)
                axis[std::size_t(i)].emplace_back((0.5 * a - k) * step,
                                                  ((k % 2) ? -1.0 : 1.0) * binomial(a, k) /
                                                      std::pow(step, a));
        }
        cplx acc = 0.0;
        std::vector<std::size_t> idx(std::size_t(dim), 0);
        while (true) {
            Point p = z;
            double w = 1.0;
            for (int i = 0; i < dim; ++i) {
                p[i] += axis[std::size_t(i)][idx[std::size_t(i)]].first;
                w *= axis[std::size_t(i)][idx[std::size_t(i)]].second;
            }
            acc += w * v(p);
            int i = 0;
            for (; i < dim; ++i) {
                if (++idx[std::size_t(i)] < axis[std::size_t(i)].size()) break;
                idx[std::size_t(i)] = 0;
            }
            if (i == dim) break;
        }
        out.push_back(acc);
    }
    return out;
}

std::vector<cplx> potential_derivatives(const ClassVPotential& pot, const Point& z, int order) {
    if (z.size() != pot.dim) throw DimensionError("potential argument has wrong dimension");
    if (z.norm() == 0.0) throw SingularityError("potential derivative at the origin", pot.name);
    if (pot.oracle && order <= pot.oracle_max_order) return pot.oracle(z, order);
    return finite_difference_derivatives(pot.v, z, order, 1e-3 * z.norm());
}

DoublingReport check_doubling(const Envelope& env, const std::vector<double>& t_samples,
                              int subdivisions) {
    DoublingReport rep;
    for (double t : t_samples) {
        const double base = env.eta(t);
        const double lo = t * (1.0 - env.eta0), hi = t * (1.0 + env.eta0);
        for (int i = 0; i <= subdivisions; ++i) {
            const double s = lo + (hi - lo) * i / subdivisions;
            const double r = env.eta(s) / base;
            if (!std::isfinite(r) || r > rep.worst_ratio) {
                rep.worst_ratio = std::isfinite(r) ? r : INFINITY;
                rep.witness_t = t;
            }
        }
    }
    rep.ok = std::isfinite(rep.worst_ratio) && rep.worst_ratio <= env.B0 * (1.0 + 1e-12);
    return rep;
}

namespace {

double fit_constant(const std::vector<double>& ratios) {
    double c = 0.0;
    for (std::size_t n = 0; n < ratios.size(); ++n)
        c = std::max(c, std::pow(ratios[n], 1.0 / double(n + 1)));
    return c;
}

}  // namespace

ClassVReport verify_class_v(const ClassVPotential& pot, const std::vector<Point>& samples,
                            int max_order, double divergence_factor) {
    if (samples.empty()) throw DimensionError("verify_class_v needs samples");
    ClassVReport rep;
    rep.used_oracle = bool(pot.oracle) && max_order <= pot.oracle_max_order;
    rep.order_ratio.assign(std::size_t(max_order + 1), 0.0);
    rep.angular_min = INFINITY;
    const auto alphas = multi_indices(pot.dim, max_order);
    std::map<int, std::vector<double>> shells;
    std::vector<double> radii;
    bool finite = true;

    for (const auto& z : samples) {
        const double r = z.norm();
        if (r == 0.0) throw SingularityError("class check sample at the origin", pot.name);
        radii.push_back(r);
        const double ang = std::abs(pot.envelope.angular(z / r));
        rep.angular_min = std::min(rep.angular_min, ang);
        rep.angular_max = std::max(rep.angular_max, ang);
        const double v0 = std::abs(pot.envelope.v0(z));
        const auto d = potential_derivatives(pot, z, max_order);
        auto& shell = shells[int(std::floor(std::log2(r)))];
        shell.resize(std::size_t(max_order + 1), 0.0);
        for (std::size_t i = 0; i < alphas.size(); ++i) {
            const int n = order_of(alphas[i]);
            const double q = std::pow(r, n) * std::abs(d[i]) / (factorial(n) * v0);
            if (!std::isfinite(q)) finite = false;
            rep.order_ratio[std::size_t(n)] = std::max(rep.order_ratio[std::size_t(n)], q);
            shell[std::size_t(n)] = std::max(shell[std::size_t(n)], q);
        }
    }
    rep.inferred_C = finite ? fit_constant(rep.order_ratio) : INFINITY;
    rep.within_declared = rep.inferred_C <= pot.C * (1.0 + 1e-6);
    for (const auto& [k, ratios] : shells) {
        rep.shell_radius.push_back(std::ldexp(1.0, k));
        rep.shell_C.push_back(fit_constant(ratios));
    }
    rep.divergent = !finite;
    if (finite && rep.shell_C.size() >= 3) {
        std::vector<double> sorted = rep.shell_C;
        std::nth_element(sorted.begin(), sorted.begin() + long(sorted.size() / 2), sorted.end());
        const double median = sorted[sorted.size() / 2];
        rep.divergent = rep.shell_C.front() > divergence_factor * median;
    }
    rep.angular_ok = rep.angular_min >= 1.0 / pot.envelope.B0 && rep.angular_max <= pot.envelope.B0;
    rep.doubling = check_doubling(pot.envelope, radii);
    return rep;
}

double hardy_ratio(const std::function<double(double)>& f, const std::function<double(double)>& df) {
    auto deriv = df ? df : [&f](double t) {
        const double h = 1e-5 * std::max(1.0, t);
        return (f(t + h) - f(t - h)) / (2.0 * h);
    };
    boost::math::quadrature::exp_sinh<double> integrator;
    double num = 0.0, den = 0.0;
    try {
        num = integrator.integrate([&](double t) { const double v = f(t); return v * v; });
        den = integrator.integrate([&](double t) { const double g = deriv(t); return g * g * t * t; });
    } catch (const std::exception& e) {
        throw QuadratureError(std::string("hardy_ratio quadrature failed: ") + e.what());
    }
    if (!std::isfinite(num) || !std::isfinite(den))
        throw QuadratureError("hardy_ratio: non-integrable input");
    if (den == 0.0) throw DomainError("hardy_ratio: zero gradient norm");
    return num / den;
}

std::string describe(const Particle& p) {
    const char* k = p.kind == Particle::Kind::External ? "e"
                    : p.kind == Particle::Kind::Internal ? "i"
                                                         : "n";
    return std::string("(") + k + "," + std::to_string(p.index + 1) + ")";
}

std::string describe(const Pairing& p) { return describe(p.a) + "-" + describe(p.b); }

PairAssembly::PairAssembly(MoleculeConfig config, std::vector<Pairing> pairings)
    : config_(std::move(config)), pairings_(std::move(pairings)) {
    for (const auto& p : pairings_) {
        if (p.potential.dim != config_.dim) throw DimensionError("pair potential dimension mismatch");
        for (const Particle* q : {&p.a, &p.b}) {
            const int limit = q->kind == Particle::Kind::External   ? config_.external
                              : q->kind == Particle::Kind::Internal ? config_.internal()
                                                                    : int(config_.nuclei.size());
            if (q->index < 0 || q->index >= limit) throw DimensionError("pairing index out of range");
        }
        if (p.a.kind == p.b.kind && p.a.index == p.b.index)
            throw DimensionError("a pairing must join two distinct particles");
    }
}

PairAssembly PairAssembly::physical(const MoleculeConfig& config) {
    const ClassVPotential c = coulomb(config.dim);
    std::vector<Particle> all;
    for (int j = 0; j < config.external; ++j) all.push_back({Particle::Kind::External, j});
    for (int j = 0; j < config.internal(); ++j) all.push_back({Particle::Kind::Internal, j});
    for (int l = 0; l < int(config.nuclei.size()); ++l) all.push_back({Particle::Kind::Nuclear, l});
    auto charge = [&](const Particle& p) {
        return p.kind == Particle::Kind::Nuclear ? config.nuclei[std::size_t(p.index)].charge : -1.0;
    };
    std::vector<Pairing> pairs;
    for (std::size_t a = 0; a < all.size(); ++a)
        for (std::size_t b = a + 1; b < all.size(); ++b)
            pairs.push_back({all[a], all[b], c, charge(all[a]) * charge(all[b])});
    return PairAssembly(config, std::move(pairs));
}

Point PairAssembly::coordinate(const Particle& p, const PointTuple& x, const PointTuple& y) const {
    switch (p.kind) {
        case Particle::Kind::External: return x.at(std::size_t(p.index));
        case Particle::Kind::Internal: return y.at(std::size_t(p.index));
        case Particle::Kind::Nuclear: return config_.nuclei.at(std::size_t(p.index)).position;
    }
    throw DimensionError("unknown particle kind");
}

cplx PairAssembly::evaluate(const PointTuple& x, const PointTuple& y) const {
    if (int(x.size()) != config_.external || int(y.size()) != config_.internal())
        throw DimensionError("configuration sizes do not match (k, N-k)");
    cplx sum = 0.0;
    for (const auto& p : pairings_) {
        const Point z = coordinate(p.a, x, y) - coordinate(p.b, x, y);
        if (z.norm() == 0.0)
            throw SingularityError("pair potential evaluated on its singular locus " + describe(p),
                                   describe(p));
        sum += p.coupling * p.potential.v(z);
    }
    return sum;
}

std::function<cplx(const PointTuple&, const PointTuple&)> assemble_potential(const PairAssembly& a) {
    return [a](const PointTuple& x, const PointTuple& y) { return a.evaluate(x, y); };
}

}  // namespace twistcalc
