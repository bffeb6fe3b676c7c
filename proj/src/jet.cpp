#include "twistcalc/jet.hpp"

#include <array>
#include <cmath>
#include <map>
#include <mutex>

#include "twistcalc/errors.hpp"

namespace twistcalc {

struct Jet::Space {
    int vars = 0;
    int order = 0;
    std::vector<std::vector<int>> monomials;
    std::map<std::vector<int>, int> lookup;
    // (i, j, k) with monomial_i + monomial_j = monomial_k
    std::vector<std::array<int, 3>> products;
};

namespace {

void enumerate(int vars, int order, std::vector<int>& cur, int pos, int remaining,
               std::vector<std::vector<int>>& out) {
    if (pos == vars) {
        out.push_back(cur);
        return;
    }
    for (int e = 0; e <= remaining; ++e) {
        cur[std::size_t(pos)] = e;
        enumerate(vars, order, cur, pos + 1, remaining - e, out);
    }
    cur[std::size_t(pos)] = 0;
}

int degree(const std::vector<int>& m) {
    int s = 0;
    for (int e : m) s += e;
    return s;
}

std::shared_ptr<const Jet::Space> space_for(int vars, int order) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, std::shared_ptr<const Jet::Space>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(vars, order);
    if (auto it = cache.find(key); it != cache.end()) return it->second;

    auto s = std::make_shared<Jet::Space>();
    s->vars = vars;
    s->order = order;
    std::vector<std::vector<int>> all;
    std::vector<int> cur(std::size_t(vars), 0);
    enumerate(vars, order, cur, 0, order, all);
    // Graded order keeps the constant term at index 0.
    for (int n = 0; n <= order; ++n)
        for (const auto& m : all)
            if (degree(m) == n) s->monomials.push_back(m);
    for (std::size_t i = 0; i < s->monomials.size(); ++i) s->lookup[s->monomials[i]] = int(i);
    for (std::size_t i = 0; i < s->monomials.size(); ++i)
        for (std::size_t j = 0; j < s->monomials.size(); ++j) {
            if (degree(s->monomials[i]) + degree(s->monomials[j]) > order) continue;
            std::vector<int> sum(static_cast<std::size_t>(vars));
            for (int v = 0; v < vars; ++v)
                sum[std::size_t(v)] = s->monomials[i][std::size_t(v)] + s->monomials[j][std::size_t(v)];
            s->products.push_back({int(i), int(j), s->lookup.at(sum)});
        }
    cache[key] = s;
    return s;
}

double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

}  // namespace

Jet::Jet(int vars, int order) {
    if (vars < 1 || order < 0) throw DimensionError("jet needs vars >= 1 and order >= 0");
    space_ = space_for(vars, order);
    coeff_.assign(space_->monomials.size(), 0.0);
}

Jet Jet::constant(int vars, int order, double c) {
    Jet j(vars, order);
    j.coeff_[0] = c;
    return j;
}

Jet Jet::variable(int vars, int order, int index, double value) {
    Jet j = constant(vars, order, value);
    if (order >= 1) {
        std::vector<int> m(std::size_t(vars), 0);
        m[std::size_t(index)] = 1;
        j.coeff_[std::size_t(j.space_->lookup.at(m))] = 1.0;
    }
    return j;
}

int Jet::vars() const { return space_->vars; }
int Jet::order() const { return space_->order; }

double Jet::coefficient(const std::vector<int>& alpha) const {
    auto it = space_->lookup.find(alpha);
    if (it == space_->lookup.end()) throw DimensionError("multi-index outside jet order");
    return coeff_[std::size_t(it->second)];
}

double Jet::derivative(const std::vector<int>& alpha) const {
    double f = 1.0;
    for (int e : alpha) f *= factorial(e);
    return f * coefficient(alpha);
}

std::vector<std::vector<int>> Jet::indices_of_order(int n) const {
    std::vector<std::vector<int>> out;
    for (const auto& m : space_->monomials)
        if (degree(m) == n) out.push_back(m);
    return out;
}

Jet& Jet::operator+=(const Jet& o) {
    if (o.space_ != space_) throw DimensionError("jet spaces differ");
    for (std::size_t i = 0; i < coeff_.size(); ++i) coeff_[i] += o.coeff_[i];
    return *this;
}

Jet& Jet::operator-=(const Jet& o) {
    if (o.space_ != space_) throw DimensionError("jet spaces differ");
    for (std::size_t i = 0; i < coeff_.size(); ++i) coeff_[i] -= o.coeff_[i];
    return *this;
}

Jet& Jet::operator*=(double s) {
    for (double& c : coeff_) c *= s;
    return *this;
}

Jet& Jet::operator+=(double s) {
    coeff_[0] += s;
    return *this;
}

Jet operator*(const Jet& a, const Jet& b) {
    if (a.space_ != b.space_) throw DimensionError("jet spaces differ");
    Jet r(a.vars(), a.order());
    for (const auto& p : a.space_->products)
        r.coeff_[std::size_t(p[2])] += a.coeff_[std::size_t(p[0])] * b.coeff_[std::size_t(p[1])];
    return r;
}

Jet Jet::compose(const std::vector<double>& derivs) const {
    const int K = order();
    if (int(derivs.size()) < K + 1) throw DimensionError("compose needs order+1 derivatives");
    Jet h = *this;
    h.coeff_[0] = 0.0;
    // Horner in the nilpotent part h.
    Jet r = constant(vars(), K, derivs[std::size_t(K)] / factorial(K));
    for (int k = K - 1; k >= 0; --k) {
        r = r * h;
        r.coeff_[0] += derivs[std::size_t(k)] / factorial(k);
    }
    return r;
}

Jet pow(const Jet& a, double q) {
    const double a0 = a.value();
    if (!(a0 > 0.0)) throw DomainError("jet pow needs a positive base value");
    std::vector<double> d(std::size_t(a.order() + 1));
    double c = 1.0;
    for (int k = 0; k <= a.order(); ++k) {
        d[std::size_t(k)] = c * std::pow(a0, q - k);
        c *= (q - k);
    }
    return a.compose(d);
}

Jet sqrt(const Jet& a) { return pow(a, 0.5); }
Jet reciprocal(const Jet& a) {
    const double a0 = a.value();
    if (a0 == 0.0) throw DomainError("jet reciprocal of zero");
    std::vector<double> d(std::size_t(a.order() + 1));
    double c = 1.0;
    for (int k = 0; k <= a.order(); ++k) {
        d[std::size_t(k)] = c / std::pow(a0, k + 1);
        c *= -(k + 1);
    }
    return a.compose(d);
}

Jet exp(const Jet& a) {
    std::vector<double> d(std::size_t(a.order() + 1), std::exp(a.value()));
    return a.compose(d);
}

}  // namespace twistcalc
