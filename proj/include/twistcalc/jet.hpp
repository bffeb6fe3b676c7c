#pragma once

#include <memory>
#include <vector>

namespace twistcalc {

// Truncated multivariate Taylor polynomial: coefficients c_alpha of h^alpha for |alpha| <= order.
class Jet {
public:
    Jet(int vars, int order);

    static Jet constant(int vars, int order, double c);
    static Jet variable(int vars, int order, int index, double value);

    int vars() const;
    int order() const;
    double value() const { return coeff_[0]; }
    // Partial derivative d^alpha = alpha! c_alpha.
    double derivative(const std::vector<int>& alpha) const;
    double coefficient(const std::vector<int>& alpha) const;
    // All multi-indices with |alpha| == n, in a fixed order.
    std::vector<std::vector<int>> indices_of_order(int n) const;

    Jet& operator+=(const Jet& o);
    Jet& operator-=(const Jet& o);
    Jet& operator*=(double s);
    Jet& operator+=(double s);

    friend Jet operator+(Jet a, const Jet& b) { return a += b; }
    friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
    friend Jet operator*(const Jet& a, const Jet& b);
    friend Jet operator*(Jet a, double s) { return a *= s; }
    friend Jet operator*(double s, Jet a) { return a *= s; }
    friend Jet operator+(Jet a, double s) { return a += s; }
    friend Jet operator-(const Jet& a) { return a * -1.0; }

    // g(a0 + h) = sum_k derivs[k] / k! h^k with derivs[k] = g^(k)(a0); derivs needs order+1 entries.
    Jet compose(const std::vector<double>& derivs) const;

    struct Space;

private:
    std::shared_ptr<const Space> space_;
    std::vector<double> coeff_;
};

Jet pow(const Jet& a, double q);
Jet sqrt(const Jet& a);
Jet exp(const Jet& a);
Jet reciprocal(const Jet& a);

}  // namespace twistcalc
