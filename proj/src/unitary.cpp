#include "twistcalc/unitary.hpp"

#include <cmath>

#include "twistcalc/errors.hpp"
#include "twistcalc/operators.hpp"

namespace twistcalc {

namespace {

int internal_count(const TwistMap& t, const GridGeometry& g) {
    if (g.dims() % t.dim() != 0) throw DimensionError("grid axes are not a multiple of the dimension");
    return g.dims() / t.dim();
}

PointTuple grid_tuple(const GridGeometry& g, std::size_t flat, int d) {
    return unflatten(g.point(flat), d);
}

bool touches_support(const TwistMap& t, const PointTuple& y) {
    for (const auto& yk : y)
        for (const auto& c : t.base())
            if ((yk - c).norm() < t.r0()) return true;
    return false;
}

}  // namespace

void validate_internal_grid(const TwistMap& t, const GridGeometry& g) {
    g.validate();
    const int p = internal_count(t, g);
    for (int k = 0; k < p; ++k)
        for (const auto& c : t.base())
            if (!g.contains_ball(c, t.r0(), k * t.dim()))
                throw DomainError("cutoff ball is not strictly inside the internal grid box");
}

GridWavefunction apply_U(const TwistMap& t, const PointTuple& x, const GridWavefunction& theta) {
    validate_internal_grid(t, theta.geometry);
    t.require_domain(x);
    const auto& g = theta.geometry;
    const int d = t.dim();
    TrigInterpolant interp(theta);
    GridWavefunction out(g, theta.values);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const PointTuple y = grid_tuple(g, i, d);
        if (!touches_support(t, y)) continue;
        double rho = 1.0;
        PointTuple image;
        for (const auto& yk : y) {
            rho *= std::sqrt(std::abs(t.dz(x, yk).determinant()));
            image.push_back(t.forward_unchecked(x, yk));
        }
        out.values[Eigen::Index(i)] = rho * interp(flatten(image));
    }
    return out;
}

GridWavefunction apply_U_inverse(const TwistMap& t, const PointTuple& x, const GridWavefunction& theta) {
    validate_internal_grid(t, theta.geometry);
    t.require_domain(x);
    const auto& g = theta.geometry;
    const int d = t.dim();
    TrigInterpolant interp(theta);
    GridWavefunction out(g, theta.values);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const PointTuple y = grid_tuple(g, i, d);
        if (!touches_support(t, y)) continue;
        double rho = 1.0;
        PointTuple pre;
        for (const auto& yk : y) {
            const Point z = t.inverse_unchecked(x, yk);
            rho /= std::sqrt(std::abs(t.dz(x, z).determinant()));
            pre.push_back(z);
        }
        out.values[Eigen::Index(i)] = rho * interp(flatten(pre));
    }
    return out;
}

double unitarity_defect(const TwistMap& t, const PointTuple& x, const GridWavefunction& theta) {
    const double n0 = theta.norm();
    if (n0 == 0.0) throw DomainError("unitarity defect of the zero function");
    return std::abs(apply_U(t, x, theta).norm() - n0) / n0;
}

const char* to_string(ConjugationIdentity id) {
    switch (id) {
        case ConjugationIdentity::ForwardExternal: return "forward-external";
        case ConjugationIdentity::InverseExternal: return "inverse-external";
        case ConjugationIdentity::ForwardInternal: return "forward-internal";
        case ConjugationIdentity::InverseInternal: return "inverse-internal";
    }
    return "unknown";
}

namespace {

// D_a of a family in the external variable a by fourth-order central differences.
Eigen::VectorXcd external_D(const PointTuple& x, int a, double h, int d,
                            const std::function<Eigen::VectorXcd(const PointTuple&)>& family) {
    const double off[4] = {2.0, 1.0, -1.0, -2.0};
    const double w[4] = {-1.0, 8.0, -8.0, 1.0};
    Eigen::VectorXcd acc;
    for (int q = 0; q < 4; ++q) {
        PointTuple xs = x;
        xs[std::size_t(a / d)][a % d] += off[q] * h;
        const Eigen::VectorXcd v = family(xs);
        if (q == 0) acc = w[q] * v;
        else acc += w[q] * v;
    }
    return cplx(0.0, -1.0) / (12.0 * h) * acc;
}

std::vector<JCoefficients> j_on_grid(const TwistMap& t, const PointTuple& x, const GridGeometry& g,
                                     TwistDirection dir) {
    std::vector<JCoefficients> out;
    out.reserve(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) out.push_back(j_coefficients(t, dir, x, grid_tuple(g, i, t.dim())));
    return out;
}

double accumulate(std::vector<Eigen::VectorXcd>& lhs, const std::vector<Eigen::VectorXcd>& rhs,
                  double* ref) {
    double num = 0.0, den = 0.0;
    for (std::size_t a = 0; a < lhs.size(); ++a) {
        num += (lhs[a] - rhs[a]).squaredNorm();
        den += rhs[a].squaredNorm();
    }
    *ref = std::sqrt(den);
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace

ConjugationResult conjugation_residual(const TwistMap& t, const PointTuple& x, ConjugationIdentity id,
                                       const ExternalFamily& theta, double step_fraction) {
    t.require_domain(x);
    const GridWavefunction th = theta(x);
    const auto& g = th.geometry;
    validate_internal_grid(t, g);
    const int d = t.dim();
    const int md = d * t.external_count();
    const int pd = g.dims();
    const double h = step_fraction * t.delta0();
    const bool forward = id == ConjugationIdentity::ForwardExternal || id == ConjugationIdentity::ForwardInternal;
    const auto js = j_on_grid(t, x, g, forward ? TwistDirection::Forward : TwistDirection::Inverse);

    std::vector<Eigen::VectorXcd> Dy(static_cast<std::size_t>(pd));
    for (int b = 0; b < pd; ++b) Dy[std::size_t(b)] = spectral_D(g, th.values, b);

    std::vector<Eigen::VectorXcd> lhs, rhs;
    if (id == ConjugationIdentity::ForwardExternal || id == ConjugationIdentity::InverseExternal) {
        auto conj_family = [&](const PointTuple& xs) -> Eigen::VectorXcd {
            return forward ? apply_U(t, xs, theta(xs)).values : apply_U_inverse(t, xs, theta(xs)).values;
        };
        auto plain_family = [&](const PointTuple& xs) -> Eigen::VectorXcd { return theta(xs).values; };
        for (int a = 0; a < md; ++a) {
            const GridWavefunction dphi(g, external_D(x, a, h, d, conj_family));
            lhs.push_back(forward ? apply_U_inverse(t, x, dphi).values : apply_U(t, x, dphi).values);
            Eigen::VectorXcd r = external_D(x, a, h, d, plain_family);
            for (std::size_t i = 0; i < g.size(); ++i) {
                const auto& j = js[i];
                cplx acc = j.J2[a] * th.values[Eigen::Index(i)];
                for (int b = 0; b < pd; ++b) acc += j.J1(a, b) * Dy[std::size_t(b)][Eigen::Index(i)];
                r[Eigen::Index(i)] += acc;
            }
            rhs.push_back(r);
        }
    } else {
        const GridWavefunction phi = forward ? apply_U(t, x, th) : apply_U_inverse(t, x, th);
        for (int b = 0; b < pd; ++b) {
            const GridWavefunction dphi(g, spectral_D(g, phi.values, b));
            lhs.push_back(forward ? apply_U_inverse(t, x, dphi).values : apply_U(t, x, dphi).values);
            Eigen::VectorXcd r(Eigen::Index(g.size()));
            for (std::size_t i = 0; i < g.size(); ++i) {
                const auto& j = js[i];
                cplx acc = j.J4[b] * th.values[Eigen::Index(i)];
                for (int c = 0; c < pd; ++c) acc += j.J3(b, c) * Dy[std::size_t(c)][Eigen::Index(i)];
                r[Eigen::Index(i)] = acc;
            }
            rhs.push_back(r);
        }
    }
    ConjugationResult res;
    res.residual = accumulate(lhs, rhs, &res.reference_norm);
    res.reference_norm *= std::sqrt(g.cell_volume());
    return res;
}

ConjugationResult double_conjugation_residual(const TwistMap& t, const PointTuple& x,
                                              const ExternalFamily& theta, double step_fraction) {
    t.require_domain(x);
    const GridWavefunction th = theta(x);
    const auto& g = th.geometry;
    const int d = t.dim();
    const int md = d * t.external_count();
    const int pd = g.dims();
    const double h = step_fraction * t.delta0();
    const auto js = j_on_grid(t, x, g, TwistDirection::Inverse);
    auto psi_family = [&](const PointTuple& xs) -> Eigen::VectorXcd { return apply_U(t, xs, theta(xs)).values; };
    auto plain_family = [&](const PointTuple& xs) -> Eigen::VectorXcd { return theta(xs).values; };
    const Eigen::VectorXcd psi = psi_family(x);
    std::vector<Eigen::VectorXcd> Dy(static_cast<std::size_t>(pd));
    for (int b = 0; b < pd; ++b) Dy[std::size_t(b)] = spectral_D(g, psi, b);

    std::vector<Eigen::VectorXcd> lhs, rhs;
    for (int a = 0; a < md; ++a) {
        Eigen::VectorXcd v = external_D(x, a, h, d, psi_family);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const auto& j = js[i];
            cplx acc = j.J2[a] * psi[Eigen::Index(i)];
            for (int b = 0; b < pd; ++b) acc += j.J1(a, b) * Dy[std::size_t(b)][Eigen::Index(i)];
            v[Eigen::Index(i)] += acc;
        }
        lhs.push_back(apply_U_inverse(t, x, GridWavefunction(g, v)).values);
        rhs.push_back(external_D(x, a, h, d, plain_family));
    }
    ConjugationResult res;
    res.residual = accumulate(lhs, rhs, &res.reference_norm);
    res.reference_norm *= std::sqrt(g.cell_volume());
    return res;
}

}  // namespace twistcalc
