#include "twistcalc/operators.hpp"

#include <cmath>
#include <random>
#include <unsupported/Eigen/AutoDiff>

#include "twistcalc/errors.hpp"

namespace twistcalc {

namespace {

PointTuple as_tuple(const Eigen::VectorXd& flat, int dim) {
    if (flat.size() == 0) return {};
    return unflatten(flat, dim);
}

const int kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67,
                       71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131, 137, 139, 149,
                       151, 157, 163, 167, 173, 179, 181, 191, 193, 197, 199, 211, 223, 227, 229};

double radical_inverse(std::uint64_t i, int base) {
    double f = 1.0, r = 0.0;
    while (i > 0) {
        f /= base;
        r += f * double(i % std::uint64_t(base));
        i /= std::uint64_t(base);
    }
    return r;
}

std::vector<double> flat_witness(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                 const Eigen::VectorXd& zeta) {
    std::vector<double> w;
    for (auto v : {&x, &y, &zeta})
        for (Eigen::Index i = 0; i < v->size(); ++i) w.push_back((*v)[i]);
    return w;
}

}  // namespace

bool ProductBall::contains(const Eigen::VectorXd& x_flat) const {
    if (centers.empty()) return true;
    const auto d = centers.front().size();
    if (x_flat.size() != d * Eigen::Index(centers.size())) return false;
    for (std::size_t j = 0; j < centers.size(); ++j)
        if (!((x_flat.segment(Eigen::Index(j) * d, d) - centers[j]).norm() < radius)) return false;
    return true;
}

Diff2Operator::Diff2Operator(int ext_vars, int int_vars, CoefficientField field,
                             bool constant_coefficients)
    : ext_(ext_vars), int_(int_vars), field_(std::move(field)), constant_(constant_coefficients) {
    if (ext_vars < 0 || int_vars < 0 || ext_vars + int_vars == 0)
        throw DimensionError("operator needs at least one variable");
}

Diff2Operator Diff2Operator::negative_laplacian(int ext_vars, int int_vars) {
    const int n = ext_vars + int_vars;
    return Diff2Operator(
        ext_vars, int_vars,
        [n](const Eigen::VectorXd&, const Eigen::VectorXd&) {
            return CoefficientSet{Eigen::MatrixXcd::Identity(n, n), Eigen::VectorXcd::Zero(n), 0.0};
        },
        true);
}

Diff2Operator Diff2Operator::from_terms(int ext_vars, int int_vars, Terms terms,
                                        bool constant_coefficients) {
    const int n = ext_vars + int_vars;
    for (const auto& [ab, c] : terms.second)
        if (ab.first < 0 || ab.second < 0 || ab.first >= n || ab.second >= n)
            throw DimensionError("second-order term index out of range");
    for (const auto& [a, c] : terms.first)
        if (a < 0 || a >= n) throw DimensionError("first-order term index out of range");
    return Diff2Operator(
        ext_vars, int_vars,
        [n, terms](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
            CoefficientSet s{Eigen::MatrixXcd::Zero(n, n), Eigen::VectorXcd::Zero(n), 0.0};
            for (const auto& [ab, c] : terms.second) s.second(ab.first, ab.second) += c(x, y);
            for (const auto& [a, c] : terms.first) s.first(a) += c(x, y);
            if (terms.zeroth) s.zeroth = terms.zeroth(x, y);
            return s;
        },
        constant_coefficients);
}

CoefficientSet Diff2Operator::coefficients(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
    if (x.size() != ext_ || y.size() != int_) throw DimensionError("operator argument sizes differ");
    if (domain && !domain->contains(x)) throw DomainError("operator evaluated outside its domain");
    return field_(x, y);
}

Eigen::MatrixXd Diff2Operator::principal_real(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
    const Eigen::MatrixXd a = coefficients(x, y).second.real();
    return 0.5 * (a + a.transpose());
}

cplx Diff2Operator::principal_symbol(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                     const Eigen::VectorXd& xi, const Eigen::VectorXd& eta) const {
    Eigen::VectorXcd z(vars());
    z << xi.cast<cplx>(), eta.cast<cplx>();
    return z.transpose() * coefficients(x, y).second * z;
}

cplx Diff2Operator::total_symbol(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                 const Eigen::VectorXd& xi, const Eigen::VectorXd& eta) const {
    Eigen::VectorXcd z(vars());
    z << xi.cast<cplx>(), eta.cast<cplx>();
    const auto c = coefficients(x, y);
    return cplx(z.transpose() * c.second * z) + cplx(c.first.transpose() * z) + c.zeroth;
}

std::vector<SymbolSample> covector_samples(
    const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& points, int per_point,
    int ext_vars, int int_vars, std::uint64_t seed) {
    const int n = ext_vars + int_vars;
    const int dims = 2 * n + 1;
    if (dims > int(std::size(kPrimes))) throw UnsupportedError("too many variables for Halton samples");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif;
    std::vector<double> shift(static_cast<std::size_t>(dims));
    for (auto& s : shift) s = unif(rng);
    auto coord = [&](std::uint64_t i, int k) {
        double v = radical_inverse(i, kPrimes[k]) + shift[std::size_t(k)];
        return v - std::floor(v);
    };
    std::vector<SymbolSample> out;
    std::uint64_t index = 1;
    for (const auto& [x, y] : points) {
        for (int s = 0; s < per_point; ++s, ++index) {
            Eigen::VectorXd z(n);
            for (int a = 0; a < n; ++a) {
                const double u1 = std::max(coord(index, 2 * a), 1e-300);
                const double u2 = coord(index, 2 * a + 1);
                z[a] = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
            }
            if (z.norm() == 0.0) z[0] = 1.0;
            z.normalize();
            z *= std::pow(10.0, 2.0 * coord(index, 2 * n));
            out.push_back({x, y, z.head(ext_vars), z.tail(int_vars)});
        }
    }
    return out;
}

EllipticityCertificate ellipticity_certificate(const Diff2Operator& P,
                                               const std::vector<SymbolSample>& samples) {
    if (samples.empty()) throw DimensionError("ellipticity certificate needs samples");
    EllipticityCertificate c;
    c.constant = INFINITY;
    const Eigen::VectorXd* lx = nullptr;
    const Eigen::VectorXd* ly = nullptr;
    for (const auto& s : samples) {
        Eigen::VectorXd zeta(P.vars());
        zeta << s.xi, s.eta;
        const bool same = lx && ly && lx->size() == s.x.size() && *lx == s.x && *ly == s.y;
        if (!same) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P.principal_real(s.x, s.y));
            const auto& ev = es.eigenvalues();
            const double lmin = ev(0), lmax = ev(ev.size() - 1);
            const double scale = std::max(std::abs(lmin), std::abs(lmax));
            if (c.sign == 0) {
                if (lmin > 0.0) c.sign = 1;
                else if (lmax < 0.0) c.sign = -1;
            }
            const double low = c.sign >= 0 ? lmin : -lmax;
            if (c.sign == 0 || !(low > 1e-14 * scale)) {
                const Eigen::VectorXd w = c.sign >= 0 ? es.eigenvectors().col(0)
                                                      : es.eigenvectors().col(ev.size() - 1);
                throw NonEllipticError("real part of the principal symbol vanishes or changes sign",
                                       flat_witness(s.x, s.y, w));
            }
            c.constant = std::min(c.constant, low);
            lx = &s.x;
            ly = &s.y;
        }
        const double ratio = c.sign * P.principal_symbol(s.x, s.y, s.xi, s.eta).real() / zeta.squaredNorm();
        c.worst_ratio = std::min(c.worst_ratio, ratio);
        ++c.samples;
    }
    return c;
}

HalfDensities half_densities(const TwistMap& t, TwistDirection dir, const PointTuple& x,
                             const PointTuple& y) {
    t.require_domain(x);
    double at_y = 1.0, at_inverse = 1.0;
    for (const auto& yk : y) {
        at_y *= std::sqrt(std::abs(t.dz(x, yk).determinant()));
        const Point z = t.inverse_unchecked(x, yk);
        at_inverse /= std::sqrt(std::abs(t.dz(x, z).determinant()));
    }
    // at_y = |Det d_y F(x;y)|^{1/2}, at_inverse = |Det d_y F^{-1}(x;y)|^{1/2}
    if (dir == TwistDirection::Forward) return {at_y, at_inverse};
    return {at_inverse, at_y};
}

JCoefficients j_coefficients(const TwistMap& t, TwistDirection dir, const PointTuple& x,
                             const PointTuple& y) {
    t.require_domain(x);
    require_dimension(y, t.dim(), "internal tuple");
    const int d = t.dim();
    const int m = t.external_count();
    const int p = int(y.size());
    const cplx I(0.0, 1.0);
    JCoefficients j;
    j.J1 = Eigen::MatrixXd::Zero(m * d, p * d);
    j.J3 = Eigen::MatrixXd::Zero(p * d, p * d);
    j.J2 = Eigen::VectorXcd::Zero(m * d);
    j.J4 = Eigen::VectorXcd::Zero(p * d);
    const auto h = half_densities(t, dir, x, y);
    j.rho_plus = h.plus;
    j.rho_minus = h.minus;
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(d, d);

    for (int k = 0; k < p; ++k) {
        if (dir == TwistDirection::Forward) {
            // y'_k = f^{-1}(x; y_k); J1(F) = (d_x F)^T, J3(F) = (d_y F)^T, J2/J4 = -(i/2) grad log|Det d_y F|.
            const Point z = t.inverse_unchecked(x, y[std::size_t(k)]);
            const auto w = t.weights(z);
            for (int jj = 0; jj < m; ++jj) j.J1.block(jj * d, k * d, d, d) = w[jj] * id;
            j.J3.block(k * d, k * d, d, d) = t.dz(x, z).transpose();
            const auto L = t.log_det_derivatives(x, z);
            j.J2 += (-0.5 * I) * L.dx.cast<cplx>();
            j.J4.segment(k * d, d) = (-0.5 * I) * L.dz.cast<cplx>();
        } else {
            // G = F^{-1}, y' = F(x; y): J1 = (d_x f^{-1})^T = -(A^{-1} T)^T, J3 = A^{-T} at y_k.
            const Point& z = y[std::size_t(k)];
            const Eigen::MatrixXd ainvT = t.dz(x, z).inverse().transpose();
            const auto w = t.weights(z);
            for (int jj = 0; jj < m; ++jj) j.J1.block(jj * d, k * d, d, d) = -w[jj] * ainvT;
            j.J3.block(k * d, k * d, d, d) = ainvT;
            const auto L = t.log_det_derivatives(x, z);
            const Eigen::VectorXd gz = ainvT * L.dz;
            j.J2 += (0.5 * I) * (L.dx - t.dx(z).transpose() * gz).cast<cplx>();
            j.J4.segment(k * d, d) = (0.5 * I) * gz.cast<cplx>();
        }
    }
    return j;
}

cplx twisted_principal_symbol(const Diff2Operator& P, const TwistMap& t, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& y, const Eigen::VectorXd& xi,
                              const Eigen::VectorXd& eta) {
    const PointTuple xt = as_tuple(x, t.dim());
    const PointTuple yt = as_tuple(y, t.dim());
    const auto j = j_coefficients(t, TwistDirection::Inverse, xt, yt);
    PointTuple image;
    for (const auto& yk : yt) image.push_back(t.forward_unchecked(xt, yk));
    return P.principal_symbol(x, flatten(image), xi + j.J1 * eta, j.J3 * eta);
}

cplx exponential_conjugation_symbol(const Diff2Operator& P, const TwistMap& t,
                                    const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                    const Eigen::VectorXd& xi, const Eigen::VectorXd& eta) {
    using AD = Eigen::AutoDiffScalar<Eigen::VectorXd>;
    const int d = t.dim();
    const PointTuple xt = as_tuple(x, d);
    const PointTuple yt = as_tuple(y, d);
    t.require_domain(xt);
    const int md = int(x.size());
    const int pd = int(y.size());
    const int n = md + pd;
    const double r0 = t.r0();

    std::vector<AD> xa(static_cast<std::size_t>(md));
    for (int i = 0; i < md; ++i) xa[std::size_t(i)] = AD(x[i], n, i);

    // f(x; z) on differentiable scalars, straight from the definition of the twist.
    auto f_ad = [&](const std::vector<AD>& z) {
        std::vector<AD> out = z;
        for (int jj = 0; jj < t.external_count(); ++jj) {
            Point u(d);
            Eigen::VectorXd du = Eigen::VectorXd::Zero(n);
            for (int c = 0; c < d; ++c) u[c] = (z[std::size_t(c)].value() - t.base()[std::size_t(jj)][c]) / r0;
            const double tv = t.cutoff().value(u);
            if (tv == 0.0 && t.cutoff().gradient(u).norm() == 0.0) continue;
            const Point g = t.cutoff().gradient(u);
            for (int c = 0; c < d; ++c) du += g[c] * z[std::size_t(c)].derivatives() / r0;
            const AD tau(tv, du);
            for (int c = 0; c < d; ++c)
                out[std::size_t(c)] += tau * (xa[std::size_t(jj * d + c)] - t.base()[std::size_t(jj)][c]);
        }
        return out;
    };

    Eigen::VectorXd image(pd);
    AD phase(0.0, Eigen::VectorXd::Zero(n));
    for (int i = 0; i < md; ++i) phase += xa[std::size_t(i)] * xi[i];
    for (int k = 0; k < pd / d; ++k) {
        const Point w = t.forward_unchecked(xt, yt[std::size_t(k)]);
        image.segment(k * d, d) = w;
        std::vector<AD> wa(static_cast<std::size_t>(d)), z(static_cast<std::size_t>(d));
        const Point z0 = t.inverse_unchecked(xt, w);
        for (int c = 0; c < d; ++c) {
            wa[std::size_t(c)] = AD(w[c], n, md + k * d + c);
            z[std::size_t(c)] = AD(z0[c], Eigen::VectorXd::Zero(n));
        }
        // Newton steps carry the implicit derivative; one is exact for the first-order part.
        for (int it = 0; it < 2; ++it) {
            Point zv(d);
            for (int c = 0; c < d; ++c) zv[c] = z[std::size_t(c)].value();
            const Eigen::MatrixXd ainv = t.dz(xt, zv).inverse();
            const auto fz = f_ad(z);
            std::vector<AD> next = z;
            for (int c = 0; c < d; ++c)
                for (int b = 0; b < d; ++b)
                    next[std::size_t(c)] -= ainv(c, b) * (fz[std::size_t(b)] - wa[std::size_t(b)]);
            z = next;
        }
        for (int c = 0; c < d; ++c) phase += z[std::size_t(c)] * eta[k * d + c];
    }
    const Eigen::VectorXd grad = phase.derivatives();
    return P.principal_symbol(x, image, grad.head(md), grad.tail(pd));
}

namespace {

struct ConjugationFrame {
    Eigen::MatrixXd K;   // rows: conjugated D_a expressed in D_e
    Eigen::VectorXcd k;  // zeroth-order parts
};

ConjugationFrame frame_at(const TwistMap& t, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    const int md = int(x.size()), pd = int(y.size()), n = md + pd;
    const auto j = j_coefficients(t, TwistDirection::Inverse, as_tuple(x, t.dim()), as_tuple(y, t.dim()));
    ConjugationFrame f;
    f.K = Eigen::MatrixXd::Zero(n, n);
    f.K.topLeftCorner(md, md).setIdentity();
    f.K.topRightCorner(md, pd) = j.J1;
    f.K.bottomRightCorner(pd, pd) = j.J3;
    f.k.resize(n);
    f.k << j.J2, j.J4;
    return f;
}

}  // namespace

Diff2Operator conjugate_operator(const Diff2Operator& P, const TwistMap& t) {
    const int md = P.external_vars(), pd = P.internal_vars(), n = md + pd;
    const double h = 1e-3 * t.delta0();
    Diff2Operator out(md, pd, [P, t, md, pd, n, h](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
        const PointTuple xt = as_tuple(x, t.dim());
        PointTuple image;
        for (const auto& yk : as_tuple(y, t.dim())) image.push_back(t.forward_unchecked(xt, yk));
        const auto c = P.coefficients(x, flatten(image));
        const auto f0 = frame_at(t, x, y);
        const Eigen::MatrixXcd K = f0.K.cast<cplx>();
        const Eigen::MatrixXcd G = K.transpose() * c.second;
        CoefficientSet s;
        s.second = G * K;
        s.first = G * f0.k + K.transpose() * (c.second.transpose() * f0.k) + K.transpose() * c.first;
        s.zeroth = cplx(f0.k.transpose() * c.second * f0.k) + cplx(c.first.transpose() * f0.k) + c.zeroth;
        const cplx I(0.0, 1.0);
        for (int e = 0; e < n; ++e) {
            // D_e of the frame by fourth-order central differences.
            ConjugationFrame fs[4];
            const double off[4] = {2.0, 1.0, -1.0, -2.0};
            for (int q = 0; q < 4; ++q) {
                Eigen::VectorXd xs = x, ys = y;
                if (e < md) xs[e] += off[q] * h;
                else ys[e - md] += off[q] * h;
                fs[q] = frame_at(t, xs, ys);
            }
            const Eigen::MatrixXcd dK =
                (-I / (12.0 * h)) * (-fs[0].K + 8.0 * fs[1].K - 8.0 * fs[2].K + fs[3].K).cast<cplx>();
            const Eigen::VectorXcd dk = (-I / (12.0 * h)) * (-fs[0].k + 8.0 * fs[1].k - 8.0 * fs[2].k + fs[3].k);
            s.first += (G.row(e) * dK).transpose();
            s.zeroth += cplx(G.row(e) * dk);
        }
        return s;
    });
    out.domain = ProductBall{t.base(), t.delta0()};
    return out;
}

TwistedEllipticityReport twisted_ellipticity(const Diff2Operator& P, const TwistMap& t,
                                             const std::vector<SymbolSample>& samples,
                                             double rel_tol) {
    if (samples.empty()) throw DimensionError("twisted ellipticity needs samples");
    const int d = t.dim();
    TwistedEllipticityReport rep;
    struct Frame {
        Eigen::VectorXd image;
        JCoefficients j;
    };
    std::vector<Frame> frames;
    std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> base_points;
    for (const auto& s : samples) {
        const PointTuple xt = as_tuple(s.x, d);
        PointTuple image;
        for (const auto& yk : as_tuple(s.y, d)) image.push_back(t.forward(xt, yk));
        Frame f{flatten(image), j_coefficients(t, TwistDirection::Inverse, xt, as_tuple(s.y, d))};
        rep.M = std::max(rep.M, f.j.J1.operatorNorm());
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(f.j.J3);
        const auto& sv = svd.singularValues();
        rep.C = std::max({rep.C, sv(0), 1.0 / sv(sv.size() - 1)});
        frames.push_back(f);
    }
    // Untwisted certificate at the twisted points, one covector each so every point is visited.
    std::vector<SymbolSample> base;
    for (std::size_t i = 0; i < samples.size(); ++i)
        base.push_back({samples[i].x, frames[i].image, samples[i].xi, samples[i].eta});
    const auto cert = ellipticity_certificate(P, base);
    rep.sign = cert.sign;
    rep.base_constant = cert.constant;
    rep.S = std::sqrt(1.0 + 4.0 * rep.M * rep.M);
    const double c2 = 1.0 / (rep.C * rep.C);
    rep.constant = std::min({0.25, c2, c2 / (rep.S * rep.S)}) * rep.base_constant;
    const double bound_near = std::min(0.25, c2) * rep.base_constant;
    const double bound_far = c2 / (rep.S * rep.S) * rep.base_constant;

    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        const auto& f = frames[i];
        const double z2 = s.xi.squaredNorm() + s.eta.squaredNorm();
        const double sym =
            P.principal_symbol(s.x, f.image, s.xi + f.j.J1 * s.eta, f.j.J3 * s.eta).real();
        const double ratio = rep.sign * sym / z2;
        const double bound = rep.S * s.eta.norm() <= std::sqrt(z2) ? bound_near : bound_far;
        rep.worst_ratio = std::min(rep.worst_ratio, ratio);
        rep.worst_margin = std::min(rep.worst_margin, ratio / bound - 1.0);
        if (ratio < bound * (1.0 - rel_tol) && rep.witness.empty())
            rep.witness = "sample " + std::to_string(i) + " ratio " + std::to_string(ratio) +
                          " below bound " + std::to_string(bound);
        ++rep.samples;
    }
    rep.ok = rep.witness.empty();
    return rep;
}

double ExternalCutoff::value(const Eigen::VectorXd& x_flat) const {
    auto psi = [](double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; };
    double v = 1.0;
    for (std::size_t j = 0; j < support.centers.size(); ++j) {
        const double r = (x_flat.segment(Eigen::Index(j) * dim, dim) - support.centers[j]).norm();
        if (r >= support.radius) return 0.0;
        if (r <= inner_radius) continue;
        const double a = psi(support.radius - r), b = psi(r - inner_radius);
        v *= a / (a + b);
    }
    return v;
}

Diff2Operator extend_operator(const Diff2Operator& P, const ExternalCutoff& chi, int sign,
                              double constant) {
    if (sign != 1 && sign != -1) throw DomainError("ellipticity sign must be +1 or -1");
    if (!(chi.inner_radius < chi.support.radius)) throw DomainError("cutoff radii out of order");
    if (P.domain) {
        if (P.domain->centers.size() != chi.support.centers.size())
            throw DimensionError("cutoff and operator domain disagree in size");
        for (std::size_t j = 0; j < chi.support.centers.size(); ++j)
            if ((chi.support.centers[j] - P.domain->centers[j]).norm() + chi.support.radius >
                P.domain->radius)
                throw DomainError("cutoff support escapes the operator domain");
    }
    const int n = P.vars();
    Diff2Operator out(P.external_vars(), P.internal_vars(),
                      [P, chi, sign, constant, n](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
                          const double c = chi.value(x);
                          const Eigen::MatrixXcd fill =
                              (sign * constant * (1.0 - c)) * Eigen::MatrixXcd::Identity(n, n);
                          if (c == 0.0) return CoefficientSet{fill, Eigen::VectorXcd::Zero(n), 0.0};
                          auto s = P.coefficients(x, y);
                          s.second = c * s.second + fill;
                          s.first *= c;
                          s.zeroth *= c;
                          return s;
                      });
    return out;
}

PairCase classify_pair(const Pairing& p) {
    using K = Particle::Kind;
    auto has = [&](K a, K b) {
        return (p.a.kind == a && p.b.kind == b) || (p.a.kind == b && p.b.kind == a);
    };
    if (has(K::Nuclear, K::Nuclear)) return PairCase::NuclearNuclear;
    if (has(K::External, K::External)) return PairCase::ExternalExternal;
    if (has(K::External, K::Nuclear)) return PairCase::ExternalNuclear;
    if (has(K::External, K::Internal)) return PairCase::ExternalInternal;
    if (has(K::Nuclear, K::Internal)) return PairCase::NuclearInternal;
    return PairCase::InternalInternal;
}

std::string to_string(PairCase c) {
    switch (c) {
        case PairCase::NuclearNuclear: return "nuclear-nuclear";
        case PairCase::ExternalExternal: return "external-external";
        case PairCase::ExternalNuclear: return "external-nuclear";
        case PairCase::ExternalInternal: return "external-internal";
        case PairCase::NuclearInternal: return "nuclear-internal";
        case PairCase::InternalInternal: return "internal-internal";
    }
    return "unknown";
}

TwistedPair twisted_pair(const Pairing& p, const TwistMap& t, const PointTuple& x,
                         const PointTuple& y) {
    t.require_domain(x);
    const auto& nuclei = t.config().nuclei;
    // Anchor: the untwisted position whose image the pair actually sees.
    auto anchor = [&](const Particle& q) -> Point {
        switch (q.kind) {
            case Particle::Kind::External: return t.base().at(std::size_t(q.index));
            case Particle::Kind::Nuclear: return nuclei.at(std::size_t(q.index)).position;
            case Particle::Kind::Internal: return y.at(std::size_t(q.index));
        }
        throw DimensionError("unknown particle kind");
    };
    auto current = [&](const Particle& q) -> Point {
        switch (q.kind) {
            case Particle::Kind::External: return x.at(std::size_t(q.index));
            case Particle::Kind::Nuclear: return nuclei.at(std::size_t(q.index)).position;
            case Particle::Kind::Internal: return y.at(std::size_t(q.index));
        }
        throw DimensionError("unknown particle kind");
    };

    TwistedPair out;
    out.kind = classify_pair(p);
    const Point a = anchor(p.a), b = anchor(p.b);
    out.untwisted = a - b;
    switch (out.kind) {
        case PairCase::NuclearNuclear:
            // Constant in x.
            out.argument = a - b;
            break;
        case PairCase::ExternalExternal:
        case PairCase::ExternalNuclear:
            // Neither side is moved by the twist: analytic composition in x.
            out.argument = current(p.a) - current(p.b);
            break;
        case PairCase::ExternalInternal:
        case PairCase::NuclearInternal:
        case PairCase::InternalInternal: {
            // Internal coordinates go through f(x; .); pinning gives f(x; x0_j) = x_j, f(x; R) = R.
            auto image = [&](const Particle& q) -> Point {
                return q.kind == Particle::Kind::Internal ? t.forward_unchecked(x, current(q)) : current(q);
            };
            out.argument = image(p.a) - image(p.b);
            break;
        }
    }
    out.direction = t.weights(a) - t.weights(b);
    if (out.kind != PairCase::NuclearNuclear && out.untwisted.norm() == 0.0)
        throw SingularityError("twisted pair potential on its singular locus " + describe(p), describe(p));
    if (out.argument.norm() == 0.0)
        throw SingularityError("twisted pair potential on its singular locus " + describe(p), describe(p));
    out.value = p.coupling * p.potential.v(out.argument);
    return out;
}

std::vector<cplx> twisted_pair_derivatives(const Pairing& p, const TwistMap& t, const PointTuple& x,
                                           const PointTuple& y, int jprime, int order) {
    if (jprime < 0 || jprime >= t.external_count()) throw DimensionError("external index out of range");
    const auto tp = twisted_pair(p, t, x, y);
    const auto alphas = multi_indices(t.dim(), order);
    std::vector<cplx> out(alphas.size(), 0.0);
    const double s = tp.direction[jprime];
    if (tp.kind == PairCase::NuclearNuclear) {
        out[0] = tp.value;
        return out;
    }
    const auto dv = potential_derivatives(p.potential, tp.argument, order);
    for (std::size_t i = 0; i < alphas.size(); ++i)
        out[i] = p.coupling * std::pow(s, order_of(alphas[i])) * dv[i];
    return out;
}

TwistedDerivativeReport twisted_derivative_bound(
    const Pairing& p, const TwistMap& t,
    const std::vector<std::pair<PointTuple, PointTuple>>& samples, int order,
    double stability_tolerance) {
    if (samples.size() < 2) throw DimensionError("derivative bound needs at least two samples");
    const auto alphas = multi_indices(t.dim(), order);
    const int d = t.dim();
    TwistedDerivativeReport rep;
    std::vector<std::vector<double>> halves(2, std::vector<double>(std::size_t(order + 1), 0.0));
    rep.order_ratio.assign(std::size_t(order + 1), 0.0);
    auto fit = [](const std::vector<double>& r) {
        double c = 0.0;
        for (std::size_t n = 0; n < r.size(); ++n) c = std::max(c, std::pow(r[n], 1.0 / double(n + 1)));
        return c;
    };
    for (std::size_t s = 0; s < samples.size(); ++s) {
        const auto& [x, y] = samples[s];
        const auto tp = twisted_pair(p, t, x, y);
        const double eta = p.potential.envelope.eta(tp.untwisted.norm());
        for (int jp = 0; jp < t.external_count(); ++jp) {
            const auto der = twisted_pair_derivatives(p, t, x, y, jp, order);
            for (std::size_t i = 0; i < alphas.size(); ++i) {
                const int n = order_of(alphas[i]);
                const double q = std::abs(der[i]) / (factorial(n) * eta);
                rep.order_ratio[std::size_t(n)] = std::max(rep.order_ratio[std::size_t(n)], q);
                halves[s % 2][std::size_t(n)] = std::max(halves[s % 2][std::size_t(n)], q);
            }
            // Chain rule against central differences of the twisted value.
            if (order >= 1) {
                const double h = 1e-6 * t.delta0();
                for (int c = 0; c < d; ++c) {
                    PointTuple xp = x, xm = x;
                    xp[std::size_t(jp)][c] += h;
                    xm[std::size_t(jp)][c] -= h;
                    if (!t.in_domain(xp) || !t.in_domain(xm)) continue;
                    const cplx fd = (twisted_pair(p, t, xp, y).value - twisted_pair(p, t, xm, y).value) / (2.0 * h);
                    std::vector<int> e(std::size_t(d), 0);
                    e[std::size_t(c)] = 1;
                    std::size_t idx = 0;
                    while (alphas[idx] != e) ++idx;
                    // Relative to the pair's natural derivative scale |v| / |z|, so that samples where the
                    // twisted derivative nearly vanishes do not amplify difference round-off.
                    const double scale = std::abs(der[idx]) + std::abs(tp.value) / tp.argument.norm();
                    rep.chain_rule_error = std::max(rep.chain_rule_error, std::abs(fd - der[idx]) / scale);
                }
            }
        }
    }
    rep.fitted_C = fit(rep.order_ratio);
    rep.subset_C = {fit(halves[0]), fit(halves[1])};
    const double lo = std::min({rep.fitted_C, rep.subset_C[0], rep.subset_C[1]});
    const double hi = std::max({rep.fitted_C, rep.subset_C[0], rep.subset_C[1]});
    rep.stable = std::isfinite(hi) && lo > 0.0 && hi / lo <= stability_tolerance;
    return rep;
}

Hamiltonian assemble_hamiltonian(const MoleculeConfig& config, const PairAssembly& potential,
                                 Diff2Operator kinetic, double shift,
                                 const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& points) {
    if (kinetic.external_vars() != config.external * config.dim ||
        kinetic.internal_vars() != config.internal() * config.dim)
        throw DimensionError("kinetic operator variables do not match (k d, (N-k) d)");
    if (!points.empty())
        ellipticity_certificate(kinetic, covector_samples(points, 16, kinetic.external_vars(),
                                                          kinetic.internal_vars(), 7));
    return Hamiltonian{config, std::move(kinetic), potential, shift};
}

Diff2Operator magnetic_operator(
    int ext_vars, int int_vars,
    std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> vector_potential,
    std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)> external_potential) {
    const int n = ext_vars + int_vars;
    return Diff2Operator(ext_vars, int_vars, [=](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
        const Eigen::VectorXd a = vector_potential(x, y);
        if (a.size() != n) throw DimensionError("vector potential has wrong length");
        double div = 0.0;
        const double h = 1e-5;
        for (int e = 0; e < n; ++e) {
            Eigen::VectorXd xp = x, xm = x, yp = y, ym = y;
            if (e < ext_vars) {
                xp[e] += h;
                xm[e] -= h;
            } else {
                yp[e - ext_vars] += h;
                ym[e - ext_vars] -= h;
            }
            div += (vector_potential(xp, yp)[e] - vector_potential(xm, ym)[e]) / (2.0 * h);
        }
        CoefficientSet s;
        s.second = Eigen::MatrixXcd::Identity(n, n);
        s.first = (-2.0 * a).cast<cplx>();
        // (D - A)^2 = D^2 - 2 A.D - (D.A) + |A|^2 with D.A = -i div A.
        s.zeroth = cplx(a.squaredNorm() + (external_potential ? external_potential(x, y) : 0.0), div);
        return s;
    });
}

Hamiltonian doubled_hamiltonian(const MoleculeConfig& config, int which) {
    if (which != 1 && which != 2) throw DomainError("doubled Hamiltonian index must be 1 or 2");
    const int k = config.external;
    MoleculeConfig doubled = config;
    doubled.external = 2 * k;
    doubled.electrons = config.electrons + k;
    const auto base = PairAssembly::physical(config);
    std::vector<Pairing> pairs;
    for (auto p : base.pairings()) {
        for (Particle* q : {&p.a, &p.b})
            if (q->kind == Particle::Kind::External && which == 2) q->index += k;
        pairs.push_back(p);
    }
    return Hamiltonian{doubled,
                       Diff2Operator::negative_laplacian(2 * k * config.dim, config.internal() * config.dim),
                       PairAssembly(doubled, std::move(pairs)), 0.0};
}

}  // namespace twistcalc
