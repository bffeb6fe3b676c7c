#include "twistcalc/states.hpp"

#include <array>
#include <cmath>
#include <memory>
#include <random>

#include "twistcalc/errors.hpp"

namespace twistcalc {

namespace {

constexpr std::array<int, 24> kPrimes{2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37,
                                      41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89};

double radical_inverse(std::uint64_t i, int base) {
    double inv = 1.0 / base, f = inv, r = 0.0;
    while (i > 0) {
        r += f * double(i % std::uint64_t(base));
        i /= std::uint64_t(base);
        f *= inv;
    }
    return r;
}

Eigen::VectorXd joint(const PointTuple& w) { return flatten(w); }

// Fourth-order central differences, used only when no closed form is attached.
cplx laplacian_by_differences(const BoundState& psi, const PointTuple& w, double h) {
    Eigen::VectorXd flat = joint(w);
    const cplx c = psi.value(w);
    cplx acc = 0.0;
    for (Eigen::Index a = 0; a < flat.size(); ++a) {
        auto at = [&](double s) {
            Eigen::VectorXd q = flat;
            q[a] += s * h;
            return psi.value(unflatten(q, psi.dim));
        };
        acc += (-at(2) + 16.0 * at(1) - 30.0 * c + 16.0 * at(-1) - at(-2)) / (12.0 * h * h);
    }
    return acc;
}

cplx apply_point_hamiltonian(const PointHamiltonian& H, const BoundState& psi, const PointTuple& w) {
    const cplx v = psi.value(w);
    const cplx lap = psi.laplacian ? psi.laplacian(w) : laplacian_by_differences(psi, w, 1e-3 * psi.gaussian_scale);
    cplx out = -lap + H.potential(w) * v;
    if (H.vector_potential.size() > 0) {
        const Eigen::VectorXcd g = psi.gradient(w);
        out += cplx(0.0, 2.0) * H.vector_potential.cast<cplx>().dot(g) + H.vector_potential.squaredNorm() * v;
    }
    return out;
}

BoundState grid_backed(StateKind kind, const GridWavefunction& f, int dim, double energy) {
    if (dim < 1 || f.geometry.dims() % dim != 0) throw DimensionError("grid axes are not a multiple of the dimension");
    BoundState s;
    s.kind = kind;
    s.dim = dim;
    s.particles = f.geometry.dims() / dim;
    s.energy = energy;
    s.grid = f;
    s.preferred = Quadrature::Grid;
    s.norm_squared = f.norm() * f.norm();
    auto interp = std::make_shared<TrigInterpolant>(f);
    std::vector<std::shared_ptr<TrigInterpolant>> d;
    for (int a = 0; a < f.geometry.dims(); ++a)
        d.push_back(std::make_shared<TrigInterpolant>(
            GridWavefunction(f.geometry, cplx(0.0, 1.0) * spectral_D(f.geometry, f.values, a))));
    s.value = [interp](const PointTuple& w) { return (*interp)(flatten(w)); };
    s.gradient = [d](const PointTuple& w) {
        const Eigen::VectorXd flat = flatten(w);
        Eigen::VectorXcd g(Eigen::Index(d.size()));
        for (std::size_t a = 0; a < d.size(); ++a) g[Eigen::Index(a)] = (*d[a])(flat);
        return g;
    };
    double width = 0.0;
    for (double L : f.geometry.half_width) width = std::max(width, L);
    s.gaussian_scale = width;
    return s;
}

}  // namespace

PointHamiltonian PointHamiltonian::coulomb(const MoleculeConfig& config) {
    if (config.dim != 3) throw UnsupportedError("Coulomb Hamiltonian needs d = 3");
    PointHamiltonian H;
    H.dim = 3;
    H.particles = config.electrons;
    const auto nuclei = config.nuclei;
    const double e0 = config.nuclear_repulsion;
    H.potential = [nuclei, e0](const PointTuple& x) {
        double v = e0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            for (const auto& n : nuclei) v -= n.charge / (x[i] - n.position).norm();
            for (std::size_t j = i + 1; j < x.size(); ++j) v += 1.0 / (x[i] - x[j]).norm();
        }
        return v;
    };
    H.singular_distance = [nuclei](const PointTuple& x) {
        double d = INFINITY;
        for (std::size_t i = 0; i < x.size(); ++i) {
            for (const auto& n : nuclei) d = std::min(d, (x[i] - n.position).norm());
            for (std::size_t j = i + 1; j < x.size(); ++j) d = std::min(d, (x[i] - x[j]).norm());
        }
        return d;
    };
    return H;
}

Eigen::VectorXcd GridHamiltonian::apply(const Eigen::VectorXcd& v) const {
    Eigen::VectorXcd out = spectral_negative_laplacian(grid, v);
    for (std::size_t i = 0; i < grid.size(); ++i) out[Eigen::Index(i)] += potential(grid.point(i)) * v[Eigen::Index(i)];
    return out;
}

const char* to_string(StateKind k) {
    switch (k) {
        case StateKind::Hydrogenic: return "hydrogenic";
        case StateKind::Gaussian: return "gaussian";
        case StateKind::Harmonium: return "harmonium";
        case StateKind::GridEigen: return "grid-eigen";
        case StateKind::File: return "file";
    }
    return "unknown";
}

const char* to_string(Quadrature q) {
    switch (q) {
        case Quadrature::Exact: return "exact";
        case Quadrature::Analytic: return "analytic";
        case Quadrature::GaussHermite: return "gauss-hermite";
        case Quadrature::Grid: return "grid";
        case Quadrature::QuasiMonteCarlo: return "quasi-monte-carlo";
    }
    return "unknown";
}

bool GaussianParameters::separable(int dim) const {
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            if (i / dim != j / dim && A(i, j) != 0.0) return false;
    return true;
}

void BoundState::require_certified() const {
    if (!certified())
        throw DomainError(std::string("state '") + to_string(kind) + "' has no residual certificate below " +
                          std::to_string(residual_tolerance));
}

double residual_check(const PointHamiltonian& H, const BoundState& psi, const ResidualOptions& opts) {
    if (H.dim != psi.dim || H.particles != psi.particles) throw DimensionError("Hamiltonian and state geometry differ");
    const int n = psi.dim * psi.particles;
    const int uniforms = n + (n % 2);
    if (uniforms > int(kPrimes.size())) throw UnsupportedError("too many coordinates for residual sampling");
    Eigen::VectorXd center = Eigen::VectorXd::Zero(n);
    if (psi.gaussian) center = psi.gaussian->center;
    const double s = psi.gaussian_scale;
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> unif;
    std::vector<double> shift(static_cast<std::size_t>(uniforms));
    for (auto& v : shift) v = unif(rng);
    const double log_norm = -0.5 * n * std::log(2.0 * M_PI * s * s);
    double num = 0.0, den = 0.0;
    for (int i = 1; i <= opts.samples; ++i) {
        Eigen::VectorXd w(n);
        for (int k = 0; k < uniforms; k += 2) {
            double u1 = radical_inverse(std::uint64_t(i), kPrimes[std::size_t(k)]) + shift[std::size_t(k)];
            double u2 = radical_inverse(std::uint64_t(i), kPrimes[std::size_t(k + 1)]) + shift[std::size_t(k + 1)];
            u1 -= std::floor(u1);
            u2 -= std::floor(u2);
            u1 = std::max(u1, 1e-300);
            const double r = std::sqrt(-2.0 * std::log(u1));
            w[k] = r * std::cos(2.0 * M_PI * u2);
            if (k + 1 < n) w[k + 1] = r * std::sin(2.0 * M_PI * u2);
        }
        const double log_p = log_norm - 0.5 * w.squaredNorm();
        w = center + s * w;
        const PointTuple x = unflatten(w, psi.dim);
        const double inv_p = std::exp(-log_p);
        den += std::norm(psi.value(x)) * inv_p;
        if (H.singular_distance && H.singular_distance(x) < opts.exclusion_radius) continue;
        num += std::norm(apply_point_hamiltonian(H, psi, x) - psi.energy * psi.value(x)) * inv_p;
    }
    if (!(den > 0.0)) throw QuadratureError("state norm estimate vanished");
    return std::sqrt(num / den);
}

double residual_check(const GridHamiltonian& H, const BoundState& psi) {
    if (!psi.grid) throw DimensionError("grid residual needs a grid state");
    const auto& g = psi.grid->geometry;
    if (g.points != H.grid.points || g.half_width != H.grid.half_width)
        throw DimensionError("Hamiltonian and state grids differ");
    const Eigen::VectorXcd& v = psi.grid->values;
    return (H.apply(v) - psi.energy * v).norm() / v.norm();
}

BoundState hydrogenic_state(double Z, int dim) {
    if (dim != 3) throw UnsupportedError("hydrogenic state needs d = 3");
    if (!(Z > 0.0)) throw DomainError("nuclear charge must be positive");
    const double a = Z / 2.0;
    BoundState s;
    s.kind = StateKind::Hydrogenic;
    s.dim = 3;
    s.particles = 1;
    s.energy = -Z * Z / 4.0;
    s.value = [a](const PointTuple& w) { return cplx(std::exp(-a * w[0].norm()), 0.0); };
    s.gradient = [a](const PointTuple& w) {
        const double r = w[0].norm();
        Eigen::VectorXcd g = Eigen::VectorXcd::Zero(3);
        if (r > 0.0) g = (-a * std::exp(-a * r) / r * w[0]).cast<cplx>();
        return g;
    };
    s.laplacian = [a](const PointTuple& w) {
        const double r = w[0].norm();
        return cplx((a * a - 2.0 * a / r) * std::exp(-a * r), 0.0);
    };
    s.norm_squared = 8.0 * M_PI / (Z * Z * Z);
    s.preferred = Quadrature::Exact;
    s.gaussian_scale = 2.0 / Z;
    s.point_hamiltonian =
        PointHamiltonian::coulomb(MoleculeConfig::make(3, 1, 1, {Nucleus{Point::Zero(3), Z}}));
    s.residual_tolerance = 1e-12;
    s.residual = residual_check(*s.point_hamiltonian, s);
    return s;
}

BoundState harmonium_state(double spring, int dim) {
    if (dim != 3) throw UnsupportedError("harmonium state needs d = 3");
    if (std::abs(spring - 1.0 / 64.0) > 1e-15)
        throw UnsupportedError("harmonium is closed-form here only for spring constant 1/64");
    BoundState s;
    s.kind = StateKind::Harmonium;
    s.dim = 3;
    s.particles = 2;
    s.energy = 1.0;
    s.value = [](const PointTuple& w) {
        const double r = (w[0] - w[1]).norm();
        return cplx((1.0 + r / 4.0) * std::exp(-(w[0].squaredNorm() + w[1].squaredNorm()) / 16.0), 0.0);
    };
    s.gradient = [](const PointTuple& w) {
        const Eigen::Vector3d d = w[0] - w[1];
        const double r = d.norm();
        const double G = std::exp(-(w[0].squaredNorm() + w[1].squaredNorm()) / 16.0);
        const Eigen::Vector3d u = r > 0.0 ? Eigen::Vector3d(d / (4.0 * r)) : Eigen::Vector3d::Zero();
        Eigen::VectorXcd g(6);
        g.head(3) = (G * (u - (1.0 + r / 4.0) * w[0] / 8.0)).cast<cplx>();
        g.tail(3) = (G * (-u - (1.0 + r / 4.0) * w[1] / 8.0)).cast<cplx>();
        return g;
    };
    s.laplacian = [](const PointTuple& w) {
        const double r = (w[0] - w[1]).norm();
        const double X2 = w[0].squaredNorm() + w[1].squaredNorm();
        const double G = std::exp(-X2 / 16.0);
        return cplx(G * (1.0 / r - r / 16.0 + (1.0 + r / 4.0) * (-0.75 + X2 / 64.0)), 0.0);
    };
    const double g3 = std::pow(8.0 * M_PI, 1.5);
    s.norm_squared = g3 * (2.5 * g3 + 64.0 * std::sqrt(2.0) * M_PI);
    s.preferred = Quadrature::GaussHermite;
    s.gaussian_scale = 2.0;
    PointHamiltonian H;
    H.dim = 3;
    H.particles = 2;
    H.potential = [spring](const PointTuple& w) {
        return spring * (w[0].squaredNorm() + w[1].squaredNorm()) + 1.0 / (w[0] - w[1]).norm();
    };
    H.singular_distance = [](const PointTuple& w) { return (w[0] - w[1]).norm(); };
    s.point_hamiltonian = H;
    s.residual = residual_check(H, s);
    return s;
}

BoundState gaussian_state(int dim, int particles, GaussianParameters p) {
    if (dim < 1 || particles < 1) throw DimensionError("gaussian state needs positive dimension and particles");
    const int n = dim * particles;
    if (p.A.rows() != n || p.A.cols() != n || p.center.size() != n)
        throw DimensionError("gaussian parameters have the wrong size");
    if (p.momentum.size() == 0) p.momentum = Eigen::VectorXd::Zero(n);
    if (p.momentum.size() != n) throw DimensionError("gaussian momentum has the wrong size");
    if (!p.A.isApprox(p.A.transpose(), 1e-14)) throw DomainError("gaussian matrix must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p.A);
    if (!(es.eigenvalues().minCoeff() > 0.0)) throw DomainError("gaussian matrix must be positive definite");

    BoundState s;
    s.kind = StateKind::Gaussian;
    s.dim = dim;
    s.particles = particles;
    s.energy = p.A.trace();
    auto prm = std::make_shared<const GaussianParameters>(p);
    s.value = [prm](const PointTuple& w) {
        const Eigen::VectorXd v = flatten(w) - prm->center;
        return std::exp(cplx(-0.5 * v.dot(prm->A * v), prm->momentum.dot(flatten(w))));
    };
    auto value = s.value;
    s.gradient = [prm, value](const PointTuple& w) {
        const Eigen::VectorXd v = flatten(w) - prm->center;
        Eigen::VectorXcd g = (-prm->A * v).cast<cplx>() + cplx(0.0, 1.0) * prm->momentum.cast<cplx>();
        return Eigen::VectorXcd(g * value(w));
    };
    s.laplacian = [prm, value](const PointTuple& w) {
        const Eigen::VectorXd v = flatten(w) - prm->center;
        const Eigen::VectorXcd g = (-prm->A * v).cast<cplx>() + cplx(0.0, 1.0) * prm->momentum.cast<cplx>();
        return (g.transpose() * g)(0, 0) * value(w) - prm->A.trace() * value(w);
    };
    s.norm_squared = std::pow(M_PI, 0.5 * n) / std::sqrt(p.A.determinant());
    s.preferred = p.separable(dim) ? Quadrature::Analytic : Quadrature::GaussHermite;
    s.gaussian_scale = 1.0 / std::sqrt(2.0 * es.eigenvalues().minCoeff());
    s.gaussian = p;
    PointHamiltonian H;
    H.dim = dim;
    H.particles = particles;
    const Eigen::MatrixXd A2 = p.A * p.A;
    H.potential = [A2, prm](const PointTuple& w) {
        const Eigen::VectorXd v = flatten(w) - prm->center;
        return v.dot(A2 * v);
    };
    H.vector_potential = p.momentum;
    s.point_hamiltonian = H;
    s.residual = residual_check(H, s);
    return s;
}

BoundState separable_gaussian_state(int dim, const PointTuple& centers, const std::vector<double>& widths,
                                    const PointTuple& momenta) {
    const std::size_t N = centers.size();
    if (N == 0 || widths.size() != N || momenta.size() != N) throw DimensionError("factor lists differ in length");
    require_dimension(centers, dim, "gaussian centers");
    require_dimension(momenta, dim, "gaussian momenta");
    GaussianParameters p;
    const int n = dim * int(N);
    p.A = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < N; ++i) {
        if (!(widths[i] > 0.0)) throw DomainError("gaussian widths must be positive");
        p.A.block(int(i) * dim, int(i) * dim, dim, dim) = Eigen::MatrixXd::Identity(dim, dim) / (widths[i] * widths[i]);
    }
    p.center = flatten(centers);
    p.momentum = flatten(momenta);
    return gaussian_state(dim, int(N), p);
}

EigenPair lowest_eigenpair(const std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)>& H, Eigen::Index n,
                           const EigenOptions& opts) {
    if (n < 1) throw DimensionError("eigenproblem needs a positive size");
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> normal;
    Eigen::VectorXcd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = cplx(normal(rng), normal(rng));
    v.normalize();
    const int m = int(std::min<Eigen::Index>(opts.krylov, n));
    EigenPair best;
    for (int restart = 0; restart < opts.max_restarts; ++restart) {
        Eigen::MatrixXcd V(n, m);
        std::vector<double> alpha, beta;
        V.col(0) = v;
        int size = 0;
        for (int j = 0; j < m; ++j) {
            Eigen::VectorXcd w = H(V.col(j));
            alpha.push_back(V.col(j).dot(w).real());
            size = j + 1;
            // Two passes of classical Gram-Schmidt against the whole basis.
            for (int pass = 0; pass < 2; ++pass)
                for (int i = 0; i <= j; ++i) w -= V.col(i).dot(w) * V.col(i);
            const double b = w.norm();
            if (j + 1 == m || b < 1e-13 * std::max(1.0, std::abs(alpha.back()))) break;
            beta.push_back(b);
            V.col(j + 1) = w / b;
        }
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(size, size);
        for (int i = 0; i < size; ++i) {
            T(i, i) = alpha[std::size_t(i)];
            if (i + 1 < size) T(i, i + 1) = T(i + 1, i) = beta[std::size_t(i)];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        const Eigen::VectorXd s = es.eigenvectors().col(0);
        Eigen::VectorXcd x = V.leftCols(size) * s.cast<cplx>();
        x.normalize();
        const Eigen::VectorXcd hx = H(x);
        const double theta = x.dot(hx).real();
        best.value = theta;
        best.vector = x;
        best.residual = (hx - theta * x).norm();
        best.iterations = restart + 1;
        if (best.residual <= opts.tolerance) return best;
        v = x;
    }
    throw ConvergenceError("Lanczos did not reach residual " + std::to_string(opts.tolerance) + " (last " +
                           std::to_string(best.residual) + ")");
}

BoundState grid_eigensolve(const GridHamiltonian& H, const EigenOptions& opts) {
    H.grid.validate();
    if (H.dim < 1 || H.grid.dims() % H.dim != 0) throw DimensionError("grid axes are not a multiple of the dimension");
    const std::size_t N = H.grid.size();
    Eigen::VectorXd V(static_cast<Eigen::Index>(N));
    for (std::size_t i = 0; i < N; ++i) V[Eigen::Index(i)] = H.potential(H.grid.point(i));
    auto apply = [&](const Eigen::VectorXcd& v) -> Eigen::VectorXcd {
        Eigen::VectorXcd out = spectral_negative_laplacian(H.grid, v);
        out.array() += V.cast<cplx>().array() * v.array();
        return out;
    };
    EigenPair ep = lowest_eigenpair(apply, Eigen::Index(N), opts);
    // Fix the global phase so the largest entry is real and positive.
    Eigen::Index imax = 0;
    ep.vector.cwiseAbs().maxCoeff(&imax);
    ep.vector *= std::abs(ep.vector[imax]) / ep.vector[imax];
    GridWavefunction f(H.grid, ep.vector);
    f.values /= f.norm();
    BoundState s = grid_backed(StateKind::GridEigen, f, H.dim, ep.value);
    s.grid_hamiltonian = H;
    s.residual_tolerance = opts.tolerance;
    s.residual = residual_check(H, s);
    return s;
}

BoundState file_state(const std::string& path, int dim, double energy, const std::optional<GridHamiltonian>& H,
                      double tolerance) {
    BoundState s = grid_backed(StateKind::File, read_wavefunction(path), dim, energy);
    s.residual_tolerance = tolerance;
    if (H) {
        s.grid_hamiltonian = *H;
        s.residual = residual_check(*H, s);
    }
    return s;
}

BoundState with_energy(const BoundState& psi, double energy) {
    BoundState s = psi;
    s.energy = energy;
    s.residual = NAN;
    if (s.grid_hamiltonian) s.residual = residual_check(*s.grid_hamiltonian, s);
    else if (s.point_hamiltonian) s.residual = residual_check(*s.point_hamiltonian, s);
    return s;
}

}  // namespace twistcalc
