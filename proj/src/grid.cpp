#include "twistcalc/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "twistcalc/errors.hpp"

namespace twistcalc {

GridGeometry GridGeometry::uniform(int dims, int n, double half_width) {
    GridGeometry g;
    g.points.assign(std::size_t(dims), n);
    g.half_width.assign(std::size_t(dims), half_width);
    g.validate();
    return g;
}

void GridGeometry::validate() const {
    if (points.empty() || points.size() != half_width.size())
        throw DimensionError("grid needs matching, non-empty axis sizes and half widths");
    for (std::size_t a = 0; a < points.size(); ++a) {
        if (points[a] < 2) throw DimensionError("grid axes need at least two points");
        if (!(half_width[a] > 0.0)) throw DimensionError("grid half widths must be positive");
    }
}

std::size_t GridGeometry::size() const {
    std::size_t n = 1;
    for (int p : points) n *= std::size_t(p);
    return n;
}

double GridGeometry::spacing(int axis) const {
    return 2.0 * half_width[std::size_t(axis)] / points[std::size_t(axis)];
}

double GridGeometry::coordinate(int axis, int i) const {
    return -half_width[std::size_t(axis)] + i * spacing(axis);
}

std::vector<int> GridGeometry::index(std::size_t flat) const {
    std::vector<int> idx(points.size());
    for (int a = dims() - 1; a >= 0; --a) {
        idx[std::size_t(a)] = int(flat % std::size_t(points[std::size_t(a)]));
        flat /= std::size_t(points[std::size_t(a)]);
    }
    return idx;
}

Eigen::VectorXd GridGeometry::point(std::size_t flat) const {
    const auto idx = index(flat);
    Eigen::VectorXd w(dims());
    for (int a = 0; a < dims(); ++a) w[a] = coordinate(a, idx[std::size_t(a)]);
    return w;
}

double GridGeometry::cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < dims(); ++a) v *= spacing(a);
    return v;
}

double GridGeometry::wavenumber(int axis, int i) const {
    const int n = points[std::size_t(axis)];
    const int s = i < (n + 1) / 2 ? i : i - n;
    return M_PI / half_width[std::size_t(axis)] * s;
}

bool GridGeometry::is_nyquist(int axis, int i) const {
    const int n = points[std::size_t(axis)];
    return n % 2 == 0 && i == n / 2;
}

Eigen::VectorXd GridGeometry::wavevector(std::size_t flat) const {
    const auto idx = index(flat);
    Eigen::VectorXd k(dims());
    for (int a = 0; a < dims(); ++a) k[a] = wavenumber(a, idx[std::size_t(a)]);
    return k;
}

bool GridGeometry::contains_ball(const Eigen::VectorXd& center, double radius, int first_axis) const {
    for (Eigen::Index c = 0; c < center.size(); ++c) {
        const int a = first_axis + int(c);
        if (a >= dims()) return false;
        const double L = half_width[std::size_t(a)];
        if (!(center[c] - radius > -L && center[c] + radius < L - spacing(a))) return false;
    }
    return true;
}

GridWavefunction::GridWavefunction(GridGeometry g) : geometry(std::move(g)) {
    geometry.validate();
    values = Eigen::VectorXcd::Zero(Eigen::Index(geometry.size()));
}

GridWavefunction::GridWavefunction(GridGeometry g, Eigen::VectorXcd v)
    : geometry(std::move(g)), values(std::move(v)) {
    geometry.validate();
    if (values.size() != Eigen::Index(geometry.size())) throw DimensionError("grid values have wrong length");
}

GridWavefunction GridWavefunction::sample(const GridGeometry& g,
                                          const std::function<cplx(const Eigen::VectorXd&)>& f) {
    GridWavefunction out(g);
    for (std::size_t i = 0; i < g.size(); ++i) out.values[Eigen::Index(i)] = f(g.point(i));
    return out;
}

double GridWavefunction::norm() const { return std::sqrt(values.squaredNorm() * geometry.cell_volume()); }

cplx GridWavefunction::inner(const GridWavefunction& other) const {
    if (other.values.size() != values.size()) throw DimensionError("inner product of mismatched grids");
    return values.dot(other.values) * geometry.cell_volume();
}

namespace {

Eigen::VectorXcd run_fft(const GridGeometry& g, const Eigen::VectorXcd& v, int sign) {
    if (v.size() != Eigen::Index(g.size())) throw DimensionError("grid values have wrong length");
    Eigen::VectorXcd out = v;
    auto* data = reinterpret_cast<fftw_complex*>(out.data());
    fftw_plan plan = fftw_plan_dft(g.dims(), g.points.data(), data, data, sign, FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    return out;
}

}  // namespace

Eigen::VectorXcd fft_forward(const GridGeometry& g, const Eigen::VectorXcd& v) {
    return run_fft(g, v, FFTW_FORWARD);
}

Eigen::VectorXcd fft_inverse(const GridGeometry& g, const Eigen::VectorXcd& v) {
    return run_fft(g, v, FFTW_BACKWARD) / double(g.size());
}

Eigen::VectorXcd apply_multiplier(const GridGeometry& g, const Eigen::VectorXcd& v,
                                  const std::function<cplx(const Eigen::VectorXd&)>& m) {
    Eigen::VectorXcd hat = fft_forward(g, v);
    for (std::size_t i = 0; i < g.size(); ++i) hat[Eigen::Index(i)] *= m(g.wavevector(i));
    return fft_inverse(g, hat);
}

Eigen::VectorXcd spectral_D(const GridGeometry& g, const Eigen::VectorXcd& v, int axis) {
    Eigen::VectorXcd hat = fft_forward(g, v);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const int ia = g.index(i)[std::size_t(axis)];
        hat[Eigen::Index(i)] *= g.is_nyquist(axis, ia) ? 0.0 : g.wavenumber(axis, ia);
    }
    return fft_inverse(g, hat);
}

Eigen::VectorXcd spectral_negative_laplacian(const GridGeometry& g, const Eigen::VectorXcd& v) {
    return apply_multiplier(g, v, [](const Eigen::VectorXd& k) { return cplx(k.squaredNorm(), 0.0); });
}

TrigInterpolant::TrigInterpolant(const GridWavefunction& f)
    : geometry_(f.geometry), coeff_(fft_forward(f.geometry, f.values) / double(f.geometry.size())) {}

cplx TrigInterpolant::operator()(const Eigen::VectorXd& w) const {
    const int dims = geometry_.dims();
    if (w.size() != dims) throw DimensionError("interpolation point has wrong dimension");
    // Contract the coefficient tensor one axis at a time, last axis first.
    Eigen::VectorXcd cur = coeff_;
    for (int a = dims - 1; a >= 0; --a) {
        const int n = geometry_.points[std::size_t(a)];
        const double s = w[a] + geometry_.half_width[std::size_t(a)];
        Eigen::VectorXcd phase(n);
        for (int i = 0; i < n; ++i) {
            const double k = geometry_.wavenumber(a, i);
            phase[i] = geometry_.is_nyquist(a, i) ? cplx(std::cos(k * s), 0.0)
                                                  : cplx(std::cos(k * s), std::sin(k * s));
        }
        const Eigen::Index outer = cur.size() / n;
        Eigen::VectorXcd next(outer);
        for (Eigen::Index o = 0; o < outer; ++o) next[o] = (cur.segment(o * n, n).array() * phase.array()).sum();
        cur = next;
    }
    return cur[0];
}

double band_fraction(const GridWavefunction& f, double threshold) {
    const auto& g = f.geometry;
    const Eigen::VectorXcd hat = fft_forward(g, f.values);
    const double total = hat.squaredNorm();
    if (total == 0.0) return 0.0;
    // Energy sorted by the largest per-axis fraction of Nyquist.
    std::vector<std::pair<double, double>> frac;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto idx = g.index(i);
        double b = 0.0;
        for (int a = 0; a < g.dims(); ++a) {
            const double kn = M_PI / g.spacing(a);
            b = std::max(b, std::abs(g.wavenumber(a, idx[std::size_t(a)])) / kn);
        }
        frac.emplace_back(b, std::norm(hat[Eigen::Index(i)]));
    }
    std::sort(frac.begin(), frac.end());
    double tail = 0.0;
    for (std::size_t i = frac.size(); i-- > 0;) {
        tail += frac[i].second;
        if (tail > threshold * total) return frac[i].first;
    }
    return 0.0;
}

namespace {

const char kMagic[8] = {'T', 'W', 'G', 'R', 'I', 'D', 'W', 'F'};

template <class T>
void put(std::ostream& os, T v) {
    auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(v);
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    os.write(bytes.data(), sizeof(T));
}

template <class T>
T get(std::istream& is) {
    std::array<char, sizeof(T)> bytes;
    if (!is.read(bytes.data(), sizeof(T))) throw ConfigError("wavefunction file truncated");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
}

}  // namespace

void write_wavefunction(const std::string& path, const GridWavefunction& f) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot open " + path + " for writing");
    os.write(kMagic, 8);
    put<std::uint64_t>(os, 1);
    put<std::uint64_t>(os, std::uint64_t(f.geometry.dims()));
    for (int p : f.geometry.points) put<std::uint64_t>(os, std::uint64_t(p));
    for (double L : f.geometry.half_width) put<double>(os, L);
    for (Eigen::Index i = 0; i < f.values.size(); ++i) {
        put<double>(os, f.values[i].real());
        put<double>(os, f.values[i].imag());
    }
    if (!os) throw ConfigError("failed writing " + path);
}

GridWavefunction read_wavefunction(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open wavefunction file " + path);
    char magic[8];
    if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
        throw ConfigError("not a grid wavefunction file: " + path);
    if (get<std::uint64_t>(is) != 1) throw ConfigError("unsupported wavefunction file version");
    const auto dims = get<std::uint64_t>(is);
    if (dims == 0 || dims > 12) throw ConfigError("implausible axis count in " + path);
    GridGeometry g;
    for (std::uint64_t a = 0; a < dims; ++a) {
        const auto n = get<std::uint64_t>(is);
        if (n < 2 || n > (1u << 20)) throw ConfigError("implausible axis size in " + path);
        g.points.push_back(int(n));
    }
    for (std::uint64_t a = 0; a < dims; ++a) g.half_width.push_back(get<double>(is));
    g.validate();
    Eigen::VectorXcd v(Eigen::Index(g.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double re = get<double>(is);
        const double im = get<double>(is);
        v[i] = cplx(re, im);
    }
    return GridWavefunction(g, v);
}

}  // namespace twistcalc
