#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <string>
#include <vector>

namespace twistcalc {

using cplx = std::complex<double>;

// Periodic tensor grid on prod_a [-L_a, L_a) with n_a points per axis, row-major (last axis fastest).
struct GridGeometry {
    std::vector<int> points;
    std::vector<double> half_width;

    static GridGeometry uniform(int dims, int n, double half_width);

    int dims() const { return int(points.size()); }
    std::size_t size() const;
    double spacing(int axis) const;
    double coordinate(int axis, int i) const;
    Eigen::VectorXd point(std::size_t flat) const;
    std::vector<int> index(std::size_t flat) const;
    double cell_volume() const;
    // Angular wavenumber of mode i on an axis, in FFT order; the Nyquist mode reads as -n/2.
    double wavenumber(int axis, int i) const;
    bool is_nyquist(int axis, int i) const;
    Eigen::VectorXd wavevector(std::size_t flat) const;
    // Ball strictly inside the box in every axis, for the block of axes starting at first_axis.
    bool contains_ball(const Eigen::VectorXd& center, double radius, int first_axis) const;
    void validate() const;
};

class GridWavefunction {
public:
    GridWavefunction() = default;
    explicit GridWavefunction(GridGeometry g);
    GridWavefunction(GridGeometry g, Eigen::VectorXcd v);

    static GridWavefunction sample(const GridGeometry& g,
                                   const std::function<cplx(const Eigen::VectorXd&)>& f);

    GridGeometry geometry;
    Eigen::VectorXcd values;

    double norm() const;
    // <this, other> with the conjugate on this, times the cell volume.
    cplx inner(const GridWavefunction& other) const;
};

// Unnormalised forward DFT over every axis; the inverse carries the 1/N.
Eigen::VectorXcd fft_forward(const GridGeometry& g, const Eigen::VectorXcd& v);
Eigen::VectorXcd fft_inverse(const GridGeometry& g, const Eigen::VectorXcd& v);

// Fourier multiplier m(kappa).
Eigen::VectorXcd apply_multiplier(const GridGeometry& g, const Eigen::VectorXcd& v,
                                  const std::function<cplx(const Eigen::VectorXd&)>& m);

// D_a = -i d/dw_a; the Nyquist mode is dropped.
Eigen::VectorXcd spectral_D(const GridGeometry& g, const Eigen::VectorXcd& v, int axis);
// -Laplacian spectrally.
Eigen::VectorXcd spectral_negative_laplacian(const GridGeometry& g, const Eigen::VectorXcd& v);

// Trigonometric interpolant of grid samples, evaluable anywhere; Nyquist terms enter as cosines.
class TrigInterpolant {
public:
    explicit TrigInterpolant(const GridWavefunction& f);
    cplx operator()(const Eigen::VectorXd& w) const;
    const GridGeometry& geometry() const { return geometry_; }

private:
    GridGeometry geometry_;
    Eigen::VectorXcd coeff_;
};

// Smallest fraction b such that spectral energy beyond b times the Nyquist wavenumber (per axis)
// is below threshold relative to the total.
double band_fraction(const GridWavefunction& f, double threshold = 1e-16);

// Binary layout, little-endian: 8-byte magic "TWGRIDWF", u64 version (1), u64 axis count A,
// A x u64 axis sizes, A x f64 half widths, then size() complex values as interleaved f64 (re, im).
void write_wavefunction(const std::string& path, const GridWavefunction& f);
GridWavefunction read_wavefunction(const std::string& path);

}  // namespace twistcalc
