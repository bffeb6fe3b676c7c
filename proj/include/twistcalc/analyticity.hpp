#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <string>
#include <vector>

namespace twistcalc {

struct AnalyticityOptions {
    int max_order = 10;      // at most 14
    int nodes = 64;          // Chebyshev points per fit
    double chop = 1e-14;     // coefficients below chop * max are dropped
    double stability = 0.05;  // allowed relative change of A per radius halving
    double jump = 1e-3;      // relative one-sided first-derivative jump that flags a cusp
};

// Bounds |g^(n)(0)| <= A^{n+1} w_n for n <= max_order, with weights
//   multi-index factorial   w_n = n!
//   factorial               w_n = n!
//   power                   w_n = (1 + n)^n
// (in one scan variable the first two coincide).
enum class Characterization { MultiFactorial = 0, Factorial = 1, Power = 2 };
const char* to_string(Characterization c);

struct AnalyticityReport {
    Eigen::VectorXd center;
    Eigen::VectorXd direction;  // unit
    double radius = 0.0;
    int max_order = 0;
    std::array<double, 3> radii{};              // radius, radius/2, radius/4
    std::vector<double> derivatives;            // g^(n)(0) from the largest radius
    std::array<std::array<double, 3>, 3> fits{};  // fits[characterization][radius]
    double growth_rate = 0.0;                   // max_n (|g^(n)| / |g|)^{1/n}
    bool stable = false;                        // A changes by <= stability per halving
    bool resolved = false;                      // Chebyshev tails reach the chop level
    double left_slope = 0.0;                    // one-sided first derivatives at the centre
    double right_slope = 0.0;
    bool jump = false;
    bool cusp = false;
    std::array<bool, 3> verdicts{};  // one per characterization, identical by construction
    bool pass = false;
    double fitted(Characterization c) const { return fits[std::size_t(c)][0]; }
};

// Scans g(t) = f(center + t u), |t| <= radius, u = direction / |direction|.
AnalyticityReport analyticity_scan(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& center, const Eigen::VectorXd& direction,
                                   double radius, const AnalyticityOptions& opts = {});

// Chebyshev tools on [-1, 1].
Eigen::VectorXd chebyshev_coefficients(const Eigen::VectorXd& values_at_lobatto_nodes);
Eigen::VectorXd chebyshev_derivative(const Eigen::VectorXd& coeffs);
double chebyshev_evaluate(const Eigen::VectorXd& coeffs, double x);

struct LineSample {
    double t;
    double value;
    double fit;
};
// Plot data: samples of g and of its Chebyshev fit on the largest radius.
std::vector<LineSample> line_scan(const std::function<double(const Eigen::VectorXd&)>& f,
                                  const Eigen::VectorXd& center, const Eigen::VectorXd& direction, double radius,
                                  int samples = 201, int nodes = 64);

}  // namespace twistcalc
