#pragma once

#include <functional>

#include "twistcalc/grid.hpp"
#include "twistcalc/twist.hpp"

namespace twistcalc {

// The grid covers the internal variables: p particles of dimension d, axes ordered particle-major.
// Every cutoff ball B(x0_j, r0) must sit strictly inside the box for every particle block.
void validate_internal_grid(const TwistMap& t, const GridGeometry& g);

// (U_x theta)(y) = |Det d_y F(x;y)|^{1/2} theta(F(x;y)), theta o F by trigonometric interpolation.
GridWavefunction apply_U(const TwistMap& t, const PointTuple& x, const GridWavefunction& theta);
// (U_x^{-1} theta)(y) = |Det d_y F^{-1}(x;y)|^{1/2} theta(F^{-1}(x;y)).
GridWavefunction apply_U_inverse(const TwistMap& t, const PointTuple& x, const GridWavefunction& theta);

// | ||U_x theta|| - ||theta|| | / ||theta||
double unitarity_defect(const TwistMap& t, const PointTuple& x, const GridWavefunction& theta);

// theta(x; .) sampled on the internal grid, for external derivatives by differencing in x.
using ExternalFamily = std::function<GridWavefunction(const PointTuple& x)>;

enum class ConjugationIdentity {
    ForwardExternal,  // U^{-1} D_x U = D_x + J1(F) D_y + J2(F)
    InverseExternal,  // U D_x U^{-1} = D_x + J1(F^{-1}) D_y + J2(F^{-1})
    ForwardInternal,  // U^{-1} D_y U = J3(F) D_y + J4(F)
    InverseInternal,  // U D_y U^{-1} = J3(F^{-1}) D_y + J4(F^{-1})
};

const char* to_string(ConjugationIdentity id);

struct ConjugationResult {
    double residual = 0.0;        // relative L2 discrepancy summed over components
    double reference_norm = 0.0;  // L2 norm of the right-hand side
};

// External derivatives use fourth-order central differences with step step_fraction * delta0.
ConjugationResult conjugation_residual(const TwistMap& t, const PointTuple& x, ConjugationIdentity id,
                                       const ExternalFamily& theta, double step_fraction = 1e-3);

// U^{-1} (D_x + J1(F^{-1}) D_y + J2(F^{-1})) U theta against D_x theta.
ConjugationResult double_conjugation_residual(const TwistMap& t, const PointTuple& x,
                                              const ExternalFamily& theta, double step_fraction = 1e-3);

}  // namespace twistcalc
