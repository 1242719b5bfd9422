#pragma once

#include <array>
#include <optional>
#include <vector>

#include "vclf/expr.hpp"
#include "vclf/feasibility.hpp"

namespace vclf {

/// Control-affine dynamics xdot = f(d, x) + g(x) u with a scalar input
/// constrained to U and disturbances ranging over a box D.
struct ControlAffineSystem {
    int n = 0;  // state dimension
    int l = 0;  // disturbance dimension
    std::vector<ScalarField> f;  // n components, may reference d
    std::vector<ScalarField> g;  // n components, state only
    std::vector<std::array<double, 2>> dbox;  // l closed intervals
    ControlSet input = ControlSet::all_reals();

    void validate() const;
    std::vector<double> dbox_center() const;
    /// xdot written into out; u applied through g.
    void rhs(std::span<const double> x, std::span<const double> d, double u,
             std::span<double> out) const;
};

/// Directional derivatives of a scalar field along the drift and input
/// vector fields at one point.
struct LieDerivatives {
    double along_f = 0.0;
    double along_g = 0.0;
};

LieDerivatives lie_derivatives(const ControlAffineSystem& sys, const ScalarField& phi,
                               std::span<const double> x, std::span<const double> d);

struct DisturbanceMax {
    double value = 0.0;
    std::vector<double> argmax;  // disturbance attaining the reported value
    bool conservative = false;   // grid fallback was used (non-affine dependence)
};

/// Number of grid points per disturbance axis in the fallback maximizer.
inline constexpr int kDistGridPointsPerAxis = 11;

/// Maximum of the drift Lie derivative of phi over the disturbance box:
/// exact vertex enumeration when every drift component is affine in d,
/// dense grid search (flagged conservative) otherwise.
DisturbanceMax max_lie_over_disturbances(const ControlAffineSystem& sys,
                                         const ScalarField& phi,
                                         std::span<const double> x);

}  // namespace vclf
