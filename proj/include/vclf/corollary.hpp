#pragma once

#include <optional>

#include "vclf/report.hpp"
#include "vclf/synthesis.hpp"
#include "vclf/vclf_spec.hpp"

namespace vclf {

/// Data for the componentwise-quadratic certificate pipeline: the system
/// xdot_i = f_i(x) + g_i(x) u together with gains on the |x_i| scale, a
/// componentwise decay profile Q and the escape bookkeeping functions.
struct CorollaryConfig {
    ControlAffineSystem sys;       // disturbance-free
    GainMatrix gamma_tilde{1};     // n x n, arguments |x_s|
    Scalar1D Q;                    // continuous, positive away from 0
    ScalarField eta;
    ScalarField W;
    Scalar1D delta;
    Scalar1D Kfun;
    double epsilon = 1.0;
    std::vector<double> kvec;      // local linear law u = kvec'x
    ScalarField kbar;              // outer law used on {eta >= 0}
    double local_radius = 0.5;     // ball where the linear-law premise holds
};

/// Canonical translation onto the quadratic components V_i = x_i^2/2:
/// gains are conjugated through s -> sqrt(2 s), the decrease margin becomes
/// rho(s) = 2 s min(Q(sqrt(2s)), Q(-sqrt(2s))), and the sandwich bounds are
/// s^2/(2n) and s^2/2. The translated gain matrix is re-checked.
VRCLFSpec build_corollary_spec(const CorollaryConfig& cfg);

/// Sampled verification of the componentwise conditions. Condition names:
///   coupling_ratio   opposing-pair ratio bound
///   zero_gain_decay  decay where the input coefficient vanishes
///   eta_exchange     eta decrease under the component-induced control
///   w_exchange       W growth bound under the component-induced control
///   floor_margin     lower-bounded input suffices (P2/P3)
///   ceiling_margin   interval input suffices (P3)
///   local_premise    linear law decreases components near the origin
///   kbar_eta, kbar_w outer-law inequalities on {eta >= 0}
ConditionReport check_corollary_conditions(const CorollaryConfig& cfg,
                                           const SampleParams& params);

/// Worked three-state instance: a chain with one shaped coupling term
///   xdot1 = -x1 + x2, xdot2 = -x2 + g(x) u, xdot3 = x1^2 + u,
/// with g(x) = x2 x3 (|x2| - gamma(|x3|)) (gamma(|x3|) - lambda |x2|).
/// The returned config carries the gain selections, a constant Q and the
/// local linear law u = -p x3 with p picked from the admissible window.
struct Example43 {
    ControlAffineSystem sys;
    CorollaryConfig cfg;
    double p = 0.0;        // local law gain
    double r = 0.0;        // ball radius where the window was certified
    double lipschitz = 0.0;
};

Example43 example43_instance(double lambda, double sigma, const MonotoneFn& gamma,
                             double q_scale = 0.5);

/// Single-function certificate probe for the same system: searches the
/// constraint manifold q x3 = -p x2 g(x) for a state where the classical
/// quadratic-form condition fails. Returns the witness when found.
struct Condition49Witness {
    std::vector<double> x;
    double constraint_residual = 0.0;
    double lhs = 0.0;  // x1^2 - x1 x2 + p x2^2
    double rhs = 0.0;  // q x1^2 x3
};

std::optional<Condition49Witness> find_condition49_witness(const MonotoneFn& gamma,
                                                           double lambda, double p,
                                                           double q);

/// Ball-constrained variant of the worked example with
/// eta = -a + (x1^2 + x2^2)/2 and W = 1 + |x|^2/2; g must not depend on x3.
struct Example44Params {
    double a = 0.1;
    double c = 0.05;       // constant delta
    double epsilon = 0.05;
    double R = 1.0;        // slab bound, needs 2(a + epsilon) <= R
    double lambda = 0.5;
    double sigma = 0.5;
    MonotoneFn gamma = MonotoneFn::identity();
    Scalar1D q = Scalar1D::constant(0.25);  // profile bounding Q from above
};

/// Checks the slab-restricted coupling condition plus the escape-region
/// inequalities of the ball-constrained instance. Also reports how many
/// antecedent hits fell outside the slab (the relaxation the ball buys).
ConditionReport example44_conditions(const ScalarField& g, const Example44Params& params,
                                     const SampleParams& sampling);

/// Grid search over small (a, c, epsilon) triples; returns the first set
/// for which every sampled condition passes.
std::optional<Example44Params> example44_find_constants(const ScalarField& g,
                                                        const Example44Params& base,
                                                        const SampleParams& sampling);

}  // namespace vclf
