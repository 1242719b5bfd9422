#pragma once

#include <memory>
#include <stdexcept>
#include <string>

#include "vclf/vclf_spec.hpp"

namespace vclf {

/// Smooth nondecreasing transition: exactly 0 below 0, exactly 1 above 1.
double bump(double s);

/// Regions of the pointwise feedback dispatch. On the closed seams the
/// blend weight reaches 0 or 1, so neighbouring rules agree there.
enum class FeedbackRegion : std::uint8_t {
    Origin,         // x = 0, u = 0
    LocalCore,      // |x| < r: local law
    LocalBlend,     // r <= |x| <= 2r: local law blended with the decrease law
    Decrease,       // eta < eps/5 (outside the 2r ball)
    DecreaseBlend,  // eps/5 <= eta <= 2eps/5: decrease blended with transition
    Transition,     // 2eps/5 < eta < 3eps/5
    EscapeBlend,    // 3eps/5 <= eta <= 4eps/5: transition blended with escape
    Escape,         // eta > 4eps/5
};

const char* to_string(FeedbackRegion r);

/// A sub-controller's feasibility system came back empty: some certificate
/// property fails at the witness state.
class SynthesisError : public std::runtime_error {
public:
    SynthesisError(std::string region, std::vector<double> x, Infeasibility inf);
    const std::string& region() const { return region_; }
    const std::vector<double>& witness() const { return witness_; }
    const Infeasibility& infeasibility() const { return inf_; }

private:
    std::string region_;
    std::vector<double> witness_;
    Infeasibility inf_;
};

/// Margin schedule: sub-controllers solve with 3/4 of the decrease margins
/// (and 3/2 of the growth allowance); trajectory certificates check the
/// halves, so selection slack never eats the certified margin.
inline constexpr double kConstructionMarginFactor = 0.75;
inline constexpr double kGrowthMarginFactor = 1.5;

/// Control that pushes eta down and caps W growth; valid on {eta > 0}.
double escape_controller(const ControlAffineSystem& sys, const VRCLFSpec& spec,
                         std::span<const double> x);

/// Control enforcing decrease of every active Lyapunov component; valid on
/// {eta < eps, x != 0}. With an empty active set the min-norm element of U
/// is returned.
double decrease_controller(const ControlAffineSystem& sys, const VRCLFSpec& spec,
                           std::span<const double> x);

/// Control satisfying both requirement sets at once; valid on {0 < eta < eps}.
double transition_controller(const ControlAffineSystem& sys, const VRCLFSpec& spec,
                             std::span<const double> x);

/// Pointwise stabilizing feedback assembled from the sub-controllers, the
/// local law and bump blending. Immutable and reentrant after synthesis.
///
/// The selection is min-norm per point rather than a smooth partition-of-
/// unity patchwork, so continuity across active-set changes is NOT claimed;
/// what the toolkit certifies is the pointwise decrease inequalities and
/// their trajectory monitors.
class FeedbackLaw {
public:
    struct Evaluation {
        double u = 0.0;
        FeedbackRegion region = FeedbackRegion::Origin;
        double blend_weight = 0.0;  // meaningful in blend regions
    };

    double eval(std::span<const double> x) const { return evaluate(x).u; }
    Evaluation evaluate(std::span<const double> x) const;

    const ControlAffineSystem& system() const { return *sys_; }
    const VRCLFSpec& spec() const { return *spec_; }

private:
    friend FeedbackLaw synthesize(ControlAffineSystem sys, VRCLFSpec spec);
    std::shared_ptr<const ControlAffineSystem> sys_;
    std::shared_ptr<const VRCLFSpec> spec_;
};

/// Validates the spec against the system and returns the feedback law.
/// The gain matrix is regularized here if any off-diagonal entry is the
/// structural zero.
FeedbackLaw synthesize(ControlAffineSystem sys, VRCLFSpec spec);

}  // namespace vclf
