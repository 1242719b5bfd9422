#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace vclf {

/// One strict inequality f + g*u < 0 in the scalar decision variable u.
struct AffineConstraint {
    double f = 0.0;
    double g = 0.0;
    std::string label;  // which function generated the constraint
};

/// Admissible control sets.
enum class ControlCase : std::uint8_t {
    AllReals,      // U = R
    LowerBounded,  // U = [-a, +inf)
    Interval,      // U = [-a, b]
};

struct ControlSet {
    ControlCase kind = ControlCase::AllReals;
    double a = 0.0;  // lower bound magnitude, a >= 0
    double b = 0.0;  // upper bound, b >= 0 (Interval only)

    static ControlSet all_reals() { return {ControlCase::AllReals, 0.0, 0.0}; }
    static ControlSet lower_bounded(double a);
    static ControlSet interval(double a, double b);

    bool contains(double u) const;
    double lower() const;  // -a or -inf
    double upper() const;  // b or +inf
};

/// Which structural requirement ruled feasibility out. Each tag
/// corresponds to one of the four if-and-only-if conditions of the
/// interval solver: a constraint with no control authority, an opposed
/// pair squeezing the interval shut, or a bound of the control set
/// cutting the interval off from below or above.
enum class InfeasibleCause : std::uint8_t {
    ZeroCoefficient,  // g = 0 with f >= 0
    OpposedPair,      // g_i > 0 > g_j with crossing ratios
    FloorCut,         // g > 0 with f - a*g >= 0 (lower-bounded sets)
    CeilingCut,       // g < 0 with f + b*g >= 0 (interval sets)
};

const char* to_string(InfeasibleCause c);

struct Infeasibility {
    InfeasibleCause cause;
    int witness_i = -1;
    int witness_j = -1;  // second index for OpposedPair, else -1
};

/// Open interval of admissible controls; endpoints may be infinite.
struct FeasibleInterval {
    double lower;  // open
    double upper;  // open
    double width() const { return upper - lower; }
};

struct FeasibilityResult {
    bool feasible = false;
    FeasibleInterval interval{0.0, 0.0};
    Infeasibility infeasibility{InfeasibleCause::ZeroCoefficient, -1, -1};
};

/// Threshold below which a control coefficient counts as structurally
/// zero: exact zeros come from symbolic gradients, near-zeros from
/// numeric ones.
inline bool is_zero_coefficient(double g, double f) {
    return std::abs(g) <= 1e-12 * std::max(1.0, std::abs(f));
}

/// Decides whether some u in the control set satisfies every strict
/// inequality, returning the full open interval of solutions or the
/// single violated condition with its witness indices.
FeasibilityResult feasible_interval(std::span<const AffineConstraint> constraints,
                                    const ControlSet& set);

/// Margin by which selected controls stay inside the open interval.
inline constexpr double kSelectionMargin = 1e-6;

/// Min-norm selection: the point of the margin-shrunken closed interval
/// nearest to zero.
double select_u(const FeasibleInterval& interval, const ControlSet& set);

}  // namespace vclf
