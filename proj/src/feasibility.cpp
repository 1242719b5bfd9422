#include "vclf/feasibility.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace vclf {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

const char* to_string(InfeasibleCause c) {
    switch (c) {
        case InfeasibleCause::ZeroCoefficient: return "zero_coefficient";
        case InfeasibleCause::OpposedPair: return "opposed_pair";
        case InfeasibleCause::FloorCut: return "floor_cut";
        case InfeasibleCause::CeilingCut: return "ceiling_cut";
    }
    return "?";
}

ControlSet ControlSet::lower_bounded(double a) {
    if (!(a >= 0.0)) throw std::invalid_argument("ControlSet: a must be >= 0");
    return {ControlCase::LowerBounded, a, 0.0};
}

ControlSet ControlSet::interval(double a, double b) {
    if (!(a >= 0.0) || !(b >= 0.0))
        throw std::invalid_argument("ControlSet: a, b must be >= 0");
    if (!(a + b > 0.0))
        throw std::invalid_argument("ControlSet: interval requires a + b > 0");
    return {ControlCase::Interval, a, b};
}

bool ControlSet::contains(double u) const {
    switch (kind) {
        case ControlCase::AllReals: return true;
        case ControlCase::LowerBounded: return u >= -a;
        case ControlCase::Interval: return u >= -a && u <= b;
    }
    return false;
}

double ControlSet::lower() const {
    return kind == ControlCase::AllReals ? -kInf : -a;
}

double ControlSet::upper() const {
    return kind == ControlCase::Interval ? b : kInf;
}

FeasibilityResult feasible_interval(std::span<const AffineConstraint> constraints,
                                    const ControlSet& set) {
    if (constraints.empty())
        throw std::invalid_argument("feasible_interval: empty constraint list");

    FeasibilityResult res;
    double lo = -kInf, hi = kInf;
    int lo_idx = -1, hi_idx = -1;

    for (int i = 0; i < static_cast<int>(constraints.size()); ++i) {
        const auto& c = constraints[i];
        if (!std::isfinite(c.f) || !std::isfinite(c.g))
            throw std::invalid_argument("feasible_interval: non-finite constraint");
        if (is_zero_coefficient(c.g, c.f)) {
            if (c.f >= 0.0) {
                res.infeasibility = {InfeasibleCause::ZeroCoefficient, i, -1};
                return res;
            }
        } else if (c.g > 0.0) {
            const double bound = -c.f / c.g;  // u < bound
            if (bound < hi) { hi = bound; hi_idx = i; }
        } else {
            const double bound = -c.f / c.g;  // u > bound
            if (bound > lo) { lo = bound; lo_idx = i; }
        }
    }

    if (lo_idx >= 0 && hi_idx >= 0 && !(lo < hi)) {
        res.infeasibility = {InfeasibleCause::OpposedPair, hi_idx, lo_idx};
        return res;
    }
    if (set.kind != ControlCase::AllReals && hi_idx >= 0) {
        const auto& c = constraints[hi_idx];
        if (c.f - set.a * c.g >= 0.0) {  // tightest u < bound already cut by -a
            res.infeasibility = {InfeasibleCause::FloorCut, hi_idx, -1};
            return res;
        }
    }
    if (set.kind == ControlCase::Interval && lo_idx >= 0) {
        const auto& c = constraints[lo_idx];
        if (c.f + set.b * c.g >= 0.0) {
            res.infeasibility = {InfeasibleCause::CeilingCut, lo_idx, -1};
            return res;
        }
    }

    res.feasible = true;
    res.interval = {std::max(lo, set.lower()), std::min(hi, set.upper())};
    return res;
}

double select_u(const FeasibleInterval& interval, const ControlSet& set) {
    const double lo = interval.lower, hi = interval.upper;
    if (!(lo < hi)) throw std::invalid_argument("select_u: empty interval");

    const double width = hi - lo;  // +inf for half-lines
    const double margin =
        std::isfinite(width) ? std::min(kSelectionMargin, 0.25 * width) : kSelectionMargin;

    const double shrunk_lo = std::isfinite(lo) ? lo + margin : -kInf;
    const double shrunk_hi = std::isfinite(hi) ? hi - margin : kInf;

    double u = 0.0;
    if (u < shrunk_lo) u = shrunk_lo;
    if (u > shrunk_hi) u = shrunk_hi;
    if (!set.contains(u))
        throw std::logic_error("select_u: selection escaped the control set");
    return u;
}

}  // namespace vclf
