// Test-only oracles, independent of the implementation paths they check.
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include "vclf/feasibility.hpp"

namespace vclf::testing {

/// Brute-force search for a strictly feasible control on an equispaced grid.
inline std::optional<double> grid_feasible_u(const std::vector<AffineConstraint>& cs,
                                             double lo, double hi, double step) {
    for (double u = lo; u <= hi + 0.5 * step; u += step) {
        bool ok = true;
        for (const auto& c : cs)
            if (!(c.f + c.g * u < 0.0)) { ok = false; break; }
        if (ok) return u;
    }
    return std::nullopt;
}

struct RandomInstance {
    std::vector<AffineConstraint> constraints;
    ControlSet set;
    double grid_lo = 0.0, grid_hi = 0.0;
};

/// Instances with up to six constraints, coefficients uniform in [-5, 5],
/// and a control set drawn from the three admissible cases.
inline RandomInstance random_feasibility_instance(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> um(1, 6);
    std::uniform_real_distribution<double> ufg(-5.0, 5.0);
    std::uniform_real_distribution<double> uab(0.0, 5.0);
    std::uniform_int_distribution<int> ucase(0, 2);

    RandomInstance inst;
    const int m = um(rng);
    for (int i = 0; i < m; ++i) inst.constraints.push_back({ufg(rng), ufg(rng), ""});
    switch (ucase(rng)) {
        case 0:
            inst.set = ControlSet::all_reals();
            inst.grid_lo = -10.0;
            inst.grid_hi = 10.0;
            break;
        case 1: {
            const double a = uab(rng);
            inst.set = ControlSet::lower_bounded(a);
            inst.grid_lo = -a;
            inst.grid_hi = std::max(10.0, -a + 20.0);
            break;
        }
        default: {
            double a = uab(rng), b = uab(rng);
            if (a + b <= 0.0) b = 1.0;
            inst.set = ControlSet::interval(a, b);
            inst.grid_lo = -a;
            inst.grid_hi = b;
            break;
        }
    }
    return inst;
}

/// Reconciles the analytic verdict with the grid oracle, allowing the stated
/// boundary slack: intervals thinner than the slack (or clipped away by the
/// grid range) may legitimately be missed by the grid, and a grid hit against
/// an analytic "infeasible" only counts when it clears every constraint by
/// more than the slack.
inline bool verdicts_agree(const FeasibilityResult& res, const RandomInstance& inst,
                           double step = 1e-3, double slack = 2e-3) {
    const auto grid_u = grid_feasible_u(inst.constraints, inst.grid_lo, inst.grid_hi, step);
    if (res.feasible) {
        const double lo = std::max(res.interval.lower, inst.grid_lo);
        const double hi = std::min(res.interval.upper, inst.grid_hi);
        if (hi - lo <= slack) return true;  // too thin for the grid to resolve
        return grid_u.has_value();
    }
    if (!grid_u) return true;
    double margin = 0.0;
    for (const auto& c : inst.constraints)
        margin = std::max(margin, c.f + c.g * *grid_u);
    return margin > -slack;  // borderline grid hit
}

}  // namespace vclf::testing
