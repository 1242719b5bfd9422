#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "vclf/feasibility.hpp"

using namespace vclf;
using namespace vclf::testing;

TEST_CASE("no control authority, negative offsets: whole line") {
    std::vector<AffineConstraint> cs{{-1.0, 0.0, "v"}};
    auto res = feasible_interval(cs, ControlSet::all_reals());
    REQUIRE(res.feasible);
    CHECK(std::isinf(res.interval.lower));
    CHECK(std::isinf(res.interval.upper));
}

TEST_CASE("opposed pair squeezing the interval shut") {
    std::vector<AffineConstraint> cs{{1.0, 1.0, ""}, {1.0, -1.0, ""}};
    auto res = feasible_interval(cs, ControlSet::all_reals());
    REQUIRE_FALSE(res.feasible);
    CHECK(res.infeasibility.cause == InfeasibleCause::OpposedPair);
    CHECK(res.infeasibility.witness_i >= 0);
    CHECK(res.infeasibility.witness_j >= 0);
    // grid oracle agrees: no feasible u in [-10, 10]
    CHECK_FALSE(grid_feasible_u(cs, -10.0, 10.0, 1e-3).has_value());
}

TEST_CASE("symmetric pair opens (-2, 2)") {
    std::vector<AffineConstraint> cs{{-2.0, 1.0, ""}, {-2.0, -1.0, ""}};
    auto res = feasible_interval(cs, ControlSet::all_reals());
    REQUIRE(res.feasible);
    CHECK(res.interval.lower == doctest::Approx(-2.0));
    CHECK(res.interval.upper == doctest::Approx(2.0));
    CHECK(select_u(res.interval, ControlSet::all_reals()) == 0.0);
}

TEST_CASE("floor cut on an interval control set") {
    std::vector<AffineConstraint> cs{{1.0, 2.0, ""}};
    auto res = feasible_interval(cs, ControlSet::interval(0.25, 10.0));
    REQUIRE_FALSE(res.feasible);
    CHECK(res.infeasibility.cause == InfeasibleCause::FloorCut);
    CHECK(res.infeasibility.witness_i == 0);
    CHECK_FALSE(grid_feasible_u(cs, -0.25, 10.0, 1e-3).has_value());
}

TEST_CASE("ceiling cut on an interval control set") {
    std::vector<AffineConstraint> cs{{1.0, -0.05, ""}};  // needs u > 20
    auto res = feasible_interval(cs, ControlSet::interval(1.0, 2.0));
    REQUIRE_FALSE(res.feasible);
    CHECK(res.infeasibility.cause == InfeasibleCause::CeilingCut);
}

TEST_CASE("zero coefficient with nonnegative offset") {
    std::vector<AffineConstraint> cs{{0.5, 0.0, "w"}};
    auto res = feasible_interval(cs, ControlSet::all_reals());
    REQUIRE_FALSE(res.feasible);
    CHECK(res.infeasibility.cause == InfeasibleCause::ZeroCoefficient);
    CHECK(res.infeasibility.witness_i == 0);
}

TEST_CASE("near-zero coefficients classify as zero") {
    std::vector<AffineConstraint> cs{{-1.0, 1e-15, ""}};
    auto res = feasible_interval(cs, ControlSet::all_reals());
    REQUIRE(res.feasible);
    CHECK(std::isinf(res.interval.lower));
    CHECK(std::isinf(res.interval.upper));
}

TEST_CASE("selection rules") {
    CHECK(select_u({-2.0, 2.0}, ControlSet::all_reals()) == 0.0);
    CHECK(select_u({1.0, std::numeric_limits<double>::infinity()}, ControlSet::all_reals()) ==
          doctest::Approx(1.0 + 1e-6));
    CHECK(select_u({-std::numeric_limits<double>::infinity(), -3.0}, ControlSet::all_reals()) ==
          doctest::Approx(-3.0 - 1e-6));
    // narrow interval shrinks by a quarter width instead
    CHECK(select_u({1.0, 1.000001}, ControlSet::all_reals()) ==
          doctest::Approx(1.00000025).epsilon(1e-12));
    CHECK_THROWS(select_u({2.0, 1.0}, ControlSet::all_reals()));
}

TEST_CASE("errors") {
    std::vector<AffineConstraint> none;
    CHECK_THROWS(feasible_interval(none, ControlSet::all_reals()));
    std::vector<AffineConstraint> bad{{std::nan(""), 1.0, ""}};
    CHECK_THROWS(feasible_interval(bad, ControlSet::all_reals()));
    CHECK_THROWS(ControlSet::interval(0.0, 0.0));
}

TEST_CASE("oracle equivalence on random instances") {
    std::mt19937_64 rng(314159);
    for (int t = 0; t < 2000; ++t) {
        auto inst = random_feasibility_instance(rng);
        auto res = feasible_interval(inst.constraints, inst.set);
        CHECK(verdicts_agree(res, inst));
        if (res.feasible) {
            // soundness of the selection: strictly inside every constraint and the set
            const double u = select_u(res.interval, inst.set);
            CHECK(inst.set.contains(u));
            for (const auto& c : inst.constraints) CHECK(c.f + c.g * u < 0.0);
        } else {
            // exactly one cause with its witness
            CHECK(res.infeasibility.witness_i >= 0);
            if (res.infeasibility.cause == InfeasibleCause::OpposedPair)
                CHECK(res.infeasibility.witness_j >= 0);
            else
                CHECK(res.infeasibility.witness_j == -1);
        }
    }
}

TEST_CASE("constructively feasible instances are reported feasible") {
    // When a feasible u is planted, all four conditions hold, so the solver
    // must report feasibility (the only-if direction of the case analysis).
    std::mt19937_64 rng(271828);
    std::uniform_real_distribution<double> ug(-5.0, 5.0);
    std::uniform_real_distribution<double> umargin(0.01, 2.0);
    std::uniform_int_distribution<int> um(1, 6);
    for (int t = 0; t < 2000; ++t) {
        auto inst = random_feasibility_instance(rng);
        // plant u strictly inside the control set
        double u_lo = inst.set.lower(), u_hi = inst.set.upper();
        if (std::isinf(u_lo)) u_lo = -5.0;
        if (std::isinf(u_hi)) u_hi = 5.0;
        double u_star = 0.5 * (u_lo + u_hi);
        if (u_hi - u_lo > 1e-2) {
            std::uniform_real_distribution<double> uu(u_lo + 1e-3, u_hi - 1e-3);
            u_star = uu(rng);
        }
        inst.constraints.clear();
        const int m = um(rng);
        for (int i = 0; i < m; ++i) {
            const double g = ug(rng);
            inst.constraints.push_back({-g * u_star - umargin(rng), g, ""});
        }
        auto res = feasible_interval(inst.constraints, inst.set);
        REQUIRE(res.feasible);
        CHECK(res.interval.lower < u_star);
        CHECK(res.interval.upper > u_star);
    }
}
