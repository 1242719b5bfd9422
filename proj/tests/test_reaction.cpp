#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "vclf/reaction.hpp"

using namespace vclf;

namespace {

// original-coordinate two-species network: S' = [-1, 1], rate k c1 c2^2
ReactionNetwork raw_two_species(double k, double c1f, double c2f, double dmax) {
    ReactionNetwork net;
    net.n = 2;
    net.m = 1;
    net.S = {{-1.0}, {1.0}};
    const auto c1 = ScalarField::state(0);
    const auto c2 = ScalarField::state(1);
    net.rates = {ScalarField::constant(k) * c1 * c2 * c2};
    net.c_f = {c1f, c2f};
    net.D_max = dmax;
    return net;
}

double eq_residual(const ReactionNetwork& net, double k, std::span<const double> c) {
    // c1f = c1 + k c1 c2^2 and c2f = c2 - k c1 c2^2
    const double r = k * c[0] * c[1] * c[1];
    return std::max(std::abs(net.c_f[0] - c[0] - r), std::abs(net.c_f[1] - c[1] + r));
}

}  // namespace

TEST_CASE("left null space and conservation pairs") {
    const std::vector<std::vector<double>> S{{-1.0}, {1.0}};
    auto basis = find_conservation(S);
    REQUIRE(basis.size() == 1);
    CHECK(std::abs(basis[0].p[0]) == doctest::Approx(std::abs(basis[0].p[1])));
    CHECK(verify_conservation_pair(S, basis[0]));

    CHECK(verify_conservation_pair(S, {{-1.0, -1.0}, {0.0}}));
    CHECK(verify_conservation_pair(S, {{0.0, 1.0}, {1.0}}));
    // S'p must match q and stay nonnegative
    CHECK_FALSE(verify_conservation_pair(S, {{0.0, -1.0}, {-1.0}}));
    CHECK_FALSE(verify_conservation_pair(S, {{0.0, 1.0}, {0.0}}));

    // invertible square stoichiometry has no mass-type pairs
    CHECK(find_conservation({{1.0, 0.0}, {0.0, 1.0}}).empty());
}

TEST_CASE("scalar reduction: unique and triple equilibria") {
    SUBCASE("below the product threshold") {
        auto roots = scalar_equilibrium_roots(1.0, 1.5, 0.5);
        REQUIRE(roots.size() == 1);
        const double y = roots[0];
        CHECK(y > 0.5);
        CHECK(y < 2.0);
        CHECK(std::abs(y - 1.0 * (2.0 - y) * y * y - 0.5) <= 1e-12);
    }
    SUBCASE("above the product threshold with a genuinely folded cubic") {
        auto roots = scalar_equilibrium_roots(1.0, 3.95, 0.05);
        REQUIRE(roots.size() == 3);
        for (double y : roots)
            CHECK(std::abs(y - (4.0 - y) * y * y - 0.05) <= 1e-10);
    }
    SUBCASE("the product rule alone does not decide the count") {
        // kM = 4 > 3, yet the local maximum of the reduced cubic sits below
        // the product feed, leaving a single crossing. A dense scan confirms.
        auto roots = scalar_equilibrium_roots(1.0, 3.9, 0.1);
        CHECK(roots.size() == 1);
        int sign_changes = 0;
        auto q = [](double y) { return y - (4.0 - y) * y * y - 0.1; };
        double prev = q(0.1);
        for (int i = 1; i <= 2000000; ++i) {
            const double cur = q(0.1 + (4.0 - 0.1) * i / 2000000.0);
            if ((prev < 0.0) != (cur < 0.0)) ++sign_changes;
            prev = cur;
        }
        CHECK(sign_changes == 1);
    }
}

TEST_CASE("equilibrium reports") {
    SUBCASE("unique regime") {
        auto net = raw_two_species(1.0, 1.5, 0.5, 10.0);
        auto rep = equilibria(net, 1.0);
        CHECK(rep.method == "bisection");
        REQUIRE(rep.roots.size() == 1);
        CHECK(rep.residuals[0] <= 1e-10);
        CHECK(eq_residual(net, 1.0, rep.roots[0]) <= 1e-10);
        CHECK(rep.threshold_prediction == 1);
        CHECK(rep.threshold_consistent);
    }
    SUBCASE("triple regime") {
        auto net = raw_two_species(1.0, 3.95, 0.05, 10.0);
        auto rep = equilibria(net, 1.0);
        REQUIRE(rep.roots.size() == 3);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(rep.residuals[i] <= 1e-10);
            CHECK(eq_residual(net, 1.0, rep.roots[i]) <= 1e-10);
        }
        CHECK(rep.threshold_prediction == 3);
        CHECK(rep.threshold_consistent);
    }
    SUBCASE("threshold disagreement is flagged, not failed") {
        auto net = raw_two_species(1.0, 3.9, 0.1, 10.0);
        auto rep = equilibria(net, 1.0);
        CHECK(rep.roots.size() == 1);
        CHECK(rep.residuals[0] <= 1e-10);
        CHECK(rep.threshold_prediction == 3);
        CHECK_FALSE(rep.threshold_consistent);
    }
    SUBCASE("zero reaction keeps the feed as the only equilibrium") {
        ReactionNetwork net;
        net.n = 2;
        net.m = 1;
        net.S = {{-1.0}, {1.0}};
        net.rates = {ScalarField::constant(0.0)};
        net.c_f = {1.25, 0.75};
        net.D_max = 5.0;
        auto rep = equilibria(net, 1.0);
        CHECK(rep.method == "newton");
        REQUIRE(rep.roots.size() == 1);
        CHECK(rep.roots[0][0] == doctest::Approx(1.25).epsilon(1e-9));
        CHECK(rep.roots[0][1] == doctest::Approx(0.75).epsilon(1e-9));
    }
}

TEST_CASE("log transform of the normalized network") {
    const double theta = 1.0, mu = 0.5;
    auto [net, cons] = example51_network(theta, mu, 10.0);
    auto sys = log_transform(net);
    CHECK(sys.input.kind == ControlCase::Interval);
    CHECK(sys.input.a == doctest::Approx(1.0));
    CHECK(sys.input.b == doctest::Approx(9.0));

    // the origin is the equilibrium
    const std::vector<double> zero(2, 0.0);
    for (int i = 0; i < 2; ++i) CHECK(std::abs(sys.f[static_cast<std::size_t>(i)].eval(zero)) <= 1e-12);

    // input fields follow the feed: (1+theta) e^{-x1} - 1, (1-mu theta) e^{-x2} - 1
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ux(-1.5, 1.5);
    for (int t = 0; t < 200; ++t) {
        const double x[] = {ux(rng), ux(rng)};
        CHECK(sys.g[0].eval(x) ==
              doctest::Approx((1.0 + theta) * std::exp(-x[0]) - 1.0).epsilon(1e-12));
        CHECK(sys.g[1].eval(x) ==
              doctest::Approx((1.0 - mu * theta) * std::exp(-x[1]) - 1.0).epsilon(1e-12));

        // u = 0 recovers the unit-dilution chemistry: xdot = cdot / c
        const double c[] = {std::exp(x[0]), std::exp(x[1])};
        const double rate = theta * c[0] * c[1] * c[1];
        const double cdot1 = (net.c_f[0] - c[0]) - rate;
        const double cdot2 = (net.c_f[1] - c[1]) + mu * rate;
        double out[2];
        sys.rhs(x, {}, 0.0, out);
        CHECK(out[0] == doctest::Approx(cdot1 / c[0]).epsilon(1e-10));
        CHECK(out[1] == doctest::Approx(cdot2 / c[1]).epsilon(1e-10));
    }

    SUBCASE("unnormalized networks are rejected") {
        auto raw = raw_two_species(1.0, 3.9, 0.1, 10.0);
        CHECK_THROWS(log_transform(raw));
    }
}

TEST_CASE("normalization moves an equilibrium to the unit point") {
    auto raw = raw_two_species(1.0, 3.95, 0.05, 10.0);
    ConservationData cons;
    cons.pairs = {{{-1.0, -1.0}, {0.0}}};
    cons.b = 4.0;
    cons.R = 1.0;
    cons.gfun = MonotoneFn::power(1.0, 2.0);

    auto eq = equilibria(raw, 1.0);
    REQUIRE(eq.roots.size() == 3);
    const auto& target = eq.roots[1];
    auto [net, ncons] = normalize_network(raw, cons, target, 1.0);
    CHECK_NOTHROW(log_transform(net));
    // the rescaled pair still annihilates the rescaled stoichiometry
    CHECK(verify_conservation_pair(net.S, ncons.pairs[0]));
}

TEST_CASE("hypotheses verify for the worked instance") {
    auto [net, cons] = example51_network(1.0, 0.5, 10.0);
    SampleParams params;
    params.box = {{0.05, 5.0}, {0.05, 5.0}};
    params.samples = 20000;
    auto rep = verify_hypotheses(net, cons, params);
    CHECK(rep.passed());
    CHECK(rep.find("r2_growth_bound")->antecedent_hits > 0);
    CHECK(rep.find("r3_rate_domination")->antecedent_hits > 0);
}

TEST_CASE("dilution bounds") {
    auto [lo1, lo2] = dmax_bound(1.0, 0.5);
    CHECK(lo1 == doctest::Approx(2.25));
    CHECK(lo2 == doctest::Approx(9.75));

    // frozen from the closed form: (1+mu)^2 and (1+mu)(theta(1+mu)^2+1)/(mu theta)
    auto [b1, b2] = dmax_bound(2.0, 0.25);
    CHECK(b1 == doctest::Approx(1.5625));
    CHECK(b2 == doctest::Approx(10.3125));

    // vanishing product feed sends the second bound to infinity
    CHECK(dmax_bound(1.0, 1e-9).second > 1e8);

    CHECK_THROWS(dmax_bound(1.0, 1.0));   // boundary mu = 1/theta rejected
    CHECK_THROWS(dmax_bound(-1.0, 0.5));
}

TEST_CASE("certificate spec over the log coordinates") {
    const double theta = 1.0, mu = 0.5, eps = 0.1;
    auto [net, cons] = example51_network(theta, mu, 10.0);
    auto cfg = example51_config(theta, mu, eps);
    auto spec = build_thm52_spec(net, cons, cfg);
    auto sys = log_transform(net);

    // eta(x) = max(mu e^{x1} + e^{x2} - (1+mu), 0)^2 - eps
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> ux(-1.0, 1.2);
    for (int t = 0; t < 300; ++t) {
        const double x[] = {ux(rng), ux(rng)};
        const double defect =
            std::max(mu * std::exp(x[0]) + std::exp(x[1]) - (1.0 + mu), 0.0);
        CHECK(spec.eta.eval(x) == doctest::Approx(defect * defect - eps).epsilon(1e-10));
    }

    // W at the equilibrium point: 1 + eps + (-eps) + n
    const double zero[] = {0.0, 0.0};
    CHECK(spec.W.eval(zero) == doctest::Approx(3.0));

    // the input channel drains the defect: sum eta_xi g_i = -2(eps + eta) when eta >= 0
    int hits = 0;
    while (hits < 100) {
        const double x[] = {ux(rng), ux(rng)};
        if (spec.eta.eval(x) < 0.0) continue;
        const auto lie = lie_derivatives(sys, spec.eta, x, {});
        CHECK(lie.along_g == doctest::Approx(-2.0 * (eps + spec.eta.eval(x))).epsilon(1e-9));
        ++hits;
    }

    CHECK_NOTHROW(spec.validate(sys));
}

TEST_CASE("worked-instance conditions pass and the starved bound fails") {
    const double theta = 1.0, mu = 0.5;
    auto [net, cons] = example51_network(theta, mu, 10.0);
    auto cfg = example51_config(theta, mu, 0.1);

    SampleParams params;
    params.box = {{0.05, 5.0}, {0.05, 5.0}};
    params.samples = 20000;
    params.seed = 123;

    auto rep = check_thm52_conditions(net, cons, cfg, params);
    CHECK(rep.passed());
    CHECK(rep.find("window_decay")->antecedent_hits > 0);
    CHECK(rep.find("outer_pushback")->antecedent_hits > 0);
    CHECK(rep.find("shell_budget")->antecedent_hits > 0);
    CHECK(rep.find("feed_boundary")->antecedent_hits > 0);
    CHECK(rep.find("local_law")->antecedent_hits > 0);

    SUBCASE("a unit dilution cap cannot push back the outer region") {
        auto [net1, cons1] = example51_network(theta, mu, 1.0000001);
        auto rep1 = check_thm52_conditions(net1, cons1, cfg, params);
        CHECK_FALSE(rep1.find("outer_pushback")->passed());
    }
}

TEST_CASE("mu at the boundary of the feed ratio is rejected") {
    CHECK_THROWS(example51_network(2.0, 0.5, 10.0));
    CHECK_THROWS(example51_config(2.0, 0.5));
}

TEST_CASE("epsilon default rule stays in its clamp range") {
    auto [net, cons] = example51_network(1.0, 0.5, 10.0);
    const double eps = default_epsilon(net, cons, {{0.05, 5.0}, {0.05, 5.0}});
    CHECK(eps >= 1e-4);
    CHECK(eps <= 0.5);
}
