#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "vclf/corollary.hpp"

using namespace vclf;

namespace {

CorollaryConfig tiny_config(int n) {
    CorollaryConfig cfg;
    cfg.sys.n = n;
    cfg.sys.l = 0;
    for (int i = 0; i < n; ++i) {
        cfg.sys.f.push_back(-ScalarField::state(i));
        cfg.sys.g.push_back(ScalarField::constant(1.0));
    }
    cfg.sys.input = ControlSet::all_reals();
    cfg.gamma_tilde = GainMatrix(n);
    cfg.Q = Scalar1D::constant(0.25);
    cfg.eta = ScalarField::constant(-1.0);
    ScalarField w = ScalarField::constant(1.0);
    for (int i = 0; i < n; ++i)
        w = w + ScalarField::constant(0.5) * ScalarField::state(i) * ScalarField::state(i);
    cfg.W = w;
    cfg.delta = Scalar1D::constant(1.0);
    cfg.Kfun = Scalar1D::constant(1.0);
    cfg.epsilon = 1.0;
    cfg.kvec.assign(static_cast<std::size_t>(n), 0.0);
    cfg.kbar = ScalarField::constant(0.0);
    cfg.local_radius = 0.5;
    return cfg;
}

}  // namespace

TEST_CASE("gain translation onto the quadratic scale") {
    auto cfg = tiny_config(2);
    cfg.gamma_tilde.set(0, 1, MonotoneFn::linear(2.0));
    cfg.gamma_tilde.set(1, 0, MonotoneFn::linear(0.1));
    auto spec = build_corollary_spec(cfg);

    // linear gain 2s maps to 4s on the half-square scale
    for (double s : {0.1, 1.0, 10.0, 1e4})
        CHECK(spec.gains.at(0, 1).eval(s) == doctest::Approx(4.0 * s).epsilon(1e-12));

    // constant Q gives rho(s) = 2 c s
    for (double s : {0.0, 0.5, 3.0})
        CHECK(spec.rho(s) == doctest::Approx(2.0 * 0.25 * s));

    // sandwich bounds
    CHECK(spec.bound_lo.eval(2.0) == doctest::Approx(1.0));  // s^2/(2n)
    CHECK(spec.bound_hi.eval(2.0) == doctest::Approx(2.0));  // s^2/2
}

TEST_CASE("scalar reduction is the classical single-component certificate") {
    auto cfg = tiny_config(1);
    auto spec = build_corollary_spec(cfg);
    CHECK(spec.k == 1);
    const double p[] = {1.5};
    CHECK(spec.V[0].eval(p) == doctest::Approx(0.5 * 1.5 * 1.5));
}

TEST_CASE("translation preserves domination exactly") {
    // acyclic gain pattern: the translation is exercised without any
    // small-gain constraint entering the picture
    auto cfg = tiny_config(3);
    cfg.gamma_tilde.set(0, 1, MonotoneFn::linear(0.7));
    cfg.gamma_tilde.set(1, 2, MonotoneFn::power(0.5, 2.0));
    cfg.gamma_tilde.set(0, 2, MonotoneFn::linear(0.3));
    auto spec = build_corollary_spec(cfg);

    std::mt19937_64 rng(55);
    std::uniform_real_distribution<double> ux(-4.0, 4.0);
    for (int t = 0; t < 2000; ++t) {
        double p[3] = {ux(rng), ux(rng), ux(rng)};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                if (i == j || !cfg.gamma_tilde.has_edge(i, j)) continue;
                const double vi = 0.5 * p[i] * p[i];
                const double vj = 0.5 * p[j] * p[j];
                const bool raw = cfg.gamma_tilde.at(i, j).eval(std::abs(p[j])) <= std::abs(p[i]);
                const bool lifted = spec.gains.at(i, j).eval(vj) <= vi + 1e-12 * std::max(1.0, vi);
                CHECK(raw == lifted);
            }
    }
}

TEST_CASE("violated translated gains are rejected") {
    auto cfg = tiny_config(2);
    cfg.gamma_tilde.set(0, 1, MonotoneFn::linear(1.2));
    cfg.gamma_tilde.set(1, 0, MonotoneFn::linear(1.2));
    CHECK_THROWS(build_corollary_spec(cfg));
}

TEST_CASE("worked chain instance") {
    auto ex = example43_instance(0.5, 0.5, MonotoneFn::identity());
    CHECK(ex.p > 0.5);  // lower end of the window starts at sigma
    CHECK(ex.r > 0.0);

    SUBCASE("gain selections satisfy the small-gain check") {
        CHECK(check_small_gain(ex.cfg.gamma_tilde).verdict == SmallGainVerdict::Satisfied);
    }

    SUBCASE("coupling vanishes at the origin") {
        CHECK(ex.sys.g[1].eval(std::vector<double>(3, 0.0)) == 0.0);
    }

    SUBCASE("sampled conditions pass; the coupling antecedent is vacuous for this g") {
        SampleParams params;
        params.box = {{-3.0, 3.0}, {-3.0, 3.0}, {-3.0, 3.0}};
        params.samples = 30000;
        params.seed = 8;
        auto rep = check_corollary_conditions(ex.cfg, params);
        CHECK(rep.passed());
        // the shaped coupling makes x2 x3 g >= 0 wherever the gains dominate
        CHECK(rep.find("coupling_ratio")->antecedent_hits == 0);
        CHECK(rep.find("zero_gain_decay")->antecedent_hits > 0);
        CHECK(rep.find("local_premise")->antecedent_hits > 0);
    }

    SUBCASE("spec builds and the decrease controller handles the coupling-free point") {
        auto spec = build_corollary_spec(ex.cfg);
        spec.gains = regularize_gains(spec.gains);
        const double p[] = {0.0, 1.0, 0.0};
        CHECK(active_set(spec, p) == std::vector<int>{1});
        CHECK(decrease_controller(ex.sys, spec, p) == 0.0);
    }
}

TEST_CASE("single-function certificate fails on the constraint manifold") {
    auto witness = find_condition49_witness(MonotoneFn::identity(), 0.5, 1.0, 1.0);
    REQUIRE(witness.has_value());
    CHECK(witness->constraint_residual <= 1e-8);
    CHECK(witness->lhs <= witness->rhs);

    // spot-check a few grid corners here; the full grid runs in acceptance
    for (double p : {1e-3, 1.0, 1e3})
        for (double q : {1e-3, 1.0, 1e3}) {
            auto w = find_condition49_witness(MonotoneFn::identity(), 0.5, p, q);
            REQUIRE_MESSAGE(w.has_value(), "p=" << p << " q=" << q);
            // constraint membership: q x3 = -p x2 g(x)
            const double x2 = w->x[1], x3 = w->x[2];
            const double g = x2 * x3 * (std::abs(x2) - x3) * (x3 - 0.5 * std::abs(x2));
            CHECK(std::abs(1.0 * q * x3 + p * x2 * g) <=
                  1e-8 * std::max(1.0, std::abs(q * x3)));
            CHECK(w->lhs <= w->rhs);
        }
}

TEST_CASE("ball-constrained variant") {
    // any coupling with g(x) x2 >= 0 passes the slab condition
    const auto g = ScalarField::state(1);  // g = x2
    Example44Params prm;
    prm.R = 1.0;
    prm.a = 0.1;
    prm.c = 0.05;
    prm.epsilon = 0.05;

    SampleParams sampling;
    sampling.box = {{-1.5, 1.5}, {-1.5, 1.5}, {-1.5, 1.5}};
    sampling.samples = 40000;
    sampling.seed = 77;

    auto rep = example44_conditions(g, prm, sampling);
    CHECK(rep.find("slab_coupling")->passed());
    CHECK(rep.find("w_growth")->passed());
    CHECK(rep.find("w_growth")->antecedent_hits > 100);
    CHECK(rep.find("eta_decay")->passed());
    CHECK(rep.find("constants")->passed());

    SUBCASE("x3-dependent couplings are rejected") {
        CHECK_THROWS(example44_conditions(ScalarField::state(2), prm, sampling));
    }

    SUBCASE("constant search returns a passing triple") {
        auto found = example44_find_constants(g, prm, sampling);
        REQUIRE(found.has_value());
        auto rep2 = example44_conditions(g, *found, sampling);
        for (const auto& s : rep2.stats)
            if (s.name != "slab_relaxation") CHECK(s.passed());
    }
}
