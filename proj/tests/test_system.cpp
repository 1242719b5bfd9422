#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "vclf/system.hpp"
#include "vclf/vclf_spec.hpp"

using namespace vclf;

namespace {

ScalarField x(int i) { return ScalarField::state(i); }
ScalarField half() { return ScalarField::constant(0.5); }

// three-state chain with a coupling input channel
ControlAffineSystem chain_system(ScalarField g2) {
    ControlAffineSystem sys;
    sys.n = 3;
    sys.l = 0;
    sys.f = {-x(0) + x(1), -x(1), x(0) * x(0)};
    sys.g = {ScalarField::constant(0.0), std::move(g2), ScalarField::constant(1.0)};
    sys.input = ControlSet::all_reals();
    sys.validate();
    return sys;
}

}  // namespace

TEST_CASE("lie derivatives on the chain system") {
    auto sys = chain_system(ScalarField::constant(0.0));
    auto v1 = half() * x(0) * x(0);

    const double p[] = {1.5, -2.0, 0.7};
    auto lie = lie_derivatives(sys, v1, p, {});
    CHECK(lie.along_f == doctest::Approx(1.5 * (-1.5 - 2.0)));
    CHECK(lie.along_g == doctest::Approx(0.0));

    auto constant_phi = ScalarField::constant(4.0);
    auto lc = lie_derivatives(sys, constant_phi, p, {});
    CHECK(lc.along_f == 0.0);
    CHECK(lc.along_g == 0.0);

    auto v3 = half() * x(2) * x(2);
    const double q[] = {1.0, 0.0, 2.0};
    auto l3 = lie_derivatives(sys, v3, q, {});
    CHECK(l3.along_f == doctest::Approx(2.0));  // x3 * x1^2
    CHECK(l3.along_g == doctest::Approx(2.0));  // x3
}

TEST_CASE("disturbance maximization") {
    SUBCASE("degenerate box equals plain evaluation") {
        ControlAffineSystem sys;
        sys.n = 1;
        sys.l = 1;
        sys.f = {-x(0) + ScalarField::disturbance(0)};
        sys.g = {ScalarField::constant(1.0)};
        sys.dbox = {{0.3, 0.3}};
        sys.validate();
        auto v = half() * x(0) * x(0);
        const double p[] = {2.0};
        const double d[] = {0.3};
        auto mx = max_lie_over_disturbances(sys, v, p);
        CHECK_FALSE(mx.conservative);
        CHECK(mx.value == doctest::Approx(lie_derivatives(sys, v, p, d).along_f));
    }
    SUBCASE("affine dependence peaks at a vertex") {
        ControlAffineSystem sys;
        sys.n = 1;
        sys.l = 1;
        sys.f = {-x(0) + ScalarField::constant(3.0) * ScalarField::disturbance(0)};
        sys.g = {ScalarField::constant(1.0)};
        sys.dbox = {{-1.0, 1.0}};
        sys.validate();
        auto v = half() * x(0) * x(0);
        const double p[] = {2.0};  // grad V = 2, so max adds |2*3| over the box
        auto mx = max_lie_over_disturbances(sys, v, p);
        CHECK_FALSE(mx.conservative);
        CHECK(mx.value == doctest::Approx(-4.0 + std::abs(2.0 * 3.0)));
        CHECK(mx.argmax[0] == doctest::Approx(1.0));
    }
    SUBCASE("nonlinear dependence falls back to the conservative grid") {
        ControlAffineSystem sys;
        sys.n = 1;
        sys.l = 1;
        auto d0 = ScalarField::disturbance(0);
        sys.f = {-x(0) + d0 * d0};
        sys.g = {ScalarField::constant(1.0)};
        sys.dbox = {{-1.0, 1.0}};
        sys.validate();
        auto v = half() * x(0) * x(0);
        const double p[] = {1.0};
        auto mx = max_lie_over_disturbances(sys, v, p);
        CHECK(mx.conservative);
        CHECK(mx.value == doctest::Approx(-1.0 + 1.0));
    }
}

TEST_CASE("active set") {
    VRCLFSpec spec;
    spec.k = 2;
    spec.V = {half() * x(0) * x(0), half() * x(1) * x(1)};
    spec.gains = GainMatrix(2);
    spec.gains.set(0, 1, MonotoneFn::linear(2.0));
    spec.gains.set(1, 0, MonotoneFn::linear(1.0 / 3.0));

    SUBCASE("origin activates every index") {
        const double p[] = {0.0, 0.0};
        CHECK(active_set(spec, p) == std::vector<int>{0, 1});
    }
    SUBCASE("worked two-component point") {
        const double p[] = {1.0, 3.0};  // V = (0.5, 4.5)
        // index 0: 2*4.5 = 9 > 0.5 inactive; index 1: 0.5/3 <= 4.5 active
        CHECK(active_set(spec, p) == std::vector<int>{1});
    }
    SUBCASE("the argmax component is active for subunit gains") {
        spec.gains = GainMatrix(2);
        spec.gains.set(0, 1, MonotoneFn::linear(0.9));
        spec.gains.set(1, 0, MonotoneFn::linear(0.9));
        const double p[] = {1.0, 2.0};
        auto act = active_set(spec, p);
        CHECK(std::find(act.begin(), act.end(), 1) != act.end());
    }
}

namespace {

// scalar contraction with no input authority; certificate data around it
std::pair<ControlAffineSystem, VRCLFSpec> scalar_instance(double rho_scale) {
    ControlAffineSystem sys;
    sys.n = 1;
    sys.l = 0;
    sys.f = {-x(0)};
    sys.g = {ScalarField::constant(0.0)};
    sys.input = ControlSet::all_reals();
    sys.validate();

    VRCLFSpec spec;
    spec.k = 1;
    spec.V = {half() * x(0) * x(0)};
    spec.eta = ScalarField::constant(-1.0);
    spec.W = ScalarField::constant(1.0) + half() * x(0) * x(0);
    spec.delta = Scalar1D::constant(1.0);
    spec.Kfun = Scalar1D::constant(1.0);
    spec.rho = Scalar1D("rho", [rho_scale](double s) { return rho_scale * s; });
    spec.epsilon = 1.0;
    spec.gains = GainMatrix(1);
    spec.local = LocalLaw::linear({0.0});
    spec.radius = 0.25;
    spec.bound_lo = MonotoneFn::power(0.5, 2.0);
    spec.bound_hi = MonotoneFn::power(0.5, 2.0);
    return {sys, spec};
}

}  // namespace

TEST_CASE("implication checking on the scalar contraction") {
    auto [sys, spec] = scalar_instance(1.0);
    SampleParams params;
    params.box = {{-3.0, 3.0}};
    params.samples = 20000;

    auto report = check_implications(sys, spec, params);
    CHECK(report.passed());
    const auto& zero_gain = report.by_id(ImplicationId::LyapZeroGain);
    CHECK(zero_gain.antecedent_hits > 1000);
    CHECK(zero_gain.violation_count == 0);

    // escape-region implications never fire: eta is negative everywhere
    CHECK(report.by_id(ImplicationId::EtaZeroGain).antecedent_hits == 0);
    auto gaps = report.coverage_gaps();
    CHECK(std::find(gaps.begin(), gaps.end(), ImplicationId::EtaZeroGain) != gaps.end());
}

TEST_CASE("inflated decrease margin is caught with a witness") {
    auto [sys, spec] = scalar_instance(1e6);
    SampleParams params;
    params.box = {{-3.0, 3.0}};
    params.samples = 20000;

    auto report = check_implications(sys, spec, params);
    CHECK_FALSE(report.passed());
    const auto& s = report.by_id(ImplicationId::LyapZeroGain);
    CHECK(s.violation_count > 0);
    REQUIRE_FALSE(s.witnesses.empty());
    const double wx = s.witnesses.front().x.at(0);
    // the consequent really fails at the witness
    CHECK(-wx * wx + 1e6 * 0.5 * wx * wx > 0.0);
}

TEST_CASE("spec validation rejects broken data") {
    auto [sys, spec] = scalar_instance(1.0);
    CHECK_NOTHROW(spec.validate(sys));

    auto bad_eta = spec;
    bad_eta.eta = ScalarField::constant(0.5);  // positive at the origin
    CHECK_THROWS(bad_eta.validate(sys));

    auto bad_w = spec;
    bad_w.W = ScalarField::constant(0.5);  // below one
    CHECK_THROWS(bad_w.validate(sys));

    auto bad_sandwich = spec;
    bad_sandwich.bound_lo = MonotoneFn::power(2.0, 2.0);  // above max V
    CHECK_THROWS(bad_sandwich.validate(sys));
}
