#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "vclf/expr.hpp"

using namespace vclf;
using nlohmann::json;

namespace {

ScalarField x(int i) { return ScalarField::state(i); }

// relative gradient error against central differences at a smooth point
double max_grad_error(const ScalarField& f, int n, std::span<const double> xs,
                      std::span<const double> ds = {}) {
    const auto sym = f.gradient(n, xs, ds);
    std::vector<double> dvec(ds.begin(), ds.end());
    const auto num = central_difference_gradient(
        [&](std::span<const double> p) { return f.eval(p, dvec); }, xs);
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const double scale = std::max({1.0, std::abs(sym[ui]), std::abs(num[ui])});
        worst = std::max(worst, std::abs(sym[ui] - num[ui]) / scale);
    }
    return worst;
}

}  // namespace

TEST_CASE("basic evaluation") {
    auto f = x(0) * x(0) + ScalarField::constant(2.0) * x(1);
    const double xs[] = {3.0, 4.0};
    CHECK(f.eval(xs) == doctest::Approx(17.0));

    auto g = ScalarField::exp_of(-x(0)) * ScalarField::disturbance(0);
    const double ds[] = {2.0};
    CHECK(g.eval(xs, ds) == doctest::Approx(2.0 * std::exp(-3.0)));
}

TEST_CASE("symbolic gradients match central differences on random smooth points") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ux(-2.0, 2.0);

    auto half = ScalarField::constant(0.5);
    std::vector<ScalarField> fields;
    fields.push_back(half * x(0) * x(0) + x(1) * x(2));
    fields.push_back(ScalarField::exp_of(x(0) * half) - ScalarField::ln_of(x(1) * x(1) +
                                                                            ScalarField::constant(1.0)));
    fields.push_back(ScalarField::abs_of(x(0)) * x(1) +
                     ScalarField::max_of(x(1), x(2) * x(2)));
    fields.push_back(ScalarField::pow_of(x(0) * x(0) + ScalarField::constant(1.0),
                                         ScalarField::constant(1.5)));
    fields.push_back(ScalarField::min_of(x(0) + x(1), x(2) - x(0)) * x(1));

    for (const auto& f : fields) {
        int checked = 0;
        while (checked < 200) {
            double p[3] = {ux(rng), ux(rng), ux(rng)};
            if (f.kink_distance(p) < 1e-3) continue;  // skip near-kink points
            CHECK(max_grad_error(f, 3, p) <= 1e-6);
            ++checked;
        }
    }
}

TEST_CASE("gradient of squared hinge is exact across the kink") {
    // max(z, 0)^2 is C1; its symbolic derivative must be continuous at z = 0
    auto z = x(0) + x(1);
    auto hinge = ScalarField::max_of(z, ScalarField::constant(0.0));
    auto f = hinge * hinge;
    const double at_kink[] = {1.0, -1.0};
    const auto g = f.gradient(2, at_kink);
    CHECK(g[0] == doctest::Approx(0.0));
    CHECK(g[1] == doctest::Approx(0.0));
    const double above[] = {1.0, -0.5};
    const auto ga = f.gradient(2, above);
    CHECK(ga[0] == doctest::Approx(1.0));
}

TEST_CASE("central-difference mode") {
    auto f = (x(0) * x(0) * x(1)).with_gradient_mode(GradientMode::CentralDifference);
    const double p[] = {2.0, 3.0};
    const auto g = f.gradient(2, p);
    CHECK(g[0] == doctest::Approx(12.0).epsilon(1e-8));
    CHECK(g[1] == doctest::Approx(4.0).epsilon(1e-8));
}

TEST_CASE("substitution rewrites state variables") {
    auto f = x(0) * x(0) + x(1);
    std::vector<ScalarField> repl{ScalarField::exp_of(x(0)), x(1) + ScalarField::constant(1.0)};
    auto sub = f.substitute_states(repl);
    const double p[] = {0.5, 2.0};
    CHECK(sub.eval(p) == doctest::Approx(std::exp(1.0) + 3.0));
}

TEST_CASE("disturbance degree analysis") {
    using D = ScalarField::DistDegree;
    auto d0 = ScalarField::disturbance(0);
    CHECK((x(0) * x(0)).disturbance_degree() == D::None);
    CHECK((x(0) + d0 * ScalarField::constant(3.0)).disturbance_degree() == D::Affine);
    CHECK((x(0) * d0).disturbance_degree() == D::Affine);
    CHECK((d0 * d0).disturbance_degree() == D::Nonlinear);
    CHECK(ScalarField::exp_of(d0).disturbance_degree() == D::Nonlinear);
    CHECK(ScalarField::max_of(d0, x(0)).disturbance_degree() == D::Nonlinear);
}

TEST_CASE("prefix array parsing round-trips") {
    const auto j = json::parse(R"(["+", ["*", 2.0, "x1"], ["abs", "x2"], ["exp", "d1"]])");
    auto f = ScalarField::parse(j, 2, 1);
    const double p[] = {1.5, -2.0};
    const double dd[] = {0.0};
    CHECK(f.eval(p, dd) == doctest::Approx(3.0 + 2.0 + 1.0));

    auto f2 = ScalarField::parse(f.to_json(), 2, 1);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ux(-2.0, 2.0);
    for (int t = 0; t < 100; ++t) {
        double q[] = {ux(rng), ux(rng)};
        double dq[] = {ux(rng)};
        CHECK(f.eval(q, dq) == doctest::Approx(f2.eval(q, dq)));
    }
}

TEST_CASE("parser accepts c-prefixed and s variable aliases") {
    auto f = ScalarField::parse(json::parse(R"(["*", "c1", ["pow", "c2", 2]])"), 2, 0);
    const double p[] = {2.0, 3.0};
    CHECK(f.eval(p) == doctest::Approx(18.0));
    auto rho = ScalarField::parse(json::parse(R"(["*", 2.0, "s"])"), 1, 0);
    const double s[] = {0.7};
    CHECK(rho.eval(s) == doctest::Approx(1.4));
}

TEST_CASE("parser rejects malformed input") {
    CHECK_THROWS(ScalarField::parse(json::parse(R"(["frob", 1])"), 1, 0));
    CHECK_THROWS(ScalarField::parse(json::parse(R"("x3")"), 2, 0));
    CHECK_THROWS(ScalarField::parse(json::parse(R"(["/", 1])"), 1, 0));
    CHECK_THROWS(ScalarField::parse(json::parse(R"({})"), 1, 0));
}
