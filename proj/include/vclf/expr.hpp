#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace vclf {

/// How gradients of a ScalarField are produced.
enum class GradientMode : std::uint8_t { Symbolic, CentralDifference };

/// Step scale for central differences: h = kCentralDiffStep * max(1, |x_i|).
inline constexpr double kCentralDiffStep = 1e-6;

/// A differentiable scalar function of state variables x_1..x_n and
/// disturbance variables d_1..d_l, represented as an immutable
/// expression tree with exact symbolic gradients.
class ScalarField {
public:
    struct Node;  // opaque shared representation

    enum class Op : std::uint8_t {
        Const, StateVar, DistVar,
        Add, Sub, Mul, Div, Pow, Min, Max,
        Neg, Exp, Ln, Abs, Sign,
    };

    ScalarField();  // constant 0

    static ScalarField constant(double v);
    static ScalarField state(int index);        // x_{index+1}
    static ScalarField disturbance(int index);  // d_{index+1}

    friend ScalarField operator+(ScalarField a, ScalarField b);
    friend ScalarField operator-(ScalarField a, ScalarField b);
    friend ScalarField operator*(ScalarField a, ScalarField b);
    friend ScalarField operator/(ScalarField a, ScalarField b);
    friend ScalarField operator-(ScalarField a);
    static ScalarField pow_of(ScalarField base, ScalarField exponent);
    static ScalarField exp_of(ScalarField a);
    static ScalarField ln_of(ScalarField a);
    static ScalarField abs_of(ScalarField a);
    static ScalarField sign_of(ScalarField a);
    static ScalarField min_of(ScalarField a, ScalarField b);
    static ScalarField max_of(ScalarField a, ScalarField b);

    double eval(std::span<const double> x, std::span<const double> d = {}) const;
    double operator()(std::span<const double> x, std::span<const double> d = {}) const {
        return eval(x, d);
    }

    /// Exact derivative with respect to x_{index+1} as a new field.
    ScalarField diff_state(int index) const;

    /// Gradient with respect to the state, per the field's gradient mode.
    /// Symbolic gradients are built once and cached on the shared tree.
    std::vector<double> gradient(int n, std::span<const double> x,
                                 std::span<const double> d = {}) const;

    GradientMode gradient_mode() const { return mode_; }
    ScalarField with_gradient_mode(GradientMode m) const;

    /// Replaces state variable i by replacement[i]; disturbance variables
    /// are kept as-is.
    ScalarField substitute_states(const std::vector<ScalarField>& replacement) const;

    bool depends_on_state(int index) const;
    bool depends_on_disturbance() const;

    /// Degree of the field in the disturbance variables, used to decide
    /// whether box maximization can use vertex enumeration.
    enum class DistDegree : std::uint8_t { None, Affine, Nonlinear };
    DistDegree disturbance_degree() const;

    /// Distance to the nearest kink of abs/min/max subexpressions at the
    /// given point (+inf when the tree has none). Gradient validation
    /// skips points closer than its smoothness tolerance.
    double kink_distance(std::span<const double> x, std::span<const double> d = {}) const;

    /// Prefix-array representation, e.g. ["+", ["*", 2.0, "x1"], "d1"].
    static ScalarField parse(const nlohmann::json& j, int n_state, int n_dist);
    nlohmann::json to_json() const;
    std::string to_text() const;

private:
    friend struct FieldBuilder;
    ScalarField(std::shared_ptr<const Node> n, GradientMode m)
        : node_(std::move(n)), mode_(m) {}
    std::shared_ptr<const Node> node_;
    GradientMode mode_ = GradientMode::Symbolic;
};

/// Central-difference gradient of an arbitrary callable, exposed so tests
/// can cross-check symbolic gradients independently of ScalarField.
std::vector<double> central_difference_gradient(
    const std::function<double(std::span<const double>)>& fn,
    std::span<const double> x, double step_scale = kCentralDiffStep);

}  // namespace vclf
