#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace vclf {

/// Comparison-function classes on the nonnegative reals.
///   N1  : continuous, nondecreasing, value 0 at 0
///   K   : continuous, strictly increasing, value 0 at 0
///   Kinf: class K and unbounded
enum class FnClass : std::uint8_t { N1, K, Kinf };

const char* to_string(FnClass c);

/// A certified-monotone scalar function on [0, inf), closed under
/// composition, pointwise max, scaling and numeric inversion.
///
/// Values are immutable after construction and cheap to copy (shared
/// expression nodes), so they may be evaluated concurrently.
class MonotoneFn {
public:
    struct Node;  // opaque shared representation

    enum class Kind : std::uint8_t {
        Zero,
        Identity,
        Linear,
        Power,
        Compose,
        Max,
        ScaledInverse,
        Tabulated,
        Callback,
    };

    MonotoneFn();  // Zero

    static MonotoneFn zero();
    static MonotoneFn identity();
    /// s -> slope * s, slope >= 0.
    static MonotoneFn linear(double slope);
    /// s -> coeff * s^exponent, coeff >= 0, exponent > 0.
    static MonotoneFn power(double coeff, double exponent);
    /// s -> outer(inner(s)).
    static MonotoneFn compose(MonotoneFn outer, MonotoneFn inner);
    static MonotoneFn max_of(MonotoneFn lhs, MonotoneFn rhs);
    /// s -> post * inner^{-1}(pre * s); inner must be class Kinf.
    static MonotoneFn scaled_inverse(MonotoneFn inner, double pre, double post);
    /// Piecewise-linear interpolant through sorted breakpoints starting at
    /// (0, 0); extrapolates past the last breakpoint with the final slope.
    /// The class tag is asserted by the caller and spot-verified on the
    /// breakpoints.
    static MonotoneFn tabulated(std::vector<std::pair<double, double>> points,
                                FnClass cls);
    /// Opaque evaluator for internally-constructed functions (not
    /// serializable). The caller vouches for the class tag.
    static MonotoneFn callback(std::function<double(double)> fn, FnClass cls,
                               std::string label);

    double operator()(double s) const { return eval(s); }
    double eval(double s) const;

    Kind kind() const;
    FnClass fn_class() const;
    bool is_zero_kind() const { return kind() == Kind::Zero; }

    /// Structural parameters (valid per kind; see json serializer).
    double param_a() const;
    double param_b() const;
    MonotoneFn child(int which) const;  // 0 = outer/lhs/inner, 1 = inner/rhs
    const std::vector<std::pair<double, double>>& table() const;
    const std::string& label() const;

private:
    explicit MonotoneFn(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    std::shared_ptr<const Node> node_;
};

/// Relative tolerance of the bisection used by scaled_inverse.
inline constexpr double kInverseRelTol = 1e-12;
/// Maximum number of bracket doublings before the inversion gives up.
inline constexpr int kInverseMaxDoublings = 200;

}  // namespace vclf
