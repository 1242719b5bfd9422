#include "vclf/monotone.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vclf {

const char* to_string(FnClass c) {
    switch (c) {
        case FnClass::N1: return "N1";
        case FnClass::K: return "K";
        case FnClass::Kinf: return "Kinf";
    }
    return "?";
}

struct MonotoneFn::Node {
    Kind kind = Kind::Zero;
    FnClass cls = FnClass::N1;
    double a = 0.0;  // slope / coeff / pre-scale
    double b = 0.0;  // exponent / post-scale
    std::shared_ptr<const Node> c0;  // outer / lhs / inverse-inner
    std::shared_ptr<const Node> c1;  // inner / rhs
    std::vector<std::pair<double, double>> table;
    std::function<double(double)> fn;
    std::string label;
};

namespace {

using NodePtr = std::shared_ptr<const MonotoneFn::Node>;

int rank(FnClass c) { return static_cast<int>(c); }

FnClass weaker(FnClass a, FnClass b) { return rank(a) < rank(b) ? a : b; }

double eval_table(const std::vector<std::pair<double, double>>& pts, double s) {
    if (pts.size() == 1) return 0.0;
    auto it = std::lower_bound(pts.begin(), pts.end(), s,
                               [](const auto& p, double v) { return p.first < v; });
    std::size_t hi;
    if (it == pts.end())
        hi = pts.size() - 1;  // extrapolate with the last segment
    else
        hi = std::max<std::size_t>(1, static_cast<std::size_t>(it - pts.begin()));
    const auto& [x0, y0] = pts[hi - 1];
    const auto& [x1, y1] = pts[hi];
    return y0 + (y1 - y0) / (x1 - x0) * (s - x0);
}

double eval_node(const NodePtr& n, double s);

// Solve inner(y) = t for y >= 0 by bracket doubling plus bisection.
double invert(const NodePtr& inner, double t) {
    if (t <= 0.0) return 0.0;
    double hi = 1.0;
    int doublings = 0;
    while (eval_node(inner, hi) < t) {
        hi *= 2.0;
        if (++doublings > kInverseMaxDoublings)
            throw std::runtime_error(
                "MonotoneFn inversion: no bracket within " +
                std::to_string(kInverseMaxDoublings) + " doublings (inner not Kinf?)");
    }
    double lo = 0.0;
    // tolerance relative to the result itself so tiny inverses stay accurate
    for (int it = 0; it < 4000 && hi - lo > kInverseRelTol * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (eval_node(inner, mid) < t)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double eval_node(const NodePtr& n, double s) {
    using Kind = MonotoneFn::Kind;
    switch (n->kind) {
        case Kind::Zero: return 0.0;
        case Kind::Identity: return s;
        case Kind::Linear: return n->a * s;
        case Kind::Power: return n->a * std::pow(s, n->b);
        case Kind::Compose: return eval_node(n->c0, eval_node(n->c1, s));
        case Kind::Max: return std::max(eval_node(n->c0, s), eval_node(n->c1, s));
        case Kind::ScaledInverse: return n->b * invert(n->c0, n->a * s);
        case Kind::Tabulated: return eval_table(n->table, s);
        case Kind::Callback: return n->fn(s);
    }
    throw std::logic_error("MonotoneFn: bad kind");
}

}  // namespace

MonotoneFn::MonotoneFn() : node_(std::make_shared<const Node>()) {}

MonotoneFn MonotoneFn::zero() { return MonotoneFn{}; }

MonotoneFn MonotoneFn::identity() {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Identity;
    n->cls = FnClass::Kinf;
    return MonotoneFn(std::move(n));
}

MonotoneFn MonotoneFn::linear(double slope) {
    if (!(slope >= 0.0) || !std::isfinite(slope))
        throw std::invalid_argument("MonotoneFn::linear: slope must be finite and >= 0");
    if (slope == 0.0) return zero();
    auto n = std::make_shared<Node>();
    n->kind = Kind::Linear;
    n->cls = FnClass::Kinf;
    n->a = slope;
    return MonotoneFn(std::move(n));
}

MonotoneFn MonotoneFn::power(double coeff, double exponent) {
    if (!(coeff >= 0.0) || !std::isfinite(coeff))
        throw std::invalid_argument("MonotoneFn::power: coeff must be finite and >= 0");
    if (!(exponent > 0.0) || !std::isfinite(exponent))
        throw std::invalid_argument("MonotoneFn::power: exponent must be finite and > 0");
    if (coeff == 0.0) return zero();
    auto n = std::make_shared<Node>();
    n->kind = Kind::Power;
    n->cls = FnClass::Kinf;
    n->a = coeff;
    n->b = exponent;
    return MonotoneFn(std::move(n));
}

MonotoneFn MonotoneFn::compose(MonotoneFn outer, MonotoneFn inner) {
    if (outer.is_zero_kind() || inner.is_zero_kind()) return zero();
    auto n = std::make_shared<Node>();
    n->kind = Kind::Compose;
    if (outer.fn_class() == FnClass::Kinf && inner.fn_class() == FnClass::Kinf)
        n->cls = FnClass::Kinf;
    else
        n->cls = weaker(weaker(outer.fn_class(), inner.fn_class()), FnClass::K);
    n->c0 = std::move(outer.node_);
    n->c1 = std::move(inner.node_);
    return MonotoneFn(std::move(n));
}

MonotoneFn MonotoneFn::max_of(MonotoneFn lhs, MonotoneFn rhs) {
    if (lhs.is_zero_kind()) return rhs;
    if (rhs.is_zero_kind()) return lhs;
    auto n = std::make_shared<Node>();
    n->kind = Kind::Max;
    // max of two strictly increasing functions is strictly increasing;
    // a merely nondecreasing branch can mask strictness, so N1 wins there.
    if (lhs.fn_class() == FnClass::N1 || rhs.fn_class() == FnClass::N1)
        n->cls = FnClass::N1;
    else if (lhs.fn_class() == FnClass::Kinf || rhs.fn_class() == FnClass::Kinf)
        n->cls = FnClass::Kinf;
    else
        n->cls = FnClass::K;
    n->c0 = std::move(lhs.node_);
    n->c1 = std::move(rhs.node_);
    return MonotoneFn(std::move(n));
}

MonotoneFn MonotoneFn::scaled_inverse(MonotoneFn inner, double pre, double post) {
    if (inner.fn_class() != FnClass::Kinf)
        throw std::invalid_argument(
            "MonotoneFn::scaled_inverse: inner function must be class Kinf");
    if (!(pre >= 0.0) || !(post >= 0.0))
        throw std::invalid_argument("MonotoneFn::scaled_inverse: scales must be >= 0");
    if (pre == 0.0 || post == 0.0) return zero();
    auto n = std::make_shared<Node>();
    n->kind = Kind::ScaledInverse;
    n->cls = FnClass::Kinf;
    n->a = pre;
    n->b = post;
    n->c0 = std::move(inner.node_);
    return MonotoneFn(std::move(n));
}

MonotoneFn MonotoneFn::tabulated(std::vector<std::pair<double, double>> points,
                                 FnClass cls) {
    if (points.empty() || points.front().first != 0.0 || points.front().second != 0.0)
        throw std::invalid_argument("MonotoneFn::tabulated: first breakpoint must be (0, 0)");
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (!(points[i].first > points[i - 1].first))
            throw std::invalid_argument(
                "MonotoneFn::tabulated: abscissae must be strictly increasing");
        const bool strict = cls != FnClass::N1;
        const double prev = points[i - 1].second;
        const double cur = points[i].second;
        if (strict ? !(cur > prev) : !(cur >= prev))
            throw std::invalid_argument(
                "MonotoneFn::tabulated: breakpoints violate the declared class");
    }
    auto n = std::make_shared<Node>();
    n->kind = Kind::Tabulated;
    n->cls = cls;
    n->table = std::move(points);
    return MonotoneFn(std::move(n));
}

MonotoneFn MonotoneFn::callback(std::function<double(double)> fn, FnClass cls,
                                std::string label) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Callback;
    n->cls = cls;
    n->fn = std::move(fn);
    n->label = std::move(label);
    return MonotoneFn(std::move(n));
}

MonotoneFn::Kind MonotoneFn::kind() const { return node_->kind; }
FnClass MonotoneFn::fn_class() const { return node_->cls; }
double MonotoneFn::param_a() const { return node_->a; }
double MonotoneFn::param_b() const { return node_->b; }

MonotoneFn MonotoneFn::child(int which) const {
    const auto& c = which == 0 ? node_->c0 : node_->c1;
    if (!c) throw std::logic_error("MonotoneFn::child: node has no such child");
    return MonotoneFn(c);
}

const std::vector<std::pair<double, double>>& MonotoneFn::table() const {
    return node_->table;
}

const std::string& MonotoneFn::label() const { return node_->label; }

double MonotoneFn::eval(double s) const {
    if (std::isnan(s) || s < 0.0)
        throw std::domain_error("MonotoneFn::eval: argument must be >= 0");
    return eval_node(node_, s);
}

}  // namespace vclf
