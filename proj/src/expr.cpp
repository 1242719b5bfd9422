#include "vclf/expr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace vclf {

using Op = ScalarField::Op;

struct ScalarField::Node {
    Op op = Op::Const;
    double value = 0.0;
    int index = 0;
    std::shared_ptr<const Node> a;  // first operand
    std::shared_ptr<const Node> b;  // second operand (binary ops)

    // Lazily built symbolic state-gradient, shared across copies.
    mutable std::once_flag grad_once;
    mutable std::vector<std::shared_ptr<const Node>> grad;
    mutable int grad_n = -1;
};

namespace {

using NodePtr = std::shared_ptr<const ScalarField::Node>;

NodePtr make_const(double v) {
    auto n = std::make_shared<ScalarField::Node>();
    n->op = Op::Const;
    n->value = v;
    return n;
}

NodePtr make_var(Op op, int index) {
    auto n = std::make_shared<ScalarField::Node>();
    n->op = op;
    n->index = index;
    return n;
}

bool const_value(const NodePtr& n, double* v = nullptr) {
    if (n->op != Op::Const) return false;
    if (v) *v = n->value;
    return true;
}

double apply_unary(Op op, double a) {
    switch (op) {
        case Op::Neg: return -a;
        case Op::Exp: return std::exp(a);
        case Op::Ln: return std::log(a);
        case Op::Abs: return std::abs(a);
        case Op::Sign: return a > 0 ? 1.0 : (a < 0 ? -1.0 : 0.0);
        default: throw std::logic_error("apply_unary: bad op");
    }
}

double apply_binary(Op op, double a, double b) {
    switch (op) {
        case Op::Add: return a + b;
        case Op::Sub: return a - b;
        case Op::Mul: return a * b;
        case Op::Div: return a / b;
        case Op::Pow: return std::pow(a, b);
        case Op::Min: return std::min(a, b);
        case Op::Max: return std::max(a, b);
        default: throw std::logic_error("apply_binary: bad op");
    }
}

// Node factories with light constant folding; keeps derivative trees small.
NodePtr unary(Op op, NodePtr a) {
    double av;
    if (const_value(a, &av)) return make_const(apply_unary(op, av));
    auto n = std::make_shared<ScalarField::Node>();
    n->op = op;
    n->a = std::move(a);
    return n;
}

NodePtr binary(Op op, NodePtr a, NodePtr b) {
    double av, bv;
    const bool ac = const_value(a, &av);
    const bool bc = const_value(b, &bv);
    if (ac && bc) return make_const(apply_binary(op, av, bv));
    if (op == Op::Add) {
        if (ac && av == 0.0) return b;
        if (bc && bv == 0.0) return a;
    }
    if (op == Op::Sub && bc && bv == 0.0) return a;
    if (op == Op::Mul) {
        if ((ac && av == 0.0) || (bc && bv == 0.0)) return make_const(0.0);
        if (ac && av == 1.0) return b;
        if (bc && bv == 1.0) return a;
    }
    if (op == Op::Div && bc && bv == 1.0) return a;
    if (op == Op::Pow && bc) {
        if (bv == 1.0) return a;
        if (bv == 0.0) return make_const(1.0);
    }
    auto n = std::make_shared<ScalarField::Node>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

double eval_node(const NodePtr& n, std::span<const double> x, std::span<const double> d) {
    switch (n->op) {
        case Op::Const: return n->value;
        case Op::StateVar:
            if (n->index >= static_cast<int>(x.size()))
                throw std::out_of_range("ScalarField: state variable out of range");
            return x[static_cast<std::size_t>(n->index)];
        case Op::DistVar:
            if (n->index >= static_cast<int>(d.size()))
                throw std::out_of_range("ScalarField: disturbance variable out of range");
            return d[static_cast<std::size_t>(n->index)];
        case Op::Neg: case Op::Exp: case Op::Ln: case Op::Abs: case Op::Sign:
            return apply_unary(n->op, eval_node(n->a, x, d));
        default:
            return apply_binary(n->op, eval_node(n->a, x, d), eval_node(n->b, x, d));
    }
}

NodePtr diff_node(const NodePtr& n, int index) {
    switch (n->op) {
        case Op::Const:
        case Op::DistVar:
        case Op::Sign:  // a.e.
            return make_const(0.0);
        case Op::StateVar:
            return make_const(n->index == index ? 1.0 : 0.0);
        case Op::Add: return binary(Op::Add, diff_node(n->a, index), diff_node(n->b, index));
        case Op::Sub: return binary(Op::Sub, diff_node(n->a, index), diff_node(n->b, index));
        case Op::Mul:
            return binary(Op::Add,
                          binary(Op::Mul, diff_node(n->a, index), n->b),
                          binary(Op::Mul, n->a, diff_node(n->b, index)));
        case Op::Div:
            return binary(Op::Div,
                          binary(Op::Sub,
                                 binary(Op::Mul, diff_node(n->a, index), n->b),
                                 binary(Op::Mul, n->a, diff_node(n->b, index))),
                          binary(Op::Mul, n->b, n->b));
        case Op::Pow: {
            double ev;
            if (const_value(n->b, &ev)) {
                // c * a^(c-1) * a'
                return binary(Op::Mul,
                              binary(Op::Mul, make_const(ev),
                                     binary(Op::Pow, n->a, make_const(ev - 1.0))),
                              diff_node(n->a, index));
            }
            // a^b * (b' ln a + b a'/a)
            return binary(Op::Mul, binary(Op::Pow, n->a, n->b),
                          binary(Op::Add,
                                 binary(Op::Mul, diff_node(n->b, index), unary(Op::Ln, n->a)),
                                 binary(Op::Div, binary(Op::Mul, n->b, diff_node(n->a, index)),
                                        n->a)));
        }
        case Op::Min:
        case Op::Max: {
            // min(a,b) = (a + b -+ |a-b|)/2 differentiated via sign(a-b)
            const NodePtr da = diff_node(n->a, index);
            const NodePtr db = diff_node(n->b, index);
            const NodePtr swing =
                binary(Op::Mul, unary(Op::Sign, binary(Op::Sub, n->a, n->b)),
                       binary(Op::Sub, da, db));
            const NodePtr sum = binary(Op::Add, da, db);
            return binary(Op::Mul, make_const(0.5),
                          n->op == Op::Min ? binary(Op::Sub, sum, swing)
                                           : binary(Op::Add, sum, swing));
        }
        case Op::Neg: return unary(Op::Neg, diff_node(n->a, index));
        case Op::Exp: return binary(Op::Mul, unary(Op::Exp, n->a), diff_node(n->a, index));
        case Op::Ln: return binary(Op::Div, diff_node(n->a, index), n->a);
        case Op::Abs:
            return binary(Op::Mul, unary(Op::Sign, n->a), diff_node(n->a, index));
    }
    throw std::logic_error("diff_node: bad op");
}

NodePtr substitute_node(const NodePtr& n, const std::vector<NodePtr>& repl) {
    switch (n->op) {
        case Op::Const:
        case Op::DistVar:
            return n;
        case Op::StateVar:
            if (n->index >= static_cast<int>(repl.size()))
                throw std::out_of_range("substitute_states: missing replacement");
            return repl[static_cast<std::size_t>(n->index)];
        case Op::Neg: case Op::Exp: case Op::Ln: case Op::Abs: case Op::Sign:
            return unary(n->op, substitute_node(n->a, repl));
        default:
            return binary(n->op, substitute_node(n->a, repl), substitute_node(n->b, repl));
    }
}

}  // namespace

// -- ScalarField wrappers ----------------------------------------------------

struct FieldBuilder {
    static const NodePtr& node(const ScalarField& f) { return f.node_; }
    static ScalarField wrap(NodePtr n, GradientMode m = GradientMode::Symbolic) {
        return ScalarField(std::move(n), m);
    }
};

ScalarField::ScalarField() : node_(make_const(0.0)) {}

ScalarField ScalarField::constant(double v) { return FieldBuilder::wrap(make_const(v)); }

ScalarField ScalarField::state(int index) {
    if (index < 0) throw std::invalid_argument("ScalarField::state: negative index");
    return FieldBuilder::wrap(make_var(Op::StateVar, index));
}

ScalarField ScalarField::disturbance(int index) {
    if (index < 0) throw std::invalid_argument("ScalarField::disturbance: negative index");
    return FieldBuilder::wrap(make_var(Op::DistVar, index));
}

ScalarField operator+(ScalarField a, ScalarField b) {
    const GradientMode m = a.gradient_mode();
    return FieldBuilder::wrap(binary(Op::Add, FieldBuilder::node(a), FieldBuilder::node(b)), m);
}
ScalarField operator-(ScalarField a, ScalarField b) {
    const GradientMode m = a.gradient_mode();
    return FieldBuilder::wrap(binary(Op::Sub, FieldBuilder::node(a), FieldBuilder::node(b)), m);
}
ScalarField operator*(ScalarField a, ScalarField b) {
    const GradientMode m = a.gradient_mode();
    return FieldBuilder::wrap(binary(Op::Mul, FieldBuilder::node(a), FieldBuilder::node(b)), m);
}
ScalarField operator/(ScalarField a, ScalarField b) {
    const GradientMode m = a.gradient_mode();
    return FieldBuilder::wrap(binary(Op::Div, FieldBuilder::node(a), FieldBuilder::node(b)), m);
}
ScalarField operator-(ScalarField a) {
    const GradientMode m = a.gradient_mode();
    return FieldBuilder::wrap(unary(Op::Neg, FieldBuilder::node(a)), m);
}

ScalarField ScalarField::pow_of(ScalarField base, ScalarField exponent) {
    return FieldBuilder::wrap(
        binary(Op::Pow, FieldBuilder::node(base), FieldBuilder::node(exponent)),
        base.gradient_mode());
}
ScalarField ScalarField::exp_of(ScalarField a) {
    return FieldBuilder::wrap(unary(Op::Exp, FieldBuilder::node(a)), a.gradient_mode());
}
ScalarField ScalarField::ln_of(ScalarField a) {
    return FieldBuilder::wrap(unary(Op::Ln, FieldBuilder::node(a)), a.gradient_mode());
}
ScalarField ScalarField::abs_of(ScalarField a) {
    return FieldBuilder::wrap(unary(Op::Abs, FieldBuilder::node(a)), a.gradient_mode());
}
ScalarField ScalarField::sign_of(ScalarField a) {
    return FieldBuilder::wrap(unary(Op::Sign, FieldBuilder::node(a)), a.gradient_mode());
}
ScalarField ScalarField::min_of(ScalarField a, ScalarField b) {
    return FieldBuilder::wrap(binary(Op::Min, FieldBuilder::node(a), FieldBuilder::node(b)),
                              a.gradient_mode());
}
ScalarField ScalarField::max_of(ScalarField a, ScalarField b) {
    return FieldBuilder::wrap(binary(Op::Max, FieldBuilder::node(a), FieldBuilder::node(b)),
                              a.gradient_mode());
}

double ScalarField::eval(std::span<const double> x, std::span<const double> d) const {
    return eval_node(node_, x, d);
}

ScalarField ScalarField::diff_state(int index) const {
    return FieldBuilder::wrap(diff_node(node_, index), mode_);
}

std::vector<double> ScalarField::gradient(int n, std::span<const double> x,
                                          std::span<const double> d) const {
    if (mode_ == GradientMode::CentralDifference) {
        std::vector<double> xs(x.begin(), x.end());
        std::vector<double> grad(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            const double xi = xs[ui];
            const double h = kCentralDiffStep * std::max(1.0, std::abs(xi));
            xs[ui] = xi + h;
            const double fp = eval_node(node_, xs, d);
            xs[ui] = xi - h;
            const double fm = eval_node(node_, xs, d);
            xs[ui] = xi;
            grad[ui] = (fp - fm) / (2.0 * h);
        }
        return grad;
    }
    std::call_once(node_->grad_once, [&] {
        node_->grad.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) node_->grad.push_back(diff_node(node_, i));
        node_->grad_n = n;
    });
    if (node_->grad_n < n)
        throw std::invalid_argument("ScalarField::gradient: dimension grew across calls");
    std::vector<double> grad(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        grad[static_cast<std::size_t>(i)] =
            eval_node(node_->grad[static_cast<std::size_t>(i)], x, d);
    return grad;
}

ScalarField ScalarField::with_gradient_mode(GradientMode m) const {
    ScalarField f = *this;
    f.mode_ = m;
    return f;
}

ScalarField ScalarField::substitute_states(const std::vector<ScalarField>& repl) const {
    std::vector<NodePtr> nodes;
    nodes.reserve(repl.size());
    for (const auto& r : repl) nodes.push_back(FieldBuilder::node(r));
    return FieldBuilder::wrap(substitute_node(node_, nodes), mode_);
}

namespace {

bool any_node(const NodePtr& n, const std::function<bool(const ScalarField::Node&)>& pred) {
    if (pred(*n)) return true;
    if (n->a && any_node(n->a, pred)) return true;
    if (n->b && any_node(n->b, pred)) return true;
    return false;
}

}  // namespace

bool ScalarField::depends_on_state(int index) const {
    return any_node(node_, [index](const Node& n) {
        return n.op == Op::StateVar && n.index == index;
    });
}

bool ScalarField::depends_on_disturbance() const {
    return any_node(node_, [](const Node& n) { return n.op == Op::DistVar; });
}

namespace {

using DistDegree = ScalarField::DistDegree;

DistDegree degree_node(const NodePtr& n) {
    using D = DistDegree;
    auto worst = [](D a, D b) { return static_cast<int>(a) > static_cast<int>(b) ? a : b; };
    switch (n->op) {
        case Op::Const:
        case Op::StateVar:
            return D::None;
        case Op::DistVar: return D::Affine;
        case Op::Add:
        case Op::Sub:
            return worst(degree_node(n->a), degree_node(n->b));
        case Op::Neg: return degree_node(n->a);
        case Op::Mul: {
            const D da = degree_node(n->a), db = degree_node(n->b);
            if (da == D::None) return db;
            if (db == D::None) return da;
            return D::Nonlinear;
        }
        case Op::Div: {
            const D da = degree_node(n->a), db = degree_node(n->b);
            return db == D::None ? da : D::Nonlinear;
        }
        case Op::Pow:
        case Op::Min:
        case Op::Max: {
            const D d = worst(degree_node(n->a), degree_node(n->b));
            return d == D::None ? D::None : D::Nonlinear;
        }
        default: {
            const D d = degree_node(n->a);
            return d == D::None ? D::None : D::Nonlinear;
        }
    }
}

double kink_node(const NodePtr& n, std::span<const double> x, std::span<const double> d) {
    double dist = std::numeric_limits<double>::infinity();
    switch (n->op) {
        case Op::Const: case Op::StateVar: case Op::DistVar:
            return dist;
        case Op::Abs:
        case Op::Sign:
            dist = std::abs(eval_node(n->a, x, d));
            return std::min(dist, kink_node(n->a, x, d));
        case Op::Min:
        case Op::Max:
            dist = std::abs(eval_node(n->a, x, d) - eval_node(n->b, x, d));
            return std::min({dist, kink_node(n->a, x, d), kink_node(n->b, x, d)});
        case Op::Neg: case Op::Exp: case Op::Ln:
            return kink_node(n->a, x, d);
        default:
            return std::min(kink_node(n->a, x, d), kink_node(n->b, x, d));
    }
}

}  // namespace

ScalarField::DistDegree ScalarField::disturbance_degree() const {
    return degree_node(node_);
}

double ScalarField::kink_distance(std::span<const double> x, std::span<const double> d) const {
    return kink_node(node_, x, d);
}

// -- JSON --------------------------------------------------------------------

namespace {

int parse_var_index(const std::string& name, int limit, const char* what) {
    const std::string digits = name.substr(1);
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos)
        throw std::invalid_argument("expression: bad variable name '" + name + "'");
    const int idx = std::stoi(digits) - 1;
    if (idx < 0 || idx >= limit)
        throw std::invalid_argument("expression: " + std::string(what) + " variable '" +
                                    name + "' out of range");
    return idx;
}

}  // namespace

ScalarField ScalarField::parse(const nlohmann::json& j, int n_state, int n_dist) {
    if (j.is_number()) return constant(j.get<double>());
    if (j.is_string()) {
        const auto name = j.get<std::string>();
        if (name == "s" && n_state >= 1) return state(0);
        if (name.size() >= 2 && (name[0] == 'x' || name[0] == 'c'))
            return state(parse_var_index(name, n_state, "state"));
        if (name.size() >= 2 && name[0] == 'd')
            return disturbance(parse_var_index(name, n_dist, "disturbance"));
        throw std::invalid_argument("expression: unknown variable '" + name + "'");
    }
    if (!j.is_array() || j.empty() || !j[0].is_string())
        throw std::invalid_argument("expression: expected number, variable or [op, ...] array");
    const auto op = j[0].get<std::string>();
    const auto argc = j.size() - 1;
    auto arg = [&](std::size_t i) { return parse(j[i + 1], n_state, n_dist); };

    auto fold = [&](auto&& combine) {
        if (argc < 2) throw std::invalid_argument("expression: '" + op + "' needs >= 2 args");
        ScalarField acc = arg(0);
        for (std::size_t i = 1; i < argc; ++i) acc = combine(std::move(acc), arg(i));
        return acc;
    };
    auto unary1 = [&](auto&& make) {
        if (argc != 1) throw std::invalid_argument("expression: '" + op + "' needs 1 arg");
        return make(arg(0));
    };

    if (op == "+") return fold([](ScalarField a, ScalarField b) { return a + b; });
    if (op == "*") return fold([](ScalarField a, ScalarField b) { return a * b; });
    if (op == "-") {
        if (argc == 1) return -arg(0);
        return fold([](ScalarField a, ScalarField b) { return a - b; });
    }
    if (op == "/") {
        if (argc != 2) throw std::invalid_argument("expression: '/' needs 2 args");
        return arg(0) / arg(1);
    }
    if (op == "pow") {
        if (argc != 2) throw std::invalid_argument("expression: 'pow' needs 2 args");
        return pow_of(arg(0), arg(1));
    }
    if (op == "min") return fold([](ScalarField a, ScalarField b) { return min_of(a, b); });
    if (op == "max") return fold([](ScalarField a, ScalarField b) { return max_of(a, b); });
    if (op == "neg") return unary1([](ScalarField a) { return -a; });
    if (op == "exp") return unary1([](ScalarField a) { return exp_of(a); });
    if (op == "ln") return unary1([](ScalarField a) { return ln_of(a); });
    if (op == "abs") return unary1([](ScalarField a) { return abs_of(a); });
    if (op == "sign") return unary1([](ScalarField a) { return sign_of(a); });
    throw std::invalid_argument("expression: unknown operator '" + op + "'");
}

namespace {

nlohmann::json node_to_json(const NodePtr& n) {
    using nlohmann::json;
    switch (n->op) {
        case Op::Const: return json(n->value);
        case Op::StateVar: return json("x" + std::to_string(n->index + 1));
        case Op::DistVar: return json("d" + std::to_string(n->index + 1));
        case Op::Add: return json::array({"+", node_to_json(n->a), node_to_json(n->b)});
        case Op::Sub: return json::array({"-", node_to_json(n->a), node_to_json(n->b)});
        case Op::Mul: return json::array({"*", node_to_json(n->a), node_to_json(n->b)});
        case Op::Div: return json::array({"/", node_to_json(n->a), node_to_json(n->b)});
        case Op::Pow: return json::array({"pow", node_to_json(n->a), node_to_json(n->b)});
        case Op::Min: return json::array({"min", node_to_json(n->a), node_to_json(n->b)});
        case Op::Max: return json::array({"max", node_to_json(n->a), node_to_json(n->b)});
        case Op::Neg: return json::array({"neg", node_to_json(n->a)});
        case Op::Exp: return json::array({"exp", node_to_json(n->a)});
        case Op::Ln: return json::array({"ln", node_to_json(n->a)});
        case Op::Abs: return json::array({"abs", node_to_json(n->a)});
        case Op::Sign: return json::array({"sign", node_to_json(n->a)});
    }
    throw std::logic_error("node_to_json: bad op");
}

}  // namespace

nlohmann::json ScalarField::to_json() const { return node_to_json(node_); }

std::string ScalarField::to_text() const { return to_json().dump(); }

std::vector<double> central_difference_gradient(
    const std::function<double(std::span<const double>)>& fn,
    std::span<const double> x, double step_scale) {
    std::vector<double> xs(x.begin(), x.end());
    std::vector<double> grad(x.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double xi = xs[i];
        const double h = step_scale * std::max(1.0, std::abs(xi));
        xs[i] = xi + h;
        const double fp = fn(xs);
        xs[i] = xi - h;
        const double fm = fn(xs);
        xs[i] = xi;
        grad[i] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

}  // namespace vclf
