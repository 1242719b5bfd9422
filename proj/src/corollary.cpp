#include "vclf/corollary.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace vclf {

namespace {

double norm2(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

// Quadratic-scale conjugation of one gain entry: s -> (gamma(sqrt(2s)))^2 / 2.
MonotoneFn conjugate_gain(const MonotoneFn& gamma_tilde) {
    if (gamma_tilde.is_zero_kind()) return MonotoneFn::zero();
    return MonotoneFn::compose(
        MonotoneFn::power(0.5, 2.0),
        MonotoneFn::compose(gamma_tilde, MonotoneFn::power(std::sqrt(2.0), 0.5)));
}

// Active set on the componentwise scale: indices whose |x_i| dominates the
// gain-weighted peers.
std::vector<int> componentwise_active(const GainMatrix& gt, std::span<const double> x) {
    const int n = gt.dim();
    std::vector<int> act;
    for (int i = 0; i < n; ++i) {
        const double xi = std::abs(x[static_cast<std::size_t>(i)]);
        double peer = 0.0;
        for (int s = 0; s < n; ++s) {
            if (s == i) continue;
            peer = std::max(peer, gt.at(i, s).eval(std::abs(x[static_cast<std::size_t>(s)])));
        }
        if (peer <= xi + kActiveSetSlack * std::max(1.0, xi)) act.push_back(i);
    }
    return act;
}

}  // namespace

VRCLFSpec build_corollary_spec(const CorollaryConfig& cfg) {
    const int n = cfg.sys.n;
    if (cfg.gamma_tilde.dim() != n)
        throw std::invalid_argument("corollary: gain matrix must be n x n");

    GainMatrix gains(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) gains.set(i, j, conjugate_gain(cfg.gamma_tilde.at(i, j)));

    if (check_small_gain(gains).verdict == SmallGainVerdict::Violated)
        throw std::invalid_argument("corollary: translated gains fail the small-gain check");

    VRCLFSpec spec;
    spec.k = n;
    const auto half = ScalarField::constant(0.5);
    for (int i = 0; i < n; ++i) {
        const auto xi = ScalarField::state(i);
        spec.V.push_back(half * xi * xi);
    }
    spec.eta = cfg.eta;
    spec.W = cfg.W;
    spec.delta = cfg.delta;
    spec.Kfun = cfg.Kfun;
    const Scalar1D Q = cfg.Q;
    spec.rho = Scalar1D("2 s min(Q(sqrt(2s)), Q(-sqrt(2s)))", [Q](double s) {
        const double r = std::sqrt(2.0 * std::max(0.0, s));
        return 2.0 * s * std::min(Q(r), Q(-r));
    });
    spec.epsilon = cfg.epsilon;
    spec.gains = std::move(gains);
    spec.local = LocalLaw::linear(cfg.kvec);
    spec.radius = 0.5 * cfg.local_radius;
    spec.bound_lo = MonotoneFn::power(0.5 / n, 2.0);
    spec.bound_hi = MonotoneFn::power(0.5, 2.0);
    return spec;
}

ConditionReport check_corollary_conditions(const CorollaryConfig& cfg,
                                           const SampleParams& params) {
    const auto& sys = cfg.sys;
    if (static_cast<int>(params.box.size()) != sys.n)
        throw std::invalid_argument("corollary: sample box dimension mismatch");

    ConditionReport rep;
    rep.total_samples = params.samples;
    auto& ratio = rep.get("coupling_ratio");
    auto& zero = rep.get("zero_gain_decay");
    auto& eta_ex = rep.get("eta_exchange");
    auto& w_ex = rep.get("w_exchange");
    auto& floor_m = rep.get("floor_margin");
    auto& ceil_m = rep.get("ceiling_margin");
    auto& local = rep.get("local_premise");
    auto& kb_eta = rep.get("kbar_eta");
    auto& kb_w = rep.get("kbar_w");

    std::mt19937_64 rng(params.seed);
    std::vector<std::uniform_real_distribution<double>> dims;
    for (const auto& [lo, hi] : params.box) dims.emplace_back(lo, hi);

    std::vector<double> x(static_cast<std::size_t>(sys.n));
    std::vector<double> f(x.size()), g(x.size());

    for (long t = 0; t < params.samples; ++t) {
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = dims[i](rng);
        for (std::size_t i = 0; i < x.size(); ++i) {
            f[i] = sys.f[i].eval(x);
            g[i] = sys.g[i].eval(x);
        }
        const double eta = cfg.eta.eval(x);
        const auto act = componentwise_active(cfg.gamma_tilde, x);
        const bool lyap_region = eta <= cfg.epsilon + 1e-12;
        const bool shell = eta >= 0.0 && lyap_region;

        if (lyap_region) {
            for (std::size_t a = 0; a < act.size(); ++a) {
                const int i = act[a];
                const auto ui = static_cast<std::size_t>(i);
                const double xi = x[ui];
                if (is_zero_coefficient(g[ui], f[ui]))
                    record_condition(zero, true, xi * f[ui] + xi * xi * cfg.Q(xi),
                                     xi * f[ui], x);
                else if (xi * g[ui] > 0.0 && sys.input.kind != ControlCase::AllReals)
                    record_condition(floor_m, true,
                                     xi * f[ui] + xi * xi * cfg.Q(xi) - sys.input.a * xi * g[ui],
                                     xi * f[ui], x);
                else if (xi * g[ui] < 0.0 && sys.input.kind == ControlCase::Interval)
                    record_condition(ceil_m, true,
                                     xi * f[ui] + xi * xi * cfg.Q(xi) + sys.input.b * xi * g[ui],
                                     xi * f[ui], x);
                for (std::size_t b = a + 1; b < act.size(); ++b) {
                    const int j = act[b];
                    const auto uj = static_cast<std::size_t>(j);
                    const double xj = x[uj];
                    if (!(xi * xj * g[ui] * g[uj] < 0.0)) continue;
                    const double denom =
                        xi * cfg.Q(xi) * g[uj] - xj * cfg.Q(xj) * g[ui];
                    if (denom == 0.0) continue;
                    const double r = (f[ui] * g[uj] - f[uj] * g[ui]) / denom;
                    record_condition(ratio, true, r + 1.0, r, x);
                }
            }
        }

        if (shell) {
            const auto grad_eta = cfg.eta.gradient(sys.n, x);
            const auto grad_w = cfg.W.gradient(sys.n, x);
            double eta_g = 0.0, w_g = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                eta_g += grad_eta[i] * g[i];
                w_g += grad_w[i] * g[i];
            }
            for (int j : act) {
                const auto uj = static_cast<std::size_t>(j);
                const double xj = x[uj];
                if (is_zero_coefficient(g[uj], f[uj])) continue;
                const double u_star = -(f[uj] + xj * cfg.Q(xj)) / g[uj];
                if (xj * g[uj] * eta_g < 0.0) {
                    double lhs = 0.0;
                    for (std::size_t i = 0; i < x.size(); ++i)
                        lhs += grad_eta[i] * (f[i] + g[i] * u_star);
                    record_condition(eta_ex, true, lhs + cfg.delta(eta), lhs, x);
                }
                if (xj * g[uj] * w_g < 0.0) {
                    double lhs = 0.0;
                    for (std::size_t i = 0; i < x.size(); ++i)
                        lhs += grad_w[i] * (f[i] + g[i] * u_star);
                    const double bound = cfg.Kfun(eta) * cfg.W.eval(x);
                    record_condition(w_ex, true, lhs - bound, bound, x);
                }
            }
        }

        if (eta >= 0.0) {
            const double u_bar = cfg.kbar.eval(x);
            const auto grad_eta = cfg.eta.gradient(sys.n, x);
            const auto grad_w = cfg.W.gradient(sys.n, x);
            double de = 0.0, dw = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                de += grad_eta[i] * (f[i] + g[i] * u_bar);
                dw += grad_w[i] * (f[i] + g[i] * u_bar);
            }
            record_condition(kb_eta, true, de + cfg.delta(eta), de, x);
            record_condition(kb_w, true, dw - cfg.Kfun(eta) * cfg.W.eval(x), dw, x);
        }

        if (norm2(x) <= cfg.local_radius && !cfg.kvec.empty()) {
            double u_loc = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) u_loc += cfg.kvec[i] * x[i];
            for (int i : act) {
                const auto ui = static_cast<std::size_t>(i);
                const double xi = x[ui];
                record_condition(local, true,
                                 xi * f[ui] + xi * g[ui] * u_loc + xi * xi * cfg.Q(xi),
                                 xi * f[ui], x);
            }
        }
    }
    return rep;
}

namespace {

// gamma(|arg|) as an expression; closed-form kinds only.
ScalarField monotone_as_field(const MonotoneFn& gamma, const ScalarField& arg) {
    switch (gamma.kind()) {
        case MonotoneFn::Kind::Identity:
            return arg;
        case MonotoneFn::Kind::Linear:
            return ScalarField::constant(gamma.param_a()) * arg;
        case MonotoneFn::Kind::Power:
            return ScalarField::constant(gamma.param_a()) *
                   ScalarField::pow_of(arg, ScalarField::constant(gamma.param_b()));
        default:
            throw std::invalid_argument(
                "example: gamma must be identity, linear or power to enter the dynamics");
    }
}

}  // namespace

Example43 example43_instance(double lambda, double sigma, const MonotoneFn& gamma,
                             double q_scale) {
    if (!(lambda > 0.0 && lambda < 1.0) || !(sigma > 0.0 && sigma < 1.0))
        throw std::invalid_argument("example: lambda and sigma must lie in (0, 1)");
    if (!(q_scale > 0.0 && q_scale <= 1.0))
        throw std::invalid_argument("example: q_scale must lie in (0, 1]");
    if (gamma.fn_class() != FnClass::Kinf)
        throw std::invalid_argument("example: gamma must be class Kinf");

    Example43 ex;
    const auto x1 = ScalarField::state(0);
    const auto x2 = ScalarField::state(1);
    const auto x3 = ScalarField::state(2);
    const auto gamma_abs_x3 = monotone_as_field(gamma, ScalarField::abs_of(x3));
    const auto g_field = x2 * x3 * (ScalarField::abs_of(x2) - gamma_abs_x3) *
                         (gamma_abs_x3 - ScalarField::constant(lambda) * ScalarField::abs_of(x2));

    ex.sys.n = 3;
    ex.sys.l = 0;
    ex.sys.f = {-x1 + x2, -x2, x1 * x1};
    ex.sys.g = {ScalarField::constant(0.0), g_field, ScalarField::constant(1.0)};
    ex.sys.input = ControlSet::all_reals();
    ex.sys.validate();

    GainMatrix gt(3);
    gt.set(0, 1, MonotoneFn::linear(1.0 / (1.0 - sigma)));
    gt.set(1, 0, MonotoneFn::linear(lambda * (1.0 - sigma)));
    gt.set(1, 2, gamma);
    gt.set(2, 0, MonotoneFn::scaled_inverse(gamma, lambda * (1.0 - sigma), 1.0));
    gt.set(2, 1, MonotoneFn::scaled_inverse(gamma, lambda, 1.0));

    const double g0 = std::abs(g_field.eval(std::vector<double>(3, 0.0)));
    // slope condition at the origin
    const double slope0 = gamma.eval(1e-9) / 1e-9;
    if (!(slope0 > sigma * g0 / (1.0 - sigma)))
        throw std::invalid_argument("example: gamma slope at 0 too small for this sigma");

    // Admissible window for the local gain p: shrink the ball until the
    // window opens.
    std::mt19937_64 rng(7777);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double r = 0.5, p = 0.0, lipschitz = 0.0;
    bool found = false;
    for (int attempt = 0; attempt < 40 && !found; ++attempt, r *= 0.5) {
        double g1 = std::numeric_limits<double>::infinity(), g2 = 0.0;
        for (double s = r; s > 1e-14; s *= 0.5) {
            const double ratio = gamma.eval(s) / s;
            g1 = std::min(g1, ratio);
            g2 = std::max(g2, ratio);
        }
        // sampled gradient bound of the coupling term on the 2r ball
        double grad_bound = 0.0;
        std::vector<double> pt(3);
        for (int t = 0; t < 2000; ++t) {
            double nrm = 0.0;
            for (auto& v : pt) {
                v = gauss(rng);
                nrm += v * v;
            }
            nrm = std::sqrt(nrm);
            if (nrm == 0.0) continue;
            const double rad = 2.0 * r * std::pow(static_cast<double>(t % 100 + 1) / 100.0, 1.0 / 3.0);
            for (auto& v : pt) v *= rad / nrm;
            if (g_field.kink_distance(pt) < 1e-9) continue;
            grad_bound = std::max(grad_bound, norm2(g_field.gradient(3, pt)));
        }
        lipschitz = 1.2 * grad_bound;
        const double lo = r * g2 / (lambda * (1.0 - sigma)) + sigma;
        const double hi = g1 * (1.0 - sigma) / (lipschitz * r + g0);
        if (lo < hi) {
            p = 0.5 * (lo + hi);
            found = true;
        }
    }
    if (!found)
        throw std::runtime_error("example: no admissible local gain window down to r = 2^-40");
    r *= 2.0;  // undo the final halving

    ex.p = p;
    ex.r = r;
    ex.lipschitz = lipschitz;

    CorollaryConfig cfg;
    cfg.sys = ex.sys;
    cfg.gamma_tilde = gt;
    cfg.Q = Scalar1D::constant(q_scale * sigma);
    cfg.eta = ScalarField::constant(-1.0);
    const auto half = ScalarField::constant(0.5);
    cfg.W = ScalarField::constant(1.0) + half * (x1 * x1 + x2 * x2 + x3 * x3);
    cfg.delta = Scalar1D::constant(1.0);
    cfg.Kfun = Scalar1D::constant(1.0);
    cfg.epsilon = 1.0;
    cfg.kvec = {0.0, 0.0, -p};
    cfg.kbar = ScalarField::constant(0.0);
    cfg.local_radius = r;
    ex.cfg = std::move(cfg);
    return ex;
}

std::optional<Condition49Witness> find_condition49_witness(const MonotoneFn& gamma,
                                                           double lambda, double p,
                                                           double q) {
    const auto gamma_inv = MonotoneFn::scaled_inverse(gamma, 1.0, 1.0);
    for (int j = 0; j <= 60; ++j) {
        const double x2 = std::pow(2.0, -j);
        const double disc = (lambda - 1.0) * (lambda - 1.0) * x2 * x2 + 4.0 * q / (p * x2 * x2);
        const double target = 0.5 * (lambda + 1.0) * x2 + 0.5 * std::sqrt(disc);
        const double x3 = gamma_inv.eval(target);
        const double gx3 = gamma.eval(x3);
        const double g = x2 * x3 * (x2 - gx3) * (gx3 - lambda * x2);
        const double residual = std::abs(q * x3 + p * x2 * g) / std::max(1.0, std::abs(q * x3));
        if (residual > 1e-8) continue;
        const double lhs = 1.0 - x2 + p * x2 * x2;  // x1 = 1
        const double rhs = q * x3;
        if (lhs <= rhs - 1e-9 * std::max(1.0, std::abs(rhs)))
            return Condition49Witness{{1.0, x2, x3}, residual, lhs, rhs};
    }
    return std::nullopt;
}

ConditionReport example44_conditions(const ScalarField& g, const Example44Params& prm,
                                     const SampleParams& sampling) {
    if (g.depends_on_state(2))
        throw std::invalid_argument("example: the coupling term must not depend on x3");
    if (!(prm.a >= prm.c && prm.c > 0.0))
        throw std::invalid_argument("example: constants must satisfy a >= c > 0");

    ConditionReport rep;
    rep.total_samples = sampling.samples;
    auto& slab = rep.get("slab_coupling");
    auto& relax = rep.get("slab_relaxation");  // antecedent hits outside the slab
    auto& constants = rep.get("constants");
    auto& growth = rep.get("w_growth");
    auto& decay = rep.get("eta_decay");
    auto& ex_eta = rep.get("eta_exchange_ball");
    auto& ex_w2 = rep.get("w_exchange_mid");
    auto& ex_w3 = rep.get("w_exchange_end");

    record_condition(constants, true, 2.0 * (prm.a + prm.epsilon) - prm.R, prm.R, {});

    std::mt19937_64 rng(sampling.seed);
    std::vector<std::uniform_real_distribution<double>> dims;
    for (const auto& [lo, hi] : sampling.box) dims.emplace_back(lo, hi);

    auto gamma_of = [&](double s) { return prm.gamma.eval(std::abs(s)); };
    const double K0 = 1.0 / prm.c;

    std::vector<double> x(3);
    for (long t = 0; t < sampling.samples; ++t) {
        for (int i = 0; i < 3; ++i) x[static_cast<std::size_t>(i)] = dims[static_cast<std::size_t>(i)](rng);
        const double x1 = x[0], x2 = x[1], x3 = x[2];
        const double gv = g.eval(x);
        const double g3 = gamma_of(x3);
        const double planar = x1 * x1 + x2 * x2;
        const double eta = -prm.a + 0.5 * planar;
        const double W = 1.0 + 0.5 * (planar + x3 * x3);
        const double Keta = 2.0 * (eta + prm.a) + K0;

        // coupling condition, antecedent with and without the slab bound
        const bool coupling_ante = prm.lambda * (1.0 - prm.sigma) * std::abs(x1) <= g3 &&
                                   prm.lambda * std::abs(x2) <= g3 &&
                                   g3 <= std::abs(x2) && x2 * x3 * gv < 0.0;
        if (coupling_ante) {
            const double excess = std::abs(x2 * x3 * gv) * prm.q(x3) -
                                  x2 * x2 * (1.0 - prm.q(x2)) - x2 * x1 * x1 * gv;
            if (planar <= prm.R)
                record_condition(slab, true, excess, x2 * x2, x);
            else
                record_condition(relax, true, 0.0, 1.0, x);
        }

        if (eta >= 0.0) {
            const double base = -x1 * x1 + x1 * x2 - x2 * x2;
            record_condition(growth, true, base + x3 * x1 * x1 - Keta * W, Keta * W, x);
            record_condition(decay, true, base + eta + prm.a, base, x);
        }

        const bool in_shell = 2.0 * prm.a <= planar && planar <= 2.0 * (prm.a + prm.epsilon);
        if (in_shell) {
            const double base = -x1 * x1 + x1 * x2 - x2 * x2;
            // component 3 induced control, eta side
            if (prm.lambda * (1.0 - prm.sigma) * std::abs(x1) <= g3 &&
                prm.lambda * std::abs(x2) <= g3 && x3 * x2 * gv < 0.0) {
                const double lhs = base - x2 * gv * (x1 * x1 + x3 * prm.q(x3));
                record_condition(ex_eta, true, lhs + prm.c, lhs, x);
            }
            // component 2 induced control, W side
            if (prm.lambda * (1.0 - prm.sigma) * std::abs(x1) <= std::abs(x2) &&
                g3 <= std::abs(x2) && x2 * gv * (x2 * gv + x3) < 0.0 && gv != 0.0) {
                const double lhs = base + x3 * x1 * x1 -
                                   x2 * (x2 * gv + x3) * (prm.q(x2) - 1.0) / gv;
                record_condition(ex_w2, true, lhs - Keta * W, Keta * W, x);
            }
            // component 3 induced control, W side
            if (prm.lambda * (1.0 - prm.sigma) * std::abs(x1) <= g3 &&
                prm.lambda * std::abs(x2) <= g3 && x3 * (x2 * gv + x3) < 0.0) {
                const double lhs = base - x2 * gv * x1 * x1 -
                                   (x2 * gv + x3) * x3 * prm.q(x3);
                record_condition(ex_w3, true, lhs - Keta * W, Keta * W, x);
            }
        }
    }
    return rep;
}

std::optional<Example44Params> example44_find_constants(const ScalarField& g,
                                                        const Example44Params& base,
                                                        const SampleParams& sampling) {
    for (int ia = 0; ia < 4; ++ia)
        for (int ic = 0; ic < 4; ++ic)
            for (int ie = 0; ie < 4; ++ie) {
                Example44Params prm = base;
                prm.a = base.a * std::pow(0.5, ia);
                prm.c = std::min(prm.a, base.c * std::pow(0.5, ic));
                prm.epsilon = base.epsilon * std::pow(0.5, ie);
                if (2.0 * (prm.a + prm.epsilon) > prm.R) continue;
                const auto rep = example44_conditions(g, prm, sampling);
                bool ok = true;
                for (const auto& s : rep.stats)
                    if (s.name != "slab_relaxation" && !s.passed()) ok = false;
                if (ok) return prm;
            }
    return std::nullopt;
}

}  // namespace vclf
