#include "vclf/synthesis.hpp"

#include <cmath>

namespace vclf {

double bump(double s) {
    auto phi = [](double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; };
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 1.0;
    const double a = phi(s);
    return a / (a + phi(1.0 - s));
}

const char* to_string(FeedbackRegion r) {
    switch (r) {
        case FeedbackRegion::Origin: return "origin";
        case FeedbackRegion::LocalCore: return "local_core";
        case FeedbackRegion::LocalBlend: return "local_blend";
        case FeedbackRegion::Decrease: return "decrease";
        case FeedbackRegion::DecreaseBlend: return "decrease_blend";
        case FeedbackRegion::Transition: return "transition";
        case FeedbackRegion::EscapeBlend: return "escape_blend";
        case FeedbackRegion::Escape: return "escape";
    }
    return "?";
}

SynthesisError::SynthesisError(std::string region, std::vector<double> x, Infeasibility inf)
    : std::runtime_error("synthesis: no admissible control in region '" + region +
                         "' (violated: " + to_string(inf.cause) + ")"),
      region_(std::move(region)),
      witness_(std::move(x)),
      inf_(inf) {}

namespace {

double norm2(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

void append_escape_constraints(const ControlAffineSystem& sys, const VRCLFSpec& spec,
                               std::span<const double> x,
                               std::vector<AffineConstraint>& cs) {
    const auto dc = sys.dbox_center();
    const double eta = spec.eta.eval(x, dc);
    const auto le = lie_derivatives(sys, spec.eta, x, dc);
    const double max_lf_eta = max_lie_over_disturbances(sys, spec.eta, x).value;
    cs.push_back({max_lf_eta + kConstructionMarginFactor * spec.delta(eta), le.along_g, "eta"});

    const double w = spec.W.eval(x, dc);
    const auto lw = lie_derivatives(sys, spec.W, x, dc);
    const double max_lf_w = max_lie_over_disturbances(sys, spec.W, x).value;
    cs.push_back({max_lf_w - kGrowthMarginFactor * spec.Kfun(eta) * w, lw.along_g, "W"});
}

void append_decrease_constraints(const ControlAffineSystem& sys, const VRCLFSpec& spec,
                                 std::span<const double> x,
                                 std::vector<AffineConstraint>& cs) {
    const auto dc = sys.dbox_center();
    for (int j : active_set(spec, x)) {
        const auto& vj = spec.V[static_cast<std::size_t>(j)];
        const double v = vj.eval(x, dc);
        const auto lv = lie_derivatives(sys, vj, x, dc);
        const double max_lf = max_lie_over_disturbances(sys, vj, x).value;
        cs.push_back({max_lf + kConstructionMarginFactor * spec.rho(v), lv.along_g,
                      "V" + std::to_string(j + 1)});
    }
}

double solve_or_throw(const ControlAffineSystem& sys, std::span<const double> x,
                      std::vector<AffineConstraint>&& cs, const char* region) {
    if (cs.empty()) {
        // vacuous constraint set: min-norm element of U
        const FeasibleInterval whole{sys.input.lower(), sys.input.upper()};
        return select_u(whole, sys.input);
    }
    const auto res = feasible_interval(cs, sys.input);
    if (!res.feasible)
        throw SynthesisError(region, {x.begin(), x.end()}, res.infeasibility);
    return select_u(res.interval, sys.input);
}

}  // namespace

double escape_controller(const ControlAffineSystem& sys, const VRCLFSpec& spec,
                         std::span<const double> x) {
    std::vector<AffineConstraint> cs;
    append_escape_constraints(sys, spec, x, cs);
    return solve_or_throw(sys, x, std::move(cs), "escape");
}

double decrease_controller(const ControlAffineSystem& sys, const VRCLFSpec& spec,
                           std::span<const double> x) {
    std::vector<AffineConstraint> cs;
    append_decrease_constraints(sys, spec, x, cs);
    return solve_or_throw(sys, x, std::move(cs), "decrease");
}

double transition_controller(const ControlAffineSystem& sys, const VRCLFSpec& spec,
                             std::span<const double> x) {
    std::vector<AffineConstraint> cs;
    append_escape_constraints(sys, spec, x, cs);
    append_decrease_constraints(sys, spec, x, cs);
    return solve_or_throw(sys, x, std::move(cs), "transition");
}

FeedbackLaw::Evaluation FeedbackLaw::evaluate(std::span<const double> x) const {
    const auto& sys = *sys_;
    const auto& spec = *spec_;
    Evaluation out;

    auto clamp_u = [&](double u) {
        return std::min(std::max(u, sys.input.lower()), sys.input.upper());
    };

    const double r = spec.radius;
    const double nrm = norm2(x);
    if (nrm == 0.0) {
        out.region = FeedbackRegion::Origin;
        out.u = 0.0;
        return out;
    }
    if (nrm < r) {
        out.region = FeedbackRegion::LocalCore;
        out.u = clamp_u(spec.local.eval(x));
        return out;
    }
    if (nrm <= 2.0 * r) {
        out.region = FeedbackRegion::LocalBlend;
        const double w = bump((nrm * nrm - r * r) / (3.0 * r * r));
        out.blend_weight = w;
        const double u_local = spec.local.eval(x);
        const double u_dec = decrease_controller(sys, spec, x);
        out.u = clamp_u((1.0 - w) * u_local + w * u_dec);
        return out;
    }

    const double eta = spec.eta.eval(x, sys.dbox_center());
    const double eps = spec.epsilon;
    if (eta < eps / 5.0) {
        out.region = FeedbackRegion::Decrease;
        out.u = clamp_u(decrease_controller(sys, spec, x));
    } else if (eta <= 2.0 * eps / 5.0) {
        out.region = FeedbackRegion::DecreaseBlend;
        const double w = bump(5.0 * eta / eps - 1.0);
        out.blend_weight = w;
        out.u = clamp_u((1.0 - w) * decrease_controller(sys, spec, x) +
                        w * transition_controller(sys, spec, x));
    } else if (eta < 3.0 * eps / 5.0) {
        out.region = FeedbackRegion::Transition;
        out.u = clamp_u(transition_controller(sys, spec, x));
    } else if (eta <= 4.0 * eps / 5.0) {
        out.region = FeedbackRegion::EscapeBlend;
        const double w = bump(5.0 * eta / eps - 3.0);
        out.blend_weight = w;
        out.u = clamp_u((1.0 - w) * transition_controller(sys, spec, x) +
                        w * escape_controller(sys, spec, x));
    } else {
        out.region = FeedbackRegion::Escape;
        out.u = clamp_u(escape_controller(sys, spec, x));
    }
    return out;
}

FeedbackLaw synthesize(ControlAffineSystem sys, VRCLFSpec spec) {
    sys.validate();
    spec.validate(sys);

    bool needs_regularization = false;
    for (int i = 0; i < spec.k && !needs_regularization; ++i)
        for (int j = 0; j < spec.k; ++j)
            if (i != j && !spec.gains.has_edge(i, j)) {
                needs_regularization = true;
                break;
            }
    if (needs_regularization) spec.gains = regularize_gains(spec.gains);

    FeedbackLaw law;
    law.sys_ = std::make_shared<const ControlAffineSystem>(std::move(sys));
    law.spec_ = std::make_shared<const VRCLFSpec>(std::move(spec));
    return law;
}

}  // namespace vclf
