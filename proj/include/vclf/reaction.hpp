#pragma once

#include <optional>
#include <utility>

#include "vclf/report.hpp"
#include "vclf/synthesis.hpp"
#include "vclf/vclf_spec.hpp"

namespace vclf {

/// Stirred-tank reaction network cdot = D (c_f - c) + S v(c) with the
/// dilution rate D in [0, D_max] as the scalar input.
struct ReactionNetwork {
    int n = 0;  // species
    int m = 0;  // reactions
    std::vector<std::vector<double>> S;  // n rows, m columns
    std::vector<ScalarField> rates;      // m fields over the concentrations
    std::vector<double> c_f;             // feed concentrations
    double D_max = 0.0;

    void validate() const;
    double stoich(int i, int j) const { return S[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]; }
    /// sigma = max_i sum over consuming reactions of |S_ij|
    double consumption_weight() const;
};

struct ConservationPair {
    std::vector<double> p;  // species weights
    std::vector<double> q;  // reaction weights, q = S'p >= 0
};

struct ConservationData {
    std::vector<ConservationPair> pairs;
    double b = 0.0;  // affine growth bound: max_i c_i <= b + R * total defect
    double R = 0.0;
    MonotoneFn gfun;  // class-Kinf rate domination profile
};

/// total defect: sum_l max(p_l' c_f - p_l' c, 0)
double conservation_defect(const ConservationData& cons, std::span<const double> c_f,
                           std::span<const double> c);

/// Left-null-space basis of S (pairs with q = 0), entries below 1e-12
/// snapped to zero.
std::vector<ConservationPair> find_conservation(const std::vector<std::vector<double>>& S);

/// S' p = q componentwise within tol, q >= 0.
bool verify_conservation_pair(const std::vector<std::vector<double>>& S,
                              const ConservationPair& pair, double tol = 1e-10);

/// Sampled hypotheses: conservation pairs, the affine growth bound, rate
/// nonnegativity, the consumed-species domination profile and the
/// vanishing of rates on depleted-reactant boundaries.
ConditionReport verify_hypotheses(const ReactionNetwork& net, const ConservationData& cons,
                                  const SampleParams& params);

// -- equilibrium analysis ----------------------------------------------------

struct EquilibriumReport {
    std::vector<std::vector<double>> roots;  // interior equilibria
    std::vector<double> residuals;           // max-norm residual per root
    std::string method;                      // "bisection" or "newton"
    // For the two-species single-reaction reduction: the closed-form root
    // count predicted by the product threshold, and whether it matched.
    std::optional<int> threshold_prediction;
    bool threshold_consistent = true;
};

/// All interior equilibria of the network at dilution rate dstar.
/// Two-species single-reaction networks with rate kappa*c1*c2^2 reduce to a
/// scalar equation solved by bracketed bisection on monotone pieces; other
/// networks fall back to damped Newton from a grid of starts.
EquilibriumReport equilibria(const ReactionNetwork& net, double dstar);

/// The scalar reduction itself (exposed for direct use): roots y of
/// y - kappa (M - y) y^2 = c2f on [c2f, M].
std::vector<double> scalar_equilibrium_roots(double kappa, double c1f, double c2f);

// -- stabilization pipeline ---------------------------------------------------

/// Log-coordinate control-affine form around the equilibrium 1_n with the
/// shifted dilution input u = D - 1 constrained to [-1, D_max - 1].
/// The network must already be normalized (c* = 1_n at D* = 1).
ControlAffineSystem log_transform(const ReactionNetwork& net);

/// Rescales concentrations by c_star and time by dstar so the equilibrium
/// moves to 1_n with unit dilution. Conservation pairs are rescaled too;
/// the growth-bound constants must be re-verified afterwards.
std::pair<ReactionNetwork, ConservationData> normalize_network(
    const ReactionNetwork& net, const ConservationData& cons,
    std::span<const double> c_star, double dstar);

struct Thm52Config {
    GainMatrix gamma_tilde{1};  // gains on the |ln c| scale
    Scalar1D Qt;                // decay profile on concentrations
    double epsilon = 0.1;
    double omega = 0.0;
    std::vector<double> kvec;   // local law D = 1 + kvec' ln(c)
};

/// Candidate certificate over the log coordinates: quadratic components,
/// the squared-defect escape function and the feed-mass energy bound.
VRCLFSpec build_thm52_spec(const ReactionNetwork& net, const ConservationData& cons,
                           const Thm52Config& cfg);

/// Pointwise probe of the local dilution law D = 1 + kvec' x at one
/// log-coordinate point: every gain-active component must decrease.
bool local_law_holds(const ReactionNetwork& net, const Thm52Config& cfg,
                     std::span<const double> x);

/// Sampled verification of the dilution-feedback conditions:
///   pair_ratio       coupled decrease ratio under the D windows
///   feed_boundary    decay on the hyperplanes c_i = c_{i,f}
///   shell_budget     the omega budget on the defect shell
///   window_decay     reaction-driven decay inside the D window
///   outer_pushback   D_max suffices outside the window
///   local_law        linear dilution law decreases components near 1_n
ConditionReport check_thm52_conditions(const ReactionNetwork& net,
                                       const ConservationData& cons,
                                       const Thm52Config& cfg,
                                       const SampleParams& params);

/// Lower bounds on D_max for the two-species instance with rate slope
/// theta and feed ratio mu.
std::pair<double, double> dmax_bound(double theta, double mu);

/// Stabilizing dilution feedback D(c) = clamp(1 + u(ln c), 0, D_max).
class DilutionFeedback {
public:
    DilutionFeedback(FeedbackLaw law, double d_max)
        : law_(std::move(law)), d_max_(d_max) {}

    double dilution(std::span<const double> c) const;
    const FeedbackLaw& law() const { return law_; }
    double d_max() const { return d_max_; }

private:
    FeedbackLaw law_;
    double d_max_;
};

DilutionFeedback stabilize(const ReactionNetwork& net, const ConservationData& cons,
                           const Thm52Config& cfg);

// -- worked two-species instance ----------------------------------------------

/// Normalized A -> B network: S = [[-1], [mu]], rate theta*c1*c2^2, feed
/// (1+theta, 1-mu*theta). Requires 0 < mu < 1/theta; the boundary case has
/// zero product feed and is rejected.
std::pair<ReactionNetwork, ConservationData> example51_network(double theta, double mu,
                                                               double d_max);

/// Gain/profile selections for the two-species instance: gains gamma and
/// lambda-scaled inverse, the derived decay profile with its amplitude A,
/// and the omega budget, both picked maximal under their closed-form
/// bounds.
Thm52Config example51_config(double theta, double mu, double epsilon = 0.1,
                             const MonotoneFn& gamma = MonotoneFn::identity(),
                             double lambda = 0.75);

/// Sampling-box default for the shell thickness: a tenth of the squared
/// smallest positive boundary defect, clamped to [1e-4, 0.5].
double default_epsilon(const ReactionNetwork& net, const ConservationData& cons,
                       const std::vector<std::array<double, 2>>& box,
                       std::uint64_t seed = 99);

}  // namespace vclf
