#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>

#include "vclf/synthesis.hpp"

namespace vclf {

/// Disturbance input d(t), always taking values in the system's box.
class DisturbanceSignal {
public:
    static DisturbanceSignal none();
    static DisturbanceSignal constant(std::vector<double> d);
    static DisturbanceSignal piecewise(std::vector<double> switch_times,
                                       std::vector<std::vector<double>> values);
    /// Uniform redraw over the box after exponentially-distributed dwell
    /// times (mean = dwell), fully determined by the seed.
    static DisturbanceSignal seeded_random(std::uint64_t seed, double dwell = 0.1);

    struct Schedule {
        std::vector<double> times;                 // starts, times[0] = 0
        std::vector<std::vector<double>> values;   // one vector per segment
    };
    /// Concrete piecewise-constant realization over [0, T].
    Schedule realize(const std::vector<std::array<double, 2>>& box, double T) const;

private:
    enum class Kind : std::uint8_t { Constant, Piecewise, Seeded } kind_ = Kind::Constant;
    std::vector<double> value_;
    std::vector<double> times_;
    std::vector<std::vector<double>> values_;
    std::uint64_t seed_ = 0;
    double dwell_ = 0.1;
};

struct IntegrateOptions {
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    double h_init = 1e-3;
    double h_min = 1e-12;
    double h_max = 0.05;
    long max_steps = 4000000;
};

/// One simulated run: states and the sample-and-hold control at accepted
/// steps, plus certificate channels once annotated against a spec.
struct Trajectory {
    std::vector<double> times;
    std::vector<std::vector<double>> states;
    std::vector<double> controls;  // held over [times[i], times[i+1])
    long accepted = 0;
    long rejected = 0;

    std::vector<std::vector<double>> V;     // per step, k components
    std::vector<double> eta;
    std::vector<double> W;
    std::vector<std::uint32_t> active_mask;
    bool annotated = false;

    const std::vector<double>& back_state() const { return states.back(); }
};

/// Thrown when the step controller underflows or the state leaves the
/// representable range; carries the blame state.
class IntegrationError : public std::runtime_error {
public:
    IntegrationError(std::string what, double t, std::vector<double> x);
    double time() const { return t_; }
    const std::vector<double>& state() const { return x_; }

private:
    double t_;
    std::vector<double> x_;
};

/// Embedded 4(5) pair with adaptive steps. The control is re-evaluated at
/// each accepted step start and held constant across the step (including
/// retries); disturbance switch times are forced step boundaries.
Trajectory integrate(const ControlAffineSystem& sys,
                     const std::function<double(double, std::span<const double>)>& control,
                     const DisturbanceSignal& dist, std::span<const double> x0, double t_end,
                     const IntegrateOptions& opts = {});

/// Closed-loop convenience wrapper.
Trajectory integrate(const FeedbackLaw& law, const DisturbanceSignal& dist,
                     std::span<const double> x0, double t_end,
                     const IntegrateOptions& opts = {});

/// Fills the certificate channels (V_i, eta, W, active set).
void annotate(Trajectory& traj, const ControlAffineSystem& sys, const VRCLFSpec& spec);

/// Residual tolerance scale for the trajectory monitors.
inline double monitor_tolerance(double rate) { return 1e-5 * (1.0 + std::abs(rate)); }

struct MonitorViolation {
    double t = 0.0;
    std::string check;
    double residual = 0.0;
    double tolerance = 0.0;
};

struct MonitorReport {
    long steps_checked = 0;
    std::vector<MonitorViolation> violations;  // capped
    long violation_count = 0;

    bool passed() const { return violation_count == 0; }
};

/// Finite-difference certificate monitors along one trajectory, applied
/// on the region shifted by 2 eps / 5:
///   sandwich    bound_lo(|x|) <= max V <= bound_hi(|x|) below the shift
///   eta_decay   d eta/dt <= -delta(eta)/2 above the shift
///   w_growth    d W/dt <= 2 K(eta) W above the shift
///   lyap_decay  d V_i/dt <= -rho(V_i)/2 below the shift, i active
MonitorReport monitor(const Trajectory& traj, const ControlAffineSystem& sys,
                      const VRCLFSpec& spec);

struct KLEstimate {
    std::vector<double> bin_edges;            // |x0| bin boundaries
    std::vector<double> t_grid;
    std::vector<std::vector<double>> raw;      // per bin, max |x(t)| over members
    std::vector<std::vector<double>> envelope; // isotonic nonincreasing smoothing
    std::vector<int> bin_counts;
    long monotonicity_violations = 0;
    std::vector<double> final_values;          // envelope at t_end per bin
    bool decays = false;  // every bin ends below 1e-3 * its radius
};

/// Empirical decay envelope over a batch grouped by initial-state norm.
/// Requires at least min_per_bin trajectories in every nonempty bin.
KLEstimate estimate_kl(const std::vector<Trajectory>& batch, int bins = 4,
                       int t_points = 200, int min_per_bin = 5);

struct CsvOptions {
    bool exponentiate_states = false;  // write exp(x) instead of x
    std::string state_prefix = "x";
    bool dilution_input = false;       // write D = clamp(1 + u, 0, d_max)
    double d_max = 0.0;
};

/// Deterministic text output: t, states, input, then the certificate
/// channels when the trajectory is annotated.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                          const CsvOptions& opts = {});

}  // namespace vclf
