#include "vclf/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

namespace vclf {

DisturbanceSignal DisturbanceSignal::none() { return DisturbanceSignal{}; }

DisturbanceSignal DisturbanceSignal::constant(std::vector<double> d) {
    DisturbanceSignal s;
    s.kind_ = Kind::Constant;
    s.value_ = std::move(d);
    return s;
}

DisturbanceSignal DisturbanceSignal::piecewise(std::vector<double> switch_times,
                                               std::vector<std::vector<double>> values) {
    if (values.empty() || switch_times.size() + 1 != values.size())
        throw std::invalid_argument("disturbance: need one more value than switch time");
    if (!std::is_sorted(switch_times.begin(), switch_times.end()))
        throw std::invalid_argument("disturbance: switch times must be sorted");
    DisturbanceSignal s;
    s.kind_ = Kind::Piecewise;
    s.times_ = std::move(switch_times);
    s.values_ = std::move(values);
    return s;
}

DisturbanceSignal DisturbanceSignal::seeded_random(std::uint64_t seed, double dwell) {
    if (!(dwell > 0.0)) throw std::invalid_argument("disturbance: dwell must be positive");
    DisturbanceSignal s;
    s.kind_ = Kind::Seeded;
    s.seed_ = seed;
    s.dwell_ = dwell;
    return s;
}

DisturbanceSignal::Schedule DisturbanceSignal::realize(
    const std::vector<std::array<double, 2>>& box, double T) const {
    Schedule sched;
    switch (kind_) {
        case Kind::Constant: {
            std::vector<double> v = value_;
            if (v.empty())
                for (const auto& [lo, hi] : box) v.push_back(0.5 * (lo + hi));
            if (v.size() != box.size())
                throw std::invalid_argument("disturbance: dimension mismatch");
            for (std::size_t i = 0; i < v.size(); ++i)
                if (v[i] < box[i][0] || v[i] > box[i][1])
                    throw std::invalid_argument("disturbance: value outside the box");
            sched.times = {0.0};
            sched.values = {std::move(v)};
            return sched;
        }
        case Kind::Piecewise: {
            for (const auto& v : values_) {
                if (v.size() != box.size())
                    throw std::invalid_argument("disturbance: dimension mismatch");
                for (std::size_t i = 0; i < v.size(); ++i)
                    if (v[i] < box[i][0] || v[i] > box[i][1])
                        throw std::invalid_argument("disturbance: value outside the box");
            }
            sched.times = {0.0};
            for (double t : times_)
                if (t > 0.0 && t < T) sched.times.push_back(t);
            sched.values.assign(values_.begin(),
                                values_.begin() + static_cast<long>(sched.times.size()));
            return sched;
        }
        case Kind::Seeded: {
            std::mt19937_64 rng(seed_);
            std::exponential_distribution<double> dwell(1.0 / dwell_);
            double t = 0.0;
            while (t < T) {
                sched.times.push_back(t);
                std::vector<double> v(box.size());
                for (std::size_t i = 0; i < box.size(); ++i) {
                    std::uniform_real_distribution<double> u(box[i][0], box[i][1]);
                    v[i] = u(rng);
                }
                sched.values.push_back(std::move(v));
                t += dwell(rng);
            }
            return sched;
        }
    }
    throw std::logic_error("disturbance: bad kind");
}

IntegrationError::IntegrationError(std::string what, double t, std::vector<double> x)
    : std::runtime_error(std::move(what)), t_(t), x_(std::move(x)) {}

namespace {

// Dormand-Prince 5(4) coefficients.
constexpr double kA21 = 1.0 / 5;
constexpr double kA31 = 3.0 / 40, kA32 = 9.0 / 40;
constexpr double kA41 = 44.0 / 45, kA42 = -56.0 / 15, kA43 = 32.0 / 9;
constexpr double kA51 = 19372.0 / 6561, kA52 = -25360.0 / 2187, kA53 = 64448.0 / 6561,
                 kA54 = -212.0 / 729;
constexpr double kA61 = 9017.0 / 3168, kA62 = -355.0 / 33, kA63 = 46732.0 / 5247,
                 kA64 = 49.0 / 176, kA65 = -5103.0 / 18656;
constexpr double kB1 = 35.0 / 384, kB3 = 500.0 / 1113, kB4 = 125.0 / 192,
                 kB5 = -2187.0 / 6784, kB6 = 11.0 / 84;
constexpr double kE1 = 71.0 / 57600, kE3 = -71.0 / 16695, kE4 = 71.0 / 1920,
                 kE5 = -17253.0 / 339200, kE6 = 22.0 / 525, kE7 = -1.0 / 40;

}  // namespace

Trajectory integrate(const ControlAffineSystem& sys,
                     const std::function<double(double, std::span<const double>)>& control,
                     const DisturbanceSignal& dist, std::span<const double> x0, double t_end,
                     const IntegrateOptions& opts) {
    if (!(t_end > 0.0)) throw std::invalid_argument("integrate: horizon must be positive");
    if (static_cast<int>(x0.size()) != sys.n)
        throw std::invalid_argument("integrate: initial state dimension mismatch");

    const auto sched = dist.realize(sys.dbox, t_end);
    const auto n = static_cast<std::size_t>(sys.n);

    Trajectory traj;
    std::vector<double> x(x0.begin(), x0.end());
    double t = 0.0;
    std::size_t seg = 0;

    auto next_boundary = [&](double now) {
        double b = t_end;
        if (seg + 1 < sched.times.size()) b = std::min(b, sched.times[seg + 1]);
        return b - now;
    };

    std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), xt(n), xn(n);
    double h = std::min(opts.h_init, opts.h_max);

    traj.times.push_back(t);
    traj.states.push_back(x);
    traj.controls.push_back(control(t, x));

    long steps = 0;
    const double snap = 1e-12 * std::max(1.0, t_end);
    while (t < t_end - snap) {
        if (++steps > opts.max_steps)
            throw IntegrationError("integrate: step budget exhausted", t, x);
        while (seg + 1 < sched.times.size() && t >= sched.times[seg + 1] - 1e-15) ++seg;
        const auto& d = sched.values[seg];
        const double u = traj.controls.back();  // sample-and-hold

        const double remaining = next_boundary(t);
        h = std::min({h, opts.h_max, remaining});
        if (h < opts.h_min)
            throw IntegrationError("integrate: step size underflow", t, x);

        auto rhs = [&](std::span<const double> xs, std::span<double> out) {
            sys.rhs(xs, d, u, out);
            for (double v : out)
                if (!std::isfinite(v))
                    throw IntegrationError("integrate: non-finite derivative", t,
                                           {xs.begin(), xs.end()});
        };

        rhs(x, k1);
        for (std::size_t i = 0; i < n; ++i) xt[i] = x[i] + h * kA21 * k1[i];
        rhs(xt, k2);
        for (std::size_t i = 0; i < n; ++i) xt[i] = x[i] + h * (kA31 * k1[i] + kA32 * k2[i]);
        rhs(xt, k3);
        for (std::size_t i = 0; i < n; ++i)
            xt[i] = x[i] + h * (kA41 * k1[i] + kA42 * k2[i] + kA43 * k3[i]);
        rhs(xt, k4);
        for (std::size_t i = 0; i < n; ++i)
            xt[i] = x[i] + h * (kA51 * k1[i] + kA52 * k2[i] + kA53 * k3[i] + kA54 * k4[i]);
        rhs(xt, k5);
        for (std::size_t i = 0; i < n; ++i)
            xt[i] = x[i] + h * (kA61 * k1[i] + kA62 * k2[i] + kA63 * k3[i] + kA64 * k4[i] +
                                kA65 * k5[i]);
        rhs(xt, k6);
        for (std::size_t i = 0; i < n; ++i)
            xn[i] = x[i] + h * (kB1 * k1[i] + kB3 * k3[i] + kB4 * k4[i] + kB5 * k5[i] +
                                kB6 * k6[i]);
        rhs(xn, k7);

        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = h * (kE1 * k1[i] + kE3 * k3[i] + kE4 * k4[i] + kE5 * k5[i] +
                                  kE6 * k6[i] + kE7 * k7[i]);
            const double scale =
                opts.abs_tol + opts.rel_tol * std::max(std::abs(x[i]), std::abs(xn[i]));
            err = std::max(err, std::abs(e) / scale);
        }

        if (err <= 1.0) {
            t += h;
            x = xn;
            if (!std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); }))
                throw IntegrationError("integrate: non-finite state", t, x);
            ++traj.accepted;
            traj.times.push_back(t);
            traj.states.push_back(x);
            traj.controls.push_back(t < t_end ? control(t, x) : traj.controls.back());
        } else {
            ++traj.rejected;
        }
        const double grow = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
        h *= std::clamp(grow, 0.2, 5.0);
    }
    return traj;
}

Trajectory integrate(const FeedbackLaw& law, const DisturbanceSignal& dist,
                     std::span<const double> x0, double t_end,
                     const IntegrateOptions& opts) {
    return integrate(
        law.system(),
        [&law](double, std::span<const double> x) { return law.eval(x); }, dist, x0,
        t_end, opts);
}

void annotate(Trajectory& traj, const ControlAffineSystem& sys, const VRCLFSpec& spec) {
    (void)sys;
    const std::size_t steps = traj.times.size();
    traj.V.assign(steps, {});
    traj.eta.assign(steps, 0.0);
    traj.W.assign(steps, 0.0);
    traj.active_mask.assign(steps, 0);
    for (std::size_t q = 0; q < steps; ++q) {
        const auto& x = traj.states[q];
        auto& vrow = traj.V[q];
        vrow.resize(static_cast<std::size_t>(spec.k));
        for (int i = 0; i < spec.k; ++i)
            vrow[static_cast<std::size_t>(i)] = spec.V[static_cast<std::size_t>(i)].eval(x);
        traj.eta[q] = spec.eta.eval(x);
        traj.W[q] = spec.W.eval(x);
        std::uint32_t mask = 0;
        for (int i : active_set(spec, x)) mask |= 1U << i;
        traj.active_mask[q] = mask;
    }
    traj.annotated = true;
}

MonitorReport monitor(const Trajectory& traj, const ControlAffineSystem& sys,
                      const VRCLFSpec& spec) {
    Trajectory scratch;
    const Trajectory* tp = &traj;
    if (!traj.annotated) {
        scratch = traj;
        annotate(scratch, sys, spec);
        tp = &scratch;
    }
    const Trajectory& tr = *tp;

    MonitorReport rep;
    const double shift = 2.0 * spec.epsilon / 5.0;
    auto norm = [](std::span<const double> x) {
        double s = 0.0;
        for (double v : x) s += v * v;
        return std::sqrt(s);
    };
    auto add = [&rep](double t, const char* check, double residual, double tol) {
        ++rep.violation_count;
        if (rep.violations.size() < 64) rep.violations.push_back({t, check, residual, tol});
    };

    for (std::size_t q = 0; q + 1 < tr.times.size(); ++q) {
        ++rep.steps_checked;
        const double dt = tr.times[q + 1] - tr.times[q];
        if (dt <= 0.0) continue;
        const bool below0 = tr.eta[q] - shift <= 0.0;
        const bool below1 = tr.eta[q + 1] - shift <= 0.0;
        const bool above0 = tr.eta[q] - shift >= 0.0;
        const bool above1 = tr.eta[q + 1] - shift >= 0.0;

        if (below0) {
            const double r = norm(tr.states[q]);
            const double vmax =
                *std::max_element(tr.V[q].begin(), tr.V[q].end());
            const double lo = spec.bound_lo.eval(r), hi = spec.bound_hi.eval(r);
            if (vmax < lo - 1e-9 * std::max(1.0, lo))
                add(tr.times[q], "sandwich", lo - vmax, 1e-9 * std::max(1.0, lo));
            if (vmax > hi + 1e-9 * std::max(1.0, hi))
                add(tr.times[q], "sandwich", vmax - hi, 1e-9 * std::max(1.0, hi));
        }

        if (above0 && above1) {
            const double de = (tr.eta[q + 1] - tr.eta[q]) / dt;
            const double resid = de + 0.5 * spec.delta(tr.eta[q]);
            if (resid > monitor_tolerance(de))
                add(tr.times[q], "eta_decay", resid, monitor_tolerance(de));

            const double dw = (tr.W[q + 1] - tr.W[q]) / dt;
            const double bound = 2.0 * spec.Kfun(tr.eta[q]) * tr.W[q];
            if (dw - bound > monitor_tolerance(dw))
                add(tr.times[q], "w_growth", dw - bound, monitor_tolerance(dw));
        }

        if (below0 && below1) {
            const std::uint32_t both = tr.active_mask[q] & tr.active_mask[q + 1];
            for (int i = 0; i < spec.k; ++i) {
                if (!(both & (1U << i))) continue;
                const auto ui = static_cast<std::size_t>(i);
                const double dv = (tr.V[q + 1][ui] - tr.V[q][ui]) / dt;
                const double resid = dv + 0.5 * spec.rho(tr.V[q][ui]);
                if (resid > monitor_tolerance(dv))
                    add(tr.times[q], "lyap_decay", resid, monitor_tolerance(dv));
            }
        }
    }
    return rep;
}

KLEstimate estimate_kl(const std::vector<Trajectory>& batch, int bins, int t_points,
                       int min_per_bin) {
    if (batch.empty()) throw std::invalid_argument("estimate_kl: empty batch");
    auto norm = [](std::span<const double> x) {
        double s = 0.0;
        for (double v : x) s += v * v;
        return std::sqrt(s);
    };

    double max_r0 = 0.0, t_end = std::numeric_limits<double>::infinity();
    for (const auto& tr : batch) {
        max_r0 = std::max(max_r0, norm(tr.states.front()));
        t_end = std::min(t_end, tr.times.back());
    }
    if (!(max_r0 > 0.0)) throw std::invalid_argument("estimate_kl: all runs start at 0");

    KLEstimate est;
    for (int b = 0; b <= bins; ++b) est.bin_edges.push_back(max_r0 * b / bins);
    for (int j = 0; j < t_points; ++j)
        est.t_grid.push_back(t_end * j / (t_points - 1));
    est.raw.assign(static_cast<std::size_t>(bins),
                   std::vector<double>(static_cast<std::size_t>(t_points), 0.0));
    est.bin_counts.assign(static_cast<std::size_t>(bins), 0);

    for (const auto& tr : batch) {
        const double r0 = norm(tr.states.front());
        int b = std::min(bins - 1, static_cast<int>(r0 / max_r0 * bins));
        ++est.bin_counts[static_cast<std::size_t>(b)];
        std::size_t pos = 0;
        for (int j = 0; j < t_points; ++j) {
            const double tj = est.t_grid[static_cast<std::size_t>(j)];
            while (pos + 1 < tr.times.size() && tr.times[pos + 1] < tj) ++pos;
            // linear interpolation of |x| between the bracketing steps
            double r;
            if (pos + 1 >= tr.times.size()) {
                r = norm(tr.states.back());
            } else {
                const double t0 = tr.times[pos], t1 = tr.times[pos + 1];
                const double w = t1 > t0 ? (tj - t0) / (t1 - t0) : 0.0;
                r = (1.0 - w) * norm(tr.states[pos]) + w * norm(tr.states[pos + 1]);
            }
            auto& cell = est.raw[static_cast<std::size_t>(b)][static_cast<std::size_t>(j)];
            cell = std::max(cell, r);
        }
    }

    for (int b = 0; b < bins; ++b)
        if (est.bin_counts[static_cast<std::size_t>(b)] > 0 &&
            est.bin_counts[static_cast<std::size_t>(b)] < min_per_bin)
            throw std::invalid_argument("estimate_kl: a bin has fewer runs than required");

    // pool-adjacent-violators toward a nonincreasing envelope
    est.envelope = est.raw;
    est.decays = true;
    for (int b = 0; b < bins; ++b) {
        auto& env = est.envelope[static_cast<std::size_t>(b)];
        if (est.bin_counts[static_cast<std::size_t>(b)] == 0) continue;
        for (std::size_t j = 1; j < env.size(); ++j)
            if (env[j] > env[j - 1] + 1e-12) ++est.monotonicity_violations;
        for (std::size_t j = 1; j < env.size(); ++j)
            env[j] = std::min(env[j], env[j - 1]);
        est.final_values.push_back(env.back());
        const double radius = est.bin_edges[static_cast<std::size_t>(b) + 1];
        if (env.back() > 1e-3 * radius) est.decays = false;
    }
    return est;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const CsvOptions& opts) {
    const std::size_t n = traj.states.empty() ? 0 : traj.states.front().size();
    os << "t";
    for (std::size_t i = 0; i < n; ++i) os << "," << opts.state_prefix << (i + 1);
    os << (opts.dilution_input ? ",D" : ",u");
    if (traj.annotated) {
        os << ",eta,W";
        for (std::size_t i = 0; i < traj.V.front().size(); ++i) os << ",V" << (i + 1);
        os << ",active_set";
    }
    os << "\n";

    char buf[32];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << buf;
    };
    for (std::size_t q = 0; q < traj.times.size(); ++q) {
        put(traj.times[q]);
        for (std::size_t i = 0; i < n; ++i) {
            os << ",";
            put(opts.exponentiate_states ? std::exp(traj.states[q][i]) : traj.states[q][i]);
        }
        os << ",";
        if (opts.dilution_input)
            put(std::clamp(1.0 + traj.controls[q], 0.0, opts.d_max));
        else
            put(traj.controls[q]);
        if (traj.annotated) {
            os << ",";
            put(traj.eta[q]);
            os << ",";
            put(traj.W[q]);
            for (double v : traj.V[q]) {
                os << ",";
                put(v);
            }
            os << "," << traj.active_mask[q];
        }
        os << "\n";
    }
}

}  // namespace vclf
