#include "vclf/reaction.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

#include "vclf/corollary.hpp"

namespace vclf {

void ReactionNetwork::validate() const {
    if (n < 1 || m < 1) throw std::invalid_argument("network: need species and reactions");
    if (static_cast<int>(S.size()) != n)
        throw std::invalid_argument("network: stoichiometry needs one row per species");
    for (const auto& row : S)
        if (static_cast<int>(row.size()) != m)
            throw std::invalid_argument("network: stoichiometry needs one column per reaction");
    if (static_cast<int>(rates.size()) != m)
        throw std::invalid_argument("network: one rate expression per reaction");
    if (static_cast<int>(c_f.size()) != n)
        throw std::invalid_argument("network: feed vector dimension mismatch");
    for (double v : c_f)
        if (!(v >= 0.0)) throw std::invalid_argument("network: feed must be nonnegative");
    if (!(D_max > 0.0)) throw std::invalid_argument("network: D_max must be positive");
}

double ReactionNetwork::consumption_weight() const {
    double sigma = 0.0;
    for (int i = 0; i < n; ++i) {
        double row = 0.0;
        for (int j = 0; j < m; ++j)
            if (stoich(i, j) < 0.0) row += -stoich(i, j);
        sigma = std::max(sigma, row);
    }
    return sigma;
}

double conservation_defect(const ConservationData& cons, std::span<const double> c_f,
                           std::span<const double> c) {
    double total = 0.0;
    for (const auto& pair : cons.pairs) {
        double pf = 0.0, pc = 0.0;
        for (std::size_t i = 0; i < pair.p.size(); ++i) {
            pf += pair.p[i] * c_f[i];
            pc += pair.p[i] * c[i];
        }
        total += std::max(pf - pc, 0.0);
    }
    return total;
}

std::vector<ConservationPair> find_conservation(const std::vector<std::vector<double>>& S) {
    const int n = static_cast<int>(S.size());
    const int m = n > 0 ? static_cast<int>(S[0].size()) : 0;
    Eigen::MatrixXd st(m, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) st(j, i) = S[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];

    const Eigen::MatrixXd kernel = Eigen::FullPivLU<Eigen::MatrixXd>(st).kernel();
    std::vector<ConservationPair> out;
    if (kernel.cols() == 1 && kernel.isZero(1e-14)) return out;  // trivial null space
    for (int c = 0; c < kernel.cols(); ++c) {
        ConservationPair pair;
        pair.p.resize(static_cast<std::size_t>(n));
        double scale = kernel.col(c).cwiseAbs().maxCoeff();
        if (scale == 0.0) continue;
        for (int i = 0; i < n; ++i) {
            double v = kernel(i, c) / scale;
            if (std::abs(v) < 1e-12) v = 0.0;
            pair.p[static_cast<std::size_t>(i)] = v;
        }
        pair.q.assign(static_cast<std::size_t>(m), 0.0);
        out.push_back(std::move(pair));
    }
    return out;
}

bool verify_conservation_pair(const std::vector<std::vector<double>>& S,
                              const ConservationPair& pair, double tol) {
    const int n = static_cast<int>(S.size());
    const int m = n > 0 ? static_cast<int>(S[0].size()) : 0;
    if (static_cast<int>(pair.p.size()) != n || static_cast<int>(pair.q.size()) != m)
        return false;
    for (int j = 0; j < m; ++j) {
        double dot = 0.0;
        for (int i = 0; i < n; ++i)
            dot += S[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] *
                   pair.p[static_cast<std::size_t>(i)];
        if (std::abs(dot - pair.q[static_cast<std::size_t>(j)]) > tol) return false;
        if (pair.q[static_cast<std::size_t>(j)] < -tol) return false;
    }
    return true;
}

ConditionReport verify_hypotheses(const ReactionNetwork& net, const ConservationData& cons,
                                  const SampleParams& params) {
    net.validate();
    ConditionReport rep;
    rep.total_samples = params.samples;
    auto& pairs_ok = rep.get("r1_pairs");
    auto& growth = rep.get("r2_growth_bound");
    auto& domination = rep.get("r3_rate_domination");
    auto& nonneg = rep.get("rates_nonnegative");
    auto& boundary = rep.get("boundary_zero");

    for (const auto& pair : cons.pairs)
        record_condition(pairs_ok, true, verify_conservation_pair(net.S, pair) ? -1.0 : 1.0,
                         1.0, pair.p);

    std::mt19937_64 rng(params.seed);
    std::vector<std::uniform_real_distribution<double>> dims;
    for (const auto& [lo, hi] : params.box) dims.emplace_back(lo, hi);
    std::vector<double> c(static_cast<std::size_t>(net.n));

    for (long t = 0; t < params.samples; ++t) {
        for (std::size_t i = 0; i < c.size(); ++i) c[i] = dims[i](rng);
        const double cmax = *std::max_element(c.begin(), c.end());
        const double bound = cons.b + cons.R * conservation_defect(cons, net.c_f, c);
        record_condition(growth, true, cmax - bound, bound, c);

        const double dominate = cons.gfun.eval(cmax);
        for (int j = 0; j < net.m; ++j) {
            const double v = net.rates[static_cast<std::size_t>(j)].eval(c);
            record_condition(nonneg, true, -v, v, c);
            for (int i = 0; i < net.n; ++i) {
                if (!(net.stoich(i, j) < 0.0)) continue;
                record_condition(domination, true,
                                 v - dominate * c[static_cast<std::size_t>(i)], v, c);
            }
        }

        // depleted-reactant boundary: rates vanish with the missing species
        for (int i = 0; i < net.n; ++i) {
            bool consumed = false;
            for (int j = 0; j < net.m; ++j) consumed |= net.stoich(i, j) < 0.0;
            if (!consumed) continue;
            std::vector<double> cb = c;
            cb[static_cast<std::size_t>(i)] = 0.0;
            for (int j = 0; j < net.m; ++j) {
                if (!(net.stoich(i, j) < 0.0)) continue;
                const double v = net.rates[static_cast<std::size_t>(j)].eval(cb);
                record_condition(boundary, true, std::abs(v) - 1e-12, v, cb);
            }
        }
    }
    return rep;
}

// -- equilibria ---------------------------------------------------------------

namespace {

// roots y of y - kappa (M - y) y^2 = c2f on [c2f, M]
std::vector<double> cubic_roots_on(double kappa, double M, double c2f) {
    auto h = [&](double y) { return y - kappa * (M - y) * y * y; };

    // split [c2f, M] into monotone pieces at the critical points of h
    std::vector<double> knots{c2f, M};
    const double disc = 4.0 * kappa * kappa * M * M - 12.0 * kappa;
    if (disc >= 0.0) {
        const double root = std::sqrt(disc);
        for (double y : {(2.0 * kappa * M - root) / (6.0 * kappa),
                         (2.0 * kappa * M + root) / (6.0 * kappa)})
            if (y > c2f && y < M) knots.push_back(y);
    }
    std::sort(knots.begin(), knots.end());

    std::vector<double> roots;
    for (std::size_t s = 0; s + 1 < knots.size(); ++s) {
        double lo = knots[s], hi = knots[s + 1];
        double flo = h(lo) - c2f, fhi = h(hi) - c2f;
        if (flo == 0.0) {
            if (roots.empty() || std::abs(roots.back() - lo) > 1e-12) roots.push_back(lo);
            continue;
        }
        if (flo * fhi > 0.0) continue;
        for (int it = 0; it < 200 && hi - lo > 1e-16 * std::max(1.0, hi); ++it) {
            const double mid = 0.5 * (lo + hi);
            const double fm = h(mid) - c2f;
            if (fm == 0.0) { lo = hi = mid; break; }
            if ((fm < 0.0) == (flo < 0.0)) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        const double y = 0.5 * (lo + hi);
        if (roots.empty() || std::abs(roots.back() - y) > 1e-10 * std::max(1.0, y))
            roots.push_back(y);
    }
    return roots;
}

// kappa such that every rate equals kappa*c1*c2^2, or nullopt.
std::optional<double> detect_cubic_rate(const ReactionNetwork& net) {
    if (net.n != 2 || net.m != 1) return std::nullopt;
    const double one[2] = {1.0, 1.0};
    const double kappa = net.rates[0].eval(one);
    if (!(kappa > 0.0)) return std::nullopt;
    std::mt19937_64 rng(4242);
    std::uniform_real_distribution<double> uc(0.05, 4.0);
    for (int t = 0; t < 32; ++t) {
        const double c[2] = {uc(rng), uc(rng)};
        const double expect = kappa * c[0] * c[1] * c[1];
        if (std::abs(net.rates[0].eval(c) - expect) > 1e-9 * std::max(1.0, expect))
            return std::nullopt;
    }
    return kappa;
}

}  // namespace

std::vector<double> scalar_equilibrium_roots(double kappa, double c1f, double c2f) {
    return cubic_roots_on(kappa, c1f + c2f, c2f);
}

EquilibriumReport equilibria(const ReactionNetwork& net, double dstar) {
    net.validate();
    if (!(dstar > 0.0 && dstar < net.D_max))
        throw std::invalid_argument("equilibria: dstar must lie in (0, D_max)");

    EquilibriumReport report;
    auto residual = [&](std::span<const double> c) {
        double worst = 0.0;
        for (int i = 0; i < net.n; ++i) {
            double sv = 0.0;
            for (int j = 0; j < net.m; ++j)
                sv += net.stoich(i, j) * net.rates[static_cast<std::size_t>(j)].eval(c);
            worst = std::max(worst,
                             std::abs(dstar * (net.c_f[static_cast<std::size_t>(i)] -
                                               c[static_cast<std::size_t>(i)]) +
                                      sv));
        }
        return worst;
    };

    const auto kappa = detect_cubic_rate(net);
    const bool two_species_shape =
        kappa && std::abs(net.stoich(0, 0) + 1.0) < 1e-12 && net.stoich(1, 0) > 0.0;
    if (two_species_shape) {
        report.method = "bisection";
        // conservation mu c1 + c2 reduces the system to the scalar cubic;
        // dstar only rescales the rate slope
        const double mu = net.stoich(1, 0);
        const double M = mu * net.c_f[0] + net.c_f[1];
        const auto ys = cubic_roots_on(*kappa / dstar, M, net.c_f[1]);
        for (double y : ys) {
            std::vector<double> c{(M - y) / mu, y};
            if (c[0] <= 0.0 || c[1] <= 0.0) continue;
            report.roots.push_back(c);
            report.residuals.push_back(residual(c));
        }
        const double threshold = (*kappa / dstar) * M;
        report.threshold_prediction = threshold < 3.0 ? 1 : 3;
        report.threshold_consistent =
            static_cast<int>(report.roots.size()) == *report.threshold_prediction;
        return report;
    }

    // damped Newton from a grid of starts
    report.method = "newton";
    const double top = 3.0 * (*std::max_element(net.c_f.begin(), net.c_f.end())) + 1.0;
    std::vector<ScalarField> rate_grads;
    for (const auto& r : net.rates)
        for (int i = 0; i < net.n; ++i) rate_grads.push_back(r.diff_state(i));

    Eigen::VectorXd c(net.n);
    const int per_axis = net.n <= 3 ? 6 : 3;
    std::vector<int> idx(static_cast<std::size_t>(net.n), 0);
    while (true) {
        for (int i = 0; i < net.n; ++i)
            c(i) = 1e-3 + (top - 1e-3) * (idx[static_cast<std::size_t>(i)] + 0.5) / per_axis;

        Eigen::VectorXd ci = c;
        for (int it = 0; it < 80; ++it) {
            std::span<const double> cs(ci.data(), static_cast<std::size_t>(net.n));
            Eigen::VectorXd F(net.n);
            Eigen::MatrixXd J = Eigen::MatrixXd::Zero(net.n, net.n);
            for (int i = 0; i < net.n; ++i) {
                double sv = 0.0;
                for (int j = 0; j < net.m; ++j)
                    sv += net.stoich(i, j) * net.rates[static_cast<std::size_t>(j)].eval(cs);
                F(i) = dstar * (net.c_f[static_cast<std::size_t>(i)] - ci(i)) + sv;
                J(i, i) -= dstar;
                for (int j = 0; j < net.m; ++j)
                    for (int l = 0; l < net.n; ++l)
                        J(i, l) += net.stoich(i, j) *
                                   rate_grads[static_cast<std::size_t>(j * net.n + l)].eval(cs);
            }
            if (F.lpNorm<Eigen::Infinity>() < 1e-12) break;
            Eigen::VectorXd step = J.fullPivLu().solve(-F);
            if (!step.allFinite()) break;
            double alpha = 1.0;
            const double f0 = F.norm();
            for (int bt = 0; bt < 30; ++bt, alpha *= 0.5) {
                Eigen::VectorXd trial = ci + alpha * step;
                bool interior = true;
                for (int i = 0; i < net.n; ++i) interior &= trial(i) > 1e-9;
                if (!interior) continue;
                std::span<const double> ts(trial.data(), static_cast<std::size_t>(net.n));
                double fn = 0.0;
                for (int i = 0; i < net.n; ++i) {
                    double sv = 0.0;
                    for (int j = 0; j < net.m; ++j)
                        sv += net.stoich(i, j) * net.rates[static_cast<std::size_t>(j)].eval(ts);
                    const double fi =
                        dstar * (net.c_f[static_cast<std::size_t>(i)] - trial(i)) + sv;
                    fn += fi * fi;
                }
                if (std::sqrt(fn) < f0) {
                    ci = trial;
                    break;
                }
            }
        }
        std::span<const double> cs(ci.data(), static_cast<std::size_t>(net.n));
        if (ci.allFinite() && ci.minCoeff() > 0.0 && residual(cs) <= 1e-9) {
            bool dup = false;
            for (const auto& r : report.roots) {
                double dist = 0.0, scale = 1.0;
                for (int i = 0; i < net.n; ++i) {
                    dist = std::max(dist, std::abs(r[static_cast<std::size_t>(i)] - ci(i)));
                    scale = std::max(scale, std::abs(ci(i)));
                }
                if (dist <= 1e-8 * scale) { dup = true; break; }
            }
            if (!dup) {
                report.roots.emplace_back(ci.data(), ci.data() + net.n);
                report.residuals.push_back(residual(cs));
            }
        }

        int carry = 0;
        while (carry < net.n) {
            auto& v = idx[static_cast<std::size_t>(carry)];
            if (++v < per_axis) break;
            v = 0;
            ++carry;
        }
        if (carry == net.n) break;
    }
    if (report.roots.empty())
        throw std::runtime_error("equilibria: no interior equilibrium found from any start");
    return report;
}

// -- stabilization ------------------------------------------------------------

ControlAffineSystem log_transform(const ReactionNetwork& net) {
    net.validate();
    if (!(net.D_max > 1.0))
        throw std::invalid_argument("log_transform: needs D_max > 1 after normalization");

    const std::vector<double> ones(static_cast<std::size_t>(net.n), 1.0);
    for (int i = 0; i < net.n; ++i) {
        double sv = 0.0;
        for (int j = 0; j < net.m; ++j)
            sv += net.stoich(i, j) * net.rates[static_cast<std::size_t>(j)].eval(ones);
        const double fi = net.c_f[static_cast<std::size_t>(i)] - 1.0 + sv;
        if (std::abs(fi) > 1e-9)
            throw std::invalid_argument(
                "log_transform: 1_n is not an equilibrium at unit dilution; normalize first");
    }

    // substitute c_i = exp(x_i) into the rate expressions
    std::vector<ScalarField> exp_states;
    for (int i = 0; i < net.n; ++i)
        exp_states.push_back(ScalarField::exp_of(ScalarField::state(i)));

    ControlAffineSystem sys;
    sys.n = net.n;
    sys.l = 0;
    sys.input = ControlSet::interval(1.0, net.D_max - 1.0);
    for (int i = 0; i < net.n; ++i) {
        const auto decay = ScalarField::exp_of(-ScalarField::state(i));
        ScalarField reaction = ScalarField::constant(0.0);
        for (int j = 0; j < net.m; ++j)
            reaction = reaction +
                       ScalarField::constant(net.stoich(i, j)) *
                           net.rates[static_cast<std::size_t>(j)].substitute_states(exp_states);
        const auto cf = ScalarField::constant(net.c_f[static_cast<std::size_t>(i)]);
        sys.g.push_back(cf * decay - ScalarField::constant(1.0));
        sys.f.push_back(cf * decay - ScalarField::constant(1.0) + decay * reaction);
    }
    sys.validate();
    return sys;
}

std::pair<ReactionNetwork, ConservationData> normalize_network(
    const ReactionNetwork& net, const ConservationData& cons,
    std::span<const double> c_star, double dstar) {
    if (static_cast<int>(c_star.size()) != net.n)
        throw std::invalid_argument("normalize: equilibrium dimension mismatch");
    for (double v : c_star)
        if (!(v > 0.0)) throw std::invalid_argument("normalize: equilibrium must be interior");

    ReactionNetwork out = net;
    out.D_max = net.D_max / dstar;
    std::vector<ScalarField> scaled_states;
    for (int i = 0; i < net.n; ++i)
        scaled_states.push_back(ScalarField::constant(c_star[static_cast<std::size_t>(i)]) *
                                ScalarField::state(i));
    for (int i = 0; i < net.n; ++i) {
        out.c_f[static_cast<std::size_t>(i)] =
            net.c_f[static_cast<std::size_t>(i)] / c_star[static_cast<std::size_t>(i)];
        for (int j = 0; j < net.m; ++j)
            out.S[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                net.stoich(i, j) / (c_star[static_cast<std::size_t>(i)] * dstar);
    }
    for (int j = 0; j < net.m; ++j)
        out.rates[static_cast<std::size_t>(j)] =
            net.rates[static_cast<std::size_t>(j)].substitute_states(scaled_states);

    ConservationData ncons = cons;
    for (auto& pair : ncons.pairs) {
        for (int i = 0; i < net.n; ++i)
            pair.p[static_cast<std::size_t>(i)] *= c_star[static_cast<std::size_t>(i)];
        for (auto& qv : pair.q) qv /= dstar;
    }
    return {std::move(out), std::move(ncons)};
}

bool local_law_holds(const ReactionNetwork& net, const Thm52Config& cfg,
                     std::span<const double> x);

namespace {

// eta(x) = (total squared defect of exp(x)) - epsilon, as an expression
ScalarField defect_eta(const ReactionNetwork& net, const ConservationData& cons,
                       double epsilon) {
    ScalarField total = ScalarField::constant(0.0);
    for (const auto& pair : cons.pairs) {
        double pf = 0.0;
        ScalarField pc = ScalarField::constant(0.0);
        for (int i = 0; i < net.n; ++i) {
            pf += pair.p[static_cast<std::size_t>(i)] * net.c_f[static_cast<std::size_t>(i)];
            pc = pc + ScalarField::constant(pair.p[static_cast<std::size_t>(i)]) *
                          ScalarField::exp_of(ScalarField::state(i));
        }
        const auto hinge =
            ScalarField::max_of(ScalarField::constant(pf) - pc, ScalarField::constant(0.0));
        total = total + hinge * hinge;
    }
    return total - ScalarField::constant(epsilon);
}

double norm2(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

// Largest radius r in a halving sweep from start such that sampled points
// with |x| <= r all pass `ok`; throws below the floor.
double shrink_radius(double start, const std::function<bool(std::span<const double>)>& ok,
                     int dim, std::uint64_t seed, const char* what) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> ur(0.0, 1.0);
    std::vector<double> x(static_cast<std::size_t>(dim));
    for (double r = start; r > 1e-7; r *= 0.5) {
        bool all_ok = true;
        for (int t = 0; t < 4000 && all_ok; ++t) {
            double nrm = 0.0;
            for (auto& v : x) {
                v = gauss(rng);
                nrm += v * v;
            }
            nrm = std::sqrt(nrm);
            if (nrm == 0.0) continue;
            const double rad = r * std::pow(ur(rng), 1.0 / dim);
            for (auto& v : x) v *= rad / nrm;
            all_ok = ok(x);
        }
        if (all_ok) return r;
    }
    throw std::runtime_error(std::string("no admissible radius found for ") + what);
}

}  // namespace

VRCLFSpec build_thm52_spec(const ReactionNetwork& net, const ConservationData& cons,
                           const Thm52Config& cfg) {
    if (cons.pairs.empty())
        throw std::invalid_argument("certificate: needs at least one conservation pair");
    const auto sys = log_transform(net);
    const double sigma = net.consumption_weight();
    const double N = static_cast<double>(cons.pairs.size());

    CorollaryConfig cc;
    cc.sys = sys;
    cc.gamma_tilde = cfg.gamma_tilde;
    const Scalar1D Qt = cfg.Qt;
    cc.Q = Scalar1D("Qt(exp(s))", [Qt](double s) { return Qt(std::exp(s)); });
    cc.eta = defect_eta(net, cons, cfg.epsilon);
    {
        ScalarField invsum = ScalarField::constant(0.0);
        for (int i = 0; i < net.n; ++i)
            invsum = invsum + ScalarField::exp_of(-ScalarField::state(i));
        cc.W = ScalarField::constant(1.0 + cfg.epsilon) + cc.eta + invsum;
    }
    cc.delta = Scalar1D::constant(std::min(cfg.epsilon, cfg.omega));
    {
        const double dmax = net.D_max;
        const double b = cons.b, R = cons.R;
        const MonotoneFn gfun = cons.gfun;
        cc.Kfun = Scalar1D("Dmax + sigma*g(b + (N+eps)R/2 + R/2*eta)",
                           [dmax, sigma, b, R, N, gfun, eps = cfg.epsilon](double h) {
                               const double arg =
                                   std::max(0.0, b + (N + eps) * R / 2.0 + 0.5 * R * h);
                               return dmax + sigma * gfun.eval(arg);
                           });
    }
    cc.epsilon = cfg.epsilon;
    cc.kvec = cfg.kvec;
    cc.kbar = ScalarField::constant(0.0);

    // locality radius: the 2r ball must stay inside {eta < 0} and the local
    // dilution law must decrease every gain-active component on it
    const auto eta = cc.eta;
    const double r_eta = shrink_radius(
        0.5, [&](std::span<const double> x) { return eta.eval(x) < 0.0; }, net.n, 311,
        "negative-eta ball");
    const double r_law = shrink_radius(
        r_eta,
        [&](std::span<const double> x) {
            return local_law_holds(net, cfg, x);
        },
        net.n, 313, "local dilution law ball");
    cc.local_radius = r_law;
    return build_corollary_spec(cc);
}

namespace {

std::vector<int> log_active_set(const GainMatrix& gt, std::span<const double> lnc) {
    const int n = gt.dim();
    std::vector<int> act;
    for (int i = 0; i < n; ++i) {
        const double xi = std::abs(lnc[static_cast<std::size_t>(i)]);
        double peer = 0.0;
        for (int s = 0; s < n; ++s) {
            if (s == i) continue;
            peer = std::max(peer, gt.at(i, s).eval(std::abs(lnc[static_cast<std::size_t>(s)])));
        }
        if (peer <= xi + kActiveSetSlack * std::max(1.0, xi)) act.push_back(i);
    }
    return act;
}

}  // namespace

bool local_law_holds(const ReactionNetwork& net, const Thm52Config& cfg,
                     std::span<const double> x) {
    std::vector<double> c(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) c[i] = std::exp(x[i]);
    double dil = 1.0;
    for (std::size_t i = 0; i < x.size(); ++i) dil += cfg.kvec[i] * x[i];
    for (int i : log_active_set(cfg.gamma_tilde, x)) {
        const auto ui = static_cast<std::size_t>(i);
        const double lc = x[ui];
        double sv = 0.0;
        for (int j = 0; j < net.m; ++j)
            sv += net.stoich(i, j) * net.rates[static_cast<std::size_t>(j)].eval(c);
        const double lhs =
            dil * lc * (net.c_f[ui] - c[ui]) + lc * sv + lc * lc * c[ui] * cfg.Qt(c[ui]);
        if (lhs > 1e-12 * std::max(1.0, std::abs(lc * sv))) return false;
    }
    return true;
}

ConditionReport check_thm52_conditions(const ReactionNetwork& net,
                                       const ConservationData& cons,
                                       const Thm52Config& cfg,
                                       const SampleParams& params) {
    net.validate();
    if (static_cast<int>(params.box.size()) != net.n)
        throw std::invalid_argument("check: sample box dimension mismatch");

    ConditionReport rep;
    rep.total_samples = params.samples;
    auto& pair_ratio = rep.get("pair_ratio");
    auto& feed_boundary = rep.get("feed_boundary");
    auto& shell_budget = rep.get("shell_budget");
    auto& window_decay = rep.get("window_decay");
    auto& outer_pushback = rep.get("outer_pushback");
    auto& local = rep.get("local_law");

    std::mt19937_64 rng(params.seed);
    std::vector<std::uniform_real_distribution<double>> dims;
    for (const auto& [lo, hi] : params.box) dims.emplace_back(lo, hi);

    auto defect2 = [&](std::span<const double> c) {
        double total = 0.0;
        for (const auto& pair : cons.pairs) {
            double pf = 0.0, pc = 0.0;
            for (std::size_t i = 0; i < pair.p.size(); ++i) {
                pf += pair.p[i] * net.c_f[i];
                pc += pair.p[i] * c[i];
            }
            total += std::pow(std::max(pf - pc, 0.0), 2);
        }
        return total;
    };
    auto reaction_sum = [&](int i, std::span<const double> c) {
        double sv = 0.0;
        for (int j = 0; j < net.m; ++j)
            sv += net.stoich(i, j) * net.rates[static_cast<std::size_t>(j)].eval(c);
        return sv;
    };
    auto in_window = [&](int i, std::span<const double> c) {
        const auto ui = static_cast<std::size_t>(i);
        return c[ui] > std::min(net.c_f[ui], 1.0) && c[ui] < std::max(net.c_f[ui], 1.0);
    };
    auto outside_window = [&](int i, std::span<const double> c) {
        const auto ui = static_cast<std::size_t>(i);
        return c[ui] > std::max(net.c_f[ui], 1.0) || c[ui] < std::min(net.c_f[ui], 1.0);
    };

    std::vector<double> c(static_cast<std::size_t>(net.n));
    std::vector<double> lnc(c.size());

    for (long t = 0; t < params.samples; ++t) {
        for (std::size_t i = 0; i < c.size(); ++i) c[i] = dims[i](rng);
        for (std::size_t i = 0; i < c.size(); ++i) lnc[i] = std::log(c[i]);
        const double d2 = defect2(c);
        if (d2 > 2.0 * cfg.epsilon + 1e-12) continue;
        const auto act = log_active_set(cfg.gamma_tilde, lnc);

        for (int i : act) {
            const auto ui = static_cast<std::size_t>(i);
            const double ci = c[ui];
            const double li = lnc[ui];
            const double svi = reaction_sum(i, c);
            const double decay_i = li * svi + ci * li * li * cfg.Qt(ci);

            if (in_window(i, c))
                record_condition(window_decay, true, decay_i, li * svi, c);
            if (outside_window(i, c))
                record_condition(outer_pushback, true,
                                 decay_i + net.D_max * (net.c_f[ui] - ci) * li, li * svi, c);

            for (int j : act) {
                if (j == i) continue;
                const auto uj = static_cast<std::size_t>(j);
                const bool d_case = (in_window(i, c) && outside_window(j, c)) ||
                                    (outside_window(i, c) && in_window(j, c));
                if (!d_case) continue;
                const double svj = reaction_sum(j, c);
                const double num = (net.c_f[uj] - c[uj]) * svi - (net.c_f[ui] - ci) * svj;
                const double den = ci * li * cfg.Qt(ci) * (net.c_f[uj] - c[uj]) -
                                   c[uj] * lnc[uj] * cfg.Qt(c[uj]) * (net.c_f[ui] - ci);
                if (den == 0.0) continue;
                const double ratio = num / den;
                record_condition(pair_ratio, true, ratio + 1.0, ratio, c);
            }
        }
    }

    // feed hyperplanes c_i = c_{i,f}
    for (int i = 0; i < net.n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        if (!(net.c_f[ui] > 0.0)) continue;
        const long per = std::max<long>(200, params.samples / 50);
        for (long t = 0; t < per; ++t) {
            for (std::size_t s = 0; s < c.size(); ++s) c[s] = dims[s](rng);
            c[ui] = net.c_f[ui];
            for (std::size_t s = 0; s < c.size(); ++s) lnc[s] = std::log(c[s]);
            if (defect2(c) > 2.0 * cfg.epsilon + 1e-12) continue;
            const auto act = log_active_set(cfg.gamma_tilde, lnc);
            if (std::find(act.begin(), act.end(), i) == act.end()) continue;
            const double lf = std::log(net.c_f[ui]);
            const double excess = lf * reaction_sum(i, c) +
                                  net.c_f[ui] * lf * lf * cfg.Qt(net.c_f[ui]);
            record_condition(feed_boundary, true, excess, lf, c);
        }
    }

    // defect shell: single-pair networks get a direct shell sampler
    {
        const long per = std::max<long>(500, params.samples / 10);
        std::uniform_real_distribution<double> ut(std::sqrt(cfg.epsilon),
                                                  std::sqrt(2.0 * cfg.epsilon));
        for (long t = 0; t < per; ++t) {
            bool valid = false;
            if (cons.pairs.size() == 1) {
                // fix the defect directly: p'c = p'c_f - t puts the sample on
                // the shell, the remaining species are drawn from the box
                const auto& p = cons.pairs[0].p;
                int slot = -1;
                for (int i = net.n - 1; i >= 0; --i)
                    if (p[static_cast<std::size_t>(i)] != 0.0) { slot = i; break; }
                if (slot < 0) break;
                double pf = 0.0, partial = 0.0;
                for (std::size_t s = 0; s < c.size(); ++s) {
                    c[s] = dims[s](rng);
                    pf += p[s] * net.c_f[s];
                    if (static_cast<int>(s) != slot) partial += p[s] * c[s];
                }
                const double want = pf - ut(rng);
                c[static_cast<std::size_t>(slot)] =
                    (want - partial) / p[static_cast<std::size_t>(slot)];
                valid = c[static_cast<std::size_t>(slot)] > 0.0;
            } else {
                for (std::size_t s = 0; s < c.size(); ++s) c[s] = dims[s](rng);
                const double d2 = defect2(c);
                valid = d2 >= cfg.epsilon && d2 <= 2.0 * cfg.epsilon;
            }
            if (!valid) continue;
            const double d2 = defect2(c);
            if (!(d2 >= cfg.epsilon - 1e-12 && d2 <= 2.0 * cfg.epsilon + 1e-12)) continue;
            for (std::size_t s = 0; s < c.size(); ++s) lnc[s] = std::log(c[s]);
            const auto act = log_active_set(cfg.gamma_tilde, lnc);
            for (int i : act) {
                const auto ui = static_cast<std::size_t>(i);
                if (!in_window(i, c)) continue;
                const double rhs = -(2.0 * cfg.epsilon / (net.c_f[ui] - c[ui])) *
                                   (c[ui] * lnc[ui] * cfg.Qt(c[ui]) + reaction_sum(i, c));
                record_condition(shell_budget, true, cfg.omega - rhs, rhs, c);
            }
        }
    }

    // local law on a shrinking ball around 1_n
    {
        bool rad_ok = true;
        double r = 0.25;
        try {
            r = shrink_radius(
                0.25,
                [&](std::span<const double> x) { return local_law_holds(net, cfg, x); },
                net.n, params.seed ^ 0xf00d, "local dilution law ball");
        } catch (const std::runtime_error&) {
            rad_ok = false;
        }
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> ur(0.0, 1.0);
        std::vector<double> x(static_cast<std::size_t>(net.n));
        const long per = std::max<long>(500, params.samples / 20);
        for (long t = 0; t < per; ++t) {
            double nrm = 0.0;
            for (auto& v : x) {
                v = gauss(rng);
                nrm += v * v;
            }
            nrm = std::sqrt(nrm);
            if (nrm == 0.0) continue;
            const double rad = r * std::pow(ur(rng), 1.0 / net.n);
            for (auto& v : x) v *= rad / nrm;
            record_condition(local, true, local_law_holds(net, cfg, x) ? -1.0 : 1.0, 1.0, x);
        }
        if (!rad_ok) record_condition(local, true, 1.0, 1.0, {});
    }
    return rep;
}

std::pair<double, double> dmax_bound(double theta, double mu) {
    if (!(theta > 0.0) || !(mu > 0.0) || !(mu < 1.0 / theta))
        throw std::invalid_argument("dmax_bound: need theta > 0 and 0 < mu < 1/theta");
    const double first = (1.0 + mu) * (1.0 + mu);
    const double second = (1.0 + mu) * (theta * first + 1.0) / (mu * theta);
    return {first, second};
}

double DilutionFeedback::dilution(std::span<const double> c) const {
    std::vector<double> x(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (!(c[i] > 0.0))
            throw std::domain_error("dilution: concentrations must be positive");
        x[i] = std::log(c[i]);
    }
    const double u = law_.eval(x);
    return std::clamp(1.0 + u, 0.0, d_max_);
}

DilutionFeedback stabilize(const ReactionNetwork& net, const ConservationData& cons,
                           const Thm52Config& cfg) {
    auto spec = build_thm52_spec(net, cons, cfg);
    auto sys = log_transform(net);
    return DilutionFeedback(synthesize(std::move(sys), std::move(spec)), net.D_max);
}

std::pair<ReactionNetwork, ConservationData> example51_network(double theta, double mu,
                                                               double d_max) {
    if (!(theta > 0.0) || !(mu > 0.0))
        throw std::invalid_argument("two-species network: theta and mu must be positive");
    if (!(mu < 1.0 / theta))
        throw std::invalid_argument(
            "two-species network: mu = 1/theta means zero product feed; not supported");

    ReactionNetwork net;
    net.n = 2;
    net.m = 1;
    net.S = {{-1.0}, {mu}};
    const auto c1 = ScalarField::state(0);
    const auto c2 = ScalarField::state(1);
    net.rates = {ScalarField::constant(theta) * c1 * c2 * c2};
    net.c_f = {1.0 + theta, 1.0 - mu * theta};
    net.D_max = d_max;
    net.validate();

    ConservationData cons;
    cons.pairs = {{{-mu, -1.0}, {0.0}}};
    const double denom = std::min(mu, 1.0);
    cons.b = (1.0 + mu) / denom;
    cons.R = 1.0 / denom;
    cons.gfun = MonotoneFn::power(theta, 2.0);
    return {std::move(net), std::move(cons)};
}

Thm52Config example51_config(double theta, double mu, double epsilon,
                             const MonotoneFn& gamma, double lambda) {
    if (!(lambda > 0.0 && lambda < 1.0))
        throw std::invalid_argument("config: lambda must lie in (0, 1)");
    if (gamma.fn_class() != FnClass::Kinf)
        throw std::invalid_argument("config: gamma must be class Kinf");
    const double mutheta = mu * theta;
    if (!(mutheta < 1.0))
        throw std::invalid_argument("config: mu*theta must stay below 1");

    Thm52Config cfg;
    cfg.gamma_tilde = GainMatrix(2);
    cfg.gamma_tilde.set(0, 1, gamma);
    cfg.gamma_tilde.set(1, 0, MonotoneFn::scaled_inverse(gamma, lambda, 1.0));
    cfg.epsilon = epsilon;
    cfg.kvec = {0.0, 2.0};

    const auto gamma_inv = MonotoneFn::scaled_inverse(gamma, 1.0, 1.0);
    const double up = std::log(1.0 + theta);
    const double down = std::abs(std::log(1.0 - mutheta));
    const double amp_hi = std::exp(-2.0 * gamma_inv.eval(up)) / (2.0 * (1.0 + theta));
    const double amp_lo = std::exp(-gamma.eval(down) / lambda);
    const double A = 0.999 * std::min({1.0, amp_hi, amp_lo});
    cfg.omega = 0.999 * std::min(epsilon * theta / (1.0 + theta) *
                                     std::exp(-2.0 * gamma_inv.eval(up)),
                                 epsilon * (1.0 - mutheta) * (1.0 - mutheta) *
                                     std::exp(-gamma.eval(down) / lambda));

    const MonotoneFn g = gamma;
    const MonotoneFn ginv = gamma_inv;
    cfg.Qt = Scalar1D(
        "derived decay profile", [A, mutheta, lambda, g, ginv](double c) {
            if (!(c > 0.0)) return 0.0;
            const double lc = std::log(c);
            const double floor2 = (1.0 - mutheta) * (1.0 - mutheta);
            if (std::abs(lc) < 1e-12) return 0.5 * A * floor2;
            const double alc = std::abs(lc);
            const double envelope =
                std::exp(-std::max(g.eval(alc) / lambda, 2.0 * ginv.eval(alc)));
            return A * std::min(1.0, std::abs(1.0 - c)) / (2.0 * alc) *
                   std::min(c, floor2) * envelope;
        });
    return cfg;
}

double default_epsilon(const ReactionNetwork& net, const ConservationData& cons,
                       const std::vector<std::array<double, 2>>& box, std::uint64_t seed) {
    if (static_cast<int>(box.size()) != net.n)
        throw std::invalid_argument("default_epsilon: box dimension mismatch");
    std::mt19937_64 rng(seed);
    std::vector<std::uniform_real_distribution<double>> dims;
    for (const auto& [lo, hi] : box) dims.emplace_back(lo, hi);
    std::vector<double> c(static_cast<std::size_t>(net.n));
    std::uniform_int_distribution<int> uface(0, net.n - 1);
    std::uniform_int_distribution<int> uside(0, 1);

    double best = std::numeric_limits<double>::infinity();
    for (int t = 0; t < 4000; ++t) {
        for (std::size_t i = 0; i < c.size(); ++i) c[i] = dims[i](rng);
        const int face = uface(rng);
        c[static_cast<std::size_t>(face)] = box[static_cast<std::size_t>(face)][uside(rng)];
        const double d = conservation_defect(cons, net.c_f, c);
        if (d > 0.0) best = std::min(best, d);
    }
    if (!std::isfinite(best)) return 0.1;
    return std::clamp(0.1 * best * best, 1e-4, 0.5);
}

}  // namespace vclf
