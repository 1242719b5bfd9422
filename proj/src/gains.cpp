#include "vclf/gains.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>

namespace vclf {

const char* to_string(SmallGainVerdict v) {
    switch (v) {
        case SmallGainVerdict::Satisfied: return "satisfied";
        case SmallGainVerdict::Violated: return "violated";
        case SmallGainVerdict::Marginal: return "marginal";
    }
    return "?";
}

GainMatrix::GainMatrix(int k) : k_(k), entries_(static_cast<std::size_t>(k) * k) {
    if (k < 1 || k > kMaxGainDim)
        throw std::invalid_argument("GainMatrix: dimension must be in [1, " +
                                    std::to_string(kMaxGainDim) + "]");
}

GainMatrix::GainMatrix(int k, std::vector<MonotoneFn> row_major) : GainMatrix(k) {
    if (row_major.size() != entries_.size())
        throw std::invalid_argument("GainMatrix: entry count must be k*k");
    entries_ = std::move(row_major);
    for (int i = 0; i < k_; ++i)
        if (!at(i, i).is_zero_kind())
            throw std::invalid_argument("GainMatrix: diagonal entries must be the zero function");
}

const MonotoneFn& GainMatrix::at(int i, int j) const {
    return entries_[static_cast<std::size_t>(i) * k_ + j];
}

void GainMatrix::set(int i, int j, MonotoneFn fn) {
    if (i == j && !fn.is_zero_kind())
        throw std::invalid_argument("GainMatrix::set: diagonal entries must stay zero");
    entries_[static_cast<std::size_t>(i) * k_ + j] = std::move(fn);
}

std::vector<double> default_small_gain_grid() {
    std::vector<double> grid;
    grid.reserve(403);
    grid.push_back(1e-12);  // near-zero slope probes
    grid.push_back(1e-10);
    const int n = 400;
    const double lo = -8.0, hi = 8.0;
    for (int i = 0; i < n; ++i)
        grid.push_back(std::pow(10.0, lo + (hi - lo) * i / (n - 1)));
    return grid;
}

namespace {

// Visits every simple cycle exactly once: cycles are rooted at their
// smallest node and discovered by DFS over edges with nonzero gains.
template <typename Fn>
void for_each_simple_cycle(const GainMatrix& g, Fn&& visit) {
    const int k = g.dim();
    std::vector<int> stack;
    std::vector<bool> on_stack(static_cast<std::size_t>(k), false);

    auto dfs = [&](auto&& self, int root, int node) -> void {
        for (int next = root; next < k; ++next) {
            if (!g.has_edge(node, next)) continue;
            if (next == root) {
                if (stack.size() >= 2) visit(stack);
                continue;
            }
            if (on_stack[static_cast<std::size_t>(next)]) continue;
            stack.push_back(next);
            on_stack[static_cast<std::size_t>(next)] = true;
            self(self, root, next);
            on_stack[static_cast<std::size_t>(next)] = false;
            stack.pop_back();
        }
    };

    for (int root = 0; root < k; ++root) {
        stack.assign(1, root);
        on_stack.assign(static_cast<std::size_t>(k), false);
        on_stack[static_cast<std::size_t>(root)] = true;
        dfs(dfs, root, root);
    }
}

// Composition of the cycle's gains applied to s, innermost edge last.
double eval_cycle(const GainMatrix& g, const std::vector<int>& nodes, double s) {
    double v = s;
    for (std::size_t e = nodes.size(); e-- > 0;) {
        const int from = nodes[e];
        const int to = nodes[(e + 1) % nodes.size()];
        v = g.at(from, to).eval(v);
    }
    return v;
}

// Pointwise maximum over compositions along simple paths from -> to whose
// interior avoids {from, to}. Includes the direct edge. Returns 0 when no
// path exists.
double path_max(const GainMatrix& g, int from, int to, double s) {
    const int k = g.dim();
    double best = 0.0;
    std::vector<bool> used(static_cast<std::size_t>(k), false);
    used[static_cast<std::size_t>(from)] = true;
    used[static_cast<std::size_t>(to)] = true;

    // value = composition of edges walked so far, applied to s.
    auto dfs = [&](auto&& self, int node, double value) -> void {
        if (g.has_edge(node, to)) best = std::max(best, g.at(node, to).eval(value));
        for (int next = 0; next < k; ++next) {
            if (used[static_cast<std::size_t>(next)] || !g.has_edge(node, next)) continue;
            used[static_cast<std::size_t>(next)] = true;
            self(self, next, g.at(node, next).eval(value));
            used[static_cast<std::size_t>(next)] = false;
        }
    };
    dfs(dfs, from, s);
    return best;
}

}  // namespace

CycleReport check_small_gain(const GainMatrix& gains, const std::vector<double>& grid) {
    CycleReport report;
    for_each_simple_cycle(gains, [&](const std::vector<int>& nodes) {
        CycleFinding finding;
        finding.nodes = nodes;
        finding.worst_margin = std::numeric_limits<double>::infinity();
        for (double s : grid) {
            const double composed = eval_cycle(gains, nodes, s);
            if (!std::isfinite(composed))
                throw std::runtime_error("check_small_gain: non-finite cycle composition");
            const double margin = s - composed;
            if (margin < finding.worst_margin) {
                finding.worst_margin = margin;
                finding.witness_s = s;
            }
        }
        if (finding.worst_margin <= 0.0) {
            report.verdict = SmallGainVerdict::Violated;
            if (!report.witness_cycle) {
                report.witness_cycle = nodes;
                report.witness_s = finding.witness_s;
            }
        } else if (report.verdict == SmallGainVerdict::Satisfied &&
                   finding.worst_margin < 1e-9 * finding.witness_s) {
            report.verdict = SmallGainVerdict::Marginal;
            report.witness_cycle = nodes;
            report.witness_s = finding.witness_s;
        }
        report.cycles.push_back(std::move(finding));
    });
    return report;
}

namespace {

// Fast piecewise-linear stand-in for the inverse branch of one regularized
// entry, sampled by forward evaluation of a_tilde on a log grid. Later path
// maxima walk these tables instead of nesting bisections, which would be
// exponentially expensive. The factor-1/2 cushion in the inverse branch
// dwarfs the interpolation error.
MonotoneFn tabulate_half_inverse(const MonotoneFn& a_tilde) {
    std::vector<std::pair<double, double>> pts;
    pts.reserve(1 + 28 * 40);
    pts.emplace_back(0.0, 0.0);
    double prev_z = 0.0;
    for (double ly = -14.0; ly <= 14.0 + 1e-9; ly += 1.0 / 40.0) {
        const double y = std::pow(10.0, ly);
        const double z = a_tilde.eval(y);
        if (!(z > prev_z)) continue;
        pts.emplace_back(z, 0.5 * y);
        prev_z = z;
    }
    return MonotoneFn::tabulated(std::move(pts), FnClass::Kinf);
}

}  // namespace

GainMatrix regularize_gains(const GainMatrix& gains) {
    const CycleReport pre = check_small_gain(gains);
    if (pre.verdict == SmallGainVerdict::Violated)
        throw std::invalid_argument(
            "regularize_gains: input matrix fails the small-gain check");

    const int k = gains.dim();
    // Entries are replaced one pair at a time, each step's path maximum
    // taken over the current matrix. Replacing everything against the
    // original matrix is unsound: two zero entries regularized in one shot
    // can close a brand-new cycle through an expansive original gain that
    // no original path maximum ever saw.
    GainMatrix exact = gains;  // what the caller gets
    GainMatrix proxy = gains;  // tabulated stand-ins for path evaluation

    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            if (i == j) continue;
            const auto snap = std::make_shared<const GainMatrix>(proxy);
            auto a_tilde = MonotoneFn::callback(
                [snap, i, j](double s) { return path_max(*snap, j, i, s) + s; },
                FnClass::Kinf,
                "pathmax(" + std::to_string(j) + "->" + std::to_string(i) + ")+s");
            exact.set(i, j,
                      MonotoneFn::max_of(gains.at(i, j),
                                         MonotoneFn::scaled_inverse(a_tilde, 1.0, 0.5)));
            proxy.set(i, j, MonotoneFn::max_of(gains.at(i, j),
                                               tabulate_half_inverse(a_tilde)));
        }
    }
    return exact;
}

}  // namespace vclf
