#pragma once

#include <optional>
#include <vector>

#include "vclf/monotone.hpp"

namespace vclf {

/// Hard cap on the matrix dimension: simple-cycle enumeration is
/// factorial in k, so anything larger is rejected up front.
inline constexpr int kMaxGainDim = 12;

/// Square matrix of interconnection gains. Diagonal entries are
/// identically zero; off-diagonal entries are class-N1 functions.
class GainMatrix {
public:
    explicit GainMatrix(int k);
    GainMatrix(int k, std::vector<MonotoneFn> row_major_entries);

    int dim() const { return k_; }
    const MonotoneFn& at(int i, int j) const;
    void set(int i, int j, MonotoneFn fn);

    /// Edge (i, j) participates in cycle/path enumeration iff the entry
    /// is not the structural zero function.
    bool has_edge(int i, int j) const { return !at(i, j).is_zero_kind(); }

private:
    int k_;
    std::vector<MonotoneFn> entries_;
};

enum class SmallGainVerdict : std::uint8_t { Satisfied, Violated, Marginal };

const char* to_string(SmallGainVerdict v);

struct CycleFinding {
    std::vector<int> nodes;   // cycle as a node sequence (first node repeats implicitly)
    double worst_margin = 0.0;  // min over samples of s - composed(s)
    double witness_s = 0.0;     // sample attaining the worst margin
};

struct CycleReport {
    SmallGainVerdict verdict = SmallGainVerdict::Satisfied;
    std::vector<CycleFinding> cycles;
    // Populated when verdict != Satisfied.
    std::optional<std::vector<int>> witness_cycle;
    std::optional<double> witness_s;

    bool satisfied() const { return verdict == SmallGainVerdict::Satisfied; }
};

/// Default evaluation grid: log-spaced points plus near-zero probes that
/// catch compositions whose slope at the origin reaches one.
std::vector<double> default_small_gain_grid();

/// Checks that every simple-cycle composition of gains stays strictly
/// below the identity on the sample grid. The verdict is sampling
/// evidence, not proof; each cycle's worst margin is reported so callers
/// can judge how close the check came.
CycleReport check_small_gain(const GainMatrix& gains,
                             const std::vector<double>& grid = default_small_gain_grid());

/// Returns a matrix whose off-diagonal entries dominate the input,
/// are positive definite and unbounded, and still satisfy the
/// small-gain check. Each entry becomes
///   max(gamma_ij, s -> inv(a_ij + id)(s) / 2)
/// where a_ij is the pointwise maximum over compositions along simple
/// paths j -> i avoiding {i, j} in the interior. Path maxima are
/// evaluated lazily per argument rather than materialized.
GainMatrix regularize_gains(const GainMatrix& gains);

}  // namespace vclf
