#pragma once

#include <deque>
#include <string>
#include <vector>

namespace vclf {

/// Sampled verification record for one named condition.
struct ConditionStat {
    std::string name;
    long samples = 0;
    long antecedent_hits = 0;
    long violation_count = 0;
    std::vector<std::vector<double>> witnesses;  // capped
    double worst_excess = 0.0;  // most positive consequent excess seen

    bool passed() const { return violation_count == 0; }
};

struct ConditionReport {
    std::deque<ConditionStat> stats;  // deque: get() references stay valid
    long total_samples = 0;

    bool passed() const {
        for (const auto& s : stats)
            if (!s.passed()) return false;
        return true;
    }
    ConditionStat& get(const std::string& name) {
        for (auto& s : stats)
            if (s.name == name) return s;
        stats.push_back({name});
        return stats.back();
    }
    const ConditionStat* find(const std::string& name) const {
        for (const auto& s : stats)
            if (s.name == name) return &s;
        return nullptr;
    }
    std::vector<std::string> uncovered(long min_hits = 10) const {
        std::vector<std::string> out;
        for (const auto& s : stats)
            if (s.antecedent_hits < min_hits) out.push_back(s.name);
        return out;
    }
};

/// Shared helper: record one sampled instance of a condition.
inline void record_condition(ConditionStat& s, bool antecedent, double excess,
                             double scale, const std::vector<double>& witness,
                             int max_witnesses = 8) {
    ++s.samples;
    if (!antecedent) return;
    ++s.antecedent_hits;
    const double slack = 1e-9 * std::max(1.0, std::abs(scale));
    if (excess > s.worst_excess) s.worst_excess = excess;
    if (excess <= slack) return;
    ++s.violation_count;
    if (static_cast<int>(s.witnesses.size()) < max_witnesses) s.witnesses.push_back(witness);
}

}  // namespace vclf
