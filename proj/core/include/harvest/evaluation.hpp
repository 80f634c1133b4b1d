#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "harvest/model.hpp"
#include "harvest/planner.hpp"

namespace harvest {

enum class StrategyKind { PiMdp, CurrentPractice, RlIgnoringModelRisk, Myopic, RlWithModelRisk };

std::string_view to_string(StrategyKind k) noexcept;
StrategyKind strategy_from_string(std::string_view s);
bool is_learned(StrategyKind k) noexcept;

struct StrategySpec {
    StrategyKind kind = StrategyKind::PiMdp;
    int j0 = 0;  // historical observation pairs; learned strategies need >= 3
    PlannerConfig planner;
    double cp_fraction = 0.6;

    void validate() const;
};

struct StrategyResult {
    StrategySpec spec;
    double mean = 0.0;
    double sd = 0.0;  // N - 1 denominator
    int n = 0;
    double pct_of_pi_mdp = 0.0;
    std::vector<double> totals;
    std::vector<int> stopping_times;
    int failures = 0;
};

struct EvaluationReport {
    std::vector<StrategyResult> rows;

    const StrategyResult* find(StrategyKind k, int j0 = -1) const;
};

/// Current practice: harvest once impurity reaches fraction * i_bar, or when forced.
Action cp_policy(PhysicalState s, int t, const ProcessLimits& limits, double fraction);

/// J0 observation pairs drawn from the truth.
std::vector<Observation> draw_history(const GrowthParams& truth, int j0, Rng& rng);

struct EvalOptions {
    int reps = 100;
    std::uint64_t seed = 0;
    unsigned threads = 0;  // 0 -> hardware concurrency
};

/// One replication of a strategy on the streams derived from (seed, rep).
EpisodeRecord run_replication(const StrategySpec& spec, const GrowthParams& truth, const EconomicParams& econ,
                              const ProcessLimits& limits, std::uint64_t seed, std::uint64_t rep);

/// Monte Carlo estimate of the expected total reward of one strategy.
/// Replication r uses streams derived from (seed, r), shared by every strategy.
StrategyResult evaluate(const StrategySpec& spec, const GrowthParams& truth, const EconomicParams& econ,
                        const ProcessLimits& limits, const EvalOptions& opts);

/// Fills pct_of_pi_mdp against the PI-MDP row when present.
void attach_percentages(EvaluationReport& report);

/// Unique PI-MDP and CP rows followed by each learned strategy at every J0.
EvaluationReport compare(const std::vector<StrategyKind>& kinds, const std::vector<int>& j0s,
                         const PlannerConfig& planner, double cp_fraction, const GrowthParams& truth,
                         const EconomicParams& econ, const ProcessLimits& limits, const EvalOptions& opts);

struct SweepCell {
    double c1 = 0.0;
    double r_f = 0.0;
    StrategyResult result;
};

struct SweepTable {
    std::vector<SweepCell> cells;

    const SweepCell* find(double c1, double r_f, StrategyKind k) const;
};

SweepTable sensitivity_sweep(const std::vector<double>& c1_values, const std::vector<double>& rf_values,
                             const std::vector<StrategyKind>& kinds, int j0, const PlannerConfig& planner,
                             double cp_fraction, const GrowthParams& truth, const EconomicParams& base,
                             const ProcessLimits& limits, const EvalOptions& opts);

struct TrendCheck {
    bool mean_increasing_in_c1 = true;
    bool mean_nonincreasing_in_rf = true;
    bool sd_nondecreasing_in_rf = true;
};

TrendCheck check_trends(const SweepTable& table, StrategyKind kind, const std::vector<double>& c1_values,
                        const std::vector<double>& rf_values);

}  // namespace harvest
