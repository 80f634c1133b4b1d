#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "harvest/campaign.hpp"
#include "harvest/evaluation.hpp"
#include "harvest/myopic.hpp"

namespace harvest {

using json = nlohmann::json;

struct StrategiesConfig {
    std::vector<StrategyKind> kinds{StrategyKind::PiMdp, StrategyKind::CurrentPractice,
                                    StrategyKind::RlIgnoringModelRisk, StrategyKind::Myopic,
                                    StrategyKind::RlWithModelRisk};
    std::vector<int> j0{3, 10, 20};
    double cp_fraction = 0.6;
    int reps = 100;
    std::uint64_t seed = 2024;
    StrategyKind primary = StrategyKind::RlWithModelRisk;
    unsigned threads = 0;
};

/// Experiment document shared by the CLI and the service.
/// Top-level keys: truth, economics, limits, planner, strategies, campaign.
/// Every key is optional and defaults to the case study.
struct ExperimentConfig {
    GrowthParams truth = case_study_truth();
    EconomicParams economics = case_study_economics();
    ProcessLimits limits = case_study_limits();
    PlannerConfig planner;
    StrategiesConfig strategies;
    CampaignParams campaign;

    /// Throws Error with field() set to the dotted path of the first bad field.
    void validate() const;
};

ExperimentConfig parse_config(const json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);
json to_json(const ExperimentConfig& cfg);

/// FNV-1a over the canonical JSON form, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

json to_json(const KnowledgeState& k);
/// Keys alpha_p, nu_p, lambda_p, beta_p, alpha_i, nu_i, lambda_i, beta_i.
KnowledgeState knowledge_from_json(const json& j);

json to_json(const VarianceSplit& v);
/// Per channel {inherent, model_risk, total}; null where lambda <= 1.
json variance_json(const KnowledgeState& k);

enum class RecommendMode { Planner, Myopic };

RecommendMode recommend_mode_from_string(std::string_view s);
std::string_view to_string(RecommendMode m) noexcept;

struct Recommendation {
    Action action = Action::Harvest;
    double q_harvest = 0.0;
    double q_continue = 0.0;  // NaN when forced
    Regime regime = Regime::FreeChoice;
    RecommendMode mode = RecommendMode::Planner;

    bool forced() const noexcept { return regime != Regime::FreeChoice; }
};

/// The single recommendation path used by both `harvestctl recommend` and the service.
/// Planner mode draws from the stream (seed, t); myopic mode needs lambda > 1 on both channels.
Recommendation recommend(const HyperState& h, RecommendMode mode, const ExperimentConfig& cfg, std::uint64_t seed);

json to_json(const Recommendation& r);
/// "HARVEST (forced: capacity)" or "CONTINUE q_harvest=... q_continue=...".
std::string describe(const Recommendation& r);

/// "# harvest config_hash=<hash> seed=<seed>"
std::string provenance_line(const ExperimentConfig& cfg, std::uint64_t seed);

void write_evaluation_csv(std::ostream& os, const EvaluationReport& report);
void write_boundary_csv(std::ostream& os, const HarvestBoundary& b);
void write_episode_csv(std::ostream& os, const EpisodeRecord& rec);
void write_sweep_csv(std::ostream& os, const SweepTable& table);

}  // namespace harvest
