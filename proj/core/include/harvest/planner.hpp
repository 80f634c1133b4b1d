#pragma once

#include <algorithm>
#include <concepts>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string_view>
#include <variant>
#include <vector>

#include "harvest/bayes.hpp"
#include "harvest/error.hpp"
#include "harvest/model.hpp"
#include "harvest/reward.hpp"

namespace harvest {

enum class SamplerMode { BayesAdaptive, FixedTruth, FixedPlugin };

std::string_view to_string(SamplerMode m) noexcept;
SamplerMode sampler_mode_from_string(std::string_view s);

/// Draws one growth realization and produces the sampler for the child node.
template <class S>
concept GrowthSampler = requires(const S& s, Rng& rng, Observation o) {
    { s.draw(rng) } -> std::same_as<Observation>;
    { s.child(o) } -> std::convertible_to<S>;
};

/// Fixed normal growth law; used with the truth or with plug-in estimates.
class NormalSampler {
public:
    explicit NormalSampler(GrowthParams g) : g_(g) {}

    Observation draw(Rng& rng) const {
        std::normal_distribution<double> z(0.0, 1.0);
        const double zp = z(rng);
        const double zi = z(rng);
        return {g_.mu_p + g_.sigma_p * zp, g_.mu_i + g_.sigma_i * zi};
    }
    const NormalSampler& child(Observation) const noexcept { return *this; }
    const GrowthParams& params() const noexcept { return g_; }

private:
    GrowthParams g_;
};

/// Samples the posterior predictive and threads the knowledge update into children.
class BayesSampler {
public:
    explicit BayesSampler(const KnowledgeState& k);

    Observation draw(Rng& rng) const {
        std::student_t_distribution<double> tp(dp_.dof);
        std::student_t_distribution<double> ti(di_.dof);
        const double zp = tp(rng);
        const double zi = ti(rng);
        return {dp_.mean + sp_ * zp, di_.mean + si_ * zi};
    }
    BayesSampler child(Observation o) const { return BayesSampler(update(k_, o)); }
    const KnowledgeState& knowledge() const noexcept { return k_; }

private:
    KnowledgeState k_;
    PredictiveDist dp_, di_;
    double sp_ = 0.0, si_ = 0.0;
};

using Sampler = std::variant<NormalSampler, BayesSampler>;

/// FixedTruth needs the truth; FixedPlugin needs nu >= 2; BayesAdaptive needs lambda > 1.
Sampler make_sampler(SamplerMode mode, const KnowledgeState& k, const std::optional<GrowthParams>& truth = {});

struct PlannerConfig {
    int branch_k = 10;
    std::vector<int> branch_schedule;  // K per depth; last entry repeats
    std::uint64_t seed = 0;
    SamplerMode mode = SamplerMode::BayesAdaptive;
    bool crn = false;  // derive subtree streams from tree position

    int k_at(int depth) const noexcept {
        if (branch_schedule.empty()) return branch_k;
        const auto d = static_cast<std::size_t>(depth);
        return branch_schedule[std::min(d, branch_schedule.size() - 1)];
    }
    void validate() const;
};

struct HyperState {
    PhysicalState physical;
    KnowledgeState knowledge;
    int t = 0;
};

struct Decision {
    Action action = Action::Harvest;
    double q_harvest = 0.0;
    double q_continue = 0.0;  // NaN when forced
    Regime regime = Regime::FreeChoice;

    bool forced() const noexcept { return regime != Regime::FreeChoice; }
};

namespace detail {

struct TreeContext {
    const PlannerConfig& cfg;
    const EconomicParams& econ;
    const ProcessLimits& limits;
};

template <GrowthSampler S>
double q_continue_rec(PhysicalState s, int t, const S& sampler, int depth, const TreeContext& ctx, Rng& rng,
                      std::uint64_t path);

template <GrowthSampler S>
double value_rec(PhysicalState raw, int t, const S& sampler, int depth, const TreeContext& ctx, Rng& rng,
                 std::uint64_t path) {
    const auto c = clamp_and_classify(raw, t, ctx.limits);
    const double vh = terminal_value(c.state, c.regime, ctx.econ, ctx.limits);
    if (c.regime != Regime::FreeChoice) return vh;
    return std::max(vh, q_continue_rec(c.state, t, sampler, depth, ctx, rng, path));
}

template <GrowthSampler S>
double q_continue_rec(PhysicalState s, int t, const S& sampler, int depth, const TreeContext& ctx, Rng& rng,
                      std::uint64_t path) {
    const int k = ctx.cfg.k_at(depth);
    if (ctx.econ.gamma == 0.0) return -ctx.econ.c_u;
    double sum = 0.0;
    for (int j = 0; j < k; ++j) {
        if (ctx.cfg.crn) {
            const std::uint64_t child_path = mix64(path ^ (static_cast<std::uint64_t>(j) + 1));
            Rng local(derive_seed(ctx.cfg.seed, {child_path}));
            const Observation o = sampler.draw(local);
            sum += value_rec(grow(s, o), t + 1, sampler.child(o), depth + 1, ctx, local, child_path);
        } else {
            const Observation o = sampler.draw(rng);
            sum += value_rec(grow(s, o), t + 1, sampler.child(o), depth + 1, ctx, rng, path);
        }
    }
    return -ctx.econ.c_u + ctx.econ.gamma * sum / k;
}

}  // namespace detail

/// Sparse-sampling estimate of the continue value at a free-choice state.
template <GrowthSampler S>
double q_continue(PhysicalState s, int t, const S& sampler, const PlannerConfig& cfg, const EconomicParams& econ,
                  const ProcessLimits& limits, Rng& rng) {
    const detail::TreeContext ctx{cfg, econ, limits};
    return detail::q_continue_rec(s, t, sampler, 0, ctx, rng, static_cast<std::uint64_t>(t));
}

double q_continue(const HyperState& h, const Sampler& sampler, const PlannerConfig& cfg, const EconomicParams& econ,
                  const ProcessLimits& limits, Rng& rng);

/// Harvest when forced, else iff Q_H >= Q_C (ties harvest).
Decision decide(const HyperState& h, const Sampler& sampler, const PlannerConfig& cfg, const EconomicParams& econ,
                const ProcessLimits& limits, Rng& rng);

/// Builds the sampler from cfg.mode and uses the per-epoch stream (cfg.seed, t),
/// so the same state and seed always give the same decision.
Decision decide(const HyperState& h, const PlannerConfig& cfg, const EconomicParams& econ,
                const ProcessLimits& limits, const std::optional<GrowthParams>& truth = {});

struct EpisodeStep {
    int t = 0;
    PhysicalState state;
    KnowledgeState knowledge;  // before this epoch's observation
    Action action = Action::Continue;
    Regime regime = Regime::FreeChoice;
    double reward = 0.0;
};

struct EpisodeRecord {
    std::vector<EpisodeStep> steps;
    int stopping_time = 0;
    double total_reward = 0.0;  // discounted by gamma^t
    Regime final_regime = Regime::FreeChoice;
    bool failed = false;
};

/// Called only at free-choice epochs.
using Policy = std::function<Action(const HyperState&)>;

/// Online control loop: decide, step the true process, learn, repeat until harvest.
EpisodeRecord run_episode(const KnowledgeState& k0, const GrowthParams& truth, const Policy& policy,
                          const EconomicParams& econ, const ProcessLimits& limits, Rng& truth_rng);

/// Run with the planner as the policy.
EpisodeRecord run_episode(const KnowledgeState& k0, const GrowthParams& truth, const PlannerConfig& cfg,
                          const EconomicParams& econ, const ProcessLimits& limits, Rng& truth_rng);

}  // namespace harvest
