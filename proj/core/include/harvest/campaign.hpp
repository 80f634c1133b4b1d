#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "harvest/planner.hpp"

namespace harvest {

struct CampaignParams {
    int length = 20;                       // campaign horizon L in periods
    std::vector<double> setup_pmf{1.0};    // P(S = s) for s = 1..size
    double setup_cost = 1.0;               // c_s per setup epoch
    int max_depth = 6;                     // planner lookahead cap

    void validate() const;
    /// P(S = tau + 1 | S > tau).
    double hazard(int tau) const;
};

struct CampaignState {
    std::optional<PhysicalState> batch;  // empty during setup
    bool in_setup = false;
    int tau = 0;  // age of the current batch or setup
    int t = 0;

    static CampaignState fresh(const ProcessLimits& limits, int t);
};

/// Reward for taking `a` in `s`. Setup epochs only allow Continue.
double campaign_reward(const CampaignState& s, Action a, const CampaignParams& params, const EconomicParams& econ,
                       const ProcessLimits& limits);

/// Value at t = L: a live batch is harvested (or fails), a setup pays nothing.
double campaign_terminal_value(const CampaignState& s, const EconomicParams& econ, const ProcessLimits& limits);

/// Regime of the live batch, using its age against t_bar.
Regime campaign_regime(const CampaignState& s, const ProcessLimits& limits);

struct CampaignStep {
    CampaignState next;
    double reward = 0.0;
    std::optional<Observation> growth;  // set when a growth period was observed
};

using GrowthDraw = std::function<Observation(Rng&)>;

/// One epoch of the campaign dynamics; the setup outcome is drawn from `rng`.
CampaignStep campaign_transition(const CampaignState& s, Action a, const GrowthDraw& draw,
                                 const CampaignParams& params, const EconomicParams& econ,
                                 const ProcessLimits& limits, Rng& rng);

struct CampaignDecision {
    Action action = Action::Continue;
    double q_harvest = 0.0;
    double q_continue = 0.0;
    bool forced = false;
};

namespace detail {

struct CampaignContext {
    const CampaignParams& params;
    const PlannerConfig& cfg;
    const EconomicParams& econ;
    const ProcessLimits& limits;
};

template <GrowthSampler S>
double campaign_value(const CampaignState& s, const S& sampler, int depth, const CampaignContext& ctx, Rng& rng);

// Value right after a harvest (tau = 0) or of an ongoing setup, enumerating its end exactly.
template <GrowthSampler S>
double after_setup(int tau, int t, const S& sampler, int depth, const CampaignContext& ctx, Rng& rng) {
    const double h = ctx.params.hazard(tau);
    double v = 0.0;
    if (h > 0.0) v += h * campaign_value(CampaignState::fresh(ctx.limits, t + 1), sampler, depth + 1, ctx, rng);
    if (h < 1.0) {
        const CampaignState setup{std::nullopt, true, tau + 1, t + 1};
        v += (1.0 - h) * campaign_value(setup, sampler, depth + 1, ctx, rng);
    }
    return v;
}

template <GrowthSampler S>
double campaign_q_harvest(const CampaignState& s, const S& sampler, int depth, const CampaignContext& ctx, Rng& rng) {
    const double r = campaign_reward(s, Action::Harvest, ctx.params, ctx.econ, ctx.limits);
    if (s.t + 1 > ctx.params.length) return r;
    return r + ctx.econ.gamma * after_setup(0, s.t, sampler, depth, ctx, rng);
}

template <GrowthSampler S>
double campaign_q_continue(const CampaignState& s, const S& sampler, int depth, const CampaignContext& ctx,
                           Rng& rng) {
    const int k = ctx.cfg.k_at(depth);
    double sum = 0.0;
    for (int j = 0; j < k; ++j) {
        const Observation o = sampler.draw(rng);
        const auto c = clamp_and_classify(grow(*s.batch, o), s.tau + 1, ctx.limits);
        const CampaignState child{c.state, false, s.tau + 1, s.t + 1};
        sum += campaign_value(child, sampler.child(o), depth + 1, ctx, rng);
    }
    return -ctx.econ.c_u + ctx.econ.gamma * sum / k;
}

template <GrowthSampler S>
double campaign_value(const CampaignState& s, const S& sampler, int depth, const CampaignContext& ctx, Rng& rng) {
    if (s.t >= ctx.params.length) return campaign_terminal_value(s, ctx.econ, ctx.limits);
    if (depth >= ctx.params.max_depth) return s.in_setup ? 0.0 : campaign_terminal_value(s, ctx.econ, ctx.limits);
    if (s.in_setup)
        return -ctx.params.setup_cost + ctx.econ.gamma * after_setup(s.tau, s.t, sampler, depth, ctx, rng);
    const double qh = campaign_q_harvest(s, sampler, depth, ctx, rng);
    if (campaign_regime(s, ctx.limits) != Regime::FreeChoice) return qh;
    return std::max(qh, campaign_q_continue(s, sampler, depth, ctx, rng));
}

}  // namespace detail

/// Truncated sparse-sampling decision on the campaign hyper state.
template <GrowthSampler S>
CampaignDecision decide_campaign(const CampaignState& s, const S& sampler, const CampaignParams& params,
                                 const PlannerConfig& cfg, const EconomicParams& econ, const ProcessLimits& limits,
                                 Rng& rng) {
    const detail::CampaignContext ctx{params, cfg, econ, limits};
    CampaignDecision d;
    if (s.in_setup || s.t >= params.length) {
        d.forced = true;
        d.action = s.in_setup ? Action::Continue : Action::Harvest;
        return d;
    }
    d.q_harvest = detail::campaign_q_harvest(s, sampler, 0, ctx, rng);
    if (campaign_regime(s, limits) != Regime::FreeChoice) {
        d.forced = true;
        d.action = Action::Harvest;
        d.q_continue = std::numeric_limits<double>::quiet_NaN();
        return d;
    }
    d.q_continue = detail::campaign_q_continue(s, sampler, 0, ctx, rng);
    d.action = d.q_harvest >= d.q_continue ? Action::Harvest : Action::Continue;
    return d;
}

CampaignDecision decide_campaign(const CampaignState& s, const KnowledgeState& k, const CampaignParams& params,
                                 const PlannerConfig& cfg, const EconomicParams& econ, const ProcessLimits& limits,
                                 const std::optional<GrowthParams>& truth = {});

struct CampaignRecord {
    double total_reward = 0.0;  // discounted by gamma^t
    int batches_harvested = 0;  // successful harvests, terminal one included
    int failures = 0;
    int growth_periods = 0;
    int setup_epochs = 0;  // epochs charged c_s
    double harvest_reward_sum = 0.0;
    std::vector<int> setup_lengths;  // completed setups, in periods
    std::vector<int> setup_starts;   // harvest epoch that opened each completed setup
    std::vector<double> nu_at_batch_start;
    KnowledgeState final_knowledge;
};

/// Plays a whole campaign against the true process; knowledge persists across batches.
CampaignRecord run_campaign_episode(const KnowledgeState& k0, const GrowthParams& truth,
                                    const CampaignParams& params, const PlannerConfig& cfg,
                                    const EconomicParams& econ, const ProcessLimits& limits, Rng& truth_rng,
                                    Rng& setup_rng);

}  // namespace harvest
