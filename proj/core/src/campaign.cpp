#include "harvest/campaign.hpp"

#include <cmath>
#include <numeric>

#include "harvest/error.hpp"

namespace harvest {

void CampaignParams::validate() const {
    require(length >= 1, Errc::InvalidArgument, "campaign: campaign_length must be >= 1");
    require(!setup_pmf.empty(), Errc::InvalidArgument, "campaign: setup_pmf must not be empty");
    double total = 0.0;
    for (double p : setup_pmf) {
        require(p >= 0.0 && std::isfinite(p), Errc::InvalidArgument, "campaign: setup_pmf entries must be >= 0");
        total += p;
    }
    require(std::abs(total - 1.0) < 1e-9, Errc::InvalidArgument, "campaign: setup_pmf must sum to 1");
    require(setup_cost >= 0.0, Errc::InvalidArgument, "campaign: setup_cost must be >= 0");
    require(max_depth >= 1, Errc::InvalidArgument, "campaign: max_depth must be >= 1");
}

double CampaignParams::hazard(int tau) const {
    const auto n = static_cast<int>(setup_pmf.size());
    if (tau >= n - 1) return 1.0;
    double tail = 0.0;
    for (int s = tau; s < n; ++s) tail += setup_pmf[static_cast<std::size_t>(s)];
    if (tail <= 0.0) return 1.0;
    return setup_pmf[static_cast<std::size_t>(tau)] / tail;
}

CampaignState CampaignState::fresh(const ProcessLimits& limits, int t) {
    return {PhysicalState{limits.p0, limits.i0}, false, 0, t};
}

Regime campaign_regime(const CampaignState& s, const ProcessLimits& limits) {
    require(s.batch.has_value(), Errc::InvalidArgument, "campaign: no live batch during setup");
    return clamp_and_classify(*s.batch, s.tau, limits).regime;
}

double campaign_reward(const CampaignState& s, Action a, const CampaignParams& params, const EconomicParams& econ,
                       const ProcessLimits& limits) {
    if (s.in_setup) {
        require(a == Action::Continue, Errc::InfeasibleAction, "infeasible action: harvest during setup");
        return -params.setup_cost;
    }
    const auto c = clamp_and_classify(*s.batch, s.tau, limits);
    return stage_reward(c.state, a, c.regime, econ, limits).reward;
}

double campaign_terminal_value(const CampaignState& s, const EconomicParams& econ, const ProcessLimits& limits) {
    if (s.in_setup || !s.batch) return 0.0;
    const auto c = clamp_and_classify(*s.batch, s.tau, limits);
    return terminal_value(c.state, c.regime, econ, limits);
}

CampaignStep campaign_transition(const CampaignState& s, Action a, const GrowthDraw& draw,
                                 const CampaignParams& params, const EconomicParams& econ,
                                 const ProcessLimits& limits, Rng& rng) {
    CampaignStep out;
    out.reward = campaign_reward(s, a, params, econ, limits);
    std::bernoulli_distribution ends(params.hazard(s.in_setup ? s.tau : 0));
    if (s.in_setup || a == Action::Harvest) {
        const int tau = s.in_setup ? s.tau : 0;
        if (ends(rng))
            out.next = CampaignState::fresh(limits, s.t + 1);
        else
            out.next = {std::nullopt, true, tau + 1, s.t + 1};
        return out;
    }
    const Observation o = draw(rng);
    const auto c = clamp_and_classify(grow(*s.batch, o), s.tau + 1, limits);
    out.next = {c.state, false, s.tau + 1, s.t + 1};
    out.growth = o;
    return out;
}

CampaignDecision decide_campaign(const CampaignState& s, const KnowledgeState& k, const CampaignParams& params,
                                 const PlannerConfig& cfg, const EconomicParams& econ, const ProcessLimits& limits,
                                 const std::optional<GrowthParams>& truth) {
    if (s.in_setup) return {Action::Continue, 0.0, 0.0, true};
    const auto sampler = make_sampler(cfg.mode, k, truth);
    Rng rng = make_stream(cfg.seed, {static_cast<std::uint64_t>(s.t)});
    return std::visit([&](const auto& smp) { return decide_campaign(s, smp, params, cfg, econ, limits, rng); },
                      sampler);
}

CampaignRecord run_campaign_episode(const KnowledgeState& k0, const GrowthParams& truth,
                                    const CampaignParams& params, const PlannerConfig& cfg,
                                    const EconomicParams& econ, const ProcessLimits& limits, Rng& truth_rng,
                                    Rng& setup_rng) {
    params.validate();
    CampaignRecord rec;
    KnowledgeState k = k0;
    CampaignState s = CampaignState::fresh(limits, 0);
    rec.nu_at_batch_start.push_back(k.protein.nu);
    const std::optional<GrowthParams> t_opt = truth;
    const GrowthDraw draw = [&](Rng&) { return step_true({1.0, 1.0}, truth, truth_rng).growth; };
    double discount = 1.0;
    int setup_started = -1;

    while (s.t < params.length) {
        const auto d = decide_campaign(s, k, params, cfg, econ, limits, t_opt);
        const bool was_setup = s.in_setup;
        if (!was_setup && d.action == Action::Harvest) {
            const auto c = clamp_and_classify(*s.batch, s.tau, limits);
            if (c.regime == Regime::Failed) {
                ++rec.failures;
            } else {
                ++rec.batches_harvested;
                rec.harvest_reward_sum += terminal_value(c.state, c.regime, econ, limits);
            }
            setup_started = s.t;
        }
        const auto step = campaign_transition(s, d.action, draw, params, econ, limits, setup_rng);
        rec.total_reward += discount * step.reward;
        if (was_setup) ++rec.setup_epochs;
        if (!was_setup && d.action == Action::Continue) {
            ++rec.growth_periods;
            if (step.next.batch && step.next.batch->impurity < limits.i_bar) k = update(k, *step.growth);
        }
        if ((was_setup || d.action == Action::Harvest) && !step.next.in_setup) {
            rec.setup_lengths.push_back(step.next.t - setup_started);
            rec.setup_starts.push_back(setup_started);
            rec.nu_at_batch_start.push_back(k.protein.nu);
        }
        s = step.next;
        discount *= econ.gamma;
    }

    const double terminal = campaign_terminal_value(s, econ, limits);
    rec.total_reward += discount * terminal;
    if (!s.in_setup) {
        if (campaign_regime(s, limits) == Regime::Failed) {
            ++rec.failures;
        } else {
            ++rec.batches_harvested;
            rec.harvest_reward_sum += terminal;
        }
    }
    rec.final_knowledge = k;
    return rec;
}

}  // namespace harvest
