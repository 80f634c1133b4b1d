#include "harvest/planner.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace harvest {

std::string_view to_string(SamplerMode m) noexcept {
    switch (m) {
        case SamplerMode::BayesAdaptive: return "bayes_adaptive";
        case SamplerMode::FixedTruth: return "fixed_truth";
        case SamplerMode::FixedPlugin: return "fixed_plugin";
    }
    return "unknown";
}

SamplerMode sampler_mode_from_string(std::string_view s) {
    if (s == "bayes_adaptive") return SamplerMode::BayesAdaptive;
    if (s == "fixed_truth") return SamplerMode::FixedTruth;
    if (s == "fixed_plugin") return SamplerMode::FixedPlugin;
    fail(Errc::InvalidArgument, "unknown sampler mode: " + std::string(s));
}

BayesSampler::BayesSampler(const KnowledgeState& k) : k_(k) {
    require(k.protein.lambda > 1.0 && k.impurity.lambda > 1.0, Errc::InsufficientData,
            "insufficient data: Bayes-adaptive planning needs lambda > 1");
    dp_ = predictive(k, Channel::Protein);
    di_ = predictive(k, Channel::Impurity);
    sp_ = std::sqrt(dp_.scale_sq);
    si_ = std::sqrt(di_.scale_sq);
}

Sampler make_sampler(SamplerMode mode, const KnowledgeState& k, const std::optional<GrowthParams>& truth) {
    switch (mode) {
        case SamplerMode::BayesAdaptive: return BayesSampler(k);
        case SamplerMode::FixedTruth:
            require(truth.has_value(), Errc::InvalidArgument, "fixed_truth sampler needs the true parameters");
            return NormalSampler(*truth);
        case SamplerMode::FixedPlugin: return NormalSampler(plugin_estimates(k));
    }
    fail(Errc::InvalidArgument, "unknown sampler mode");
}

void PlannerConfig::validate() const {
    require(branch_k >= 1, Errc::InvalidArgument, "planner: branch_k must be >= 1");
    for (int k : branch_schedule) require(k >= 1, Errc::InvalidArgument, "planner: branch schedule entries must be >= 1");
}

double q_continue(const HyperState& h, const Sampler& sampler, const PlannerConfig& cfg, const EconomicParams& econ,
                  const ProcessLimits& limits, Rng& rng) {
    return std::visit([&](const auto& s) { return q_continue(h.physical, h.t, s, cfg, econ, limits, rng); }, sampler);
}

Decision decide(const HyperState& h, const Sampler& sampler, const PlannerConfig& cfg, const EconomicParams& econ,
                const ProcessLimits& limits, Rng& rng) {
    const auto c = clamp_and_classify(h.physical, h.t, limits);
    Decision d;
    d.regime = c.regime;
    d.q_harvest = terminal_value(c.state, c.regime, econ, limits);
    if (c.regime != Regime::FreeChoice) {
        d.action = Action::Harvest;
        d.q_continue = std::numeric_limits<double>::quiet_NaN();
        return d;
    }
    HyperState at = h;
    at.physical = c.state;
    d.q_continue = q_continue(at, sampler, cfg, econ, limits, rng);
    d.action = d.q_harvest >= d.q_continue ? Action::Harvest : Action::Continue;
    return d;
}

Decision decide(const HyperState& h, const PlannerConfig& cfg, const EconomicParams& econ,
                const ProcessLimits& limits, const std::optional<GrowthParams>& truth) {
    const auto c = clamp_and_classify(h.physical, h.t, limits);
    if (c.regime != Regime::FreeChoice) {
        Decision d;
        d.regime = c.regime;
        d.q_harvest = terminal_value(c.state, c.regime, econ, limits);
        d.q_continue = std::numeric_limits<double>::quiet_NaN();
        return d;
    }
    const auto sampler = make_sampler(cfg.mode, h.knowledge, truth);
    Rng rng = make_stream(cfg.seed, {static_cast<std::uint64_t>(h.t)});
    return decide(h, sampler, cfg, econ, limits, rng);
}

EpisodeRecord run_episode(const KnowledgeState& k0, const GrowthParams& truth, const Policy& policy,
                          const EconomicParams& econ, const ProcessLimits& limits, Rng& truth_rng) {
    EpisodeRecord rec;
    HyperState h{{limits.p0, limits.i0}, k0, 0};
    double discount = 1.0;
    for (;;) {
        const auto c = clamp_and_classify(h.physical, h.t, limits);
        h.physical = c.state;
        EpisodeStep step{h.t, h.physical, h.knowledge, Action::Harvest, c.regime, 0.0};
        const Action a = c.regime == Regime::FreeChoice ? policy(h) : Action::Harvest;
        step.action = a;
        const auto out = stage_reward(h.physical, a, c.regime, econ, limits);
        step.reward = out.reward;
        rec.total_reward += discount * out.reward;
        rec.steps.push_back(step);
        if (out.terminal) {
            rec.stopping_time = h.t;
            rec.final_regime = c.regime;
            rec.failed = c.regime == Regime::Failed;
            return rec;
        }
        const auto next = step_true(h.physical, truth, truth_rng);
        // A period that ends in failure yields no usable growth measurement.
        if (next.next.impurity < limits.i_bar) h.knowledge = update(h.knowledge, next.growth);
        h.physical = next.next;
        ++h.t;
        discount *= econ.gamma;
    }
}

EpisodeRecord run_episode(const KnowledgeState& k0, const GrowthParams& truth, const PlannerConfig& cfg,
                          const EconomicParams& econ, const ProcessLimits& limits, Rng& truth_rng) {
    const std::optional<GrowthParams> t = truth;
    Policy policy = [&](const HyperState& h) { return decide(h, cfg, econ, limits, t).action; };
    return run_episode(k0, truth, policy, econ, limits, truth_rng);
}

}  // namespace harvest
