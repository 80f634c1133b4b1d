#include "harvest/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "harvest/bayes.hpp"
#include "harvest/error.hpp"
#include "harvest/myopic.hpp"

namespace harvest {

std::string_view to_string(StrategyKind k) noexcept {
    switch (k) {
        case StrategyKind::PiMdp: return "PI-MDP";
        case StrategyKind::CurrentPractice: return "CP";
        case StrategyKind::RlIgnoringModelRisk: return "RL-ignoring-MR";
        case StrategyKind::Myopic: return "Myopic";
        case StrategyKind::RlWithModelRisk: return "RL-with-MR";
    }
    return "unknown";
}

StrategyKind strategy_from_string(std::string_view s) {
    for (auto k : {StrategyKind::PiMdp, StrategyKind::CurrentPractice, StrategyKind::RlIgnoringModelRisk,
                   StrategyKind::Myopic, StrategyKind::RlWithModelRisk})
        if (s == to_string(k)) return k;
    fail(Errc::InvalidArgument, "unknown strategy: " + std::string(s));
}

bool is_learned(StrategyKind k) noexcept {
    return k == StrategyKind::RlIgnoringModelRisk || k == StrategyKind::Myopic || k == StrategyKind::RlWithModelRisk;
}

void StrategySpec::validate() const {
    if (is_learned(kind))
        require(j0 >= 3, Errc::InvalidArgument,
                std::string(to_string(kind)) + ": J0 must be >= 3 so the predictive variance exists (lambda > 1)");
    require(cp_fraction > 0.0 && cp_fraction <= 1.0, Errc::InvalidArgument, "cp_fraction must lie in (0, 1]");
    planner.validate();
}

const StrategyResult* EvaluationReport::find(StrategyKind k, int j0) const {
    for (const auto& r : rows)
        if (r.spec.kind == k && (j0 < 0 || !is_learned(k) || r.spec.j0 == j0)) return &r;
    return nullptr;
}

Action cp_policy(PhysicalState s, int t, const ProcessLimits& limits, double fraction) {
    if (clamp_and_classify(s, t, limits).regime != Regime::FreeChoice) return Action::Harvest;
    return s.impurity >= fraction * limits.i_bar ? Action::Harvest : Action::Continue;
}

std::vector<Observation> draw_history(const GrowthParams& truth, int j0, Rng& rng) {
    std::vector<Observation> out;
    out.reserve(static_cast<std::size_t>(std::max(j0, 0)));
    for (int j = 0; j < j0; ++j) out.push_back(step_true({1.0, 1.0}, truth, rng).growth);
    return out;
}

EpisodeRecord run_replication(const StrategySpec& spec, const GrowthParams& truth, const EconomicParams& econ,
                              const ProcessLimits& limits, std::uint64_t seed, std::uint64_t rep) {
    KnowledgeState k0;
    if (is_learned(spec.kind)) {
        Rng hist = make_stream(seed, {rep, stream::kHistory});
        k0 = fit_improper(draw_history(truth, spec.j0, hist));
    }
    Rng truth_rng = make_stream(seed, {rep, stream::kTruth});
    PlannerConfig cfg = spec.planner;
    cfg.seed = derive_seed(seed, {rep, stream::kPlanner});

    switch (spec.kind) {
        case StrategyKind::PiMdp:
            cfg.mode = SamplerMode::FixedTruth;
            return run_episode(k0, truth, cfg, econ, limits, truth_rng);
        case StrategyKind::RlWithModelRisk:
            cfg.mode = SamplerMode::BayesAdaptive;
            return run_episode(k0, truth, cfg, econ, limits, truth_rng);
        case StrategyKind::RlIgnoringModelRisk:
            cfg.mode = SamplerMode::FixedPlugin;
            return run_episode(k0, truth, cfg, econ, limits, truth_rng);
        case StrategyKind::Myopic: {
            Policy policy = [&](const HyperState& h) {
                return myopic_decide(h.physical.protein, h.physical.impurity, h.knowledge, econ, limits);
            };
            return run_episode(k0, truth, policy, econ, limits, truth_rng);
        }
        case StrategyKind::CurrentPractice: {
            Policy policy = [&](const HyperState& h) { return cp_policy(h.physical, h.t, limits, spec.cp_fraction); };
            return run_episode(k0, truth, policy, econ, limits, truth_rng);
        }
    }
    fail(Errc::InvalidArgument, "unknown strategy");
}

namespace {

template <class F>
void parallel_for(int n, unsigned threads, F&& body) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max(n, 1)));
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (int r = next++; r < n; r = next++) {
            try {
                body(r);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next = n;
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker);
    }
    if (error) std::rethrow_exception(error);
}

}  // namespace

StrategyResult evaluate(const StrategySpec& spec, const GrowthParams& truth, const EconomicParams& econ,
                        const ProcessLimits& limits, const EvalOptions& opts) {
    spec.validate();
    truth.validate();
    limits.validate();
    econ.validate(limits);
    require(opts.reps >= 2, Errc::InvalidArgument, "evaluate: need at least 2 replications");

    StrategyResult out;
    out.spec = spec;
    out.n = opts.reps;
    out.totals.resize(static_cast<std::size_t>(opts.reps));
    out.stopping_times.resize(static_cast<std::size_t>(opts.reps));
    std::vector<char> failed(static_cast<std::size_t>(opts.reps), 0);

    parallel_for(opts.reps, opts.threads, [&](int r) {
        const auto rec = run_replication(spec, truth, econ, limits, opts.seed, static_cast<std::uint64_t>(r));
        const auto idx = static_cast<std::size_t>(r);
        out.totals[idx] = rec.total_reward;
        out.stopping_times[idx] = rec.stopping_time;
        failed[idx] = rec.failed;
    });

    // Welford; identical totals give exactly zero spread.
    double mean = 0.0, m2 = 0.0, count = 0.0;
    for (double x : out.totals) {
        count += 1.0;
        const double delta = x - mean;
        mean += delta / count;
        m2 += delta * (x - mean);
    }
    out.mean = mean;
    out.sd = std::sqrt(m2 / (count - 1.0));
    out.failures = static_cast<int>(std::count(failed.begin(), failed.end(), 1));
    return out;
}

void attach_percentages(EvaluationReport& report) {
    const auto* pi = report.find(StrategyKind::PiMdp);
    for (auto& r : report.rows) r.pct_of_pi_mdp = pi && pi->mean != 0.0 ? 100.0 * r.mean / pi->mean : std::nan("");
}

EvaluationReport compare(const std::vector<StrategyKind>& kinds, const std::vector<int>& j0s,
                         const PlannerConfig& planner, double cp_fraction, const GrowthParams& truth,
                         const EconomicParams& econ, const ProcessLimits& limits, const EvalOptions& opts) {
    EvaluationReport report;
    auto run = [&](StrategyKind k, int j0) {
        StrategySpec spec{k, j0, planner, cp_fraction};
        report.rows.push_back(evaluate(spec, truth, econ, limits, opts));
    };
    for (auto k : kinds)
        if (!is_learned(k)) run(k, 0);
    for (int j0 : j0s)
        for (auto k : kinds)
            if (is_learned(k)) run(k, j0);
    attach_percentages(report);
    return report;
}

const SweepCell* SweepTable::find(double c1, double r_f, StrategyKind k) const {
    for (const auto& c : cells)
        if (c.c1 == c1 && c.r_f == r_f && c.result.spec.kind == k) return &c;
    return nullptr;
}

SweepTable sensitivity_sweep(const std::vector<double>& c1_values, const std::vector<double>& rf_values,
                             const std::vector<StrategyKind>& kinds, int j0, const PlannerConfig& planner,
                             double cp_fraction, const GrowthParams& truth, const EconomicParams& base,
                             const ProcessLimits& limits, const EvalOptions& opts) {
    SweepTable table;
    for (double c1 : c1_values) {
        for (double rf : rf_values) {
            EconomicParams econ = base;
            econ.c1 = c1;
            econ.r_f = rf;
            for (auto k : kinds) {
                StrategySpec spec{k, is_learned(k) ? j0 : 0, planner, cp_fraction};
                table.cells.push_back({c1, rf, evaluate(spec, truth, econ, limits, opts)});
            }
        }
    }
    return table;
}

TrendCheck check_trends(const SweepTable& table, StrategyKind kind, const std::vector<double>& c1_values,
                        const std::vector<double>& rf_values) {
    TrendCheck out;
    auto cell = [&](double c1, double rf) -> const StrategyResult& {
        const auto* c = table.find(c1, rf, kind);
        require(c != nullptr, Errc::InvalidArgument, "sweep table is missing a cell");
        return c->result;
    };
    for (double c1 : c1_values)
        for (double rf : rf_values) cell(c1, rf);
    for (double rf : rf_values)
        for (std::size_t a = 1; a < c1_values.size(); ++a)
            if (!(cell(c1_values[a], rf).mean > cell(c1_values[a - 1], rf).mean)) out.mean_increasing_in_c1 = false;
    for (double c1 : c1_values) {
        for (std::size_t b = 1; b < rf_values.size(); ++b) {
            const auto& lo = cell(c1, rf_values[b - 1]);
            const auto& hi = cell(c1, rf_values[b]);
            if (hi.mean > lo.mean) out.mean_nonincreasing_in_rf = false;
            if (hi.sd < lo.sd) out.sd_nondecreasing_in_rf = false;
        }
    }
    return out;
}

}  // namespace harvest
