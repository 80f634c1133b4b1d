#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "harvest/io.hpp"
#include "harvest/service.hpp"

namespace {

using namespace harvest;

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

ExperimentConfig load(const std::string& path) {
    if (path.empty()) {
        ExperimentConfig cfg;
        cfg.validate();
        return cfg;
    }
    return load_config(path);
}

void emit(const std::string& out, const std::string& text) {
    if (out.empty() || out == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(out, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + out);
    f << text;
}

std::vector<double> parse_list(const std::string& s, const std::string& what) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ConfigError(what + ": cannot parse '" + tok + "'");
        }
    }
    return out;
}

KnowledgeState read_knowledge(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("knowledge: cannot open " + path);
    try {
        return knowledge_from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("knowledge: ") + e.what());
    }
}

json episode_json(const EpisodeRecord& rec, const ExperimentConfig& cfg, std::uint64_t seed) {
    json steps = json::array();
    for (const auto& s : rec.steps) {
        json row{{"t", s.t},
                 {"p", s.state.protein},
                 {"i", s.state.impurity},
                 {"action", std::string(to_string(s.action))},
                 {"regime", std::string(to_string(s.regime))},
                 {"reward", s.reward},
                 {"knowledge", to_json(s.knowledge)}};
        steps.push_back(row);
    }
    return {{"config_hash", config_hash(cfg)},
            {"seed", seed},
            {"steps", steps},
            {"stopping_time", rec.stopping_time},
            {"total_reward", rec.total_reward},
            {"final_regime", std::string(to_string(rec.final_regime))},
            {"failed", rec.failed}};
}

struct SimulateArgs {
    std::string config, out, strategy, format = "csv";
    std::optional<std::uint64_t> seed;
    std::optional<int> j0;
    bool campaign = false;
};

int run_simulate(const SimulateArgs& a) {
    ExperimentConfig cfg = load(a.config);
    const std::uint64_t seed = a.seed.value_or(cfg.strategies.seed);
    StrategySpec spec;
    spec.kind = a.strategy.empty() ? cfg.strategies.primary : strategy_from_string(a.strategy);
    spec.j0 = a.j0.value_or(cfg.strategies.j0.empty() ? 0 : cfg.strategies.j0.front());
    if (!is_learned(spec.kind)) spec.j0 = 0;
    spec.planner = cfg.planner;
    spec.cp_fraction = cfg.strategies.cp_fraction;
    try {
        spec.validate();
    } catch (const Error& e) {
        throw Error(Errc::InvalidArgument, e.what(), "strategies.j0");
    }

    std::ostringstream os;
    os.imbue(std::locale::classic());
    if (a.campaign) {
        require(is_learned(spec.kind), Errc::InvalidArgument, "campaign simulation needs a learned strategy");
        Rng hist = make_stream(seed, {0, stream::kHistory});
        const auto k0 = fit_improper(draw_history(cfg.truth, spec.j0, hist));
        Rng truth_rng = make_stream(seed, {0, stream::kTruth});
        Rng setup_rng = make_stream(seed, {0, stream::kSetup});
        PlannerConfig pc = cfg.planner;
        pc.seed = derive_seed(seed, {0, stream::kPlanner});
        const auto rec =
            run_campaign_episode(k0, cfg.truth, cfg.campaign, pc, cfg.economics, cfg.limits, truth_rng, setup_rng);
        json doc{{"config_hash", config_hash(cfg)},
                 {"seed", seed},
                 {"total_reward", rec.total_reward},
                 {"batches_harvested", rec.batches_harvested},
                 {"failures", rec.failures},
                 {"growth_periods", rec.growth_periods},
                 {"setup_epochs", rec.setup_epochs},
                 {"harvest_reward_sum", rec.harvest_reward_sum},
                 {"setup_lengths", rec.setup_lengths},
                 {"nu_at_batch_start", rec.nu_at_batch_start}};
        os << doc.dump(2) << '\n';
    } else {
        const auto rec = run_replication(spec, cfg.truth, cfg.economics, cfg.limits, seed, 0);
        if (a.format == "json") {
            os << episode_json(rec, cfg, seed).dump(2) << '\n';
        } else {
            os << provenance_line(cfg, seed) << '\n';
            write_episode_csv(os, rec);
        }
    }
    emit(a.out, os.str());
    return 0;
}

struct EvaluateArgs {
    std::string config, out, sweep_c1, sweep_rf;
    std::optional<int> reps;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
};

int run_evaluate(const EvaluateArgs& a) {
    ExperimentConfig cfg = load(a.config);
    EvalOptions opts;
    opts.reps = a.reps.value_or(cfg.strategies.reps);
    opts.seed = a.seed.value_or(cfg.strategies.seed);
    opts.threads = a.threads.value_or(cfg.strategies.threads);
    if (opts.reps < 2) throw Error(Errc::InvalidArgument, "reps: need at least 2 replications", "strategies.reps");

    std::ostringstream os;
    os << provenance_line(cfg, opts.seed) << '\n';
    if (!a.sweep_c1.empty() || !a.sweep_rf.empty()) {
        const auto c1 = a.sweep_c1.empty() ? std::vector<double>{cfg.economics.c1} : parse_list(a.sweep_c1, "sweep-c1");
        const auto rf = a.sweep_rf.empty() ? std::vector<double>{cfg.economics.r_f} : parse_list(a.sweep_rf, "sweep-rf");
        const int j0 = cfg.strategies.j0.empty() ? 3 : cfg.strategies.j0.front();
        const auto table = sensitivity_sweep(c1, rf, cfg.strategies.kinds, j0, cfg.planner, cfg.strategies.cp_fraction,
                                             cfg.truth, cfg.economics, cfg.limits, opts);
        write_sweep_csv(os, table);
    } else {
        const auto report = compare(cfg.strategies.kinds, cfg.strategies.j0, cfg.planner, cfg.strategies.cp_fraction,
                                    cfg.truth, cfg.economics, cfg.limits, opts);
        write_evaluation_csv(os, report);
    }
    emit(a.out, os.str());
    return 0;
}

struct BoundaryArgs {
    std::string config, out;
    std::optional<int> j0;
    bool truth = false;
    std::optional<std::uint64_t> seed;
};

int run_boundary(const BoundaryArgs& a) {
    ExperimentConfig cfg = load(a.config);
    const std::uint64_t seed = a.seed.value_or(cfg.strategies.seed);
    GrowthModel model = cfg.truth;
    if (!a.truth) {
        const int j0 = a.j0.value_or(cfg.strategies.j0.empty() ? 3 : cfg.strategies.j0.front());
        if (j0 < 3)
            throw Error(Errc::InvalidArgument, "j0: need at least 3 observations so that lambda > 1", "j0");
        Rng hist = make_stream(seed, {0, stream::kHistory});
        model = fit_improper(draw_history(cfg.truth, j0, hist));
    }
    std::ostringstream os;
    os << provenance_line(cfg, seed) << '\n';
    write_boundary_csv(os, trace_boundary(model, cfg.economics, cfg.limits));
    emit(a.out, os.str());
    return 0;
}

struct RecommendArgs {
    std::string config, state, knowledge, mode = "planner";
    std::optional<std::uint64_t> seed;
    bool as_json = false;
};

int run_recommend(const RecommendArgs& a) {
    ExperimentConfig cfg = load(a.config);
    const auto parts = parse_list(a.state, "state");
    if (parts.size() != 3) throw ConfigError("state: expected p,i,t");
    if (parts[2] < 0 || parts[2] != static_cast<int>(parts[2])) throw ConfigError("state: t must be a non-negative integer");
    HyperState h;
    h.physical = {parts[0], parts[1]};
    h.t = static_cast<int>(parts[2]);
    h.knowledge = read_knowledge(a.knowledge);
    const std::uint64_t seed = a.seed.value_or(cfg.planner.seed);
    const auto r = recommend(h, recommend_mode_from_string(a.mode), cfg, seed);
    std::cout << provenance_line(cfg, seed) << '\n';
    if (a.as_json)
        std::cout << to_json(r).dump() << '\n';
    else
        std::cout << describe(r) << '\n';
    return 0;
}

struct ServeArgs {
    std::string config, host = "127.0.0.1", db = "harvest_sessions.db", token;
    int port = 8080;
};

int run_serve(const ServeArgs& a) {
    ExperimentConfig cfg = load(a.config);
    service::ServerOptions opts;
    opts.host = a.host;
    opts.port = a.port;
    opts.token = a.token;
    if (opts.token.empty())
        if (const char* env = std::getenv("HARVEST_TOKEN")) opts.token = env;
    auto store = std::make_shared<service::SessionStore>(a.db);
    service::SessionService svc(cfg, store);
    std::cerr << "harvestctl: serving /v1 on " << opts.host << ':' << opts.port << '\n';
    service::serve(svc, opts);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Harvest decisions for fed-batch fermentation under model risk"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Run one episode and write its trajectory");
    simulate->add_option("--config", sim.config, "Experiment JSON");
    simulate->add_option("--seed", sim.seed, "Replication seed");
    simulate->add_option("--out", sim.out, "Output file (default stdout)");
    simulate->add_option("--strategy", sim.strategy, "Strategy name (default strategies.primary)");
    simulate->add_option("--j0", sim.j0, "Historical observation pairs for learned strategies");
    simulate->add_option("--format", sim.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    simulate->add_flag("--campaign", sim.campaign, "Run a multi-batch campaign instead of one batch");

    EvaluateArgs ev;
    auto* evaluate = app.add_subcommand("evaluate", "Compare strategies by Monte Carlo");
    evaluate->add_option("--config", ev.config, "Experiment JSON");
    evaluate->add_option("--reps", ev.reps, "Replications per strategy");
    evaluate->add_option("--seed", ev.seed, "Base seed");
    evaluate->add_option("--threads", ev.threads, "Worker threads (0 = all cores)");
    evaluate->add_option("--out", ev.out, "Output CSV (default stdout)");
    evaluate->add_option("--sweep-c1", ev.sweep_c1, "Comma-separated c1 values for a sensitivity sweep");
    evaluate->add_option("--sweep-rf", ev.sweep_rf, "Comma-separated r_f values for a sensitivity sweep");

    BoundaryArgs bd;
    auto* boundary = app.add_subcommand("boundary", "Export the myopic harvest boundary");
    boundary->add_option("--config", bd.config, "Experiment JSON");
    auto* j0_opt = boundary->add_option("--j0", bd.j0, "Learn from this many historical pairs");
    boundary->add_flag("--true", bd.truth, "Use the true growth parameters")->excludes(j0_opt);
    boundary->add_option("--seed", bd.seed, "Seed for the historical draw");
    boundary->add_option("--out", bd.out, "Output CSV (default stdout)");

    RecommendArgs rc;
    auto* rec = app.add_subcommand("recommend", "Recommend an action for one hyper-state");
    rec->add_option("--config", rc.config, "Experiment JSON");
    rec->add_option("--state", rc.state, "p,i,t")->required();
    rec->add_option("--knowledge", rc.knowledge, "Knowledge JSON")->required();
    rec->add_option("--mode", rc.mode, "planner or myopic")->check(CLI::IsMember({"planner", "myopic"}));
    rec->add_option("--seed", rc.seed, "Planner seed (default planner.seed)");
    rec->add_flag("--json", rc.as_json, "Print the recommendation as JSON");

    ServeArgs sv;
    auto* srv = app.add_subcommand("serve", "Serve the /v1 HTTP API");
    srv->add_option("--config", sv.config, "Default experiment JSON for new sessions");
    srv->add_option("--port", sv.port, "TCP port");
    srv->add_option("--host", sv.host, "Bind address");
    srv->add_option("--db", sv.db, "SQLite session store");
    srv->add_option("--token", sv.token, "Required X-Harvest-Token value (or HARVEST_TOKEN)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*simulate) return run_simulate(sim);
        if (*evaluate) return run_evaluate(ev);
        if (*boundary) return run_boundary(bd);
        if (*rec) return run_recommend(rc);
        if (*srv) return run_serve(sv);
    } catch (const ConfigError& e) {
        std::cerr << "harvestctl: config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const Error& e) {
        const bool config = e.code() == Errc::InvalidArgument;
        std::cerr << "harvestctl: " << (config ? "config error: " : "error: ") << e.what() << '\n';
        return config ? kExitConfig : kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "harvestctl: error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitRuntime;
}
