#include "harvest/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <locale>
#include <set>
#include <sstream>

#include "harvest/error.hpp"

namespace harvest {

std::string_view to_string(Errc code) noexcept {
    switch (code) {
        case Errc::InvalidArgument: return "invalid_argument";
        case Errc::InsufficientData: return "insufficient_data";
        case Errc::NoObservations: return "no_observations";
        case Errc::VarianceUndefined: return "variance_undefined";
        case Errc::InfeasibleAction: return "infeasible_action";
        case Errc::ConditionVacuous: return "condition_vacuous";
    }
    return "error";
}

namespace {

class Reader {
public:
    Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) fail_field(path_.empty() ? "<root>" : path_, "expected an object");
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    bool has(const std::string& key) const {
        seen_.insert(key);
        return obj_.contains(key);
    }

    double number(const std::string& key, double fallback) const {
        if (!has(key)) return fallback;
        const auto& v = obj_.at(key);
        if (!v.is_number()) fail_field(field(key), "expected a number");
        return v.get<double>();
    }

    template <class Int>
    Int integer(const std::string& key, Int fallback) const {
        if (!has(key)) return fallback;
        const auto& v = obj_.at(key);
        if (!v.is_number_integer()) fail_field(field(key), "expected an integer");
        if constexpr (std::is_unsigned_v<Int>) {
            if (v.is_number_unsigned()) return static_cast<Int>(v.get<std::uint64_t>());
            if (v.get<std::int64_t>() < 0) fail_field(field(key), "must be non-negative");
            return static_cast<Int>(v.get<std::int64_t>());
        } else {
            return static_cast<Int>(v.get<std::int64_t>());
        }
    }

    bool boolean(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        const auto& v = obj_.at(key);
        if (!v.is_boolean()) fail_field(field(key), "expected a boolean");
        return v.get<bool>();
    }

    std::string string(const std::string& key, const std::string& fallback) const {
        if (!has(key)) return fallback;
        const auto& v = obj_.at(key);
        if (!v.is_string()) fail_field(field(key), "expected a string");
        return v.get<std::string>();
    }

    const json& array(const std::string& key) const {
        const auto& v = obj_.at(key);
        if (!v.is_array()) fail_field(field(key), "expected an array");
        return v;
    }

    const json* object(const std::string& key) const {
        if (!has(key)) return nullptr;
        return &obj_.at(key);
    }

    void reject_unknown() const {
        for (auto it = obj_.begin(); it != obj_.end(); ++it)
            if (!seen_.count(it.key())) fail_field(field(it.key()), "unknown key");
    }

private:
    const json& obj_;
    std::string path_;
    mutable std::set<std::string> seen_;
};

template <class F>
auto rethrow_as(const std::string& field, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const Error& e) {
        if (!e.field().empty()) throw;
        throw Error(e.code(), field + ": " + e.what(), field);
    }
}

std::string fmt(double x) {
    if (std::isnan(x)) return "";
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << std::setprecision(10) << x;
    return os.str();
}

}  // namespace

void ExperimentConfig::validate() const {
    rethrow_as("truth", [&] { truth.validate(); });
    if (!(truth.sigma_p > 0.0)) fail_field("truth.sigma_p", "must be positive");
    if (!(truth.sigma_i > 0.0)) fail_field("truth.sigma_i", "must be positive");
    rethrow_as("limits", [&] { limits.validate(); });
    rethrow_as("economics", [&] { economics.validate(limits); });
    rethrow_as("planner", [&] { planner.validate(); });
    if (strategies.reps < 2) fail_field("strategies.reps", "must be >= 2");
    if (!(strategies.cp_fraction > 0.0 && strategies.cp_fraction <= 1.0))
        fail_field("strategies.cp_fraction", "must lie in (0, 1]");
    bool learned = false;
    for (auto k : strategies.kinds) learned = learned || is_learned(k);
    learned = learned || is_learned(strategies.primary);
    if (learned)
        for (int j : strategies.j0)
            if (j < 3)
                fail_field("strategies.j0",
                           "J0 = " + std::to_string(j) +
                               " is too small: learned strategies need J0 >= 3 so that lambda > 1");
    rethrow_as("campaign", [&] { campaign.validate(); });
}

ExperimentConfig parse_config(const json& doc) {
    ExperimentConfig cfg;
    Reader root(doc, "");
    if (const auto* t = root.object("truth")) {
        Reader r(*t, "truth");
        cfg.truth.mu_p = r.number("mu_p", cfg.truth.mu_p);
        cfg.truth.sigma_p = r.number("sigma_p", cfg.truth.sigma_p);
        cfg.truth.mu_i = r.number("mu_i", cfg.truth.mu_i);
        cfg.truth.sigma_i = r.number("sigma_i", cfg.truth.sigma_i);
        r.reject_unknown();
    }
    if (const auto* e = root.object("economics")) {
        Reader r(*e, "economics");
        auto& x = cfg.economics;
        x.c0 = r.number("c0", x.c0);
        x.c1 = r.number("c1", x.c1);
        x.c2 = r.number("c2", x.c2);
        x.c_u = r.number("c_u", x.c_u);
        x.r_f = r.number("r_f", x.r_f);
        x.gamma = r.number("gamma", x.gamma);
        r.reject_unknown();
    }
    if (const auto* l = root.object("limits")) {
        Reader r(*l, "limits");
        auto& x = cfg.limits;
        x.p_bar = r.number("p_bar", x.p_bar);
        x.i_bar = r.number("i_bar", x.i_bar);
        x.t_bar = r.integer<int>("t_bar", x.t_bar);
        x.p0 = r.number("p0", x.p0);
        x.i0 = r.number("i0", x.i0);
        r.reject_unknown();
    }
    if (const auto* p = root.object("planner")) {
        Reader r(*p, "planner");
        auto& x = cfg.planner;
        x.branch_k = r.integer<int>("branch_k", x.branch_k);
        if (r.has("branch_schedule")) {
            x.branch_schedule.clear();
            for (const auto& v : r.array("branch_schedule")) {
                if (!v.is_number_integer()) fail_field("planner.branch_schedule", "expected integers");
                x.branch_schedule.push_back(v.get<int>());
            }
        }
        x.seed = r.integer<std::uint64_t>("seed", x.seed);
        x.mode = rethrow_as("planner.mode",
                            [&] { return sampler_mode_from_string(r.string("mode", std::string(to_string(x.mode)))); });
        x.crn = r.boolean("crn", x.crn);
        r.reject_unknown();
    }
    if (const auto* s = root.object("strategies")) {
        Reader r(*s, "strategies");
        auto& x = cfg.strategies;
        if (r.has("kinds")) {
            x.kinds.clear();
            for (const auto& v : r.array("kinds")) {
                if (!v.is_string()) fail_field("strategies.kinds", "expected strategy names");
                x.kinds.push_back(rethrow_as("strategies.kinds", [&] { return strategy_from_string(v.get<std::string>()); }));
            }
        }
        if (r.has("j0")) {
            x.j0.clear();
            for (const auto& v : r.array("j0")) {
                if (!v.is_number_integer()) fail_field("strategies.j0", "expected integers");
                x.j0.push_back(v.get<int>());
            }
        }
        x.cp_fraction = r.number("cp_fraction", x.cp_fraction);
        x.reps = r.integer<int>("reps", x.reps);
        x.seed = r.integer<std::uint64_t>("seed", x.seed);
        x.primary = rethrow_as("strategies.primary",
                               [&] { return strategy_from_string(r.string("primary", std::string(to_string(x.primary)))); });
        x.threads = r.integer<unsigned>("threads", x.threads);
        r.reject_unknown();
    }
    if (const auto* c = root.object("campaign")) {
        Reader r(*c, "campaign");
        auto& x = cfg.campaign;
        x.length = r.integer<int>("campaign_length", x.length);
        if (r.has("setup_pmf")) {
            x.setup_pmf.clear();
            for (const auto& v : r.array("setup_pmf")) {
                if (!v.is_number()) fail_field("campaign.setup_pmf", "expected numbers");
                x.setup_pmf.push_back(v.get<double>());
            }
        }
        x.setup_cost = r.number("setup_cost", x.setup_cost);
        x.max_depth = r.integer<int>("max_depth", x.max_depth);
        r.reject_unknown();
    }
    root.reject_unknown();
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail_field("config", "cannot open " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        fail_field("config", std::string("malformed JSON: ") + e.what());
    }
    return parse_config(doc);
}

json to_json(const ExperimentConfig& cfg) {
    json kinds = json::array();
    for (auto k : cfg.strategies.kinds) kinds.push_back(std::string(to_string(k)));
    return {
        {"truth",
         {{"mu_p", cfg.truth.mu_p}, {"sigma_p", cfg.truth.sigma_p}, {"mu_i", cfg.truth.mu_i}, {"sigma_i", cfg.truth.sigma_i}}},
        {"economics",
         {{"c0", cfg.economics.c0},
          {"c1", cfg.economics.c1},
          {"c2", cfg.economics.c2},
          {"c_u", cfg.economics.c_u},
          {"r_f", cfg.economics.r_f},
          {"gamma", cfg.economics.gamma}}},
        {"limits",
         {{"p_bar", cfg.limits.p_bar},
          {"i_bar", cfg.limits.i_bar},
          {"t_bar", cfg.limits.t_bar},
          {"p0", cfg.limits.p0},
          {"i0", cfg.limits.i0}}},
        {"planner",
         {{"branch_k", cfg.planner.branch_k},
          {"branch_schedule", cfg.planner.branch_schedule},
          {"seed", cfg.planner.seed},
          {"mode", std::string(to_string(cfg.planner.mode))},
          {"crn", cfg.planner.crn}}},
        {"strategies",
         {{"kinds", kinds},
          {"j0", cfg.strategies.j0},
          {"cp_fraction", cfg.strategies.cp_fraction},
          {"reps", cfg.strategies.reps},
          {"seed", cfg.strategies.seed},
          {"primary", std::string(to_string(cfg.strategies.primary))},
          {"threads", cfg.strategies.threads}}},
        {"campaign",
         {{"campaign_length", cfg.campaign.length},
          {"setup_pmf", cfg.campaign.setup_pmf},
          {"setup_cost", cfg.campaign.setup_cost},
          {"max_depth", cfg.campaign.max_depth}}},
    };
}

std::string config_hash(const ExperimentConfig& cfg) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : to_json(cfg).dump()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

json to_json(const KnowledgeState& k) {
    return {{"alpha_p", k.protein.alpha},   {"nu_p", k.protein.nu},   {"lambda_p", k.protein.lambda},
            {"beta_p", k.protein.beta},     {"alpha_i", k.impurity.alpha}, {"nu_i", k.impurity.nu},
            {"lambda_i", k.impurity.lambda}, {"beta_i", k.impurity.beta}};
}

KnowledgeState knowledge_from_json(const json& j) {
    Reader r(j, "knowledge");
    KnowledgeState k;
    auto need = [&](const char* key) {
        if (!r.has(key)) fail_field(r.field(key), "missing");
        return r.number(key, 0.0);
    };
    k.protein = {need("alpha_p"), need("nu_p"), need("lambda_p"), need("beta_p")};
    k.impurity = {need("alpha_i"), need("nu_i"), need("lambda_i"), need("beta_i")};
    r.reject_unknown();
    for (const auto* c : {&k.protein, &k.impurity})
        if (c->nu < 0.0 || c->lambda < 0.0 || c->beta < 0.0)
            fail_field("knowledge", "nu, lambda and beta must be non-negative");
    return k;
}

json to_json(const VarianceSplit& v) {
    return {{"inherent", v.inherent}, {"model_risk", v.model_risk}, {"total", v.total()}};
}

json variance_json(const KnowledgeState& k) {
    json out;
    for (auto [name, c] : {std::pair{"protein", Channel::Protein}, std::pair{"impurity", Channel::Impurity}}) {
        if (k[c].lambda > 1.0 && k[c].nu > 0.0)
            out[name] = to_json(decompose_variance(k, c));
        else
            out[name] = nullptr;
    }
    return out;
}

RecommendMode recommend_mode_from_string(std::string_view s) {
    if (s == "planner") return RecommendMode::Planner;
    if (s == "myopic") return RecommendMode::Myopic;
    fail_field("mode", "expected planner or myopic");
}

std::string_view to_string(RecommendMode m) noexcept { return m == RecommendMode::Planner ? "planner" : "myopic"; }

Recommendation recommend(const HyperState& h, RecommendMode mode, const ExperimentConfig& cfg, std::uint64_t seed) {
    Recommendation r;
    r.mode = mode;
    const auto c = clamp_and_classify(h.physical, h.t, cfg.limits);
    r.regime = c.regime;
    r.q_harvest = terminal_value(c.state, c.regime, cfg.economics, cfg.limits);
    if (c.regime != Regime::FreeChoice) {
        r.action = Action::Harvest;
        r.q_continue = std::nan("");
        return r;
    }
    if (mode == RecommendMode::Myopic) {
        require(has_predictive_variance(h.knowledge), Errc::InsufficientData,
                "insufficient data: the myopic rule needs lambda > 1 on both channels");
        const auto g = predictive_moments(h.knowledge);
        const double next = expected_next_harvest_reward(c.state.protein, c.state.impurity, g, cfg.economics, cfg.limits);
        r.q_continue = -cfg.economics.c_u + cfg.economics.gamma * next;
    } else {
        PlannerConfig pc = cfg.planner;
        pc.seed = seed;
        HyperState at = h;
        at.physical = c.state;
        const auto d = decide(at, pc, cfg.economics, cfg.limits, cfg.truth);
        r.q_continue = d.q_continue;
    }
    r.action = r.q_harvest >= r.q_continue ? Action::Harvest : Action::Continue;
    return r;
}

json to_json(const Recommendation& r) {
    json out{{"action", std::string(to_string(r.action))},
             {"q_harvest", r.q_harvest},
             {"q_continue", std::isnan(r.q_continue) ? json(nullptr) : json(r.q_continue)},
             {"mode", std::string(to_string(r.mode))}};
    out["forced"] = r.forced() ? json(std::string(to_string(r.regime))) : json(nullptr);
    return out;
}

std::string describe(const Recommendation& r) {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << to_string(r.action);
    if (r.forced()) {
        os << " (forced: " << to_string(r.regime) << ") q_harvest=" << fmt(r.q_harvest);
    } else {
        os << " q_harvest=" << fmt(r.q_harvest) << " q_continue=" << fmt(r.q_continue);
    }
    return os.str();
}

std::string provenance_line(const ExperimentConfig& cfg, std::uint64_t seed) {
    return "# harvest config_hash=" + config_hash(cfg) + " seed=" + std::to_string(seed);
}

void write_evaluation_csv(std::ostream& os, const EvaluationReport& report) {
    os << "strategy,J0,mean,sd,pct_of_pi_mdp,n_reps\n";
    for (const auto& r : report.rows) {
        os << to_string(r.spec.kind) << ',' << (is_learned(r.spec.kind) ? std::to_string(r.spec.j0) : "") << ','
           << fmt(r.mean) << ',' << fmt(r.sd) << ',' << fmt(r.pct_of_pi_mdp) << ',' << r.n << '\n';
    }
}

void write_boundary_csv(std::ostream& os, const HarvestBoundary& b) {
    os << "p,i_star,status\n";
    for (const auto& pt : b.points) os << fmt(pt.p) << ',' << fmt(pt.i_star) << ',' << to_string(pt.status) << '\n';
}

void write_episode_csv(std::ostream& os, const EpisodeRecord& rec) {
    os << "t,p,i,action,reward,alpha_p,sigma_tilde_p,alpha_i,sigma_tilde_i\n";
    for (const auto& s : rec.steps) {
        auto sd = [&](Channel c) {
            const auto& n = s.knowledge[c];
            if (!(n.lambda > 1.0 && n.nu > 0.0 && n.beta > 0.0)) return std::string();
            return fmt(std::sqrt(predictive(n).variance()));
        };
        os << s.t << ',' << fmt(s.state.protein) << ',' << fmt(s.state.impurity) << ',' << to_string(s.action) << ','
           << fmt(s.reward) << ',' << fmt(s.knowledge.protein.alpha) << ',' << sd(Channel::Protein) << ','
           << fmt(s.knowledge.impurity.alpha) << ',' << sd(Channel::Impurity) << '\n';
    }
}

void write_sweep_csv(std::ostream& os, const SweepTable& table) {
    os << "c1,r_f,strategy,mean,sd,n_reps\n";
    for (const auto& c : table.cells)
        os << fmt(c.c1) << ',' << fmt(c.r_f) << ',' << to_string(c.result.spec.kind) << ',' << fmt(c.result.mean)
           << ',' << fmt(c.result.sd) << ',' << c.result.n << '\n';
}

}  // namespace harvest
