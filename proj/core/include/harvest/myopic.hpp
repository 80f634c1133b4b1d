#pragma once

#include <string_view>
#include <variant>
#include <vector>

#include "harvest/bayes.hpp"
#include "harvest/model.hpp"

namespace harvest {

/// Either known growth parameters or a knowledge state whose predictive
/// moments stand in for them.
using GrowthModel = std::variant<GrowthParams, KnowledgeState>;

/// Moment summary used by the one-step rule; knowledge is mapped through
/// the normal approximation of its predictive distributions.
GrowthParams effective_params(const GrowthModel& model);

/// E[R(p', i'; H) | p, i] after one more period, in closed form.
double expected_next_harvest_reward(double p, double i, const GrowthParams& g, const EconomicParams& econ,
                                    const ProcessLimits& limits);

/// Same expectation under the exact Student t predictives (numerical quadrature).
double expected_next_harvest_reward_exact(double p, double i, const KnowledgeState& k, const EconomicParams& econ,
                                          const ProcessLimits& limits);

/// r_h(p, i) + c_u - gamma E[...]; harvest iff >= 0.
double h_perfect(double p, double i, const GrowthParams& truth, const EconomicParams& econ,
                 const ProcessLimits& limits);
double h_tilde(double p, double i, const KnowledgeState& k, const EconomicParams& econ, const ProcessLimits& limits);
double h_value(double p, double i, const GrowthModel& model, const EconomicParams& econ,
               const ProcessLimits& limits);

/// One-step lookahead decision for a free-choice state. Ties harvest.
Action myopic_decide(double p, double i, const GrowthModel& model, const EconomicParams& econ,
                     const ProcessLimits& limits);

/// Protein level above which harvesting is monotone in p.
/// Throws ConditionVacuous when the inverse-normal argument leaves (0, 1).
double p_lower_bound(const GrowthParams& truth, const EconomicParams& econ, const ProcessLimits& limits);

/// Sufficient condition for harvesting to be monotone in i, evaluated literally.
bool impurity_monotone_condition(double i, double i_plus, const GrowthParams& truth, const EconomicParams& econ,
                                 const ProcessLimits& limits);

/// c2 i_bar [sqrt(2 pi) sigma_i / gamma + exp(mu_i + sigma_i^2 / 2)].
double taylor_threshold_rhs(const GrowthParams& truth, const EconomicParams& econ, const ProcessLimits& limits);
bool taylor_threshold(const GrowthParams& truth, const EconomicParams& econ, const ProcessLimits& limits);

struct SigmaConditions {
    bool impurity = false;  // h increasing in the impurity predictive sd
    bool protein = false;   // h decreasing in the protein predictive sd
};

/// sigma Phi(z) - phi(z) with z = (log_gap - mean - sigma^2) / sigma.
double sigma_condition_margin(double log_gap, double mean, double sigma);

SigmaConditions boundary_sigma_conditions(double p, double i, const GrowthModel& model, const ProcessLimits& limits);

enum class BoundaryStatus { Root, AlwaysHarvest, NeverHarvest, MultiRoot };

std::string_view to_string(BoundaryStatus s) noexcept;

struct BoundaryPoint {
    double p = 0.0;
    double i_star = 0.0;  // root, or the sentinel location for the status
    BoundaryStatus status = BoundaryStatus::Root;
};

struct HarvestBoundary {
    std::vector<BoundaryPoint> points;
    double i_lo = 0.0;
    double i_hi = 0.0;

    /// i* with sentinels mapped to the slice ends (always harvest -> i_lo,
    /// never harvest -> i_hi).
    double effective_i(std::size_t k) const;
};

struct BoundaryOptions {
    std::vector<double> p_grid;  // empty -> default log grid
    double tol = 1e-6;
    int scan_points = 96;
};

/// 120 log-spaced points from p0 up to (excluding) p_bar.
std::vector<double> default_p_grid(const ProcessLimits& limits, int n = 120);

HarvestBoundary trace_boundary(const GrowthModel& model, const EconomicParams& econ, const ProcessLimits& limits,
                               const BoundaryOptions& opts = {});

/// Largest |i*_a(p) - i*_b(p)| over a shared grid.
double sup_distance(const HarvestBoundary& a, const HarvestBoundary& b);

}  // namespace harvest
