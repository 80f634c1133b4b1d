#pragma once

#include <variant>

#include "harvest/bayes.hpp"
#include "harvest/model.hpp"

namespace harvest {

/// Lump-sum reward of harvesting a live batch: c0 + c1 p - c2 i.
/// Throws InvalidArgument when i >= i_bar (that is the failure branch).
double harvest_reward(double p, double i, const EconomicParams& econ, const ProcessLimits& limits);

struct StageOutcome {
    double reward = 0.0;
    bool terminal = false;
    Regime regime = Regime::FreeChoice;
};

/// Throws InfeasibleAction when Continue is requested outside FreeChoice.
StageOutcome stage_reward(PhysicalState s, Action a, Regime regime, const EconomicParams& econ,
                          const ProcessLimits& limits);

/// r_h for a live batch, -r_f for a failed one.
double terminal_value(PhysicalState s, Regime regime, const EconomicParams& econ, const ProcessLimits& limits);

struct NormalGrowth {
    double mean = 0.0;
    double sd = 0.0;
};

/// One-period log-growth law: a normal (true or moment-matched) or the exact predictive t.
using GrowthLaw = std::variant<NormalGrowth, PredictiveDist>;

double growth_cdf(const GrowthLaw& law, double x);

/// Pr(i e^psi < i_bar).
double survival_probability(double i, const GrowthLaw& law, double i_bar);

/// Sufficient condition for a control-limit optimal policy between two impurity levels.
bool control_limit_condition(double i_minus, double i_plus, const GrowthLaw& law, const EconomicParams& econ,
                             const ProcessLimits& limits);

}  // namespace harvest
