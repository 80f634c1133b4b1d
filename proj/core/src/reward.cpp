#include "harvest/reward.hpp"

#include <boost/math/distributions/normal.hpp>
#include <cmath>

#include "harvest/error.hpp"

namespace harvest {

double harvest_reward(double p, double i, const EconomicParams& econ, const ProcessLimits& limits) {
    require(i < limits.i_bar, Errc::InvalidArgument, "harvest_reward: impurity at failure limit");
    return econ.c0 + econ.c1 * p - econ.c2 * i;
}

StageOutcome stage_reward(PhysicalState s, Action a, Regime regime, const EconomicParams& econ,
                          const ProcessLimits& limits) {
    if (a == Action::Continue) {
        require(regime == Regime::FreeChoice, Errc::InfeasibleAction, "infeasible action: continue in forced state");
        return {-econ.c_u, false, regime};
    }
    return {terminal_value(s, regime, econ, limits), true, regime};
}

double terminal_value(PhysicalState s, Regime regime, const EconomicParams& econ, const ProcessLimits& limits) {
    if (regime == Regime::Failed || s.impurity >= limits.i_bar) return -econ.r_f;
    return econ.c0 + econ.c1 * s.protein - econ.c2 * s.impurity;
}

double growth_cdf(const GrowthLaw& law, double x) {
    return std::visit(
        [x](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, NormalGrowth>) {
                if (d.sd == 0.0) return x >= d.mean ? 1.0 : 0.0;
                return boost::math::cdf(boost::math::normal_distribution<double>(d.mean, d.sd), x);
            } else {
                return cdf(d, x);
            }
        },
        law);
}

double survival_probability(double i, const GrowthLaw& law, double i_bar) {
    return growth_cdf(law, std::log(i_bar) - std::log(i));
}

bool control_limit_condition(double i_minus, double i_plus, const GrowthLaw& law, const EconomicParams& econ,
                             const ProcessLimits& limits) {
    require(i_minus >= 0.0 && i_minus < i_plus, Errc::InvalidArgument, "control_limit_condition: need i- < i+");
    const double s_lo = survival_probability(i_minus, law, limits.i_bar);
    const double s_hi = survival_probability(i_plus, law, limits.i_bar);
    const double lhs = econ.c2 * (i_plus - i_minus);
    const double rhs = econ.gamma * econ.r_f * (s_lo - s_hi) - econ.gamma * econ.c1 * limits.p_bar * s_lo;
    return lhs <= rhs;
}

}  // namespace harvest
