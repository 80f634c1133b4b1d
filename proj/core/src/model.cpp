#include "harvest/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "harvest/error.hpp"

namespace harvest {

std::string_view to_string(Action a) noexcept {
    return a == Action::Harvest ? "HARVEST" : "CONTINUE";
}

std::string_view to_string(Regime r) noexcept {
    switch (r) {
        case Regime::FreeChoice: return "free";
        case Regime::ForcedHarvestCapacity: return "capacity";
        case Regime::Failed: return "failure";
        case Regime::ForcedHarvestTime: return "time";
    }
    return "unknown";
}

void GrowthParams::validate() const {
    require(std::isfinite(mu_p) && std::isfinite(mu_i), Errc::InvalidArgument, "growth means must be finite");
    require(sigma_p >= 0.0 && sigma_i >= 0.0 && std::isfinite(sigma_p) && std::isfinite(sigma_i),
            Errc::InvalidArgument, "growth standard deviations must be finite and non-negative");
}

void ProcessLimits::validate() const {
    require(p0 > 0.0 && p0 < p_bar, Errc::InvalidArgument, "limits: require 0 < p0 < p_bar");
    require(i0 > 0.0 && i0 < i_bar, Errc::InvalidArgument, "limits: require 0 < i0 < i_bar");
    require(t_bar >= 1, Errc::InvalidArgument, "limits: require t_bar >= 1");
}

void EconomicParams::validate(const ProcessLimits& limits) const {
    // c0 = 0 is the case-study value, so only negativity is rejected.
    require(c0 >= 0.0, Errc::InvalidArgument, "economics: c0 must be non-negative");
    require(c1 > 0.0 && c2 > 0.0 && c_u > 0.0 && r_f > 0.0, Errc::InvalidArgument,
            "economics: c1, c2, c_u, r_f must be positive");
    require(gamma > 0.0 && gamma <= 1.0, Errc::InvalidArgument, "economics: gamma must lie in (0, 1]");
    if (r_f <= c2 * limits.i_bar) {
        std::ostringstream os;
        os << "economics: r_f must exceed c2 * i_bar (" << c2 * limits.i_bar << ")";
        fail(Errc::InvalidArgument, os.str());
    }
}

TrueStep step_true(PhysicalState state, const GrowthTruth& truth, Rng& rng) {
    std::normal_distribution<double> z(0.0, 1.0);
    // Draw order (protein, impurity) is part of the reproducibility contract.
    const double zp = z(rng);
    const double zi = z(rng);
    Observation obs{truth.mu_p + truth.sigma_p * zp, truth.mu_i + truth.sigma_i * zi};
    return {grow(state, obs), obs};
}

Classified clamp_and_classify(PhysicalState raw, int t, const ProcessLimits& limits) {
    Classified out{raw, Regime::FreeChoice};
    const bool failed = raw.impurity >= limits.i_bar;
    const bool full = raw.protein >= limits.p_bar;
    if (failed) out.state.impurity = limits.i_bar;
    if (full) out.state.protein = limits.p_bar;
    if (failed)
        out.regime = Regime::Failed;
    else if (full)
        out.regime = Regime::ForcedHarvestCapacity;
    else if (t >= limits.t_bar)
        out.regime = Regime::ForcedHarvestTime;
    return out;
}

GrowthTruth case_study_truth() { return {0.488, 0.144, 0.488, 0.144}; }

ProcessLimits case_study_limits() { return {30.0, 50.0, 8, 1.5, 2.0}; }

EconomicParams case_study_economics() { return {0.0, 10.0, 1.0, 2.0, 880.0, 1.0}; }

}  // namespace harvest
