#pragma once

#include <cmath>
#include <string_view>

#include "harvest/random.hpp"

namespace harvest {

enum class Action { Continue, Harvest };

/// Which actions are available at a decision epoch.
enum class Regime {
    FreeChoice,             // continue or harvest
    ForcedHarvestCapacity,  // protein reached the reactor limit
    Failed,                 // impurity reached the failure limit
    ForcedHarvestTime,      // last decision epoch reached
};

std::string_view to_string(Action a) noexcept;
std::string_view to_string(Regime r) noexcept;

/// Protein and impurity mass (grams) at a decision epoch.
struct PhysicalState {
    double protein = 0.0;
    double impurity = 0.0;
};

/// Mean and standard deviation of the per-period log-growth of each channel.
/// Serves both as the ground truth of a simulated process and as the moment
/// summary of a learned growth model.
struct GrowthParams {
    double mu_p = 0.0;
    double sigma_p = 0.0;
    double mu_i = 0.0;
    double sigma_i = 0.0;

    void validate() const;
};

using GrowthTruth = GrowthParams;

struct ProcessLimits {
    double p_bar = 30.0;  // harvest capacity
    double i_bar = 50.0;  // failure threshold
    int t_bar = 8;        // last decision epoch
    double p0 = 1.5;
    double i0 = 2.0;

    void validate() const;
};

struct EconomicParams {
    double c0 = 0.0;    // lump-sum batch reward
    double c1 = 10.0;   // reward per gram protein
    double c2 = 1.0;    // cost per gram impurity
    double c_u = 2.0;   // operating cost per period
    double r_f = 880.0; // failure penalty
    double gamma = 1.0;

    /// Also checks r_f > c2 * i_bar, which needs the limits.
    void validate(const ProcessLimits& limits) const;
};

/// One realized pair of log-growth rates over a period.
struct Observation {
    double phi = 0.0;  // ln(p'/p)
    double psi = 0.0;  // ln(i'/i)
};

/// Applies a growth realization without any clamping.
inline PhysicalState grow(PhysicalState s, Observation o) noexcept {
    return {s.protein * std::exp(o.phi), s.impurity * std::exp(o.psi)};
}

struct TrueStep {
    PhysicalState next;  // pre-clamp
    Observation growth;
};

TrueStep step_true(PhysicalState state, const GrowthTruth& truth, Rng& rng);

struct Classified {
    PhysicalState state;  // clamped to [0, p_bar] x [0, i_bar]
    Regime regime;
};

/// Failure dominates capacity; both dominate the time limit.
Classified clamp_and_classify(PhysicalState raw, int t, const ProcessLimits& limits);

// Parameters of the published single-product case study.
GrowthTruth case_study_truth();
ProcessLimits case_study_limits();
EconomicParams case_study_economics();

}  // namespace harvest

