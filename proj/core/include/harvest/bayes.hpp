#pragma once

#include <span>

#include "harvest/model.hpp"

namespace harvest {

enum class Channel { Protein, Impurity };

/// Normal-inverse-gamma hyperparameters for one growth channel.
///   mu | sigma^2 ~ N(alpha, sigma^2 / nu),  sigma^2 ~ InvGamma(lambda, beta)
/// The all-zero value is the improper prior.
struct NigParams {
    double alpha = 0.0;
    double nu = 0.0;
    double lambda = 0.0;
    double beta = 0.0;

    friend bool operator==(const NigParams&, const NigParams&) = default;
};

/// Posterior over both growth channels.
struct KnowledgeState {
    NigParams protein;
    NigParams impurity;

    const NigParams& operator[](Channel c) const noexcept { return c == Channel::Protein ? protein : impurity; }
    NigParams& operator[](Channel c) noexcept { return c == Channel::Protein ? protein : impurity; }

    friend bool operator==(const KnowledgeState&, const KnowledgeState&) = default;
};

NigParams update(const NigParams& k, double x) noexcept;
KnowledgeState update(const KnowledgeState& k, Observation obs) noexcept;

/// Batch posterior under the improper prior. Throws NoObservations on empty input.
KnowledgeState fit_improper(std::span<const Observation> data);

/// Location-scale Student t: (X - mean) / sqrt(scale_sq) ~ t_dof.
struct PredictiveDist {
    double mean = 0.0;
    double dof = 0.0;
    double scale_sq = 0.0;

    bool has_variance() const noexcept { return dof > 2.0; }
    /// scale_sq * dof / (dof - 2); throws VarianceUndefined when dof <= 2.
    double variance() const;
};

PredictiveDist predictive(const NigParams& k);
PredictiveDist predictive(const KnowledgeState& k, Channel c);

double cdf(const PredictiveDist& d, double x);

/// Predictive variance split into inherent stochasticity and model risk.
struct VarianceSplit {
    double inherent = 0.0;    // beta / (lambda - 1)
    double model_risk = 0.0;  // beta / ((lambda - 1) nu)

    double total() const noexcept { return inherent + model_risk; }
};

VarianceSplit decompose_variance(const NigParams& k);
VarianceSplit decompose_variance(const KnowledgeState& k, Channel c);

/// Sampling-distribution moments of the predictive variance when J
/// observations are drawn from a normal with variance sigma_sq.
struct Moments {
    double expectation = 0.0;
    double variance = 0.0;
};

Moments sigma_tilde_moments(int j, double sigma_sq);

double sample_predictive(const PredictiveDist& d, Rng& rng);
double sample_predictive(const KnowledgeState& k, Channel c, Rng& rng);

struct NormalApprox {
    double mean = 0.0;
    double sd = 0.0;
};

/// Moment-matched normal; needs dof > 2.
NormalApprox normal_approx(const PredictiveDist& d);

/// Moment summary (alpha, sigma-tilde) of both channels, for the myopic rules.
GrowthParams predictive_moments(const KnowledgeState& k);

/// Sample mean and unadjusted sample variance recovered from the
/// posterior; exact under the improper prior. Needs nu >= 2.
GrowthParams plugin_estimates(const KnowledgeState& k);

/// True when both channels have a defined predictive variance (lambda > 1).
bool has_predictive_variance(const KnowledgeState& k) noexcept;

}  // namespace harvest
