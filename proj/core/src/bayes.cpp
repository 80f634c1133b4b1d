#include "harvest/bayes.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <random>

#include "harvest/error.hpp"

namespace harvest {

NigParams update(const NigParams& k, double x) noexcept {
    NigParams next;
    next.nu = k.nu + 1.0;
    next.lambda = k.lambda + 0.5;
    const double dev = x - k.alpha;
    next.alpha = k.alpha + dev / next.nu;
    next.beta = k.beta + k.nu * dev * dev / (2.0 * next.nu);
    return next;
}

KnowledgeState update(const KnowledgeState& k, Observation obs) noexcept {
    return {update(k.protein, obs.phi), update(k.impurity, obs.psi)};
}

namespace {

NigParams fit_channel(std::span<const Observation> data, double Observation::*field) {
    const double n = static_cast<double>(data.size());
    double mean = 0.0;
    for (const auto& o : data) mean += o.*field;
    mean /= n;
    double ss = 0.0;
    for (const auto& o : data) {
        const double d = o.*field - mean;
        ss += d * d;
    }
    return {mean, n, n / 2.0, ss / 2.0};
}

void require_predictive(const NigParams& k) {
    require(k.lambda > 0.0 && k.nu > 0.0 && k.beta > 0.0, Errc::InsufficientData,
            "insufficient data for predictive");
}

}  // namespace

KnowledgeState fit_improper(std::span<const Observation> data) {
    require(!data.empty(), Errc::NoObservations, "no observations");
    return {fit_channel(data, &Observation::phi), fit_channel(data, &Observation::psi)};
}

double PredictiveDist::variance() const {
    require(has_variance(), Errc::VarianceUndefined, "variance undefined: predictive dof must exceed 2");
    return scale_sq * dof / (dof - 2.0);
}

PredictiveDist predictive(const NigParams& k) {
    require_predictive(k);
    return {k.alpha, 2.0 * k.lambda, k.beta * (1.0 + k.nu) / (k.nu * k.lambda)};
}

PredictiveDist predictive(const KnowledgeState& k, Channel c) { return predictive(k[c]); }

double cdf(const PredictiveDist& d, double x) {
    const boost::math::students_t_distribution<double> t(d.dof);
    return boost::math::cdf(t, (x - d.mean) / std::sqrt(d.scale_sq));
}

VarianceSplit decompose_variance(const NigParams& k) {
    require(k.lambda > 1.0, Errc::VarianceUndefined, "variance undefined: lambda must exceed 1");
    require(k.nu > 0.0, Errc::InsufficientData, "insufficient data for predictive");
    const double inherent = k.beta / (k.lambda - 1.0);
    return {inherent, inherent / k.nu};
}

VarianceSplit decompose_variance(const KnowledgeState& k, Channel c) { return decompose_variance(k[c]); }

Moments sigma_tilde_moments(int j, double sigma_sq) {
    require(j > 2, Errc::InvalidArgument, "sigma_tilde_moments: J must exceed 2");
    const double n = j;
    const double e = sigma_sq * (1.0 + (2.0 * n - 1.0) / (n * n - 2.0 * n));
    const double v = 2.0 * (n * n * n + n * n - n - 1.0) * sigma_sq * sigma_sq /
                     (n * n * n * n - 4.0 * n * n * n + 4.0 * n * n);
    return {e, v};
}

double sample_predictive(const PredictiveDist& d, Rng& rng) {
    std::student_t_distribution<double> t(d.dof);
    return d.mean + std::sqrt(d.scale_sq) * t(rng);
}

double sample_predictive(const KnowledgeState& k, Channel c, Rng& rng) {
    return sample_predictive(predictive(k, c), rng);
}

NormalApprox normal_approx(const PredictiveDist& d) { return {d.mean, std::sqrt(d.variance())}; }

GrowthParams predictive_moments(const KnowledgeState& k) {
    const auto p = normal_approx(predictive(k, Channel::Protein));
    const auto i = normal_approx(predictive(k, Channel::Impurity));
    return {p.mean, p.sd, i.mean, i.sd};
}

GrowthParams plugin_estimates(const KnowledgeState& k) {
    require(k.protein.nu >= 2.0 && k.impurity.nu >= 2.0, Errc::InsufficientData,
            "insufficient data: plug-in estimates need at least 2 observations");
    return {k.protein.alpha, std::sqrt(2.0 * k.protein.beta / k.protein.nu), k.impurity.alpha,
            std::sqrt(2.0 * k.impurity.beta / k.impurity.nu)};
}

bool has_predictive_variance(const KnowledgeState& k) noexcept {
    auto ok = [](const NigParams& c) { return c.lambda > 1.0 && c.nu > 0.0 && c.beta > 0.0; };
    return ok(k.protein) && ok(k.impurity);
}

}  // namespace harvest
