#include "harvest/myopic.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include "harvest/error.hpp"
#include "harvest/reward.hpp"

namespace harvest {

namespace {

double Phi(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double phi_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

void check_domain(double p, double i, const ProcessLimits& limits) {
    require(p > 0.0 && p < limits.p_bar, Errc::InvalidArgument, "protein must lie in (0, p_bar)");
    require(i > 0.0 && i < limits.i_bar, Errc::InvalidArgument, "impurity must lie in (0, i_bar)");
}

// Integral of exp(x) f(x) over (-inf, b] for a location-scale t.
double truncated_exp_moment(const PredictiveDist& d, double b) {
    const double s = std::sqrt(d.scale_sq);
    const boost::math::students_t_distribution<double> t(d.dof);
    auto f = [&](double u) { return std::exp(d.mean + s * u) * boost::math::pdf(t, u); };
    const double ub = (b - d.mean) / s;
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        f, -std::numeric_limits<double>::infinity(), ub, 15, 1e-12);
}

}  // namespace

GrowthParams effective_params(const GrowthModel& model) {
    if (const auto* g = std::get_if<GrowthParams>(&model)) return *g;
    return predictive_moments(std::get<KnowledgeState>(model));
}

double expected_next_harvest_reward(double p, double i, const GrowthParams& g, const EconomicParams& econ,
                                    const ProcessLimits& limits) {
    check_domain(p, i, limits);
    require(g.sigma_p > 0.0 && g.sigma_i > 0.0, Errc::InvalidArgument, "growth standard deviations must be positive");
    const double x = (std::log(limits.i_bar) - std::log(i) - g.mu_i) / g.sigma_i;
    const double y = (std::log(limits.p_bar) - std::log(p) - g.mu_p) / g.sigma_p;
    const double px = Phi(x);
    const double protein_term = econ.c0 + econ.c1 * limits.p_bar * (1.0 - Phi(y)) +
                                econ.c1 * p * std::exp(g.mu_p + 0.5 * g.sigma_p * g.sigma_p) * Phi(y - g.sigma_p);
    const double impurity_term = econ.c2 * i * std::exp(g.mu_i + 0.5 * g.sigma_i * g.sigma_i) * Phi(x - g.sigma_i);
    return -econ.r_f * (1.0 - px) + px * protein_term - impurity_term;
}

double expected_next_harvest_reward_exact(double p, double i, const KnowledgeState& k, const EconomicParams& econ,
                                          const ProcessLimits& limits) {
    check_domain(p, i, limits);
    const auto dp = predictive(k, Channel::Protein);
    const auto di = predictive(k, Channel::Impurity);
    const double gap_p = std::log(limits.p_bar) - std::log(p);
    const double gap_i = std::log(limits.i_bar) - std::log(i);
    const double survive = cdf(di, gap_i);
    const double protein_mean = limits.p_bar * (1.0 - cdf(dp, gap_p)) + p * truncated_exp_moment(dp, gap_p);
    const double impurity_mass = i * truncated_exp_moment(di, gap_i);
    return -econ.r_f * (1.0 - survive) + survive * (econ.c0 + econ.c1 * protein_mean) - econ.c2 * impurity_mass;
}

double h_perfect(double p, double i, const GrowthParams& truth, const EconomicParams& econ,
                 const ProcessLimits& limits) {
    const double next = expected_next_harvest_reward(p, i, truth, econ, limits);
    return harvest_reward(p, i, econ, limits) + econ.c_u - econ.gamma * next;
}

double h_tilde(double p, double i, const KnowledgeState& k, const EconomicParams& econ, const ProcessLimits& limits) {
    return h_perfect(p, i, predictive_moments(k), econ, limits);
}

double h_value(double p, double i, const GrowthModel& model, const EconomicParams& econ,
               const ProcessLimits& limits) {
    return h_perfect(p, i, effective_params(model), econ, limits);
}

Action myopic_decide(double p, double i, const GrowthModel& model, const EconomicParams& econ,
                     const ProcessLimits& limits) {
    return h_value(p, i, model, econ, limits) >= 0.0 ? Action::Harvest : Action::Continue;
}

double p_lower_bound(const GrowthParams& g, const EconomicParams& econ, const ProcessLimits& limits) {
    const double survive = Phi((std::log(limits.i_bar) - std::log(limits.i0) - g.mu_i) / g.sigma_i);
    const double arg = std::exp(-g.mu_p - 0.5 * g.sigma_p * g.sigma_p) / (econ.gamma * survive);
    require(arg > 0.0 && arg < 1.0 && std::isfinite(arg), Errc::ConditionVacuous,
            "condition vacuous/unattainable: inverse-normal argument outside (0, 1)");
    const double q = boost::math::quantile(boost::math::normal_distribution<double>(), arg);
    return std::exp(std::log(limits.p_bar) - g.mu_p - g.sigma_p * g.sigma_p - g.sigma_p * q);
}

bool impurity_monotone_condition(double i, double i_plus, const GrowthParams& g, const EconomicParams& econ,
                                 const ProcessLimits& limits) {
    require(i > 0.0 && i < i_plus && i_plus <= limits.i_bar, Errc::InvalidArgument,
            "impurity_monotone_condition: need 0 < i < i+ <= i_bar");
    const double x = (std::log(limits.i_bar) - std::log(i) - g.mu_i) / g.sigma_i;
    const double xp = (std::log(limits.i_bar) - std::log(i_plus) - g.mu_i) / g.sigma_i;
    const double lhs = econ.c2 / econ.gamma * (i_plus - i);
    const double rhs = econ.r_f * (Phi(x) - Phi(xp)) - econ.c2 * limits.i_bar *
                                                           std::exp(g.mu_i + 0.5 * g.sigma_i * g.sigma_i) *
                                                           (Phi(x - g.sigma_i) - Phi(xp - g.sigma_i));
    return lhs <= rhs;
}

double taylor_threshold_rhs(const GrowthParams& g, const EconomicParams& econ, const ProcessLimits& limits) {
    return econ.c2 * limits.i_bar *
           (std::sqrt(2.0 * std::numbers::pi) * g.sigma_i / econ.gamma + std::exp(g.mu_i + 0.5 * g.sigma_i * g.sigma_i));
}

bool taylor_threshold(const GrowthParams& g, const EconomicParams& econ, const ProcessLimits& limits) {
    return econ.r_f >= taylor_threshold_rhs(g, econ, limits);
}

double sigma_condition_margin(double log_gap, double mean, double sigma) {
    const double z = (log_gap - mean - sigma * sigma) / sigma;
    return sigma * Phi(z) - phi_pdf(z);
}

SigmaConditions boundary_sigma_conditions(double p, double i, const GrowthModel& model, const ProcessLimits& limits) {
    const auto g = effective_params(model);
    const double gap_i = std::log(limits.i_bar) - std::log(i);
    const double gap_p = std::log(limits.p_bar) - std::log(p);
    SigmaConditions out;
    out.impurity = gap_i > g.mu_i && sigma_condition_margin(gap_i, g.mu_i, g.sigma_i) > 0.0;
    out.protein = sigma_condition_margin(gap_p, g.mu_p, g.sigma_p) > 0.0;
    return out;
}

std::string_view to_string(BoundaryStatus s) noexcept {
    switch (s) {
        case BoundaryStatus::Root: return "root";
        case BoundaryStatus::AlwaysHarvest: return "always_harvest";
        case BoundaryStatus::NeverHarvest: return "never_harvest";
        case BoundaryStatus::MultiRoot: return "multi_root";
    }
    return "unknown";
}

double HarvestBoundary::effective_i(std::size_t k) const {
    const auto& pt = points.at(k);
    switch (pt.status) {
        case BoundaryStatus::AlwaysHarvest: return i_lo;
        case BoundaryStatus::NeverHarvest: return i_hi;
        default: return pt.i_star;
    }
}

std::vector<double> default_p_grid(const ProcessLimits& limits, int n) {
    std::vector<double> grid(static_cast<std::size_t>(n));
    const double lo = std::log(limits.p0);
    const double step = (std::log(limits.p_bar) - lo) / n;
    for (int k = 0; k < n; ++k) grid[static_cast<std::size_t>(k)] = std::exp(lo + step * k);
    return grid;
}

HarvestBoundary trace_boundary(const GrowthModel& model, const EconomicParams& econ, const ProcessLimits& limits,
                               const BoundaryOptions& opts) {
    require(opts.tol > 0.0 && opts.scan_points >= 2, Errc::InvalidArgument, "boundary: bad options");
    const auto g = effective_params(model);
    const auto grid = opts.p_grid.empty() ? default_p_grid(limits) : opts.p_grid;

    HarvestBoundary out;
    out.i_lo = limits.i0;
    out.i_hi = limits.i_bar;
    const double top = std::nextafter(limits.i_bar, 0.0);
    const double log_lo = std::log(out.i_lo);
    const double log_span = std::log(top) - log_lo;

    std::vector<double> is(static_cast<std::size_t>(opts.scan_points));
    for (int k = 0; k < opts.scan_points; ++k)
        is[static_cast<std::size_t>(k)] = std::exp(log_lo + log_span * k / (opts.scan_points - 1));
    is.back() = top;

    out.points.reserve(grid.size());
    for (double p : grid) {
        auto h = [&](double i) { return h_perfect(p, i, g, econ, limits); };
        std::vector<double> hs(is.size());
        for (std::size_t k = 0; k < is.size(); ++k) hs[k] = h(is[k]);

        int crossings = 0;
        std::size_t first = 0;
        for (std::size_t k = 1; k < hs.size(); ++k) {
            if ((hs[k - 1] >= 0.0) != (hs[k] >= 0.0)) {
                if (crossings++ == 0) first = k;
            }
        }

        BoundaryPoint pt{p, 0.0, BoundaryStatus::Root};
        if (crossings == 0) {
            pt.status = hs.front() >= 0.0 ? BoundaryStatus::AlwaysHarvest : BoundaryStatus::NeverHarvest;
            pt.i_star = hs.front() >= 0.0 ? out.i_lo : out.i_hi;
        } else {
            double lo = is[first - 1], hi = is[first];
            const bool lo_harvest = hs[first - 1] >= 0.0;
            double mid = 0.5 * (lo + hi);
            for (int it = 0; it < 200; ++it) {
                mid = 0.5 * (lo + hi);
                const double hm = h(mid);
                if (hi - lo <= opts.tol && std::abs(hm) <= opts.tol) break;
                if ((hm >= 0.0) == lo_harvest)
                    lo = mid;
                else
                    hi = mid;
            }
            pt.i_star = mid;
            if (crossings > 1) pt.status = BoundaryStatus::MultiRoot;
        }
        out.points.push_back(pt);
    }
    return out;
}

double sup_distance(const HarvestBoundary& a, const HarvestBoundary& b) {
    require(a.points.size() == b.points.size(), Errc::InvalidArgument, "boundaries use different grids");
    double d = 0.0;
    for (std::size_t k = 0; k < a.points.size(); ++k) d = std::max(d, std::abs(a.effective_i(k) - b.effective_i(k)));
    return d;
}

}  // namespace harvest
