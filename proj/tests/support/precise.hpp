#pragma once

#include <boost/math/special_functions/erf.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "harvest/model.hpp"

namespace harvest::oracle {

using Precise = boost::multiprecision::cpp_bin_float_100;

struct PreciseParams {
    Precise mu_p, sigma_p, mu_i, sigma_i;

    static PreciseParams from(const GrowthParams& g) { return {g.mu_p, g.sigma_p, g.mu_i, g.sigma_i}; }
};

inline Precise precise_cdf(const Precise& x) {
    using boost::multiprecision::sqrt;
    return boost::math::erfc(-x / sqrt(Precise(2))) / 2;
}

/// One-step expected harvest reward and the myopic h, written out from the
/// lognormal expansion in 100-digit arithmetic.
inline Precise precise_h(const Precise& p, const Precise& i, const PreciseParams& g, const EconomicParams& e,
                         const ProcessLimits& l) {
    using boost::multiprecision::exp;
    using boost::multiprecision::log;
    const Precise x = (log(Precise(l.i_bar)) - log(i) - g.mu_i) / g.sigma_i;
    const Precise y = (log(Precise(l.p_bar)) - log(p) - g.mu_p) / g.sigma_p;
    const Precise fx = precise_cdf(x);
    const Precise expected =
        -Precise(e.r_f) * (1 - fx) +
        fx * (Precise(e.c0) + Precise(e.c1) * Precise(l.p_bar) * (1 - precise_cdf(y)) +
              Precise(e.c1) * p * exp(g.mu_p + g.sigma_p * g.sigma_p / 2) * precise_cdf(y - g.sigma_p)) -
        Precise(e.c2) * i * exp(g.mu_i + g.sigma_i * g.sigma_i / 2) * precise_cdf(x - g.sigma_i);
    return Precise(e.c0) + Precise(e.c1) * p - Precise(e.c2) * i + Precise(e.c_u) - Precise(e.gamma) * expected;
}

}  // namespace harvest::oracle
