#include "msboot/normal.hpp"

#include "msboot/errors.hpp"

#include <cfloat>
#include <cmath>
#include <limits>
#include <string>

namespace msboot {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178032973640562;
constexpr double kSqrt1_2 = 0.70710678118654752440084436210485;

// Mills ratio R(x) = upper_tail(x)/pdf(x) as the continued fraction
// 1/(x+ 1/(x+ 2/(x+ 3/(x+ ...)))), evaluated with modified Lentz. Converges
// quickly for x >= 8, where erfc would start losing headroom.
double mills_ratio_cf(double x) {
    const double tiny = 1e-300;
    double f = tiny;
    double c = f;
    double d = 0.0;
    for (int k = 1; k <= 200; ++k) {
        const double a = (k == 1) ? 1.0 : static_cast<double>(k - 1);
        d = x + a * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = x + a / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = c * d;
        f *= delta;
        if (std::fabs(delta - 1.0) < 1e-17) break;
    }
    return f;
}

} // namespace

double normal_pdf(double x) {
    return std::exp(-0.5 * x * x - kLogSqrt2Pi);
}

double log_normal_pdf(double x) {
    return -0.5 * x * x - kLogSqrt2Pi;
}

double upper_tail(double x) {
    if (std::isnan(x)) return std::numeric_limits<double>::quiet_NaN();
    if (x <= 8.0) return 0.5 * std::erfc(x * kSqrt1_2);
    return std::exp(log_upper_tail(x));
}

double log_upper_tail(double x) {
    if (std::isnan(x)) return std::numeric_limits<double>::quiet_NaN();
    if (x > 8.0) {
        return log_normal_pdf(x) + std::log(mills_ratio_cf(x));
    }
    if (x < -8.0) {
        // log(1 - eps) with eps = upper_tail(-x)
        return std::log1p(-upper_tail(-x));
    }
    return std::log(0.5 * std::erfc(x * kSqrt1_2));
}

double upper_tail_inverse(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw numeric_error("upper_tail_inverse: p must lie in (0,1), got " +
                            std::to_string(p));
    }
    if (p == 0.5) return 0.0;
    if (p > 0.5) return -upper_tail_inverse(1.0 - p);

    // Hastings starting value (AMS55 26.2.23), then Newton in log space.
    const double t = std::sqrt(-2.0 * std::log(p));
    double z = t - (2.515517 + t * (0.802853 + t * 0.010328)) /
                       (1.0 + t * (1.432788 + t * (0.189269 + t * 0.001308)));
    const double logp = std::log(p);
    for (int it = 0; it < 8; ++it) {
        const double lu = log_upper_tail(z);
        // f(z) = log upper_tail(z) - log p;  f'(z) = -hazard(z)
        const double step = (lu - logp) / std::exp(log_normal_pdf(z) - lu);
        z += step;
        if (std::fabs(step) < 1e-15 * (1.0 + std::fabs(z))) break;
    }
    return z;
}

double tail_ratio(double a, double b) {
    return std::exp(log_upper_tail(a) - log_upper_tail(b));
}

double normal_hazard(double x) {
    return std::exp(log_normal_pdf(x) - log_upper_tail(x));
}

double clamp_probability(double p) {
    constexpr double hi = 1.0 - DBL_EPSILON / 2.0; // largest double < 1
    if (!(p > DBL_MIN)) return DBL_MIN;
    if (p > hi) return hi;
    return p;
}

} // namespace msboot
