#include "msboot/pvalues.hpp"

#include "msboot/errors.hpp"
#include "msboot/normal.hpp"

#include <cmath>
#include <string>

namespace msboot {

namespace {

void require_finite(const Geometry& g, const char* who) {
    if (!std::isfinite(g.beta0) || !std::isfinite(g.beta1)) {
        throw numeric_error(std::string(who) + ": geometry must be finite");
    }
}

double quad_form(const Geometry& g, double g0, double g1) {
    const double v00 = g.se_beta0 ? (*g.se_beta0) * (*g.se_beta0) : 0.0;
    const double v11 = g.se_beta1 ? (*g.se_beta1) * (*g.se_beta1) : 0.0;
    const double v01 = g.cov01.value_or(0.0);
    const double q = g0 * g0 * v00 + 2.0 * g0 * g1 * v01 + g1 * g1 * v11;
    return q > 0.0 ? std::sqrt(q) : 0.0;
}

} // namespace

double z_pvalue(double z) {
    return clamp_probability(upper_tail(z));
}

double selective_z_pvalue(double z, double c) {
    if (!(z > c)) {
        throw numeric_error("selective_z_pvalue: selection requires z > c (z=" +
                            std::to_string(z) + ", c=" + std::to_string(c) + ")");
    }
    return clamp_probability(tail_ratio(z, c));
}

double bp_from_geometry(const Geometry& g) {
    require_finite(g, "bp_from_geometry");
    return clamp_probability(upper_tail(g.beta0 + g.beta1));
}

double au_from_geometry(const Geometry& g) {
    require_finite(g, "au_from_geometry");
    return clamp_probability(upper_tail(g.beta0 - g.beta1));
}

double si_outside(const Geometry& g) {
    require_finite(g, "si_outside");
    if (!(g.beta0 > 0.0)) {
        throw numeric_error("si_outside: requires beta0 > 0 (got " +
                            std::to_string(g.beta0) + "); use si_inside");
    }
    return clamp_probability(tail_ratio(g.beta0 - g.beta1, -g.beta1));
}

double si_inside(const Geometry& g) {
    require_finite(g, "si_inside");
    if (g.beta0 > 0.0) {
        throw numeric_error("si_inside: requires beta0 <= 0 (got " +
                            std::to_string(g.beta0) + "); use si_outside");
    }
    return clamp_probability(tail_ratio(-g.beta0 + g.beta1, g.beta1));
}

double si_prime(const Geometry& g) {
    require_finite(g, "si_prime");
    if (g.beta0 > 0.0) return si_outside(g);
    return clamp_probability(1.0 - si_inside(g));
}

double si_general(const Geometry& h, double beta0_s) {
    require_finite(h, "si_general");
    if (!std::isfinite(beta0_s)) throw numeric_error("si_general: beta0_s must be finite");
    const double num_arg = h.beta0 - h.beta1;
    const double den_arg = beta0_s + h.beta0 - h.beta1;
    const double log_den = log_upper_tail(den_arg);
    if (log_den < std::log(1e-300)) {
        throw numeric_error(
            "si_general: selection probability underflow, upper_tail(" +
            std::to_string(den_arg) + ") < 1e-300");
    }
    return clamp_probability(std::exp(log_upper_tail(num_arg) - log_den));
}

Geometry geometry_from_bp_au(double bp, double au) {
    if (!(bp > 0.0 && bp < 1.0) || !(au > 0.0 && au < 1.0)) {
        throw numeric_error("geometry_from_bp_au: bp and au must lie in (0,1)");
    }
    const double qb = upper_tail_inverse(bp);
    const double qa = upper_tail_inverse(au);
    Geometry g;
    g.beta0 = 0.5 * (qb + qa);
    g.beta1 = 0.5 * (qb - qa);
    return g;
}

PValueTriple pvalues_from_geometry(const Geometry& g) {
    require_finite(g, "pvalues_from_geometry");
    PValueTriple t;
    t.mode = g.mode();
    t.bp = bp_from_geometry(g);
    t.au = au_from_geometry(g);
    t.si_prime = si_prime(g);

    if (g.se_beta0 && g.se_beta1) {
        t.se_bp = normal_pdf(g.beta0 + g.beta1) * quad_form(g, 1.0, 1.0);
        t.se_au = normal_pdf(g.beta0 - g.beta1) * quad_form(g, 1.0, -1.0);
        // Delta method on log SI, then scale by the (unnormalized) SI value.
        if (t.mode == TestMode::outside) {
            const double la = normal_hazard(g.beta0 - g.beta1);
            const double lb = normal_hazard(-g.beta1);
            const double si = tail_ratio(g.beta0 - g.beta1, -g.beta1);
            t.se_si = si * quad_form(g, -la, la - lb);
        } else {
            const double la = normal_hazard(-g.beta0 + g.beta1);
            const double lb = normal_hazard(g.beta1);
            const double si = tail_ratio(-g.beta0 + g.beta1, g.beta1);
            t.se_si = si * quad_form(g, la, lb - la);
        }
    }
    return t;
}

} // namespace msboot
