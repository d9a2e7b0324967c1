#include "msboot/scaling.hpp"

#include "msboot/errors.hpp"
#include "msboot/normal.hpp"
#include "msboot/pvalues.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace msboot {

namespace {

constexpr double kSing3UMax = 12.0; // logistic(12) ~ 1 - 6e-6

double logistic(double u) { return 1.0 / (1.0 + std::exp(-u)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

bool is_degenerate(std::int64_t hits, std::int64_t b) { return hits == 0 || hits == b; }

int poly_degree(ScalingModel m) {
    switch (m) {
        case ScalingModel::poly1: return 1;
        case ScalingModel::poly2: return 2;
        case ScalingModel::poly3: return 3;
        default: return 0;
    }
}

// psi and its derivatives w.r.t. the natural coefficients at one sigma^2.
struct PsiDeriv {
    double value = 0.0;
    Eigen::VectorXd grad;  // d psi / d theta
    Eigen::MatrixXd hess;  // d^2 psi / d theta^2 (zero for polynomials)
};

PsiDeriv psi_with_derivs(ScalingModel m, const Eigen::VectorXd& theta, double s2) {
    PsiDeriv out;
    const int p = model_n_params(m);
    out.grad = Eigen::VectorXd::Zero(p);
    out.hess = Eigen::MatrixXd::Zero(p, p);
    if (m == ScalingModel::sing3) {
        const double sigma = std::sqrt(s2);
        const double d = 1.0 + theta[2] * (sigma - 1.0);
        const double ratio = s2 / d;
        out.value = theta[0] + theta[1] * ratio;
        out.grad[0] = 1.0;
        out.grad[1] = ratio;
        out.grad[2] = -theta[1] * s2 * (sigma - 1.0) / (d * d);
        out.hess(1, 2) = out.hess(2, 1) = -s2 * (sigma - 1.0) / (d * d);
        out.hess(2, 2) = 2.0 * theta[1] * s2 * (sigma - 1.0) * (sigma - 1.0) / (d * d * d);
        return out;
    }
    double pow_s = 1.0;
    for (int i = 0; i < p; ++i) {
        out.value += theta[i] * pow_s;
        out.grad[i] = pow_s;
        pow_s *= s2;
    }
    return out;
}

struct Evaluation {
    double loglik = 0.0;
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;
};

// Binomial log-likelihood in the natural coefficients, with analytic gradient
// and Hessian. All tail quantities are handled in log space so scales far out
// in the tail (p near 0 or 1) contribute without overflow.
Evaluation evaluate(const MultiscaleCounts& c, ScalingModel m,
                    const Eigen::VectorXd& theta, bool want_hess) {
    const int p = model_n_params(m);
    Evaluation ev;
    ev.grad = Eigen::VectorXd::Zero(p);
    ev.hess = Eigen::MatrixXd::Zero(p, p);
    for (std::size_t s = 0; s < c.n_scales(); ++s) {
        const double sigma = std::sqrt(c.scales[s]);
        const PsiDeriv pd = psi_with_derivs(m, theta, c.scales[s]);
        const double x = pd.value / sigma;
        const double h = static_cast<double>(c.hits[s]);
        const double bmh = static_cast<double>(c.replicates[s] - c.hits[s]);
        const double lp = log_upper_tail(x);    // log p
        const double l1mp = log_upper_tail(-x); // log (1-p)
        ev.loglik += h * lp + bmh * l1mp;
        const double lphi = log_normal_pdf(x);
        const double r0 = std::exp(lphi - lp);
        const double r1 = std::exp(lphi - l1mp);
        const double dldx = -h * r0 + bmh * r1;
        const Eigen::VectorXd dxdth = pd.grad / sigma;
        ev.grad += dldx * dxdth;
        if (want_hess) {
            const double d2ldx2 =
                x * (h * r0 - bmh * r1) - (h * r0 * r0 + bmh * r1 * r1);
            ev.hess += d2ldx2 * (dxdth * dxdth.transpose()) + (dldx / sigma) * pd.hess;
        }
    }
    return ev;
}

// Optimization runs in an unconstrained space; for sing3 the third coordinate
// is the logit of beta2, which keeps beta2 inside [0,1].
Eigen::VectorXd to_natural(ScalingModel m, const Eigen::VectorXd& opt) {
    if (m != ScalingModel::sing3) return opt;
    Eigen::VectorXd th = opt;
    th[2] = logistic(std::clamp(opt[2], -kSing3UMax, kSing3UMax));
    return th;
}

Eigen::VectorXd grad_to_opt(ScalingModel m, const Eigen::VectorXd& opt,
                            const Eigen::VectorXd& grad_nat) {
    if (m != ScalingModel::sing3) return grad_nat;
    const double b2 = logistic(std::clamp(opt[2], -kSing3UMax, kSing3UMax));
    Eigen::VectorXd g = grad_nat;
    g[2] *= b2 * (1.0 - b2);
    return g;
}

double neg_loglik(const MultiscaleCounts& c, ScalingModel m, const Eigen::VectorXd& opt) {
    return -evaluate(c, m, to_natural(m, opt), false).loglik;
}

Eigen::VectorXd neg_grad(const MultiscaleCounts& c, ScalingModel m,
                         const Eigen::VectorXd& opt) {
    const Evaluation ev = evaluate(c, m, to_natural(m, opt), false);
    return -grad_to_opt(m, opt, ev.grad);
}

void clamp_opt(ScalingModel m, Eigen::VectorXd& opt) {
    if (m == ScalingModel::sing3) opt[2] = std::clamp(opt[2], -kSing3UMax, kSing3UMax);
}

struct BfgsResult {
    Eigen::VectorXd opt;
    double f = 0.0;
    double grad_inf = 0.0;
};

BfgsResult bfgs_minimize(const MultiscaleCounts& c, ScalingModel m,
                         Eigen::VectorXd x, double gtol) {
    const int p = static_cast<int>(x.size());
    clamp_opt(m, x);
    double f = neg_loglik(c, m, x);
    Eigen::VectorXd g = neg_grad(c, m, x);
    Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(p, p);
    int stall = 0;
    for (int iter = 0; iter < 300; ++iter) {
        if (g.lpNorm<Eigen::Infinity>() < gtol) break;
        Eigen::VectorXd dir = -hinv * g;
        if (dir.dot(g) >= 0.0) {
            hinv.setIdentity();
            dir = -g;
        }
        // Armijo backtracking
        double step = 1.0;
        const double slope = g.dot(dir);
        Eigen::VectorXd xn;
        double fn = f;
        bool moved = false;
        for (int ls = 0; ls < 60; ++ls) {
            xn = x + step * dir;
            clamp_opt(m, xn);
            fn = neg_loglik(c, m, xn);
            if (std::isfinite(fn) && fn <= f + 1e-4 * step * slope) {
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;
        const Eigen::VectorXd gn = neg_grad(c, m, xn);
        const Eigen::VectorXd s = xn - x;
        const Eigen::VectorXd y = gn - g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd iden = Eigen::MatrixXd::Identity(p, p);
            hinv = (iden - rho * s * y.transpose()) * hinv *
                       (iden - rho * y * s.transpose()) +
                   rho * s * s.transpose();
        }
        if (std::fabs(f - fn) < 1e-14 * (1.0 + std::fabs(f))) {
            if (++stall >= 2) {
                x = xn;
                f = fn;
                g = gn;
                break;
            }
        } else {
            stall = 0;
        }
        x = xn;
        f = fn;
        g = gn;
    }
    return {x, f, g.lpNorm<Eigen::Infinity>()};
}

// A couple of guarded Newton steps in the natural coordinates sharpen the
// BFGS solution to near machine precision (the observed information is
// available analytically anyway).
void newton_polish(const MultiscaleCounts& c, ScalingModel m, Eigen::VectorXd& opt) {
    for (int it = 0; it < 3; ++it) {
        const Eigen::VectorXd th = to_natural(m, opt);
        const Evaluation ev = evaluate(c, m, th, true);
        Eigen::MatrixXd a = -ev.hess; // should be PSD near the maximum
        const double bump = 1e-10 * std::max(1.0, a.diagonal().cwiseAbs().maxCoeff());
        for (int k = 0; k < 40; ++k) {
            const Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
            if (ldlt.info() == Eigen::Success && ldlt.isPositive()) break;
            a += bump * std::pow(10.0, k) * Eigen::MatrixXd::Identity(a.rows(), a.cols());
        }
        const Eigen::VectorXd step_nat = Eigen::LDLT<Eigen::MatrixXd>(a).solve(ev.grad);
        Eigen::VectorXd candidate_nat = th + step_nat;
        Eigen::VectorXd candidate = candidate_nat;
        if (m == ScalingModel::sing3) {
            const double b2 = std::clamp(candidate_nat[2], 1e-9, 1.0 - 1e-9);
            candidate[2] = std::clamp(logit(b2), -kSing3UMax, kSing3UMax);
        }
        const double f0 = neg_loglik(c, m, opt);
        double t = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 20; ++ls) {
            Eigen::VectorXd xn = opt + t * (candidate - opt);
            clamp_opt(m, xn);
            const double fn = neg_loglik(c, m, xn);
            if (std::isfinite(fn) && fn <= f0) {
                opt = xn;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break;
    }
}

Eigen::MatrixXd psd_pseudo_inverse(const Eigen::MatrixXd& a) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    const Eigen::VectorXd& ev = es.eigenvalues();
    const double tol = 1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
    for (int i = 0; i < ev.size(); ++i)
        if (ev[i] > tol) inv[i] = 1.0 / ev[i];
    return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

// Weighted least squares on the observed psi points, used for starting values.
Eigen::VectorXd wls_poly(const std::vector<PsiPoint>& pts, int degree) {
    const int npts = static_cast<int>(pts.size());
    Eigen::MatrixXd x(npts, degree);
    Eigen::VectorXd y(npts);
    Eigen::VectorXd w(npts);
    for (int i = 0; i < npts; ++i) {
        double pow_s = 1.0;
        for (int j = 0; j < degree; ++j) {
            x(i, j) = pow_s;
            pow_s *= pts[i].scale;
        }
        y[i] = pts[i].psi;
        w[i] = 1.0 / std::max(1e-12, pts[i].se * pts[i].se);
    }
    const Eigen::MatrixXd xw = w.asDiagonal() * x;
    return (x.transpose() * xw).ldlt().solve(xw.transpose() * y);
}

std::vector<PsiPoint> psi_points_for_fit(const MultiscaleCounts& c) {
    std::vector<PsiPoint> pts;
    for (std::size_t s = 0; s < c.n_scales(); ++s) {
        if (is_degenerate(c.hits[s], c.replicates[s])) continue;
        const double b = static_cast<double>(c.replicates[s]);
        const double frac = static_cast<double>(c.hits[s]) / b;
        const double sigma = std::sqrt(c.scales[s]);
        const double q = upper_tail_inverse(frac);
        PsiPoint pt;
        pt.scale = c.scales[s];
        pt.psi = sigma * q;
        pt.se = sigma * std::sqrt(frac * (1.0 - frac) / b) / normal_pdf(q);
        pts.push_back(pt);
    }
    return pts;
}

} // namespace

void MultiscaleCounts::validate() const {
    if (scales.size() < 2) throw config_error("counts '" + item_id + "': need at least 2 scales");
    if (replicates.size() != scales.size() || hits.size() != scales.size())
        throw config_error("counts '" + item_id + "': ragged scale/replicate/hit arrays");
    for (std::size_t s = 0; s < scales.size(); ++s) {
        if (!(scales[s] > 0.0)) throw config_error("counts '" + item_id + "': scales must be positive");
        if (s > 0 && !(scales[s] > scales[s - 1]))
            throw config_error("counts '" + item_id + "': scales must be strictly increasing");
        if (replicates[s] < 1) throw config_error("counts '" + item_id + "': replicates must be >= 1");
        if (hits[s] < 0 || hits[s] > replicates[s])
            throw config_error("counts '" + item_id + "': hits outside [0, B]");
    }
}

const char* model_name(ScalingModel m) {
    switch (m) {
        case ScalingModel::poly1: return "poly1";
        case ScalingModel::poly2: return "poly2";
        case ScalingModel::poly3: return "poly3";
        case ScalingModel::sing3: return "sing3";
    }
    return "?";
}

ScalingModel model_from_name(std::string_view name) {
    if (name == "poly1") return ScalingModel::poly1;
    if (name == "poly2") return ScalingModel::poly2;
    if (name == "poly3") return ScalingModel::poly3;
    if (name == "sing3") return ScalingModel::sing3;
    throw config_error("unknown scaling model '" + std::string(name) + "'");
}

int model_n_params(ScalingModel m) {
    return m == ScalingModel::sing3 ? 3 : poly_degree(m);
}

std::vector<PsiPoint> psi_observed(const MultiscaleCounts& counts) {
    counts.validate();
    std::vector<PsiPoint> pts = psi_points_for_fit(counts);
    if (pts.size() < 2) {
        throw fit_error("psi_observed('" + counts.item_id + "'): fewer than 2 non-degenerate scales");
    }
    return pts;
}

double model_psi(ScalingModel m, const Eigen::VectorXd& coeff, double sigma_sq) {
    if (coeff.size() != model_n_params(m)) {
        throw config_error(std::string("model_psi: ") + model_name(m) + " expects " +
                           std::to_string(model_n_params(m)) + " coefficients");
    }
    if (m == ScalingModel::sing3) {
        if (!(sigma_sq > 0.0)) {
            throw numeric_error("model_psi: sing3 is defined for sigma^2 > 0 only");
        }
        const double sigma = std::sqrt(sigma_sq);
        const double d = 1.0 + coeff[2] * (sigma - 1.0);
        if (!(d > 1e-12)) throw numeric_error("model_psi: sing3 denominator is singular");
        return coeff[0] + coeff[1] * sigma_sq / d;
    }
    double value = 0.0;
    double pow_s = 1.0;
    for (int i = 0; i < coeff.size(); ++i) {
        value += coeff[i] * pow_s;
        pow_s *= sigma_sq;
    }
    return value;
}

ScalingModelFit fit_model(const MultiscaleCounts& counts, ScalingModel m) {
    counts.validate();
    const int p = model_n_params(m);
    const std::vector<PsiPoint> pts = psi_points_for_fit(counts);
    if (static_cast<int>(pts.size()) < p) {
        throw fit_error("fit_model('" + counts.item_id + "', " + model_name(m) + "): " +
                        std::to_string(pts.size()) + " non-degenerate scales for " +
                        std::to_string(p) + " parameters");
    }

    // Starting points: WLS on observed psi, plus deterministic perturbations.
    std::vector<Eigen::VectorXd> starts;
    if (m == ScalingModel::sing3) {
        const Eigen::VectorXd lin = wls_poly(pts, 2);
        for (const double u0 : {0.0, -3.0, 3.0, -1.5, 1.5}) {
            Eigen::VectorXd s0(3);
            s0 << lin[0], lin[1], u0;
            starts.push_back(s0);
        }
    } else {
        const Eigen::VectorXd base = wls_poly(pts, p);
        starts.push_back(base);
        if (p > 1) {
            Eigen::VectorXd lower = Eigen::VectorXd::Zero(p);
            lower.head(p - 1) = wls_poly(pts, p - 1);
            starts.push_back(lower);
        }
        const double shifts[] = {0.1, -0.1, 0.25};
        for (const double sh : shifts) {
            Eigen::VectorXd s0 = base;
            s0.array() *= (1.0 + sh);
            s0[0] += sh;
            starts.push_back(s0);
        }
    }

    double total_b = 0.0;
    for (const auto b : counts.replicates) total_b += static_cast<double>(b);
    const double gtol = 1e-8 * (1.0 + total_b);

    bool have_best = false;
    Eigen::VectorXd best_opt;
    double best_f = 0.0;
    for (const auto& s0 : starts) {
        const BfgsResult r = bfgs_minimize(counts, m, s0, gtol);
        if (!std::isfinite(r.f)) continue;
        if (!have_best || r.f < best_f) {
            have_best = true;
            best_f = r.f;
            best_opt = r.opt;
        }
    }
    if (!have_best) {
        throw fit_error("fit_model('" + counts.item_id + "', " + model_name(m) +
                        "): all starts diverged");
    }
    newton_polish(counts, m, best_opt);

    const Eigen::VectorXd theta = to_natural(m, best_opt);
    const Evaluation ev = evaluate(counts, m, theta, true);
    const double grad_inf = ev.grad.lpNorm<Eigen::Infinity>();
    // sing3 with beta2 pinned at its bound legitimately keeps a nonzero
    // beta2-gradient; convergence is judged on the free coordinates.
    double free_grad = grad_inf;
    if (m == ScalingModel::sing3 && std::fabs(best_opt[2]) >= kSing3UMax - 1e-9) {
        free_grad = ev.grad.head(2).lpNorm<Eigen::Infinity>();
    }
    if (!(free_grad < 1e-3 * (1.0 + total_b))) {
        throw fit_error("fit_model('" + counts.item_id + "', " + model_name(m) +
                        "): no convergence after restarts (|grad|=" +
                        std::to_string(free_grad) + ")");
    }

    ScalingModelFit fit;
    fit.model = m;
    fit.coeff = theta;
    fit.max_loglik = ev.loglik;
    fit.aic = -2.0 * ev.loglik + 2.0 * p;
    fit.param_cov = psd_pseudo_inverse(-ev.hess);
    fit.grad_norm = grad_inf;
    for (std::size_t s = 0; s < counts.n_scales(); ++s) {
        if (is_degenerate(counts.hits[s], counts.replicates[s]))
            fit.degenerate_scales.push_back(counts.scales[s]);
    }
    return fit;
}

AveragedFit select_and_average(std::vector<ScalingModelFit> fits) {
    if (fits.empty()) throw fit_error("select_and_average: no fits");
    double min_aic = fits[0].aic;
    for (const auto& f : fits) min_aic = std::min(min_aic, f.aic);
    std::vector<double> w(fits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < fits.size(); ++i) {
        w[i] = std::exp(-0.5 * (fits[i].aic - min_aic));
        total += w[i];
    }
    AveragedFit avg;
    double kept = 0.0;
    for (std::size_t i = 0; i < fits.size(); ++i) {
        const double wi = w[i] / total;
        if (wi < 1e-6) continue;
        avg.fits.push_back(std::move(fits[i]));
        avg.weights.push_back(wi);
        kept += wi;
    }
    for (auto& wi : avg.weights) wi /= kept;
    return avg;
}

Geometry geometry_at_unit_scale(const AveragedFit& avg) {
    if (avg.fits.empty()) throw fit_error("geometry_at_unit_scale: empty averaged fit");
    std::vector<Eigen::Vector2d> per_fit;
    std::vector<Eigen::Matrix2d> per_cov;
    for (const auto& fit : avg.fits) {
        const int p = model_n_params(fit.model);
        Eigen::VectorXd grad_psi1 = Eigen::VectorXd::Zero(p);   // d psi(1) / d theta
        Eigen::VectorXd grad_dpsi1 = Eigen::VectorXd::Zero(p);  // d psi'(1) / d theta
        double psi1 = 0.0;
        double dpsi1 = 0.0;
        if (fit.model == ScalingModel::sing3) {
            const double b1 = fit.coeff[1];
            const double b2 = fit.coeff[2];
            psi1 = fit.coeff[0] + b1;
            dpsi1 = b1 * (1.0 - 0.5 * b2);
            grad_psi1 << 1.0, 1.0, 0.0;
            grad_dpsi1 << 0.0, 1.0 - 0.5 * b2, -0.5 * b1;
        } else {
            for (int i = 0; i < p; ++i) {
                psi1 += fit.coeff[i];
                dpsi1 += i * fit.coeff[i];
                grad_psi1[i] = 1.0;
                grad_dpsi1[i] = i;
            }
        }
        Eigen::MatrixXd a(2, p);
        a.row(0) = (grad_psi1 - grad_dpsi1).transpose(); // beta0 = psi(1) - psi'(1)
        a.row(1) = grad_dpsi1.transpose();               // beta1 = psi'(1)
        per_fit.emplace_back(psi1 - dpsi1, dpsi1);
        per_cov.emplace_back(a * fit.param_cov * a.transpose());
    }
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (std::size_t k = 0; k < per_fit.size(); ++k) mean += avg.weights[k] * per_fit[k];
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (std::size_t k = 0; k < per_fit.size(); ++k) {
        const Eigen::Vector2d dev = per_fit[k] - mean;
        cov += avg.weights[k] * (per_cov[k] + dev * dev.transpose());
    }
    Geometry g;
    g.beta0 = mean[0];
    g.beta1 = mean[1];
    g.se_beta0 = std::sqrt(std::max(0.0, cov(0, 0)));
    g.se_beta1 = std::sqrt(std::max(0.0, cov(1, 1)));
    g.cov01 = cov(0, 1);
    return g;
}

PValueTriple pvalues_from_fit(const AveragedFit& avg) {
    return pvalues_from_geometry(geometry_at_unit_scale(avg));
}

std::vector<double> scale_grid(GridKind kind) {
    std::vector<double> s;
    if (kind == GridKind::wide13) {
        for (int i = 0; i < 13; ++i) {
            s.push_back(std::pow(9.0, (i - 6) / 6.0));
        }
    } else {
        for (int i = 0; i < 10; ++i) {
            s.push_back(1.0 / (1.4 - 0.1 * i));
        }
    }
    return s;
}

void write_counts_tsv(std::ostream& os, const std::vector<MultiscaleCounts>& items) {
    os << "# item";
    if (!items.empty()) {
        for (const double s : items.front().scales) {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.17g", s);
            os << '\t' << buf;
        }
    }
    os << '\n';
    for (const auto& item : items) {
        os << item.item_id;
        for (std::size_t s = 0; s < item.n_scales(); ++s) {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.17g", item.scales[s]);
            os << '\t' << buf << '\t' << item.replicates[s] << '\t' << item.hits[s];
        }
        os << '\n';
    }
}

std::vector<MultiscaleCounts> read_counts_tsv(std::istream& is) {
    std::vector<MultiscaleCounts> items;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        MultiscaleCounts item;
        if (!(ss >> item.item_id)) continue;
        double scale = 0.0;
        std::int64_t b = 0;
        std::int64_t hits = 0;
        while (ss >> scale) {
            if (!(ss >> b >> hits)) {
                throw parse_error("incomplete sigma2/B/hits triplet", lineno);
            }
            item.scales.push_back(scale);
            item.replicates.push_back(b);
            item.hits.push_back(hits);
        }
        if (!ss.eof()) {
            throw parse_error("non-numeric token in counts row", lineno);
        }
        try {
            item.validate();
        } catch (const config_error& e) {
            throw parse_error(e.what(), lineno);
        }
        items.push_back(std::move(item));
    }
    if (items.empty()) throw parse_error("no count rows found", lineno);
    return items;
}

} // namespace msboot
