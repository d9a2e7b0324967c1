#pragma once

#include "msboot/geometry.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace msboot {

// Per-scale bootstrap hit counts for one item (tree, edge, or synthetic
// region). Scales are the realized sigma^2 values, strictly increasing.
struct MultiscaleCounts {
    std::string item_id;
    std::vector<double> scales;
    std::vector<std::int64_t> replicates;
    std::vector<std::int64_t> hits;

    std::size_t n_scales() const { return scales.size(); }
    void validate() const; // throws config_error on a broken invariant
};

enum class ScalingModel { poly1, poly2, poly3, sing3 };

const char* model_name(ScalingModel m);
ScalingModel model_from_name(std::string_view name); // throws config_error
int model_n_params(ScalingModel m);

// A fitted psi-scaling model: binomial MLE on the raw counts with
// p_s = upper_tail(psi(sigma^2_s) / sigma_s).
struct ScalingModelFit {
    ScalingModel model = ScalingModel::poly2;
    Eigen::VectorXd coeff;
    double max_loglik = 0.0;
    double aic = 0.0;
    Eigen::MatrixXd param_cov;              // inverse observed information, PSD
    std::vector<double> degenerate_scales;  // sigma^2 with hits in {0, B}
    double grad_norm = 0.0;                 // convergence diagnostic
};

struct AveragedFit {
    std::vector<ScalingModelFit> fits;
    std::vector<double> weights; // Akaike weights, sum to 1
};

struct PsiPoint {
    double scale = 0.0; // sigma^2
    double psi = 0.0;
    double se = 0.0;
};

// Observed psi values at the non-degenerate scales, with delta-method
// standard errors. Throws fit_error when fewer than two scales are usable.
std::vector<PsiPoint> psi_observed(const MultiscaleCounts& counts);

// psi(sigma^2) under a model. Polynomials accept any sigma^2 (including the
// negative extrapolation range); sing3 is defined for sigma^2 > 0 only and
// throws msboot::numeric_error on a non-positive argument or a singular
// denominator.
double model_psi(ScalingModel m, const Eigen::VectorXd& coeff, double sigma_sq);

// Maximum-likelihood fit of one model. Requires at least model_n_params(m)
// non-degenerate scales; degenerate scales still contribute their exact
// binomial likelihood terms. Throws fit_error on failure.
ScalingModelFit fit_model(const MultiscaleCounts& counts, ScalingModel m);

// Akaike weights relative to the minimum AIC; members with weight < 1e-6 are
// dropped and the rest renormalized. Throws fit_error on an empty list.
AveragedFit select_and_average(std::vector<ScalingModelFit> fits);

// Tangent line to the averaged psi curve at sigma^2 = 1:
// beta1 = psi'(1), beta0 = psi(1) - psi'(1). Standard errors propagate
// through each fit's param_cov plus the between-model spread, with the
// Akaike weights treated as fixed.
Geometry geometry_at_unit_scale(const AveragedFit& avg);

PValueTriple pvalues_from_fit(const AveragedFit& avg);

enum class GridKind { wide13, narrow10 };

// wide13: thirteen sigma^2 values equally log-spaced on [1/9, 9].
// narrow10: sigma^-2 in {0.5, 0.6, ..., 1.4}, reported in ascending sigma^2.
std::vector<double> scale_grid(GridKind kind);

// Tab-separated persistence: one row per item, `sigma2<TAB>B<TAB>hits`
// triplet per scale after the item id. See README for the exact layout.
void write_counts_tsv(std::ostream& os, const std::vector<MultiscaleCounts>& items);
std::vector<MultiscaleCounts> read_counts_tsv(std::istream& is);

} // namespace msboot
