#pragma once

#include "msboot/geometry.hpp"
#include "msboot/scaling.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace msboot {

// Synthetic regions with analytically known geometry, used to validate the
// bootstrap-and-fit pipeline against ground truth.
enum class RegionKind { half_space, ball, cone };

struct RegionSpec {
    RegionKind kind = RegionKind::half_space;
    int dim = 2; // m + 1

    // half_space: { x : x[dim-1] <= -offset }
    double offset = 0.0;

    // ball: { x : |x - center| <= radius }
    std::vector<double> center;
    double radius = 0.0;

    // cone: intersection of half spaces { x : normals[k].x <= offsets[k] },
    // normals unit length.
    std::vector<std::vector<double>> normals;
    std::vector<double> offsets;

    static RegionSpec half_space(int dim, double offset);
    static RegionSpec ball(std::vector<double> center, double radius);
    static RegionSpec cone(std::vector<std::vector<double>> normals,
                           std::vector<double> offsets);

    void validate() const; // throws config_error
};

// Exact membership test.
bool membership(const RegionSpec& region, std::span<const double> point);

// Signed distance and boundary mean curvature at the projection of y.
// half_space -> (distance, 0); ball -> (|y-c| - r, m/(2 radius)); cone ->
// distance to the unique active facet with curvature 0. Throws
// msboot::numeric_error when the projection is ambiguous (ball center,
// equidistant or edge-of-cone projections).
Geometry analytic_geometry(const RegionSpec& region, std::span<const double> y);

// Multiscale bootstrap directly in the normal model: per scale, B draws of
// Y* ~ N(y, sigma^2 I), hits = membership count. Deterministic per seed and
// independent of the worker count.
MultiscaleCounts direct_multiscale_counts(const RegionSpec& region, std::span<const double> y,
                                          const std::vector<double>& scales, std::int64_t replicates,
                                          std::uint64_t seed, int workers = 1);

struct ExperimentReport {
    std::int64_t trials = 0; // qualifying trials (see mode)
    std::int64_t rejections = 0;
    double rate = 0.0;
    double binomial_se = 0.0;
    double target_alpha = 0.0;
    std::int64_t total_trials = 0;
    std::int64_t fit_failures = 0;
};

enum class ExperimentMode { au_unconditional, si_conditional };

struct PipelineConfig {
    std::vector<double> scales;
    std::int64_t replicates = 10000;
    std::vector<ScalingModel> models = {ScalingModel::poly2, ScalingModel::poly3,
                                        ScalingModel::sing3};
    std::uint64_t seed = 1;
    int workers = 1;
};

struct TrialDiagnostic {
    std::int64_t trial = 0;
    Geometry analytic;
    Geometry fitted;
    PValueTriple pvalues;
    bool outside = false;
};

// Monte Carlo type-I error at a boundary mean: draws Y ~ N(mu, I), runs the
// full counts -> fit -> p-value pipeline per trial, and counts rejections.
// au_unconditional counts AU < alpha over all trials; si_conditional counts
// SI' < alpha among trials with Y outside the region and reports the
// conditional rate. mu must satisfy |beta0(mu)| < 1e-9.
//
// diagnostics, when given, receives the first few trials' fitted-vs-analytic
// geometry; tested_pvalues receives the tested p-value of every qualifying
// trial in trial order.
ExperimentReport type1_experiment(const RegionSpec& region, std::span<const double> mu,
                                  double alpha, std::int64_t trials, ExperimentMode mode,
                                  const PipelineConfig& config,
                                  std::vector<TrialDiagnostic>* diagnostics = nullptr,
                                  std::vector<double>* tested_pvalues = nullptr);

} // namespace msboot
