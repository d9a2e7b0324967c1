#pragma once

#include "msboot/scaling.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace msboot {

// Site-wise log-likelihood matrix: xi(t, i) is the log-likelihood of site t
// under tree i at the full-data MLE. Row-major storage, sites outermost, so
// the resampling kernel walks contiguous rows.
struct SitewiseLogLik {
    std::size_t n = 0; // sites
    std::size_t k = 0; // trees
    std::vector<double> xi;
    std::vector<std::string> tree_labels;

    double at(std::size_t t, std::size_t i) const { return xi[t * k + i]; }
    double& at(std::size_t t, std::size_t i) { return xi[t * k + i]; }
};

enum class MatrixFormat { plain, consel_mt };

// plain: header "n K", then n rows of K whitespace-separated values.
// consel_mt: header "K n", then K rows of n values (one row per tree).
SitewiseLogLik load_matrix(std::istream& is, MatrixFormat format);
SitewiseLogLik load_matrix_file(const std::string& path, MatrixFormat format);

struct ReplicateWeights {
    std::vector<std::uint32_t> w;
    std::uint64_t n_prime = 0;
};

// l*_i = sum_t w_t * xi(t, i).
std::vector<double> resample_loglik(const SitewiseLogLik& xi, const ReplicateWeights& weights);

struct MlResult {
    std::size_t index = 0;
    bool tie = false;
};

// Argmax with ties broken toward the lowest index.
MlResult ml_item(std::span<const double> loglik);

// Squared norm of the difference of two tree columns (the variance of the
// log-likelihood difference).
double loglik_diff_variance(const SitewiseLogLik& xi, std::size_t i, std::size_t j);

// Full-data log-likelihood per tree (column sums).
std::vector<double> total_loglik(const SitewiseLogLik& xi);

struct EdgeGrouping {
    std::vector<std::string> ids;
    std::vector<std::vector<std::size_t>> members; // tree indices per edge
};

struct BootstrapOptions {
    std::vector<double> scales; // requested sigma^2 grid
    std::int64_t replicates = 100000;
    std::uint64_t seed = 1;
    int workers = 1;
};

struct ScaleInfo {
    double requested = 0.0;
    double realized = 0.0; // n / n'
    std::uint64_t n_prime = 0;
    std::int64_t ties = 0; // replicates whose maximum was shared
};

struct BootstrapResult {
    std::vector<MultiscaleCounts> tree_counts;
    std::vector<MultiscaleCounts> edge_counts; // empty without grouping
    std::vector<ScaleInfo> scale_info;
};

// Multiscale RELL bootstrap. Each scale uses n' = round(n / sigma^2) and
// stores the realized sigma^2 = n/n'; requested scales collapsing to the
// same n' are merged. Replicate b at scale s draws from the counter-based
// stream keyed by (seed, s, b), so results are reproducible bit-for-bit for
// any worker count.
BootstrapResult multiscale_bootstrap(const SitewiseLogLik& xi, const BootstrapOptions& options,
                                     const EdgeGrouping* grouping = nullptr);

} // namespace msboot
