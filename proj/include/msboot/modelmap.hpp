#pragma once

#include "msboot/rell.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <vector>

namespace msboot {

// Low-dimensional visualization of the per-tree site-wise log-likelihood
// vectors: squared distances approximate n times the Jeffreys divergence
// between the fitted models.

enum class MapCentering {
    mean_column,       // origin = mean of all model columns
    designated_column, // origin = a user-supplied column (e.g. a star topology fit)
};

struct ModelMapResult {
    Eigen::MatrixXd site_coords;      // n x d PCA scores
    Eigen::MatrixXd tree_coords;      // K x d loadings (biplot-scaled)
    Eigen::VectorXd full_model_coord; // d
    std::vector<double> singular_values;
    std::string centering;
    std::vector<std::string> tree_labels;
    int effective_rank = 0; // rank actually used for the full-model inverse
};

// Reconstructs the comprehensive-model vector a_X = B (B^T B)^{-1} d with
// d_i = |b_i|^2, the inverse taken by truncating to the largest `rank`
// singular values. Columns are centered per `centering`; with a designated
// column that column is the origin and is excluded from B. If rank exceeds
// the numerical rank the truncation tightens further (reported through
// *effective_rank when given).
Eigen::VectorXd full_model_vector(const SitewiseLogLik& xi, int rank,
                                  MapCentering centering = MapCentering::mean_column,
                                  std::size_t center_col = 0,
                                  int* effective_rank = nullptr);

// Same expression as loglik_diff_variance; approximately n * (KL(i|j) + KL(j|i)).
double jeffreys_distance_sq(const SitewiseLogLik& xi, std::size_t i, std::size_t j);

// Uncentered, unscaled PCA biplot of the centered model vectors, optionally
// after projecting out the full-model direction ("top view"). biplot_alpha
// splits the singular values between scores and loadings:
// sites = U Sigma^alpha, trees = V Sigma^(1-alpha); alpha = 1 by default.
ModelMapResult map_coordinates(const SitewiseLogLik& xi, int rank, int dims,
                               bool project_out_full,
                               MapCentering centering = MapCentering::mean_column,
                               std::size_t center_col = 0, double biplot_alpha = 1.0);

// CSV rows: kind,id,coordinates with kind in {site, tree, full_model}.
void write_map_csv(std::ostream& os, const ModelMapResult& map);

// Static scatter with a fixed 800x800 viewport.
void write_map_svg(std::ostream& os, const ModelMapResult& map);

} // namespace msboot
