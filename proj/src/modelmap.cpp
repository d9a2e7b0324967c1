#include "msboot/modelmap.hpp"

#include "msboot/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace msboot {

namespace {

struct CenteredModels {
    Eigen::MatrixXd a; // n x M centered model vectors
    std::vector<std::string> labels;
};

CenteredModels center_models(const SitewiseLogLik& xi, MapCentering centering,
                             std::size_t center_col) {
    if (xi.n == 0 || xi.k == 0) throw config_error("modelmap: empty matrix");
    Eigen::MatrixXd m(xi.n, xi.k);
    for (std::size_t t = 0; t < xi.n; ++t)
        for (std::size_t i = 0; i < xi.k; ++i) m(t, i) = xi.at(t, i);

    CenteredModels out;
    if (centering == MapCentering::designated_column) {
        if (center_col >= xi.k) throw config_error("modelmap: designated center column out of range");
        const Eigen::VectorXd c = m.col(center_col);
        out.a.resize(xi.n, xi.k - 1);
        std::size_t dst = 0;
        for (std::size_t i = 0; i < xi.k; ++i) {
            if (i == center_col) continue;
            out.a.col(dst) = m.col(i) - c;
            out.labels.push_back(i < xi.tree_labels.size() ? xi.tree_labels[i]
                                                           : "T" + std::to_string(i + 1));
            ++dst;
        }
    } else {
        const Eigen::VectorXd c = m.rowwise().mean();
        out.a = m.colwise() - c;
        for (std::size_t i = 0; i < xi.k; ++i) {
            out.labels.push_back(i < xi.tree_labels.size() ? xi.tree_labels[i]
                                                           : "T" + std::to_string(i + 1));
        }
    }
    if (out.a.cols() == 0) throw config_error("modelmap: no model columns left after centering");
    return out;
}

Eigen::VectorXd full_model_from(const Eigen::MatrixXd& a, int rank, int* effective_rank) {
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    Eigen::VectorXd d(a.cols());
    for (Eigen::Index i = 0; i < a.cols(); ++i) d[i] = a.col(i).squaredNorm();

    const double tol = 1e-10 * std::max(1.0, sv.size() > 0 ? sv[0] : 0.0);
    int usable = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv[i] > tol) ++usable;
    const int r = std::max(1, std::min({rank, usable, static_cast<int>(sv.size())}));
    if (effective_rank) *effective_rank = r;

    // a_X = U Sigma^{-1} V^T d over the retained directions
    const Eigen::VectorXd vtd = svd.matrixV().leftCols(r).transpose() * d;
    Eigen::VectorXd scaled(r);
    for (int i = 0; i < r; ++i) scaled[i] = vtd[i] / sv[i];
    return svd.matrixU().leftCols(r) * scaled;
}

void append_row(std::ostream& os, const char* kind, const std::string& id,
                const double* coords, int dims) {
    os << kind << ',' << id;
    for (int d = 0; d < dims; ++d) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.10g", coords[d]);
        os << ',' << buf;
    }
    os << '\n';
}

} // namespace

Eigen::VectorXd full_model_vector(const SitewiseLogLik& xi, int rank, MapCentering centering,
                                  std::size_t center_col, int* effective_rank) {
    if (rank < 1) throw config_error("full_model_vector: rank must be >= 1");
    if (rank > static_cast<int>(xi.k)) throw config_error("full_model_vector: rank exceeds K");
    const CenteredModels cm = center_models(xi, centering, center_col);
    return full_model_from(cm.a, rank, effective_rank);
}

double jeffreys_distance_sq(const SitewiseLogLik& xi, std::size_t i, std::size_t j) {
    return loglik_diff_variance(xi, i, j);
}

ModelMapResult map_coordinates(const SitewiseLogLik& xi, int rank, int dims,
                               bool project_out_full, MapCentering centering,
                               std::size_t center_col, double biplot_alpha) {
    if (dims != 2 && dims != 3) throw config_error("map_coordinates: dims must be 2 or 3");
    CenteredModels cm = center_models(xi, centering, center_col);
    if (dims > std::min<Eigen::Index>(cm.a.rows(), cm.a.cols())) {
        throw config_error("map_coordinates: dims exceeds matrix rank bound");
    }

    ModelMapResult result;
    result.tree_labels = cm.labels;
    Eigen::VectorXd ax = full_model_from(cm.a, rank, &result.effective_rank);
    const double ax_norm = ax.norm();
    if (project_out_full) {
        if (ax_norm < 1e-12) throw config_error("map_coordinates: degenerate full-model vector");
        const Eigen::VectorXd unit = ax / ax_norm;
        cm.a -= unit * (unit.transpose() * cm.a);
    }

    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(cm.a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    result.singular_values.assign(sv.data(), sv.data() + sv.size());

    Eigen::VectorXd s_alpha(dims);
    Eigen::VectorXd s_beta(dims);
    for (int d = 0; d < dims; ++d) {
        const double s = sv[d];
        s_alpha[d] = std::pow(s, biplot_alpha);
        s_beta[d] = std::pow(s, 1.0 - biplot_alpha);
    }
    result.site_coords = svd.matrixU().leftCols(dims) * s_alpha.asDiagonal();
    result.tree_coords = svd.matrixV().leftCols(dims) * s_beta.asDiagonal();

    // The full model is a model-side object; place it on the tree scale so a
    // column equal to some a_i would land exactly on that tree's point.
    Eigen::VectorXd proj = svd.matrixU().leftCols(dims).transpose() * ax;
    result.full_model_coord.resize(dims);
    for (int d = 0; d < dims; ++d) {
        result.full_model_coord[d] = sv[d] > 0.0 ? proj[d] * s_beta[d] / sv[d] : 0.0;
    }
    result.centering = centering == MapCentering::mean_column
                           ? "mean_column"
                           : "designated_column:" + std::to_string(center_col);
    return result;
}

void write_map_csv(std::ostream& os, const ModelMapResult& map) {
    const int dims = static_cast<int>(map.site_coords.cols());
    os << "kind,id";
    const char axes[3] = {'x', 'y', 'z'};
    for (int d = 0; d < dims; ++d) os << ',' << axes[d];
    os << '\n';
    std::vector<double> row(dims);
    for (Eigen::Index t = 0; t < map.site_coords.rows(); ++t) {
        for (int d = 0; d < dims; ++d) row[d] = map.site_coords(t, d);
        append_row(os, "site", std::to_string(t + 1), row.data(), dims);
    }
    for (Eigen::Index i = 0; i < map.tree_coords.rows(); ++i) {
        for (int d = 0; d < dims; ++d) row[d] = map.tree_coords(i, d);
        const std::string id = static_cast<std::size_t>(i) < map.tree_labels.size()
                                   ? map.tree_labels[i]
                                   : "T" + std::to_string(i + 1);
        append_row(os, "tree", id, row.data(), dims);
    }
    for (int d = 0; d < dims; ++d) row[d] = map.full_model_coord[d];
    append_row(os, "full_model", "X", row.data(), dims);
}

void write_map_svg(std::ostream& os, const ModelMapResult& map) {
    // First two coordinates only; fixed viewport, data scaled to fit.
    double lo = -1e-9;
    double hi = 1e-9;
    auto widen = [&](double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    };
    for (Eigen::Index t = 0; t < map.site_coords.rows(); ++t) {
        widen(map.site_coords(t, 0));
        widen(map.site_coords(t, 1));
    }
    for (Eigen::Index i = 0; i < map.tree_coords.rows(); ++i) {
        widen(map.tree_coords(i, 0));
        widen(map.tree_coords(i, 1));
    }
    widen(map.full_model_coord[0]);
    widen(map.full_model_coord[1]);
    const double span = hi - lo;
    const double margin = 40.0;
    const double scale = (800.0 - 2.0 * margin) / span;
    auto px = [&](double v) { return margin + (v - lo) * scale; };
    auto py = [&](double v) { return 800.0 - margin - (v - lo) * scale; };

    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"800\" "
          "viewBox=\"0 0 800 800\">\n";
    os << "<rect width=\"800\" height=\"800\" fill=\"white\"/>\n";
    for (Eigen::Index t = 0; t < map.site_coords.rows(); ++t) {
        os << "<circle cx=\"" << px(map.site_coords(t, 0)) << "\" cy=\""
           << py(map.site_coords(t, 1)) << "\" r=\"1.5\" fill=\"#777777\"/>\n";
    }
    for (Eigen::Index i = 0; i < map.tree_coords.rows(); ++i) {
        const double x = px(map.tree_coords(i, 0));
        const double y = py(map.tree_coords(i, 1));
        os << "<line x1=\"" << px(0.0) << "\" y1=\"" << py(0.0) << "\" x2=\"" << x
           << "\" y2=\"" << y << "\" stroke=\"#cc0000\" stroke-width=\"1\"/>\n";
        const std::string label = static_cast<std::size_t>(i) < map.tree_labels.size()
                                      ? map.tree_labels[i]
                                      : "T" + std::to_string(i + 1);
        os << "<text x=\"" << x + 3 << "\" y=\"" << y << "\" font-size=\"11\" "
              "fill=\"#cc0000\">" << label << "</text>\n";
    }
    os << "<circle cx=\"" << px(map.full_model_coord[0]) << "\" cy=\""
       << py(map.full_model_coord[1]) << "\" r=\"4\" fill=\"#007700\"/>\n";
    os << "<text x=\"" << px(map.full_model_coord[0]) + 5 << "\" y=\""
       << py(map.full_model_coord[1]) << "\" font-size=\"12\" fill=\"#007700\">X</text>\n";
    os << "</svg>\n";
}

} // namespace msboot
