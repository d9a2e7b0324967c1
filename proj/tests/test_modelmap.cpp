#include "msboot/modelmap.hpp"

#include "msboot/errors.hpp"
#include "msboot/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace msboot;

namespace {

SitewiseLogLik random_matrix(std::size_t n, std::size_t k, std::uint64_t seed) {
    SitewiseLogLik m;
    m.n = n;
    m.k = k;
    m.xi.resize(n * k);
    CounterStream s(seed, 0, 0, 0);
    for (auto& x : m.xi) x = -2.0 + 0.3 * s.next_normal();
    for (std::size_t i = 0; i < k; ++i) m.tree_labels.push_back("T" + std::to_string(i + 1));
    return m;
}

Eigen::MatrixXd centered(const SitewiseLogLik& m) {
    Eigen::MatrixXd a(m.n, m.k);
    for (std::size_t t = 0; t < m.n; ++t)
        for (std::size_t i = 0; i < m.k; ++i) a(t, i) = m.at(t, i);
    const Eigen::VectorXd c = a.rowwise().mean();
    return a.colwise() - c;
}

} // namespace

TEST_SUITE("modelmap") {

TEST_CASE("a single model reproduces itself") {
    // two columns with the second designated as the origin: one model vector
    SitewiseLogLik m;
    m.n = 6;
    m.k = 2;
    m.xi.resize(12);
    CounterStream s(3, 0, 0, 0);
    for (std::size_t t = 0; t < 6; ++t) {
        m.at(t, 1) = -1.0 + 0.1 * s.next_normal();
        m.at(t, 0) = m.at(t, 1) + 0.5 * s.next_normal();
    }
    const Eigen::VectorXd ax =
        full_model_vector(m, 1, MapCentering::designated_column, 1);
    for (std::size_t t = 0; t < 6; ++t) {
        CHECK(ax[static_cast<Eigen::Index>(t)] ==
              doctest::Approx(m.at(t, 0) - m.at(t, 1)).epsilon(1e-10));
    }
}

TEST_CASE("orthogonal equal-norm models sum to the full model") {
    // three mutually orthogonal columns of equal norm around a zero origin
    SitewiseLogLik m;
    m.n = 9;
    m.k = 4; // three models plus the zero origin column
    m.xi.assign(m.n * m.k, 0.0);
    const double s = 1.7;
    for (int i = 0; i < 3; ++i) {
        for (int t = 0; t < 3; ++t) {
            m.at(static_cast<std::size_t>(3 * i + t), static_cast<std::size_t>(i)) = s;
        }
    }
    const Eigen::VectorXd ax = full_model_vector(m, 3, MapCentering::designated_column, 3);
    for (std::size_t t = 0; t < m.n; ++t) {
        CHECK(ax[static_cast<Eigen::Index>(t)] == doctest::Approx(s).epsilon(1e-9));
    }
}

TEST_CASE("full model matches the dense least-squares oracle") {
    // designated origin keeps the model matrix at full column rank
    const SitewiseLogLik m = random_matrix(40, 6, 17);
    Eigen::MatrixXd b(40, 5);
    for (std::size_t t = 0; t < m.n; ++t)
        for (std::size_t i = 1; i < 6; ++i)
            b(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i - 1)) =
                m.at(t, i) - m.at(t, 0);
    Eigen::VectorXd d(5);
    for (int i = 0; i < 5; ++i) d[i] = b.col(i).squaredNorm();
    const Eigen::VectorXd expect = b * (b.transpose() * b).ldlt().solve(d);
    const Eigen::VectorXd got = full_model_vector(m, 5, MapCentering::designated_column, 0);
    CHECK((got - expect).norm() < 1e-8 * (1.0 + expect.norm()));

    // with mean centering the columns sum to zero; the truncated inverse picks
    // the same well-defined full-model vector as a rank-aware dense solve
    const Eigen::MatrixXd a = centered(m);
    Eigen::VectorXd dm(6);
    for (int i = 0; i < 6; ++i) dm[i] = a.col(i).squaredNorm();
    const Eigen::VectorXd wm =
        (a.transpose() * a).completeOrthogonalDecomposition().solve(dm);
    const Eigen::VectorXd expect_mean = a * wm;
    const Eigen::VectorXd got_mean = full_model_vector(m, 6);
    CHECK((got_mean - expect_mean).norm() < 1e-8 * (1.0 + expect_mean.norm()));
}

TEST_CASE("full model is invariant to permuting the columns") {
    const SitewiseLogLik m = random_matrix(30, 5, 19);
    SitewiseLogLik perm = m;
    const std::size_t order[5] = {3, 0, 4, 2, 1};
    for (std::size_t t = 0; t < m.n; ++t)
        for (std::size_t i = 0; i < 5; ++i) perm.at(t, i) = m.at(t, order[i]);
    const Eigen::VectorXd a = full_model_vector(m, 5);
    const Eigen::VectorXd b = full_model_vector(perm, 5);
    CHECK((a - b).norm() < 1e-9 * (1.0 + a.norm()));
}

TEST_CASE("rank truncation tightens to the numerical rank") {
    // two duplicated columns: numerical rank 2 even though K = 4
    SitewiseLogLik m = random_matrix(20, 4, 23);
    for (std::size_t t = 0; t < m.n; ++t) {
        m.at(t, 2) = m.at(t, 0);
        m.at(t, 3) = m.at(t, 1);
    }
    int eff = 0;
    full_model_vector(m, 4, MapCentering::mean_column, 0, &eff);
    CHECK(eff < 4);
    CHECK_THROWS_AS(full_model_vector(m, 9), config_error);
    CHECK_THROWS_AS(full_model_vector(m, 0), config_error);
}

TEST_CASE("jeffreys distance shares the difference-norm kernel") {
    const SitewiseLogLik m = random_matrix(25, 3, 29);
    CHECK(jeffreys_distance_sq(m, 0, 0) == 0.0);
    CHECK(jeffreys_distance_sq(m, 0, 2) == loglik_diff_variance(m, 0, 2));
    double expect = 0.0;
    for (std::size_t t = 0; t < m.n; ++t) {
        const double diff = m.at(t, 0) - m.at(t, 1);
        expect += diff * diff;
    }
    CHECK(jeffreys_distance_sq(m, 0, 1) == doctest::Approx(expect).epsilon(1e-13));
}

TEST_CASE("projection removes the full-model direction") {
    const SitewiseLogLik m = random_matrix(50, 8, 31);
    const Eigen::VectorXd ax = full_model_vector(m, 8);
    const ModelMapResult map = map_coordinates(m, 8, 2, true);
    // site scores carry U Sigma; the full-model direction must be gone
    const Eigen::VectorXd overlap = map.site_coords.transpose() * (ax / ax.norm());
    for (int d = 0; d < 2; ++d) {
        CHECK(std::fabs(overlap[d]) < 1e-8);
    }
    for (int d = 0; d < 2; ++d) {
        CHECK(std::fabs(map.full_model_coord[d]) < 1e-8);
    }
    // idempotence of the projector in data space
    Eigen::MatrixXd a = centered(m);
    const Eigen::VectorXd unit = ax / ax.norm();
    const Eigen::MatrixXd once = a - unit * (unit.transpose() * a);
    const Eigen::MatrixXd twice = once - unit * (unit.transpose() * once);
    CHECK((once - twice).norm() < 1e-12 * (1.0 + once.norm()));
}

TEST_CASE("biplot reconstruction satisfies the low-rank error identity") {
    const SitewiseLogLik m = random_matrix(40, 9, 37);
    const ModelMapResult map = map_coordinates(m, 9, 3, false);
    const Eigen::MatrixXd recon = map.site_coords * map.tree_coords.transpose();
    const Eigen::MatrixXd a = centered(m);
    double tail_energy = 0.0;
    for (std::size_t i = 3; i < map.singular_values.size(); ++i) {
        tail_energy += map.singular_values[i] * map.singular_values[i];
    }
    CHECK((a - recon).squaredNorm() == doctest::Approx(tail_energy).epsilon(1e-8));
    // retained energy shows up in the site coordinates (alpha = 1)
    double retained = 0.0;
    for (std::size_t i = 0; i < 3; ++i)
        retained += map.singular_values[i] * map.singular_values[i];
    CHECK(map.site_coords.squaredNorm() == doctest::Approx(retained).epsilon(1e-10));
}

TEST_CASE("orthogonal site blocks give orthogonal tree axes") {
    SitewiseLogLik m;
    m.n = 8;
    m.k = 3; // two models and a zero origin column
    m.xi.assign(m.n * m.k, 0.0);
    CounterStream s(41, 0, 0, 0);
    for (std::size_t t = 0; t < 4; ++t) m.at(t, 0) = 1.0 + 0.1 * s.next_normal();
    for (std::size_t t = 4; t < 8; ++t) m.at(t, 1) = -1.0 + 0.1 * s.next_normal();
    const ModelMapResult map =
        map_coordinates(m, 2, 2, false, MapCentering::designated_column, 2);
    REQUIRE(map.tree_coords.rows() == 2);
    const double dot = map.tree_coords.row(0).dot(map.tree_coords.row(1));
    CHECK(std::fabs(dot) < 1e-10);
}

TEST_CASE("csv and svg outputs") {
    const SitewiseLogLik m = random_matrix(12, 4, 43);
    const ModelMapResult map = map_coordinates(m, 4, 2, false);
    std::ostringstream csv;
    write_map_csv(csv, map);
    const std::string text = csv.str();
    CHECK(text.rfind("kind,id,x,y\n", 0) == 0);
    std::size_t lines = 0;
    for (const char c : text) lines += c == '\n' ? 1 : 0;
    CHECK(lines == 1 + 12 + 4 + 1); // header + sites + trees + full model
    CHECK(text.find("full_model,X") != std::string::npos);

    std::ostringstream svg;
    write_map_svg(svg, map);
    CHECK(svg.str().find("<svg") != std::string::npos);
    CHECK(svg.str().find("width=\"800\" height=\"800\"") != std::string::npos);
    CHECK(svg.str().find("</svg>") != std::string::npos);
}

TEST_CASE("dims guard") {
    const SitewiseLogLik m = random_matrix(10, 3, 47);
    CHECK_THROWS_AS(map_coordinates(m, 3, 4, false), config_error);
    const SitewiseLogLik narrow = random_matrix(10, 2, 48);
    CHECK_THROWS_AS(map_coordinates(narrow, 2, 3, false), config_error);
}

} // TEST_SUITE
