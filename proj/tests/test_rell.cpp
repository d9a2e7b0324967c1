#include "msboot/rell.hpp"

#include "msboot/errors.hpp"
#include "msboot/kernels.hpp"
#include "msboot/normal.hpp"
#include "msboot/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace msboot;

namespace {

SitewiseLogLik toy_matrix() {
    std::istringstream is("2 3\n-1.0 -1.1 -1.2\n-2.0 -2.1 -2.2\n");
    return load_matrix(is, MatrixFormat::plain);
}

// Three-tree configuration with exactly controlled resampling moments:
// the log-likelihood differences (l*_2 - l*_1, l*_3 - l*_1) under multinomial
// resampling at n' = n have mean (mu2, mu3), unit variances, zero covariance
// and zero skewness, so the argmax frequencies match the two-dimensional
// normal orthant probabilities (0.5, 0.3, 0.2) up to O(1/n).
SitewiseLogLik three_tree_fixture(std::size_t n, double mu2, double mu3) {
    REQUIRE(n % 4 == 0);
    SitewiseLogLik m;
    m.n = n;
    m.k = 3;
    m.xi.assign(n * 3, 0.0);
    m.tree_labels = {"T1", "T2", "T3"};
    const double s = 1.0 / std::sqrt(static_cast<double>(n));
    CounterStream base(99, 0, 0, 0);
    for (std::size_t t = 0; t < n; ++t) {
        const double e2 = (t % 4 == 0 || t % 4 == 1) ? 1.0 : -1.0;
        const double e3 = (t % 4 == 0 || t % 4 == 2) ? 1.0 : -1.0;
        const double b = -3.0 + 0.01 * base.next_normal();
        m.at(t, 0) = b;
        m.at(t, 1) = b + mu2 / static_cast<double>(n) + s * e2;
        m.at(t, 2) = b + mu3 / static_cast<double>(n) + s * e3;
    }
    return m;
}

} // namespace

TEST_SUITE("rell") {

TEST_CASE("plain matrix parsing") {
    const SitewiseLogLik m = toy_matrix();
    CHECK(m.n == 2);
    CHECK(m.k == 3);
    CHECK(m.at(0, 0) == -1.0);
    CHECK(m.at(0, 2) == -1.2);
    CHECK(m.at(1, 1) == -2.1);
    CHECK(m.tree_labels[0] == "T1");
}

TEST_CASE("consel_mt parsing is transposed") {
    std::istringstream is("3 2\n-1.0 -2.0\n-1.1 -2.1\n-1.2 -2.2\n");
    const SitewiseLogLik m = load_matrix(is, MatrixFormat::consel_mt);
    CHECK(m.n == 2);
    CHECK(m.k == 3);
    CHECK(m.at(0, 0) == -1.0);
    CHECK(m.at(0, 2) == -1.2);
    CHECK(m.at(1, 1) == -2.1);
}

TEST_CASE("values may wrap across physical lines") {
    std::istringstream is("2 3\n-1.0 -1.1\n-1.2 -2.0\n-2.1 -2.2\n");
    const SitewiseLogLik m = load_matrix(is, MatrixFormat::plain);
    CHECK(m.n == 2);
    CHECK(m.at(0, 2) == -1.2);
    CHECK(m.at(1, 0) == -2.0);
    std::istringstream ct("3 2\n-1.0\n-2.0 -1.1 -2.1\n-1.2 -2.2\n");
    const SitewiseLogLik t = load_matrix(ct, MatrixFormat::consel_mt);
    CHECK(t.at(0, 0) == -1.0);
    CHECK(t.at(1, 2) == -2.2);
}

TEST_CASE("matrix parse errors carry locations") {
    {
        std::istringstream is("2 3\n-1.0 -1.1 -1.2\n-2.0 -2.1\n");
        CHECK_THROWS_AS(load_matrix(is, MatrixFormat::plain), parse_error);
    }
    {
        std::istringstream is("2 3\n-1.0 oops -1.2\n-2.0 -2.1 -2.2\n");
        try {
            load_matrix(is, MatrixFormat::plain);
            FAIL("expected parse_error");
        } catch (const parse_error& e) {
            CHECK(e.line() == 2);
            CHECK(e.column() == 2);
        }
    }
    {
        std::istringstream is("");
        CHECK_THROWS_AS(load_matrix(is, MatrixFormat::plain), parse_error);
    }
    {
        std::istringstream is("2 3\n-1.0 inf -1.2\n-2.0 -2.1 -2.2\n");
        CHECK_THROWS_AS(load_matrix(is, MatrixFormat::plain), parse_error);
    }
    {
        std::istringstream is("2 3\n-1.0 -1.1 -1.2\n-2.0 -2.1 -2.2\n-3.0 -3.1 -3.2\n");
        CHECK_THROWS_AS(load_matrix(is, MatrixFormat::plain), parse_error);
    }
    CHECK_THROWS_AS(load_matrix_file("/nonexistent/path.mt", MatrixFormat::plain), io_error);
}

TEST_CASE("resample_loglik") {
    const SitewiseLogLik m = toy_matrix();
    {
        ReplicateWeights w{{1, 1}, 2};
        const auto l = resample_loglik(m, w);
        CHECK(l[0] == doctest::Approx(-3.0).epsilon(1e-15));
        CHECK(l[1] == doctest::Approx(-3.2).epsilon(1e-15));
        CHECK(l[2] == doctest::Approx(-3.4).epsilon(1e-15));
    }
    {
        ReplicateWeights w{{2, 0}, 2};
        const auto l = resample_loglik(m, w);
        CHECK(l[0] == doctest::Approx(-2.0).epsilon(1e-15));
        CHECK(l[2] == doctest::Approx(-2.4).epsilon(1e-15));
    }
    {
        ReplicateWeights bad{{1, 1, 1}, 3};
        CHECK_THROWS_AS(resample_loglik(m, bad), config_error);
    }
    // random weights against a direct per-site accumulation
    CounterStream s(31, 0, 0, 0);
    SitewiseLogLik big;
    big.n = 57;
    big.k = 9;
    big.xi.resize(big.n * big.k);
    for (auto& x : big.xi) x = s.next_normal();
    ReplicateWeights w;
    w.w.resize(big.n);
    w.n_prime = 0;
    for (auto& x : w.w) {
        x = static_cast<std::uint32_t>(s.next_below(4));
        w.n_prime += x;
    }
    const auto l = resample_loglik(big, w);
    for (std::size_t i = 0; i < big.k; ++i) {
        double expect = 0.0;
        for (std::size_t t = 0; t < big.n; ++t) expect += w.w[t] * big.xi[t * big.k + i];
        CHECK(l[i] == expect); // same accumulation order: exactly equal
    }
}

TEST_CASE("ml_item") {
    {
        const std::vector<double> l = {-1.0, -2.0, -3.0};
        const MlResult r = ml_item(l);
        CHECK(r.index == 0);
        CHECK_FALSE(r.tie);
    }
    {
        const std::vector<double> l = {-1.0, -1.0, -3.0};
        const MlResult r = ml_item(l);
        CHECK(r.index == 0);
        CHECK(r.tie);
    }
    {
        const std::vector<double> l = {-3.0, -1.0, -2.0};
        CHECK(ml_item(l).index == 1);
    }
    CHECK_THROWS_AS(ml_item(std::vector<double>{}), config_error);
}

TEST_CASE("loglik_diff_variance") {
    SitewiseLogLik m;
    m.n = 4;
    m.k = 3;
    m.xi = {1, 1, 0, 2, 2, 1, 3, 3, 0, 4, 4, 0};
    CHECK(loglik_diff_variance(m, 0, 1) == 0.0);
    CHECK(loglik_diff_variance(m, 1, 1) == 0.0);
    // column2 - column0 = (-1, -1, -3, -4) -> 1 + 1 + 9 + 16 = 27
    CHECK(loglik_diff_variance(m, 0, 2) == doctest::Approx(27.0).epsilon(1e-15));
    CounterStream s(32, 0, 0, 0);
    SitewiseLogLik r;
    r.n = 101;
    r.k = 2;
    r.xi.resize(r.n * r.k);
    for (auto& x : r.xi) x = s.next_normal();
    double expect = 0.0;
    for (std::size_t t = 0; t < r.n; ++t) {
        const double d = r.xi[t * 2] - r.xi[t * 2 + 1];
        expect += d * d;
    }
    CHECK(loglik_diff_variance(r, 0, 1) == doctest::Approx(expect).epsilon(1e-13));
    CHECK_THROWS_AS(loglik_diff_variance(r, 0, 5), config_error);
}

TEST_CASE("dominated matrix gives the dominant tree every replicate") {
    SitewiseLogLik m;
    m.n = 8;
    m.k = 2;
    m.xi.resize(16);
    for (std::size_t t = 0; t < 8; ++t) {
        m.at(t, 0) = -1.0; // tree 1 wins at every site
        m.at(t, 1) = -2.0;
    }
    m.tree_labels = {"T1", "T2"};
    BootstrapOptions opt;
    opt.scales = {0.5, 1.0, 2.0};
    opt.replicates = 500;
    opt.seed = 5;
    const BootstrapResult res = multiscale_bootstrap(m, opt);
    for (std::size_t s = 0; s < res.tree_counts[0].n_scales(); ++s) {
        CHECK(res.tree_counts[0].hits[s] == 500);
        CHECK(res.tree_counts[1].hits[s] == 0);
    }
}

TEST_CASE("counts partition the replicates and edges sum members") {
    const SitewiseLogLik m = three_tree_fixture(200, -0.4, -0.7);
    EdgeGrouping grouping;
    grouping.ids = {"E1", "E2"};
    grouping.members = {{0, 2}, {1}};
    BootstrapOptions opt;
    opt.scales = {0.5, 1.0, 3.0};
    opt.replicates = 2000;
    opt.seed = 9;
    opt.workers = 2;
    const BootstrapResult res = multiscale_bootstrap(m, opt, &grouping);
    REQUIRE(res.tree_counts.size() == 3);
    REQUIRE(res.edge_counts.size() == 2);
    for (std::size_t s = 0; s < res.scale_info.size(); ++s) {
        std::int64_t total = 0;
        for (const auto& tc : res.tree_counts) total += tc.hits[s];
        CHECK(total == 2000);
        CHECK(res.edge_counts[0].hits[s] ==
              res.tree_counts[0].hits[s] + res.tree_counts[2].hits[s]);
        CHECK(res.edge_counts[1].hits[s] == res.tree_counts[1].hits[s]);
    }
}

TEST_CASE("realized scales come from rounded replicate sizes") {
    SitewiseLogLik m;
    m.n = 100;
    m.k = 2;
    m.xi.assign(200, 0.0);
    for (std::size_t t = 0; t < 100; ++t) m.at(t, 0) = 1.0;
    BootstrapOptions opt;
    opt.scales = {0.5, 1.0, 2.0, 3.0};
    opt.replicates = 100;
    opt.seed = 1;
    const BootstrapResult res = multiscale_bootstrap(m, opt);
    REQUIRE(res.scale_info.size() == 4);
    CHECK(res.scale_info[0].n_prime == 200);
    CHECK(res.scale_info[1].n_prime == 100);
    CHECK(res.scale_info[2].n_prime == 50);
    CHECK(res.scale_info[3].n_prime == 33);
    CHECK(res.scale_info[3].realized == doctest::Approx(100.0 / 33.0).epsilon(1e-15));
    // n' < 1 rejected
    BootstrapOptions bad = opt;
    bad.scales = {500.0};
    CHECK_THROWS_AS(multiscale_bootstrap(m, bad), config_error);
}

TEST_CASE("bitwise determinism across runs, worker counts and backends") {
    const SitewiseLogLik m = three_tree_fixture(400, -0.4, -0.7);
    BootstrapOptions opt;
    opt.scales = scale_grid(GridKind::wide13);
    opt.replicates = 3000;
    opt.seed = 2024;

    auto snapshot = [&](int workers) {
        BootstrapOptions o = opt;
        o.workers = workers;
        const BootstrapResult r = multiscale_bootstrap(m, o);
        std::vector<std::int64_t> flat;
        for (const auto& tc : r.tree_counts)
            for (const auto h : tc.hits) flat.push_back(h);
        for (const auto& si : r.scale_info) flat.push_back(si.ties);
        return flat;
    };
    const auto base = snapshot(1);
    CHECK(snapshot(1) == base);
    CHECK(snapshot(2) == base);
    CHECK(snapshot(8) == base);

    if (kernels::backend_supported(kernels::Backend::avx2)) {
        const auto saved = kernels::active_backend();
        REQUIRE(kernels::set_backend(kernels::Backend::scalar));
        const auto scalar_counts = snapshot(2);
        REQUIRE(kernels::set_backend(kernels::Backend::avx2));
        const auto simd_counts = snapshot(2);
        kernels::set_backend(saved);
        CHECK(scalar_counts == base);
        CHECK(simd_counts == base);
    }
}

TEST_CASE("three-tree fixture matches the normal-model orthant frequencies") {
    const double mu2 = -0.417317;
    const double mu3 = -0.69203344;
    const SitewiseLogLik m = three_tree_fixture(2000, mu2, mu3);

    BootstrapOptions opt;
    opt.scales = {1.0};
    opt.replicates = 50000;
    opt.seed = 31415;
    opt.workers = 2;
    const BootstrapResult res = multiscale_bootstrap(m, opt);

    // direct simulation of the target normal configuration, independent path
    CounterStream s(271828, 0, 0, 0);
    const int draws = 200000;
    int hits[3] = {0, 0, 0};
    for (int i = 0; i < draws; ++i) {
        const double x2 = mu2 + s.next_normal();
        const double x3 = mu3 + s.next_normal();
        if (x2 < 0.0 && x3 < 0.0) ++hits[0];
        else if (x2 > x3) ++hits[1];
        else ++hits[2];
    }
    const double targets[3] = {0.5, 0.3, 0.2};
    for (int i = 0; i < 3; ++i) {
        const double rell_frac =
            static_cast<double>(res.tree_counts[static_cast<std::size_t>(i)].hits[0]) / 50000.0;
        const double mc_frac = static_cast<double>(hits[i]) / draws;
        const double tol = 4.0 * std::sqrt(targets[i] * (1.0 - targets[i]) / 50000.0);
        CAPTURE(i);
        CHECK(std::fabs(rell_frac - targets[i]) < tol + 0.002);
        CHECK(std::fabs(mc_frac - targets[i]) < 4.0 * std::sqrt(targets[i] * (1 - targets[i]) / draws));
        CHECK(std::fabs(rell_frac - mc_frac) < tol + 0.002);
    }
}

TEST_CASE("n_prime = n reproduces the ordinary bootstrap scale") {
    const SitewiseLogLik m = three_tree_fixture(400, -0.4, -0.7);
    BootstrapOptions opt;
    opt.scales = {1.0};
    opt.replicates = 1000;
    opt.seed = 77;
    const BootstrapResult res = multiscale_bootstrap(m, opt);
    CHECK(res.scale_info[0].n_prime == m.n);
    CHECK(res.scale_info[0].realized == 1.0);
}

} // TEST_SUITE
