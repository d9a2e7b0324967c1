#include "msboot/kernels.hpp"

#include "msboot/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

namespace k = msboot::kernels;
using msboot::CounterStream;

namespace {

struct Restore {
    k::Backend saved = k::active_backend();
    ~Restore() { k::set_backend(saved); }
};

std::vector<double> random_vec(CounterStream& s, std::size_t n, double scale = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = scale * s.next_normal();
    return v;
}

} // namespace

TEST_SUITE("kernels") {

TEST_CASE("weighted rowsum matches a naive accumulation") {
    CounterStream s(1, 0, 0, 0);
    const std::size_t n = 37;
    const std::size_t kk = 11;
    const std::vector<double> xi = random_vec(s, n * kk, 2.0);
    std::vector<std::uint32_t> w(n);
    for (auto& x : w) x = static_cast<std::uint32_t>(s.next_below(5));
    std::vector<double> out(kk);
    k::weighted_rowsum(xi.data(), n, kk, w.data(), out.data());
    for (std::size_t j = 0; j < kk; ++j) {
        double expect = 0.0;
        for (std::size_t t = 0; t < n; ++t) expect += w[t] * xi[t * kk + j];
        CHECK(out[j] == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("argmax picks the first maximum and flags ties") {
    bool tie = false;
    {
        const double x[] = {-1.0, -2.0, -3.0};
        CHECK(k::argmax_lowest(x, 3, &tie) == 0);
        CHECK_FALSE(tie);
    }
    {
        const double x[] = {-1.0, -1.0, -3.0};
        CHECK(k::argmax_lowest(x, 3, &tie) == 0);
        CHECK(tie);
    }
    {
        // a later strict improvement clears earlier ties
        const double x[] = {2.0, 2.0, 5.0, 1.0};
        CHECK(k::argmax_lowest(x, 4, &tie) == 2);
        CHECK_FALSE(tie);
    }
    {
        // tie across vector-lane boundaries
        std::vector<double> x(19, 0.0);
        x[3] = 7.0;
        x[11] = 7.0;
        CHECK(k::argmax_lowest(x.data(), x.size(), &tie) == 3);
        CHECK(tie);
    }
    {
        std::vector<double> x(19, 0.0);
        x[17] = 9.0;
        CHECK(k::argmax_lowest(x.data(), x.size(), &tie) == 17);
        CHECK_FALSE(tie);
    }
}

TEST_CASE("argmax is permutation-equivariant") {
    CounterStream s(2, 0, 0, 0);
    std::vector<double> x = random_vec(s, 23);
    bool tie = false;
    const std::size_t best = k::argmax_lowest(x.data(), x.size(), &tie);
    // rotate and check the argmax follows
    std::vector<double> y(x.size());
    const std::size_t shift = 7;
    for (std::size_t i = 0; i < x.size(); ++i) y[(i + shift) % y.size()] = x[i];
    CHECK(k::argmax_lowest(y.data(), y.size(), nullptr) == (best + shift) % y.size());
}

TEST_CASE("squared distance equals the direct sum") {
    CounterStream s(3, 0, 0, 0);
    for (const std::size_t n : {1u, 3u, 4u, 7u, 64u, 1001u}) {
        const std::vector<double> a = random_vec(s, n);
        const std::vector<double> b = random_vec(s, n);
        long double expect = 0.0L;
        for (std::size_t i = 0; i < n; ++i) {
            const long double d = a[i] - b[i];
            expect += d * d;
        }
        CHECK(k::squared_distance(a.data(), b.data(), n) ==
              doctest::Approx(static_cast<double>(expect)).epsilon(1e-13));
    }
}

TEST_CASE("counting kernels agree with direct loops") {
    CounterStream s(4, 0, 0, 0);
    const std::size_t n = 1234;
    const std::vector<double> x = random_vec(s, n);
    std::size_t expect = 0;
    for (const double v : x) expect += v <= 0.25 ? 1 : 0;
    CHECK(k::count_leq(x.data(), n, 0.25) == expect);

    const std::size_t dim = 3;
    std::vector<std::vector<double>> coords;
    for (std::size_t d = 0; d < dim; ++d) coords.push_back(random_vec(s, n));
    const double center[] = {0.1, -0.2, 0.3};
    const double r2 = 1.7;
    std::vector<const double*> ptrs;
    for (const auto& c : coords) ptrs.push_back(c.data());
    expect = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
            const double diff = coords[d][i] - center[d];
            acc += diff * diff;
        }
        expect += acc <= r2 ? 1 : 0;
    }
    CHECK(k::count_sqdist_leq(ptrs.data(), n, dim, center, r2) == expect);
}

TEST_CASE("scalar and simd backends are bit-exact") {
    if (!k::backend_supported(k::Backend::avx2)) {
        MESSAGE("avx2 not available on this machine; equivalence not exercised");
        return;
    }
    Restore restore;
    CounterStream s(5, 0, 0, 0);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 1 + s.next_below(400);
        const std::size_t kk = 1 + s.next_below(140);
        const std::vector<double> xi = random_vec(s, n * kk, 3.0);
        std::vector<std::uint32_t> w(n);
        for (auto& x : w) x = static_cast<std::uint32_t>(s.next_below(4));
        std::vector<double> a = random_vec(s, n);
        std::vector<double> b = random_vec(s, n);
        // inject exact duplicates so tie handling is exercised
        std::vector<double> dup = random_vec(s, kk);
        if (kk > 9) {
            dup[9] = dup[2];
            dup[kk - 1] = dup[2];
        }

        REQUIRE(k::set_backend(k::Backend::scalar));
        std::vector<double> out_scalar(kk);
        k::weighted_rowsum(xi.data(), n, kk, w.data(), out_scalar.data());
        bool tie_scalar = false;
        const std::size_t arg_scalar = k::argmax_lowest(dup.data(), kk, &tie_scalar);
        const double dist_scalar = k::squared_distance(a.data(), b.data(), n);
        const std::size_t leq_scalar = k::count_leq(a.data(), n, 0.11);

        REQUIRE(k::set_backend(k::Backend::avx2));
        std::vector<double> out_simd(kk);
        k::weighted_rowsum(xi.data(), n, kk, w.data(), out_simd.data());
        bool tie_simd = false;
        const std::size_t arg_simd = k::argmax_lowest(dup.data(), kk, &tie_simd);
        const double dist_simd = k::squared_distance(a.data(), b.data(), n);
        const std::size_t leq_simd = k::count_leq(a.data(), n, 0.11);

        for (std::size_t j = 0; j < kk; ++j) CHECK(out_scalar[j] == out_simd[j]);
        CHECK(arg_scalar == arg_simd);
        CHECK(tie_scalar == tie_simd);
        CHECK(dist_scalar == dist_simd);
        CHECK(leq_scalar == leq_simd);
    }
}

TEST_CASE("ball counting is bit-exact across backends") {
    if (!k::backend_supported(k::Backend::avx2)) return;
    Restore restore;
    CounterStream s(6, 0, 0, 0);
    const std::size_t n = 777;
    const std::size_t dim = 4;
    std::vector<std::vector<double>> coords;
    for (std::size_t d = 0; d < dim; ++d) coords.push_back(random_vec(s, n, 2.0));
    std::vector<const double*> ptrs;
    for (const auto& c : coords) ptrs.push_back(c.data());
    const double center[] = {0.0, 0.5, -0.5, 1.0};
    REQUIRE(k::set_backend(k::Backend::scalar));
    const std::size_t cs = k::count_sqdist_leq(ptrs.data(), n, dim, center, 4.0);
    REQUIRE(k::set_backend(k::Backend::avx2));
    const std::size_t cv = k::count_sqdist_leq(ptrs.data(), n, dim, center, 4.0);
    CHECK(cs == cv);
}

} // TEST_SUITE
