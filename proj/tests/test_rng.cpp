#include "msboot/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

using msboot::CounterStream;
using msboot::Philox4x64;

TEST_SUITE("rng") {

// Reference outputs generated with numpy.random.Philox (philox4x64-10);
// numpy advances the counter before its first block, so these are the
// blocks at the literal counters below.
TEST_CASE("philox known answers") {
    {
        const auto out = Philox4x64::block({1, 0, 0, 0}, {0, 0});
        CHECK(out[0] == 0x02f4ba6408e4d89bULL);
        CHECK(out[1] == 0x3dd62b0b9ca8c5b2ULL);
        CHECK(out[2] == 0x1c8667a55d902e79ULL);
        CHECK(out[3] == 0x907d7a052fd5b4dcULL);
    }
    {
        const auto out = Philox4x64::block({2, 0, 0, 0}, {0, 0});
        CHECK(out[0] == 0x809bf322883987c3ULL);
        CHECK(out[1] == 0x471128b9e807f7ddULL);
        CHECK(out[2] == 0xf250ba0dbec065b7ULL);
        CHECK(out[3] == 0xfc6ed66767a457bcULL);
    }
    {
        const auto out = Philox4x64::block({2, 2, 3, 4}, {42, 7});
        CHECK(out[0] == 0x0c1a6ad67ab1ff2aULL);
        CHECK(out[1] == 0x063a458c4e7dfa5dULL);
        CHECK(out[2] == 0x00e93d4f3536cb20ULL);
        CHECK(out[3] == 0x589d7f3c534e5e31ULL);
    }
    {
        const auto out = Philox4x64::block(
            {0x243f6a8885a308d4ULL, 0x13198a2e03707344ULL, 0xa4093822299f31d0ULL,
             0x082efa98ec4e6c89ULL},
            {0x452821e638d01377ULL, 0xbe5466cf34e90c6cULL});
        CHECK(out[0] == 0x4c8e672094922aa3ULL);
        CHECK(out[1] == 0x527061cd2884102aULL);
        CHECK(out[2] == 0xf4c265b2d783d553ULL);
        CHECK(out[3] == 0x0556e76cb0298c8dULL);
    }
}

TEST_CASE("streams with distinct addresses do not collide") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t key1 = 0; key1 < 4; ++key1) {
        for (std::uint64_t ctr0 = 0; ctr0 < 64; ++ctr0) {
            CounterStream s(7, key1, ctr0, 0);
            for (int i = 0; i < 8; ++i) seen.insert(s.next_u64());
        }
    }
    CHECK(seen.size() == 4u * 64u * 8u);
}

TEST_CASE("stream restart reproduces the sequence") {
    CounterStream a(123, 4, 5, 6);
    std::vector<std::uint64_t> first;
    for (int i = 0; i < 100; ++i) first.push_back(a.next_u64());
    CounterStream b(123, 4, 5, 6);
    for (int i = 0; i < 100; ++i) CHECK(b.next_u64() == first[static_cast<std::size_t>(i)]);
}

TEST_CASE("uniforms live strictly inside (0,1)") {
    CounterStream s(9, 0, 0, 0);
    double lo = 1.0;
    double hi = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = s.next_uniform();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(lo < 0.001);
    CHECK(hi > 0.999);
}

TEST_CASE("normals have the right first moments") {
    CounterStream s(11, 0, 0, 0);
    const int n = 200000;
    double sum = 0.0;
    double sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = s.next_normal();
        sum += z;
        sumsq += z * z;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::fabs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::fabs(var - 1.0) < 6.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("bounded draws are unbiased across the range") {
    CounterStream s(13, 0, 0, 0);
    const std::uint64_t n = 10;
    std::vector<int> counts(n, 0);
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) ++counts[s.next_below(n)];
    for (const int c : counts) {
        CHECK(std::fabs(c - draws / 10.0) < 5.0 * std::sqrt(draws * 0.1 * 0.9));
    }
    for (int i = 0; i < 1000; ++i) CHECK(s.next_below(3) < 3);
    for (int i = 0; i < 100; ++i) CHECK(s.next_below(1) == 0);
}

TEST_CASE("derive_seed separates namespaces") {
    CHECK(msboot::derive_seed(1, 2, 3) != msboot::derive_seed(1, 2, 4));
    CHECK(msboot::derive_seed(1, 2, 3) != msboot::derive_seed(1, 3, 3));
    CHECK(msboot::derive_seed(1, 2, 3) != msboot::derive_seed(2, 2, 3));
    CHECK(msboot::derive_seed(5, 6, 7) == msboot::derive_seed(5, 6, 7));
}

} // TEST_SUITE
