#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace msboot {

// Philox4x64-10 counter-based block cipher (Salmon et al.), the same variant
// numpy.random.Philox uses. Each (counter, key) pair maps to four independent
// 64-bit words, so replicate streams can be keyed structurally instead of
// sharing mutable generator state.
struct Philox4x64 {
    static constexpr std::uint64_t M0 = 0xD2E7470EE14C6C93ULL;
    static constexpr std::uint64_t M1 = 0xCA5A826395121157ULL;
    static constexpr std::uint64_t W0 = 0x9E3779B97F4A7C15ULL;
    static constexpr std::uint64_t W1 = 0xBB67AE8584CAA73BULL;

    static std::array<std::uint64_t, 4> block(std::array<std::uint64_t, 4> ctr,
                                              std::array<std::uint64_t, 2> key) {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += W0;
                key[1] += W1;
            }
            ctr = single_round(ctr, key);
        }
        return ctr;
    }

private:
    static std::array<std::uint64_t, 4> single_round(const std::array<std::uint64_t, 4>& x,
                                                     const std::array<std::uint64_t, 2>& k) {
        const unsigned __int128 p0 = static_cast<unsigned __int128>(M0) * x[0];
        const unsigned __int128 p1 = static_cast<unsigned __int128>(M1) * x[2];
        const std::uint64_t hi0 = static_cast<std::uint64_t>(p0 >> 64);
        const std::uint64_t lo0 = static_cast<std::uint64_t>(p0);
        const std::uint64_t hi1 = static_cast<std::uint64_t>(p1 >> 64);
        const std::uint64_t lo1 = static_cast<std::uint64_t>(p1);
        return {hi1 ^ x[1] ^ k[0], lo1, hi0 ^ x[3] ^ k[1], lo0};
    }
};

// One logical random stream addressed by (key0, key1, ctr0, ctr1). The block
// index occupies the third counter word, so distinct addresses never overlap
// until 2^64 blocks have been consumed. Streams are cheap to construct; the
// resampler makes one per (seed, scale, replicate).
class CounterStream {
public:
    CounterStream(std::uint64_t key0, std::uint64_t key1,
                  std::uint64_t ctr0, std::uint64_t ctr1)
        : key_{key0, key1}, base_{ctr0, ctr1} {}

    std::uint64_t next_u64() {
        if (pos_ == 4) {
            buf_ = Philox4x64::block({base_[0], base_[1], block_, 0}, key_);
            ++block_;
            pos_ = 0;
        }
        return buf_[pos_++];
    }

    // Uniform on the open interval (0,1); 53-bit resolution, never 0 or 1.
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;
    }

    // Standard normal via the Box-Muller pair; the spare is cached within the
    // stream (never across streams, which keeps replicate draws independent
    // of any batching).
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    // Unbiased integer in [0, n) by Lemire's multiply-shift with rejection.
    std::uint64_t next_below(std::uint64_t n) {
        unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (lo < threshold) {
                m = static_cast<unsigned __int128>(next_u64()) * n;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

private:
    std::array<std::uint64_t, 2> key_;
    std::array<std::uint64_t, 2> base_;
    std::uint64_t block_ = 0;
    std::array<std::uint64_t, 4> buf_{};
    int pos_ = 4;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Derives an independent 64-bit sub-seed, used to give every simulation trial
// its own seed namespace without coordinating counters across modules.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
    return Philox4x64::block({index, tag, 0, 0}, {seed, 0x5eedbeefcafef00dULL})[0];
}

} // namespace msboot
