#include "kernel_table.hpp"

#include <immintrin.h>

// AVX2 variants. Multiplies and adds are kept separate (no FMA) and the
// accumulation orders mirror the scalar reference exactly, so results are
// bit-identical across backends.

namespace msboot::kernels::detail {

namespace {

void weighted_rowsum_avx2(const double* xi, std::size_t n, std::size_t k,
                          const std::uint32_t* w, double* out) {
    for (std::size_t j = 0; j < k; ++j) out[j] = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const std::uint32_t wt = w[t];
        if (wt == 0) continue;
        const double wd = static_cast<double>(wt);
        const __m256d vw = _mm256_set1_pd(wd);
        const double* row = xi + t * k;
        std::size_t j = 0;
        for (; j + 4 <= k; j += 4) {
            const __m256d vo = _mm256_loadu_pd(out + j);
            const __m256d vx = _mm256_loadu_pd(row + j);
            _mm256_storeu_pd(out + j, _mm256_add_pd(vo, _mm256_mul_pd(vw, vx)));
        }
        for (; j < k; ++j) out[j] += wd * row[j];
    }
}

std::size_t argmax_lowest_avx2(const double* x, std::size_t k, bool* tie) {
    std::size_t best_idx = 0;
    double best = x[0];
    bool tflag = false;
    std::size_t i = 1;

    if (k >= 8) {
        const std::size_t nblk = k / 4;
        __m256d vbv = _mm256_loadu_pd(x);
        __m256i vidx = _mm256_set_epi64x(3, 2, 1, 0);
        __m256i vtie = _mm256_setzero_si256();
        __m256i cur = vidx;
        const __m256i inc = _mm256_set1_epi64x(4);
        for (std::size_t b = 1; b < nblk; ++b) {
            cur = _mm256_add_epi64(cur, inc);
            const __m256d v = _mm256_loadu_pd(x + 4 * b);
            const __m256d gt = _mm256_cmp_pd(v, vbv, _CMP_GT_OQ);
            const __m256d eq = _mm256_cmp_pd(v, vbv, _CMP_EQ_OQ);
            vbv = _mm256_blendv_pd(vbv, v, gt);
            vidx = _mm256_castpd_si256(_mm256_blendv_pd(
                _mm256_castsi256_pd(vidx), _mm256_castsi256_pd(cur), gt));
            // lane tie resets on a strict improvement, sets on an exact match
            vtie = _mm256_or_si256(
                _mm256_andnot_si256(_mm256_castpd_si256(gt), vtie),
                _mm256_castpd_si256(eq));
        }
        alignas(32) double lane_val[4];
        alignas(32) std::uint64_t lane_idx[4];
        alignas(32) std::uint64_t lane_tie[4];
        _mm256_store_pd(lane_val, vbv);
        _mm256_store_si256(reinterpret_cast<__m256i*>(lane_idx), vidx);
        _mm256_store_si256(reinterpret_cast<__m256i*>(lane_tie), vtie);

        best = lane_val[0];
        for (int l = 1; l < 4; ++l)
            if (lane_val[l] > best) best = lane_val[l];
        int candidates = 0;
        std::uint64_t idx = ~0ULL;
        bool lane_internal_tie = false;
        for (int l = 0; l < 4; ++l) {
            if (lane_val[l] == best) {
                ++candidates;
                if (lane_idx[l] < idx) idx = lane_idx[l];
                if (lane_tie[l]) lane_internal_tie = true;
            }
        }
        best_idx = static_cast<std::size_t>(idx);
        tflag = (candidates > 1) || lane_internal_tie;
        i = 4 * nblk;
    }

    for (; i < k; ++i) {
        if (x[i] > best) {
            best = x[i];
            best_idx = i;
            tflag = false;
        } else if (x[i] == best) {
            tflag = true;
        }
    }
    if (tie) *tie = tflag;
    return best_idx;
}

double squared_distance_avx2(const double* a, const double* b, std::size_t n) {
    __m256d vacc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        vacc = _mm256_add_pd(vacc, _mm256_mul_pd(d, d));
    }
    alignas(32) double acc[4];
    _mm256_store_pd(acc, vacc);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        acc[i % 4] += d * d;
    }
    return (acc[0] + acc[2]) + (acc[1] + acc[3]);
}

std::size_t count_leq_avx2(const double* x, std::size_t n, double threshold) {
    const __m256d vt = _mm256_set1_pd(threshold);
    std::size_t c = 0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d cmp = _mm256_cmp_pd(_mm256_loadu_pd(x + i), vt, _CMP_LE_OQ);
        c += static_cast<std::size_t>(_mm_popcnt_u32(
            static_cast<unsigned>(_mm256_movemask_pd(cmp))));
    }
    for (; i < n; ++i) c += (x[i] <= threshold) ? 1 : 0;
    return c;
}

std::size_t count_sqdist_leq_avx2(const double* const* coords, std::size_t npts,
                                  std::size_t dim, const double* center, double r2) {
    const __m256d vr2 = _mm256_set1_pd(r2);
    std::size_t c = 0;
    std::size_t i = 0;
    for (; i + 4 <= npts; i += 4) {
        __m256d acc = _mm256_setzero_pd();
        for (std::size_t d = 0; d < dim; ++d) {
            const __m256d diff = _mm256_sub_pd(_mm256_loadu_pd(coords[d] + i),
                                               _mm256_set1_pd(center[d]));
            acc = _mm256_add_pd(acc, _mm256_mul_pd(diff, diff));
        }
        const __m256d cmp = _mm256_cmp_pd(acc, vr2, _CMP_LE_OQ);
        c += static_cast<std::size_t>(_mm_popcnt_u32(
            static_cast<unsigned>(_mm256_movemask_pd(cmp))));
    }
    for (; i < npts; ++i) {
        double acc = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
            const double diff = coords[d][i] - center[d];
            acc += diff * diff;
        }
        c += (acc <= r2) ? 1 : 0;
    }
    return c;
}

} // namespace

const KernelTable& avx2_table() {
    static const KernelTable table{
        weighted_rowsum_avx2,
        argmax_lowest_avx2,
        squared_distance_avx2,
        count_leq_avx2,
        count_sqdist_leq_avx2,
    };
    return table;
}

} // namespace msboot::kernels::detail
