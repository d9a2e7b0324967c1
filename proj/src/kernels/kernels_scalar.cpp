#include "kernel_table.hpp"

namespace msboot::kernels::detail {

namespace {

void weighted_rowsum_scalar(const double* xi, std::size_t n, std::size_t k,
                            const std::uint32_t* w, double* out) {
    for (std::size_t j = 0; j < k; ++j) out[j] = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const std::uint32_t wt = w[t];
        if (wt == 0) continue;
        const double wd = static_cast<double>(wt);
        const double* row = xi + t * k;
        for (std::size_t j = 0; j < k; ++j) out[j] += wd * row[j];
    }
}

std::size_t argmax_lowest_scalar(const double* x, std::size_t k, bool* tie) {
    std::size_t best = 0;
    double bv = x[0];
    bool t = false;
    for (std::size_t i = 1; i < k; ++i) {
        if (x[i] > bv) {
            bv = x[i];
            best = i;
            t = false;
        } else if (x[i] == bv) {
            t = true;
        }
    }
    if (tie) *tie = t;
    return best;
}

double squared_distance_scalar(const double* a, const double* b, std::size_t n) {
    // Four-lane accumulation; lane order is part of the backend contract.
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        for (std::size_t l = 0; l < 4; ++l) {
            const double d = a[i + l] - b[i + l];
            acc[l] += d * d;
        }
    }
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        acc[i % 4] += d * d;
    }
    return (acc[0] + acc[2]) + (acc[1] + acc[3]);
}

std::size_t count_leq_scalar(const double* x, std::size_t n, double threshold) {
    std::size_t c = 0;
    for (std::size_t i = 0; i < n; ++i) c += (x[i] <= threshold) ? 1 : 0;
    return c;
}

std::size_t count_sqdist_leq_scalar(const double* const* coords, std::size_t npts,
                                    std::size_t dim, const double* center, double r2) {
    std::size_t c = 0;
    for (std::size_t i = 0; i < npts; ++i) {
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

const KernelTable& scalar_table() {
    static const KernelTable table{
        weighted_rowsum_scalar,
        argmax_lowest_scalar,
        squared_distance_scalar,
        count_leq_scalar,
        count_sqdist_leq_scalar,
    };
    return table;
}

} // namespace msboot::kernels::detail
