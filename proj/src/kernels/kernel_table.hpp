#pragma once

#include <cstddef>
#include <cstdint>

namespace msboot::kernels::detail {

struct KernelTable {
    void (*weighted_rowsum)(const double*, std::size_t, std::size_t,
                            const std::uint32_t*, double*);
    std::size_t (*argmax_lowest)(const double*, std::size_t, bool*);
    double (*squared_distance)(const double*, const double*, std::size_t);
    std::size_t (*count_leq)(const double*, std::size_t, double);
    std::size_t (*count_sqdist_leq)(const double* const*, std::size_t,
                                    std::size_t, const double*, double);
};

const KernelTable& scalar_table();
#ifdef MSBOOT_HAVE_AVX2
const KernelTable& avx2_table();
#endif

} // namespace msboot::kernels::detail
