#include "msboot/kernels.hpp"

#include "kernel_table.hpp"

#include <cstdlib>
#include <cstring>

namespace msboot::kernels {

namespace {

using detail::KernelTable;

bool cpu_has_avx2() {
#if defined(MSBOOT_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

const KernelTable* table_for(Backend b) {
    switch (b) {
        case Backend::scalar:
            return &detail::scalar_table();
        case Backend::avx2:
#ifdef MSBOOT_HAVE_AVX2
            if (cpu_has_avx2()) return &detail::avx2_table();
#endif
            return nullptr;
    }
    return nullptr;
}

struct Dispatch {
    const KernelTable* table;
    Backend backend;

    Dispatch() {
        backend = cpu_has_avx2() ? Backend::avx2 : Backend::scalar;
        if (const char* env = std::getenv("MSBOOT_KERNELS")) {
            if (std::strcmp(env, "scalar") == 0) backend = Backend::scalar;
            else if (std::strcmp(env, "avx2") == 0 && cpu_has_avx2()) backend = Backend::avx2;
        }
        table = table_for(backend);
        if (!table) {
            backend = Backend::scalar;
            table = &detail::scalar_table();
        }
    }
};

Dispatch& dispatch() {
    static Dispatch d;
    return d;
}

} // namespace

Backend active_backend() { return dispatch().backend; }

bool backend_supported(Backend b) { return table_for(b) != nullptr; }

bool set_backend(Backend b) {
    const KernelTable* t = table_for(b);
    if (!t) return false;
    dispatch().table = t;
    dispatch().backend = b;
    return true;
}

const char* backend_name(Backend b) {
    switch (b) {
        case Backend::scalar: return "scalar";
        case Backend::avx2: return "avx2";
    }
    return "?";
}

void weighted_rowsum(const double* xi, std::size_t n, std::size_t k,
                     const std::uint32_t* w, double* out) {
    dispatch().table->weighted_rowsum(xi, n, k, w, out);
}

std::size_t argmax_lowest(const double* x, std::size_t k, bool* tie) {
    return dispatch().table->argmax_lowest(x, k, tie);
}

double squared_distance(const double* a, const double* b, std::size_t n) {
    return dispatch().table->squared_distance(a, b, n);
}

std::size_t count_leq(const double* x, std::size_t n, double threshold) {
    return dispatch().table->count_leq(x, n, threshold);
}

std::size_t count_sqdist_leq(const double* const* coords, std::size_t npts,
                             std::size_t dim, const double* center, double r2) {
    return dispatch().table->count_sqdist_leq(coords, npts, dim, center, r2);
}

} // namespace msboot::kernels
