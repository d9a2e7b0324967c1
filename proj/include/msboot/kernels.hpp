#pragma once

#include <cstddef>
#include <cstdint>

namespace msboot::kernels {

// Data-parallel inner loops behind the resampler and the simulator. Every
// operation has a scalar reference implementation and, on x86-64, an AVX2
// variant selected at runtime. Backends are bit-exact with each other: the
// floating-point operation order per output element is part of the contract
// (no FMA contraction; squared_distance uses a fixed four-lane accumulation
// reduced as (s0+s2)+(s1+s3)). Equivalence tests assert exact equality.

enum class Backend { scalar, avx2 };

Backend active_backend();
bool backend_supported(Backend b);

// Selects a backend; returns false (and leaves the selection unchanged) if
// unsupported on this machine. The MSBOOT_KERNELS environment variable
// ("scalar" or "avx2") overrides the default at startup. Not meant to be
// called while kernels are executing on other threads.
bool set_backend(Backend b);

const char* backend_name(Backend b);

// out[j] = sum_t w[t] * xi[t*k + j] over a row-major n-by-k matrix.
// Rows with w[t] == 0 are skipped. out must hold k doubles (overwritten).
void weighted_rowsum(const double* xi, std::size_t n, std::size_t k,
                     const std::uint32_t* w, double* out);

// Index of the maximum, lowest index on ties; *tie set iff the maximum value
// occurs more than once. k must be >= 1.
std::size_t argmax_lowest(const double* x, std::size_t k, bool* tie);

// sum_i (a[i]-b[i])^2 with the four-lane accumulation contract.
double squared_distance(const double* a, const double* b, std::size_t n);

// #{ i : x[i] <= threshold }
std::size_t count_leq(const double* x, std::size_t n, double threshold);

// Points in structure-of-arrays layout coords[d][i], d < dim. Counts points
// whose squared distance to center is <= r2; per-point accumulation runs over
// d in ascending order.
std::size_t count_sqdist_leq(const double* const* coords, std::size_t npts,
                             std::size_t dim, const double* center, double r2);

} // namespace msboot::kernels
