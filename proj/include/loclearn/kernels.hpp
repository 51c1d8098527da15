#pragma once

#include <cstddef>

#include "loclearn/common.hpp"

namespace loclearn::kernels {

constexpr std::size_t npos = static_cast<std::size_t>(-1);

// One fused pass over an anchor set; serves the upper/lower/midpoint McShane
// rules and the exact-anchor lookup at once.
struct McshaneScan {
    Real min_upper;          // min_j v_j + L * dinf(x, p_j)
    Real max_lower;          // max_j v_j - L * dinf(x, p_j)
    Real min_dist;           // min_j dinf(x, p_j)
    std::size_t first_exact; // first j with dinf(x, p_j) == 0, or npos
};

// coords is dimension-major (SoaPoints layout): coordinate k of point j at coords[k*n + j].
using McshaneScanFn = McshaneScan (*)(const Real* coords, std::size_t n, std::size_t d,
                                      const Real* values, Real lipschitz, const Real* x);

// sum_j 1 / (1 + sum_k eig_sq[k] * (q[k] - coords[k*n+j])^2)
using KernelSumFn = Real (*)(const Real* coords, std::size_t n, std::size_t d,
                             const Real* eig_sq, const Real* q);

// dst[i] -= factor * src[i]; the simplex pivot row operation
using AxpyFn = void (*)(Real* dst, const Real* src, Real factor, std::size_t n);

struct Backend {
    const char* name;
    McshaneScanFn mcshane_scan;
    KernelSumFn kernel_sum;
    AxpyFn axpy;
};

const Backend& scalar_backend();
#if defined(LOCLEARN_HAVE_AVX2)
const Backend& avx2_backend();
#endif

// Runtime-selected backend: AVX2 when the CPU supports it, scalar otherwise.
// LOCLEARN_KERNELS=scalar in the environment forces the reference path.
const Backend& active();

// Test hook; pass nullptr to restore automatic selection.
void force_backend(const Backend* backend);

}  // namespace loclearn::kernels
