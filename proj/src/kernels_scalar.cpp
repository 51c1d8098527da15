#include <cmath>

#include "loclearn/kernels.hpp"

namespace loclearn::kernels {

namespace {

McshaneScan mcshane_scan_scalar(const Real* coords, std::size_t n, std::size_t d,
                                const Real* values, Real lipschitz, const Real* x) {
    McshaneScan out{kInf, -kInf, kInf, npos};
    for (std::size_t j = 0; j < n; ++j) {
        Real dist = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const Real diff = std::abs(x[k] - coords[k * n + j]);
            if (diff > dist) dist = diff;
        }
        if (dist == 0.0 && out.first_exact == npos) out.first_exact = j;
        const Real up = values[j] + lipschitz * dist;
        const Real lo = values[j] - lipschitz * dist;
        if (up < out.min_upper) out.min_upper = up;
        if (lo > out.max_lower) out.max_lower = lo;
        if (dist < out.min_dist) out.min_dist = dist;
    }
    return out;
}

Real kernel_sum_scalar(const Real* coords, std::size_t n, std::size_t d,
                       const Real* eig_sq, const Real* q) {
    Real total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        Real sq = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const Real diff = q[k] - coords[k * n + j];
            sq += eig_sq[k] * diff * diff;
        }
        total += 1.0 / (1.0 + sq);
    }
    return total;
}

void axpy_scalar(Real* dst, const Real* src, Real factor, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] -= factor * src[i];
}

}  // namespace

const Backend& scalar_backend() {
    static const Backend backend{"scalar", &mcshane_scan_scalar, &kernel_sum_scalar, &axpy_scalar};
    return backend;
}

}  // namespace loclearn::kernels
