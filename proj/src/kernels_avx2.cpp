#if defined(LOCLEARN_HAVE_AVX2)

#include <immintrin.h>

#include <cmath>

#include "loclearn/kernels.hpp"

namespace loclearn::kernels {

namespace {

inline __m256d abs_pd(__m256d v) {
    const __m256d mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
    return _mm256_and_pd(v, mask);
}

inline Real hmin(__m256d v) {
    alignas(32) Real lane[4];
    _mm256_store_pd(lane, v);
    return std::min(std::min(lane[0], lane[1]), std::min(lane[2], lane[3]));
}

inline Real hmax(__m256d v) {
    alignas(32) Real lane[4];
    _mm256_store_pd(lane, v);
    return std::max(std::max(lane[0], lane[1]), std::max(lane[2], lane[3]));
}

inline Real hsum(__m256d v) {
    alignas(32) Real lane[4];
    _mm256_store_pd(lane, v);
    return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

McshaneScan mcshane_scan_avx2(const Real* coords, std::size_t n, std::size_t d,
                              const Real* values, Real lipschitz, const Real* x) {
    McshaneScan out{kInf, -kInf, kInf, npos};
    const std::size_t main = n - n % 4;
    if (main > 0) {
        const __m256d lvec = _mm256_set1_pd(lipschitz);
        __m256d vmin_up = _mm256_set1_pd(kInf);
        __m256d vmax_lo = _mm256_set1_pd(-kInf);
        __m256d vmin_d = _mm256_set1_pd(kInf);
        for (std::size_t j = 0; j < main; j += 4) {
            __m256d dist = _mm256_setzero_pd();
            for (std::size_t k = 0; k < d; ++k) {
                const __m256d xk = _mm256_set1_pd(x[k]);
                const __m256d pk = _mm256_loadu_pd(coords + k * n + j);
                dist = _mm256_max_pd(dist, abs_pd(_mm256_sub_pd(xk, pk)));
            }
            const __m256d vv = _mm256_loadu_pd(values + j);
            const __m256d scaled = _mm256_mul_pd(lvec, dist);
            vmin_up = _mm256_min_pd(vmin_up, _mm256_add_pd(vv, scaled));
            vmax_lo = _mm256_max_pd(vmax_lo, _mm256_sub_pd(vv, scaled));
            vmin_d = _mm256_min_pd(vmin_d, dist);
        }
        out.min_upper = hmin(vmin_up);
        out.max_lower = hmax(vmax_lo);
        out.min_dist = hmin(vmin_d);
    }
    for (std::size_t j = main; j < n; ++j) {
        Real dist = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const Real diff = std::abs(x[k] - coords[k * n + j]);
            if (diff > dist) dist = diff;
        }
        out.min_upper = std::min(out.min_upper, values[j] + lipschitz * dist);
        out.max_lower = std::max(out.max_lower, values[j] - lipschitz * dist);
        out.min_dist = std::min(out.min_dist, dist);
    }
    if (out.min_dist == 0.0) {
        for (std::size_t j = 0; j < n; ++j) {
            Real dist = 0.0;
            for (std::size_t k = 0; k < d; ++k)
                dist = std::max(dist, std::abs(x[k] - coords[k * n + j]));
            if (dist == 0.0) {
                out.first_exact = j;
                break;
            }
        }
    }
    return out;
}

Real kernel_sum_avx2(const Real* coords, std::size_t n, std::size_t d,
                     const Real* eig_sq, const Real* q) {
    const std::size_t main = n - n % 4;
    Real total = 0.0;
    if (main > 0) {
        const __m256d one = _mm256_set1_pd(1.0);
        __m256d acc = _mm256_setzero_pd();
        for (std::size_t j = 0; j < main; j += 4) {
            __m256d sq = _mm256_setzero_pd();
            for (std::size_t k = 0; k < d; ++k) {
                const __m256d qk = _mm256_set1_pd(q[k]);
                const __m256d pk = _mm256_loadu_pd(coords + k * n + j);
                const __m256d diff = _mm256_sub_pd(qk, pk);
                const __m256d ek = _mm256_set1_pd(eig_sq[k]);
                sq = _mm256_fmadd_pd(_mm256_mul_pd(ek, diff), diff, sq);
            }
            acc = _mm256_add_pd(acc, _mm256_div_pd(one, _mm256_add_pd(one, sq)));
        }
        total = hsum(acc);
    }
    for (std::size_t j = main; j < n; ++j) {
        Real sq = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const Real diff = q[k] - coords[k * n + j];
            sq += eig_sq[k] * diff * diff;
        }
        total += 1.0 / (1.0 + sq);
    }
    return total;
}

void axpy_avx2(Real* dst, const Real* src, Real factor, std::size_t n) {
    const std::size_t main = n - n % 4;
    const __m256d f = _mm256_set1_pd(factor);
    for (std::size_t i = 0; i < main; i += 4) {
        const __m256d s = _mm256_loadu_pd(src + i);
        const __m256d t = _mm256_loadu_pd(dst + i);
        _mm256_storeu_pd(dst + i, _mm256_fnmadd_pd(f, s, t));
    }
    for (std::size_t i = main; i < n; ++i) dst[i] -= factor * src[i];
}

}  // namespace

const Backend& avx2_backend() {
    static const Backend backend{"avx2", &mcshane_scan_avx2, &kernel_sum_avx2, &axpy_avx2};
    return backend;
}

}  // namespace loclearn::kernels

#endif  // LOCLEARN_HAVE_AVX2
