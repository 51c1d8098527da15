#include <atomic>
#include <cstdlib>
#include <cstring>

#include "loclearn/kernels.hpp"

namespace loclearn::kernels {

namespace {

std::atomic<const Backend*> g_forced{nullptr};

const Backend* detect() {
    const char* env = std::getenv("LOCLEARN_KERNELS");
    if (env != nullptr && std::strcmp(env, "scalar") == 0) return &scalar_backend();
#if defined(LOCLEARN_HAVE_AVX2)
    if (env != nullptr && std::strcmp(env, "avx2") == 0) return &avx2_backend();
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return &avx2_backend();
#endif
    return &scalar_backend();
}

}  // namespace

const Backend& active() {
    const Backend* forced = g_forced.load(std::memory_order_acquire);
    if (forced != nullptr) return *forced;
    static const Backend* detected = detect();
    return *detected;
}

void force_backend(const Backend* backend) { g_forced.store(backend, std::memory_order_release); }

}  // namespace loclearn::kernels
