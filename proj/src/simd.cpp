#include "minpen/simd.hpp"

#include "minpen/common.hpp"

#include <atomic>

namespace minpen::simd {
namespace {

bool cpu_has_avx2_fma() {
#if (defined(__x86_64__) || defined(_M_X64)) && defined(__GNUC__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const Ops* resolve_auto() {
#if defined(__x86_64__) || defined(_M_X64)
    if (cpu_has_avx2_fma()) return &avx2_ops();
#endif
    return &scalar_ops();
}

std::atomic<const Ops*> g_active{nullptr};

}  // namespace

bool avx2_supported() { return cpu_has_avx2_fma(); }

const Ops& active() {
    const Ops* ops = g_active.load(std::memory_order_acquire);
    if (!ops) {
        ops = resolve_auto();
        g_active.store(ops, std::memory_order_release);
    }
    return *ops;
}

void set_backend(std::string_view name) {
    if (name == "auto") {
        g_active.store(resolve_auto(), std::memory_order_release);
    } else if (name == "scalar") {
        g_active.store(&scalar_ops(), std::memory_order_release);
    } else if (name == "avx2") {
#if defined(__x86_64__) || defined(_M_X64)
        if (cpu_has_avx2_fma()) {
            g_active.store(&avx2_ops(), std::memory_order_release);
            return;
        }
#endif
        throw input_error("simd backend 'avx2' not supported on this CPU");
    } else {
        throw input_error("unknown simd backend '" + std::string(name) +
                          "' (expected auto|scalar|avx2)");
    }
}

}  // namespace minpen::simd
