#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "ctrank/log.hpp"
#include "variants.hpp"

namespace ctrank::simd {

namespace {

bool cpu_supports(Isa isa) {
    switch (isa) {
        case Isa::scalar:
            return true;
        case Isa::avx2:
#if defined(CTRANK_HAVE_AVX2)
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
        case Isa::neon:
#if defined(CTRANK_HAVE_NEON)
            return true;
#else
            return false;
#endif
    }
    return false;
}

const KernelTable* table_for(Isa isa) {
    switch (isa) {
        case Isa::scalar:
            return &detail::scalar_table;
        case Isa::avx2:
#if defined(CTRANK_HAVE_AVX2)
            return &detail::avx2_table;
#else
            return nullptr;
#endif
        case Isa::neon:
#if defined(CTRANK_HAVE_NEON)
            return &detail::neon_table;
#else
            return nullptr;
#endif
    }
    return nullptr;
}

const KernelTable* pick_initial() {
    if (const char* env = std::getenv("CTRANK_SIMD")) {
        const std::string wanted(env);
        for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
            if (wanted == to_string(isa) && cpu_supports(isa)) {
                return table_for(isa);
            }
        }
        logger().warn("CTRANK_SIMD={} not available here, using auto-detection", wanted);
    }
    for (Isa isa : {Isa::avx2, Isa::neon}) {
        if (cpu_supports(isa)) {
            return table_for(isa);
        }
    }
    return &detail::scalar_table;
}

std::atomic<const KernelTable*>& active_slot() {
    static std::atomic<const KernelTable*> slot{pick_initial()};
    return slot;
}

}  // namespace

std::string_view to_string(Isa isa) noexcept {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
        case Isa::neon: return "neon";
    }
    return "unknown";
}

std::vector<Isa> available_isas() {
    std::vector<Isa> out;
    for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
        if (cpu_supports(isa)) {
            out.push_back(isa);
        }
    }
    return out;
}

const KernelTable& kernels_for(Isa isa) {
    if (!cpu_supports(isa)) {
        throw std::invalid_argument("SIMD variant " + std::string(to_string(isa)) + " is not available");
    }
    return *table_for(isa);
}

const KernelTable& active_kernels() {
    return *active_slot().load(std::memory_order_relaxed);
}

Isa active_isa() {
    return active_kernels().isa;
}

void set_active_isa(Isa isa) {
    active_slot().store(&kernels_for(isa), std::memory_order_relaxed);
}

}  // namespace ctrank::simd
