#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

// Dense vector kernels used by scoring and paragraph-vector training.
//
// Every kernel has a scalar reference implementation plus SIMD variants
// (AVX2+FMA on x86-64, NEON on AArch64). The variant is picked once at
// startup from CPU features; CTRANK_SIMD=scalar|avx2|neon overrides it.
// Dot products of float inputs accumulate in double, so variants agree to
// within double rounding of the summation order.

namespace ctrank::simd {

enum class Isa { scalar, avx2, neon };

std::string_view to_string(Isa isa) noexcept;

struct KernelTable {
    Isa isa;
    double (*dot_f32)(const float* a, const float* b, std::size_t n);
    double (*dot_f64)(const double* a, const double* b, std::size_t n);
    // y += alpha * x
    void (*axpy_f32)(float alpha, const float* x, float* y, std::size_t n);
    void (*axpy_f64)(double alpha, const double* x, double* y, std::size_t n);
    // x *= alpha
    void (*scale_f32)(float alpha, float* x, std::size_t n);
};

/// Variants usable on this CPU; scalar is always first.
std::vector<Isa> available_isas();

const KernelTable& kernels_for(Isa isa);
const KernelTable& active_kernels();
Isa active_isa();

/// Switches the process-wide variant. Throws std::invalid_argument if the
/// variant is not available on this CPU.
void set_active_isa(Isa isa);

inline double dot(std::span<const float> a, std::span<const float> b) {
    return active_kernels().dot_f32(a.data(), b.data(), a.size());
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    return active_kernels().dot_f64(a.data(), b.data(), a.size());
}

inline void axpy(float alpha, std::span<const float> x, std::span<float> y) {
    active_kernels().axpy_f32(alpha, x.data(), y.data(), x.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    active_kernels().axpy_f64(alpha, x.data(), y.data(), x.size());
}

inline void scale(float alpha, std::span<float> x) {
    active_kernels().scale_f32(alpha, x.data(), x.size());
}

}  // namespace ctrank::simd
