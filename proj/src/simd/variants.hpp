#pragma once

#include "ctrank/simd/kernels.hpp"

namespace ctrank::simd::detail {

extern const KernelTable scalar_table;
#if defined(CTRANK_HAVE_AVX2)
extern const KernelTable avx2_table;
#endif
#if defined(CTRANK_HAVE_NEON)
extern const KernelTable neon_table;
#endif

}  // namespace ctrank::simd::detail
