#pragma once
// Data-parallel inner loops used by the acceleration structures.
//
// Every kernel has a scalar reference implementation and an AVX2 variant.
// The active table is picked once at startup from the CPU's capabilities;
// setting PDM_SIMD=scalar in the environment forces the reference path.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace pdm::simd {

enum class Isa { scalar, avx2 };

struct KernelTable {
  Isa isa;

  // acc[i] = min(acc[i], src[i])
  void (*min_u8_inplace)(std::uint8_t* acc, const std::uint8_t* src, std::size_t n);

  // dst[i] = min over srcs[k][i]; count >= 1; dst may alias srcs[0]
  void (*min_u8_multi)(std::uint8_t* dst, const std::uint8_t* const* srcs, std::size_t count,
                       std::size_t n);

  // n >= 1
  void (*minmax_u16)(const std::uint16_t* p, std::size_t n, std::uint16_t* lo, std::uint16_t* hi);

  // lo[i] = min(lo[i], src[i]); hi[i] = max(hi[i], src[i])
  void (*minmax_accumulate_u16)(std::uint16_t* lo, std::uint16_t* hi, const std::uint16_t* src,
                                std::size_t n);

  // true iff some p[i] lies in [lo, hi]
  bool (*any_in_range_u16)(const std::uint16_t* p, std::size_t n, std::uint16_t lo,
                           std::uint16_t hi);

  // One chamfer row update from already-final neighbour rows:
  //   m[x]   = min over rows[k][x]               (count >= 1)
  //   w[x]   = min(m[x-1], m[x], m[x+1])         (clipped at the row ends)
  //   cur[x] = min(cur[x], sat8(w[x] + 1))
  // scratch must hold n bytes.
  void (*chamfer_rows_u8)(std::uint8_t* cur, const std::uint8_t* const* rows, std::size_t count,
                          std::size_t n, std::uint8_t* scratch);
};

const KernelTable& scalar_kernels() noexcept;

// Returns nullptr when the build or the CPU lacks AVX2.
const KernelTable* avx2_kernels() noexcept;

// Dispatched table; resolved once.
const KernelTable& active() noexcept;

std::string_view isa_name(Isa isa) noexcept;

}  // namespace pdm::simd
