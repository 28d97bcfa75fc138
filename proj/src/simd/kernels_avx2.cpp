// Compiled with -mavx2; only reached after the dispatcher has confirmed CPU support.
#include "pdm/simd/kernels.hpp"

#include <immintrin.h>

#include <algorithm>

namespace pdm::simd {
namespace {

inline __m256i load(const void* p) { return _mm256_loadu_si256(static_cast<const __m256i*>(p)); }
inline void store(void* p, __m256i v) { _mm256_storeu_si256(static_cast<__m256i*>(p), v); }

void min_u8_inplace_avx2(std::uint8_t* acc, const std::uint8_t* src, std::size_t n) {
  std::size_t i = 0;
  for (; i + 64 <= n; i += 64) {
    store(acc + i, _mm256_min_epu8(load(acc + i), load(src + i)));
    store(acc + i + 32, _mm256_min_epu8(load(acc + i + 32), load(src + i + 32)));
  }
  for (; i + 32 <= n; i += 32) store(acc + i, _mm256_min_epu8(load(acc + i), load(src + i)));
  for (; i < n; ++i) acc[i] = std::min(acc[i], src[i]);
}

void min_u8_multi_avx2(std::uint8_t* dst, const std::uint8_t* const* srcs, std::size_t count,
                       std::size_t n) {
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    __m256i v = load(srcs[0] + i);
    for (std::size_t k = 1; k < count; ++k) v = _mm256_min_epu8(v, load(srcs[k] + i));
    store(dst + i, v);
  }
  for (; i < n; ++i) {
    std::uint8_t v = srcs[0][i];
    for (std::size_t k = 1; k < count; ++k) v = std::min(v, srcs[k][i]);
    dst[i] = v;
  }
}

void minmax_u16_avx2(const std::uint16_t* p, std::size_t n, std::uint16_t* lo, std::uint16_t* hi) {
  std::uint16_t mn = p[0];
  std::uint16_t mx = p[0];
  std::size_t i = 0;
  if (n >= 16) {
    __m256i vmin = load(p);
    __m256i vmax = vmin;
    for (i = 16; i + 16 <= n; i += 16) {
      const __m256i v = load(p + i);
      vmin = _mm256_min_epu16(vmin, v);
      vmax = _mm256_max_epu16(vmax, v);
    }
    alignas(32) std::uint16_t a[16];
    alignas(32) std::uint16_t b[16];
    _mm256_store_si256(reinterpret_cast<__m256i*>(a), vmin);
    _mm256_store_si256(reinterpret_cast<__m256i*>(b), vmax);
    mn = *std::min_element(a, a + 16);
    mx = *std::max_element(b, b + 16);
  }
  for (; i < n; ++i) {
    mn = std::min(mn, p[i]);
    mx = std::max(mx, p[i]);
  }
  *lo = mn;
  *hi = mx;
}

void minmax_accumulate_u16_avx2(std::uint16_t* lo, std::uint16_t* hi, const std::uint16_t* src,
                                std::size_t n) {
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    const __m256i v = load(src + i);
    store(lo + i, _mm256_min_epu16(load(lo + i), v));
    store(hi + i, _mm256_max_epu16(load(hi + i), v));
  }
  for (; i < n; ++i) {
    lo[i] = std::min(lo[i], src[i]);
    hi[i] = std::max(hi[i], src[i]);
  }
}

bool any_in_range_u16_avx2(const std::uint16_t* p, std::size_t n, std::uint16_t lo,
                           std::uint16_t hi) {
  const __m256i vlo = _mm256_set1_epi16(static_cast<short>(lo));
  const __m256i vhi = _mm256_set1_epi16(static_cast<short>(hi));
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    const __m256i v = load(p + i);
    const __m256i clamped = _mm256_min_epu16(_mm256_max_epu16(v, vlo), vhi);
    if (_mm256_movemask_epi8(_mm256_cmpeq_epi16(clamped, v)) != 0) return true;
  }
  for (; i < n; ++i) {
    if (p[i] >= lo && p[i] <= hi) return true;
  }
  return false;
}

void chamfer_rows_u8_avx2(std::uint8_t* cur, const std::uint8_t* const* rows, std::size_t count,
                          std::size_t n, std::uint8_t* scratch) {
  if (n == 0) return;
  std::uint8_t* m = scratch;
  min_u8_multi_avx2(m, rows, count, n);

  auto sat_inc = [](unsigned v) { return static_cast<std::uint8_t>(v >= 255 ? 255 : v + 1); };
  auto edge = [&](std::size_t x) {
    unsigned w = m[x];
    if (x > 0) w = std::min<unsigned>(w, m[x - 1]);
    if (x + 1 < n) w = std::min<unsigned>(w, m[x + 1]);
    cur[x] = std::min(cur[x], sat_inc(w));
  };

  edge(0);
  if (n == 1) return;
  const __m256i one = _mm256_set1_epi8(1);
  std::size_t x = 1;
  for (; x + 32 <= n - 1; x += 32) {
    __m256i w = _mm256_min_epu8(load(m + x - 1), load(m + x));
    w = _mm256_min_epu8(w, load(m + x + 1));
    store(cur + x, _mm256_min_epu8(load(cur + x), _mm256_adds_epu8(w, one)));
  }
  for (; x < n; ++x) edge(x);
}

constexpr KernelTable kAvx2{
    Isa::avx2,       min_u8_inplace_avx2,   min_u8_multi_avx2,
    minmax_u16_avx2, minmax_accumulate_u16_avx2, any_in_range_u16_avx2,
    chamfer_rows_u8_avx2,
};

}  // namespace

const KernelTable* avx2_table_unchecked() noexcept { return &kAvx2; }

}  // namespace pdm::simd
