#include "pdm/simd/kernels.hpp"

#include <algorithm>

namespace pdm::simd {
namespace {

void min_u8_inplace_scalar(std::uint8_t* acc, const std::uint8_t* src, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] = std::min(acc[i], src[i]);
}

void min_u8_multi_scalar(std::uint8_t* dst, const std::uint8_t* const* srcs, std::size_t count,
                         std::size_t n) {
  if (dst != srcs[0]) std::copy_n(srcs[0], n, dst);
  for (std::size_t k = 1; k < count; ++k) min_u8_inplace_scalar(dst, srcs[k], n);
}

void minmax_u16_scalar(const std::uint16_t* p, std::size_t n, std::uint16_t* lo,
                       std::uint16_t* hi) {
  std::uint16_t mn = p[0];
  std::uint16_t mx = p[0];
  for (std::size_t i = 1; i < n; ++i) {
    mn = std::min(mn, p[i]);
    mx = std::max(mx, p[i]);
  }
  *lo = mn;
  *hi = mx;
}

void minmax_accumulate_u16_scalar(std::uint16_t* lo, std::uint16_t* hi, const std::uint16_t* src,
                                  std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    lo[i] = std::min(lo[i], src[i]);
    hi[i] = std::max(hi[i], src[i]);
  }
}

bool any_in_range_u16_scalar(const std::uint16_t* p, std::size_t n, std::uint16_t lo,
                             std::uint16_t hi) {
  for (std::size_t i = 0; i < n; ++i) {
    if (p[i] >= lo && p[i] <= hi) return true;
  }
  return false;
}

void chamfer_rows_u8_scalar(std::uint8_t* cur, const std::uint8_t* const* rows, std::size_t count,
                            std::size_t n, std::uint8_t* scratch) {
  if (n == 0) return;
  std::uint8_t* m = scratch;
  std::copy_n(rows[0], n, m);
  for (std::size_t k = 1; k < count; ++k) min_u8_inplace_scalar(m, rows[k], n);
  auto sat_inc = [](unsigned v) { return static_cast<std::uint8_t>(v >= 255 ? 255 : v + 1); };
  for (std::size_t x = 0; x < n; ++x) {
    unsigned w = m[x];
    if (x > 0) w = std::min<unsigned>(w, m[x - 1]);
    if (x + 1 < n) w = std::min<unsigned>(w, m[x + 1]);
    cur[x] = std::min(cur[x], sat_inc(w));
  }
}

constexpr KernelTable kScalar{
    Isa::scalar,       min_u8_inplace_scalar,   min_u8_multi_scalar,
    minmax_u16_scalar, minmax_accumulate_u16_scalar, any_in_range_u16_scalar,
    chamfer_rows_u8_scalar,
};

}  // namespace

const KernelTable& scalar_kernels() noexcept { return kScalar; }

}  // namespace pdm::simd
