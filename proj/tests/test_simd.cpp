#include <random>
#include <vector>

#include "doctest.h"
#include "pdm/simd/kernels.hpp"

using namespace pdm::simd;

namespace {

std::vector<std::uint8_t> random_u8(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<int> d(0, 255);
  std::vector<std::uint8_t> v(n);
  for (auto& x : v) x = static_cast<std::uint8_t>(d(rng) < 40 ? 255 : d(rng));
  return v;
}

std::vector<std::uint16_t> random_u16(std::mt19937_64& rng, std::size_t n, int max) {
  std::uniform_int_distribution<int> d(0, max);
  std::vector<std::uint16_t> v(n);
  for (auto& x : v) x = static_cast<std::uint16_t>(d(rng));
  return v;
}

// Lengths around the 16/32-lane boundaries and a few odd ones.
const std::size_t kLengths[] = {1, 2, 7, 15, 16, 17, 31, 32, 33, 63, 64, 65, 100, 257, 1000};

}  // namespace

TEST_CASE("scalar table reports scalar isa") {
  CHECK(scalar_kernels().isa == Isa::scalar);
  CHECK(isa_name(Isa::scalar) == "scalar");
  CHECK(isa_name(Isa::avx2) == "avx2");
}

TEST_CASE("active table is one of the available tables") {
  const KernelTable& a = active();
  if (avx2_kernels() == nullptr) {
    CHECK(a.isa == Isa::scalar);
  } else {
    CHECK((a.isa == Isa::avx2 || a.isa == Isa::scalar));
  }
}

TEST_CASE("scalar min_u8_multi against definition") {
  const std::uint8_t a[] = {5, 0, 255, 7};
  const std::uint8_t b[] = {3, 9, 254, 7};
  const std::uint8_t c[] = {4, 1, 255, 0};
  const std::uint8_t* srcs[] = {a, b, c};
  std::uint8_t out[4];
  scalar_kernels().min_u8_multi(out, srcs, 3, 4);
  CHECK(out[0] == 3);
  CHECK(out[1] == 0);
  CHECK(out[2] == 254);
  CHECK(out[3] == 0);
}

TEST_CASE("scalar chamfer row saturates at 255") {
  std::uint8_t cur[5] = {255, 255, 255, 255, 0};
  const std::uint8_t r0[5] = {255, 255, 255, 3, 255};
  const std::uint8_t* rows[] = {r0};
  std::uint8_t scratch[5];
  scalar_kernels().chamfer_rows_u8(cur, rows, 1, 5, scratch);
  CHECK(cur[0] == 255);
  CHECK(cur[1] == 255);
  CHECK(cur[2] == 4);
  CHECK(cur[3] == 4);
  CHECK(cur[4] == 0);
}

TEST_CASE("avx2 kernels match scalar reference") {
  const KernelTable* v = avx2_kernels();
  if (v == nullptr) {
    MESSAGE("AVX2 unavailable; equivalence not exercised");
    return;
  }
  const KernelTable& s = scalar_kernels();
  std::mt19937_64 rng(42);
  for (std::size_t n : kLengths) {
    CAPTURE(n);
    for (int rep = 0; rep < 20; ++rep) {
      {
        auto acc = random_u8(rng, n);
        auto src = random_u8(rng, n);
        auto acc2 = acc;
        s.min_u8_inplace(acc.data(), src.data(), n);
        v->min_u8_inplace(acc2.data(), src.data(), n);
        CHECK(acc == acc2);
      }
      {
        const std::size_t count = 1 + rep % 9;
        std::vector<std::vector<std::uint8_t>> maps;
        std::vector<const std::uint8_t*> ptrs;
        for (std::size_t k = 0; k < count; ++k) maps.push_back(random_u8(rng, n));
        for (const auto& m : maps) ptrs.push_back(m.data());
        std::vector<std::uint8_t> o1(n), o2(n);
        s.min_u8_multi(o1.data(), ptrs.data(), count, n);
        v->min_u8_multi(o2.data(), ptrs.data(), count, n);
        CHECK(o1 == o2);
        // Aliased destination.
        auto alias = maps[0];
        ptrs[0] = alias.data();
        v->min_u8_multi(alias.data(), ptrs.data(), count, n);
        CHECK(alias == o1);
      }
      {
        const int max = rep % 2 == 0 ? 255 : 65535;
        auto p = random_u16(rng, n, max);
        std::uint16_t l1, h1, l2, h2;
        s.minmax_u16(p.data(), n, &l1, &h1);
        v->minmax_u16(p.data(), n, &l2, &h2);
        CHECK(l1 == l2);
        CHECK(h1 == h2);

        auto lo1 = random_u16(rng, n, max), hi1 = random_u16(rng, n, max);
        auto lo2 = lo1, hi2 = hi1;
        s.minmax_accumulate_u16(lo1.data(), hi1.data(), p.data(), n);
        v->minmax_accumulate_u16(lo2.data(), hi2.data(), p.data(), n);
        CHECK(lo1 == lo2);
        CHECK(hi1 == hi2);

        std::uniform_int_distribution<int> d(0, max);
        std::uint16_t a = static_cast<std::uint16_t>(d(rng)), b = static_cast<std::uint16_t>(d(rng));
        if (a > b) std::swap(a, b);
        if (rep % 3 == 0) b = a;
        CHECK(s.any_in_range_u16(p.data(), n, a, b) == v->any_in_range_u16(p.data(), n, a, b));
        CHECK(v->any_in_range_u16(p.data(), n, 0, 65535));
      }
      {
        const std::size_t count = 1 + rep % 4;
        std::vector<std::vector<std::uint8_t>> rows;
        std::vector<const std::uint8_t*> ptrs;
        for (std::size_t k = 0; k < count; ++k) rows.push_back(random_u8(rng, n));
        for (const auto& r : rows) ptrs.push_back(r.data());
        auto c1 = random_u8(rng, n);
        auto c2 = c1;
        std::vector<std::uint8_t> scratch(n);
        s.chamfer_rows_u8(c1.data(), ptrs.data(), count, n, scratch.data());
        v->chamfer_rows_u8(c2.data(), ptrs.data(), count, n, scratch.data());
        CHECK(c1 == c2);
      }
    }
  }
}
