#include <cstdlib>
#include <string_view>

#include "pdm/simd/kernels.hpp"

namespace pdm::simd {

#if PDM_HAVE_AVX2
const KernelTable* avx2_table_unchecked() noexcept;
#endif

const KernelTable* avx2_kernels() noexcept {
#if PDM_HAVE_AVX2
  if (__builtin_cpu_supports("avx2")) return avx2_table_unchecked();
#endif
  return nullptr;
}

namespace {

const KernelTable& resolve() noexcept {
  if (const char* env = std::getenv("PDM_SIMD"); env != nullptr && std::string_view(env) == "scalar") {
    return scalar_kernels();
  }
  if (const KernelTable* t = avx2_kernels()) return *t;
  return scalar_kernels();
}

}  // namespace

const KernelTable& active() noexcept {
  static const KernelTable& table = resolve();
  return table;
}

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

}  // namespace pdm::simd
