#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

namespace pdm {

struct Dims {
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  std::uint32_t z = 0;

  std::size_t count() const noexcept { return std::size_t{x} * y * z; }
  std::size_t index(std::uint32_t i, std::uint32_t j, std::uint32_t k) const noexcept {
    return (std::size_t{k} * y + j) * x + i;
  }
  std::uint32_t operator[](int axis) const noexcept { return axis == 0 ? x : axis == 1 ? y : z; }
  friend bool operator==(const Dims&, const Dims&) = default;
};

/// Dense scalar grid, x fastest. Values are stored as uint16 for both 8- and
/// 16-bit data; `bits` records the source depth and sizes the TF LUT.
///
/// Immutable once built: construct through make_volume() so that the
/// intensity range always matches the voxels.
class Volume {
 public:
  Volume() = default;

  const Dims& dims() const noexcept { return dims_; }
  int bits() const noexcept { return bits_; }
  std::uint16_t rho_min() const noexcept { return rho_min_; }
  std::uint16_t rho_max() const noexcept { return rho_max_; }
  const std::array<double, 3>& spacing() const noexcept { return spacing_; }
  const std::vector<std::uint16_t>& voxels() const noexcept { return voxels_; }

  std::uint16_t at(std::uint32_t i, std::uint32_t j, std::uint32_t k) const noexcept {
    return voxels_[dims_.index(i, j, k)];
  }

  std::size_t lut_size() const noexcept { return std::size_t{1} << bits_; }

  friend Volume make_volume(Dims dims, int bits, std::vector<std::uint16_t> voxels,
                            std::array<double, 3> spacing);

 private:
  Dims dims_{};
  int bits_ = 8;
  std::uint16_t rho_min_ = 0;
  std::uint16_t rho_max_ = 0;
  std::array<double, 3> spacing_{1.0, 1.0, 1.0};
  std::vector<std::uint16_t> voxels_;
};

/// Validates sizes and value bounds and computes the attained intensity range.
Volume make_volume(Dims dims, int bits, std::vector<std::uint16_t> voxels,
                   std::array<double, 3> spacing = {1.0, 1.0, 1.0});

enum class Endianness { little, big };

struct RawMeta {
  Dims dims;
  int bits = 8;
  Endianness endianness = Endianness::little;
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
};

RawMeta read_raw_meta(const std::filesystem::path& path_meta);

/// Loads a flat x-fastest RAW file described by a JSON sidecar
/// {dims:[nx,ny,nz], bits:8|16, endianness:"le"|"be", spacing:[sx,sy,sz]}.
/// Throws Error{size_mismatch} when the file length disagrees with the meta and
/// Error{unsupported_bit_depth} for depths other than 8 or 16.
Volume load_raw(const std::filesystem::path& path_data, const std::filesystem::path& path_meta);

void save_raw(const Volume& volume, const std::filesystem::path& path_data,
              const std::filesystem::path& path_meta, Endianness endianness = Endianness::little);

enum class SynthKind { sphere_shell, two_spheres, noise, background_dominant };

SynthKind parse_synth_kind(std::string_view name);
std::string_view to_string(SynthKind kind) noexcept;

/// Deterministic 8-bit test volumes. Every dimension must be >= 8.
Volume synth_volume(SynthKind kind, Dims dims, std::uint64_t seed);

/// 256-bin histogram over the full representable range of the volume.
std::vector<std::uint64_t> histogram_256(const Volume& volume);

// ---------------------------------------------------------------------------
// Block grid

struct BlockCoord {
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  std::uint32_t z = 0;
};

class BlockGrid {
 public:
  BlockGrid() = default;
  BlockGrid(Dims volume_dims, std::uint32_t block_size);

  std::uint32_t block_size() const noexcept { return b_; }
  const Dims& volume_dims() const noexcept { return dims_; }
  const Dims& block_dims() const noexcept { return bdims_; }
  std::size_t block_count() const noexcept { return bdims_.count(); }

  std::size_t index(BlockCoord c) const noexcept { return bdims_.index(c.x, c.y, c.z); }

  /// Half-open voxel range [begin, end) covered by block `block` along `axis`,
  /// clipped to the volume.
  std::array<std::uint32_t, 2> voxel_span(int axis, std::uint32_t block) const noexcept;

 private:
  std::uint32_t b_ = 4;
  Dims dims_{};
  Dims bdims_{};
};

inline constexpr std::uint32_t kDefaultBlockSize = 4;

struct BlockRange {
  std::uint16_t lo = 0;
  std::uint16_t hi = 0;
  friend bool operator==(const BlockRange&, const BlockRange&) = default;
};

/// Per-block (min, max) over the block's voxels extended by a one-voxel apron
/// on every side, clipped to the volume. Any trilinear sample whose base voxel
/// lies inside the block interpolates values within this interval.
std::vector<BlockRange> block_min_max(const Volume& volume, const BlockGrid& grid,
                                      unsigned threads = 1);

}  // namespace pdm
