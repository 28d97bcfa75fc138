#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "pdm/transfer_function.hpp"
#include "pdm/volume.hpp"

namespace pdm {

/// How a block's occupancy is decided.
///  voxel       - some voxel inside the block has a qualifying intensity.
///  range_apron - the block's apron-extended [min, max] interval contains a
///                qualifying intensity. Conservative under trilinear sampling.
enum class OccupancyMode { voxel, range_apron };

OccupancyMode parse_occupancy_mode(std::string_view name);
std::string_view to_string(OccupancyMode mode) noexcept;

struct OccupancyMap {
  Dims bdims;
  std::vector<std::uint8_t> occupied;  // 0 or 1 per block

  bool at(std::uint32_t x, std::uint32_t y, std::uint32_t z) const noexcept {
    return occupied[bdims.index(x, y, z)] != 0;
  }
  std::size_t occupied_count() const noexcept;
};

inline constexpr std::uint8_t kMaxDistance = 255;

/// Clamped Chebyshev distance (in blocks) to the nearest occupied block.
/// 0 means occupied; 255 means "255 or more", or no occupied block at all.
struct DistanceMap {
  Dims bdims;
  std::vector<std::uint8_t> dist;

  std::uint8_t at(std::uint32_t x, std::uint32_t y, std::uint32_t z) const noexcept {
    return dist[bdims.index(x, y, z)];
  }
  friend bool operator==(const DistanceMap&, const DistanceMap&) = default;
};

/// Per-partition occupancy. `ranges` may carry a cached block_min_max() result
/// for range_apron mode; it is computed on the fly otherwise.
OccupancyMap occupancy_for_partition(const Volume& volume, const BlockGrid& grid, Partition partition,
                                     OccupancyMode mode, const std::vector<BlockRange>* ranges = nullptr);

/// Occupancy under a transfer function (the non-partitioned baseline).
OccupancyMap occupancy_for_tf(const Volume& volume, const BlockGrid& grid, const TransferFunction& tf,
                              OccupancyMode mode, const std::vector<BlockRange>* ranges = nullptr);

/// Exact clamped L-infinity distance transform: forward and backward raster
/// sweeps over the 26-neighbourhood with unit weights.
DistanceMap distance_transform(const OccupancyMap& occ);

/// Precomputed partitioned distance maps, one per partition of the scheme.
class PdmSet {
 public:
  PdmSet() = default;
  PdmSet(PartitionScheme scheme, BlockGrid grid, std::vector<DistanceMap> pdms, double init_ms = 0.0);

  const PartitionScheme& scheme() const noexcept { return scheme_; }
  const BlockGrid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return pdms_.size(); }
  /// 1-based partition number.
  const DistanceMap& map(std::size_t p) const { return pdms_.at(p - 1); }
  const std::vector<DistanceMap>& maps() const noexcept { return pdms_; }
  /// Wall time of the one-time build, in milliseconds.
  double init_ms() const noexcept { return init_ms_; }
  /// Extra storage in bytes: one byte per block per partition.
  std::size_t memory_bytes() const noexcept { return pdms_.size() * grid_.block_count(); }

 private:
  PartitionScheme scheme_;
  BlockGrid grid_;
  std::vector<DistanceMap> pdms_;
  double init_ms_ = 0.0;
};

/// Builds every POM and PDM; POMs are discarded after their transform.
PdmSet build_pdm_set(const Volume& volume, const BlockGrid& grid, const PartitionScheme& scheme,
                     OccupancyMode mode, unsigned threads = 1,
                     const std::vector<BlockRange>* ranges = nullptr);

enum class CombineMode {
  direct,   // one pass over all selected maps
  chunked,  // at most kMapsPerPass inputs per pass, accumulator carried over
};

inline constexpr std::size_t kMapsPerPass = 6;

struct CombineResult {
  DistanceMap map;
  std::size_t passes = 0;
};

/// Element-wise minimum of the selected PDMs. An empty selection yields an
/// all-255 map. Throws Error{invalid_argument} for indices outside [1, n].
CombineResult combine_with_stats(const PdmSet& pdms, const PartitionSelection& selection,
                                 CombineMode mode = CombineMode::direct);

DistanceMap combine(const PdmSet& pdms, const PartitionSelection& selection,
                    CombineMode mode = CombineMode::direct);

/// Baseline: occupancy under the TF followed by a full distance transform.
DistanceMap standard_distance_map(const Volume& volume, const BlockGrid& grid, const TransferFunction& tf,
                                  OccupancyMode mode, const std::vector<BlockRange>* ranges = nullptr);

// Binary dump: "PDMS" magic, u32 version, u32 bdims[3], u32 n, then n * block_count bytes.
void save_pdm_set(const PdmSet& set, const std::filesystem::path& path);
/// Reads maps written by save_pdm_set. The caller supplies scheme and grid,
/// which must agree with the stored shape.
PdmSet load_pdm_set(const std::filesystem::path& path, const PartitionScheme& scheme, const BlockGrid& grid);

}  // namespace pdm
