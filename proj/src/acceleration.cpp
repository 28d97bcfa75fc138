#include "pdm/acceleration.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>
#include <fstream>
#include <string>

#include "pdm/error.hpp"
#include "pdm/parallel.hpp"
#include "pdm/simd/kernels.hpp"

namespace pdm {

OccupancyMode parse_occupancy_mode(std::string_view name) {
  if (name == "voxel") return OccupancyMode::voxel;
  if (name == "range-apron" || name == "range_apron") return OccupancyMode::range_apron;
  throw Error(ErrorCode::invalid_argument, "unknown occupancy mode '" + std::string(name) + "'");
}

std::string_view to_string(OccupancyMode mode) noexcept {
  return mode == OccupancyMode::voxel ? "voxel" : "range_apron";
}

std::size_t OccupancyMap::occupied_count() const noexcept {
  return static_cast<std::size_t>(std::count(occupied.begin(), occupied.end(), std::uint8_t{1}));
}

namespace {

// Calls fn(block_index, row_pointer, row_length) for every interior voxel row
// of the block; stops early when fn returns true. Returns whether it stopped.
template <typename Fn>
bool for_block_rows(const Volume& volume, const BlockGrid& grid, BlockCoord c, Fn&& fn) {
  const auto xs = grid.voxel_span(0, c.x);
  const auto ys = grid.voxel_span(1, c.y);
  const auto zs = grid.voxel_span(2, c.z);
  const Dims& d = volume.dims();
  for (std::uint32_t z = zs[0]; z < zs[1]; ++z) {
    for (std::uint32_t y = ys[0]; y < ys[1]; ++y) {
      if (fn(volume.voxels().data() + d.index(xs[0], y, z), std::size_t{xs[1] - xs[0]})) return true;
    }
  }
  return false;
}

template <typename Fn>
void for_each_block(const BlockGrid& grid, Fn&& fn) {
  const Dims& bd = grid.block_dims();
  std::size_t idx = 0;
  for (std::uint32_t z = 0; z < bd.z; ++z) {
    for (std::uint32_t y = 0; y < bd.y; ++y) {
      for (std::uint32_t x = 0; x < bd.x; ++x, ++idx) fn(idx, BlockCoord{x, y, z});
    }
  }
}

std::vector<BlockRange> ranges_or_compute(const Volume& volume, const BlockGrid& grid,
                                          const std::vector<BlockRange>* ranges) {
  if (ranges != nullptr) {
    if (ranges->size() != grid.block_count()) {
      throw Error(ErrorCode::invalid_argument, "cached block ranges do not match the grid");
    }
    return {};
  }
  return block_min_max(volume, grid);
}

void check_grid(const Volume& volume, const BlockGrid& grid) {
  if (!(grid.volume_dims() == volume.dims())) {
    throw Error(ErrorCode::invalid_argument, "block grid was built for different volume dims");
  }
}

// In-place chamfer sweeps over a map initialised to 0 (occupied) / 255 (empty).
void chamfer_inplace(std::uint8_t* dist, const Dims& bd) {
  const std::size_t total = bd.count();
  const auto zeros = static_cast<std::size_t>(std::count(dist, dist + total, std::uint8_t{0}));
  if (zeros == total || zeros == 0) return;  // fully occupied or fully empty: already final

  const auto& k = simd::active();
  const std::size_t nx = bd.x;
  std::vector<std::uint8_t> scratch(nx);
  auto row = [&](std::int64_t y, std::int64_t z) { return dist + (static_cast<std::size_t>(z) * bd.y + y) * nx; };
  const std::int64_t ny = bd.y;
  const std::int64_t nz = bd.z;
  const std::uint8_t* rows[4];

  // forward: neighbours at (y-1, z) and (y-1..y+1, z-1), then x-1 in-row
  for (std::int64_t z = 0; z < nz; ++z) {
    for (std::int64_t y = 0; y < ny; ++y) {
      std::size_t count = 0;
      if (y > 0) rows[count++] = row(y - 1, z);
      if (z > 0) {
        for (std::int64_t dy = -1; dy <= 1; ++dy) {
          if (y + dy >= 0 && y + dy < ny) rows[count++] = row(y + dy, z - 1);
        }
      }
      std::uint8_t* cur = row(y, z);
      if (count > 0) k.chamfer_rows_u8(cur, rows, count, nx, scratch.data());
      for (std::size_t x = 1; x < nx; ++x) {
        const unsigned left = cur[x - 1] == 255 ? 255u : cur[x - 1] + 1u;
        if (left < cur[x]) cur[x] = static_cast<std::uint8_t>(left);
      }
    }
  }
  // backward: neighbours at (y+1, z) and (y-1..y+1, z+1), then x+1 in-row
  for (std::int64_t z = nz - 1; z >= 0; --z) {
    for (std::int64_t y = ny - 1; y >= 0; --y) {
      std::size_t count = 0;
      if (y + 1 < ny) rows[count++] = row(y + 1, z);
      if (z + 1 < nz) {
        for (std::int64_t dy = -1; dy <= 1; ++dy) {
          if (y + dy >= 0 && y + dy < ny) rows[count++] = row(y + dy, z + 1);
        }
      }
      std::uint8_t* cur = row(y, z);
      if (count > 0) k.chamfer_rows_u8(cur, rows, count, nx, scratch.data());
      for (std::size_t x = nx - 1; x-- > 0;) {
        const unsigned right = cur[x + 1] == 255 ? 255u : cur[x + 1] + 1u;
        if (right < cur[x]) cur[x] = static_cast<std::uint8_t>(right);
      }
    }
  }
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace

OccupancyMap occupancy_for_partition(const Volume& volume, const BlockGrid& grid, Partition partition,
                                     OccupancyMode mode, const std::vector<BlockRange>* ranges) {
  check_grid(volume, grid);
  OccupancyMap occ{grid.block_dims(), std::vector<std::uint8_t>(grid.block_count(), 0)};
  if (mode == OccupancyMode::voxel) {
    const auto& k = simd::active();
    const auto lo = static_cast<std::uint16_t>(std::min<std::uint32_t>(partition.lo, 0xFFFF));
    const auto hi = static_cast<std::uint16_t>(std::min<std::uint32_t>(partition.hi, 0xFFFF));
    for_each_block(grid, [&](std::size_t idx, BlockCoord c) {
      occ.occupied[idx] = for_block_rows(volume, grid, c, [&](const std::uint16_t* p, std::size_t n) {
        return k.any_in_range_u16(p, n, lo, hi);
      });
    });
    return occ;
  }
  const auto owned = ranges_or_compute(volume, grid, ranges);
  const auto& r = ranges != nullptr ? *ranges : owned;
  for (std::size_t i = 0; i < r.size(); ++i) {
    occ.occupied[i] = r[i].lo <= partition.hi && r[i].hi >= partition.lo;
  }
  return occ;
}

OccupancyMap occupancy_for_tf(const Volume& volume, const BlockGrid& grid, const TransferFunction& tf,
                              OccupancyMode mode, const std::vector<BlockRange>* ranges) {
  check_grid(volume, grid);
  if (tf.size() <= volume.rho_max()) throw Error(ErrorCode::invalid_argument, "TF does not cover the volume's intensity range");
  OccupancyMap occ{grid.block_dims(), {}};
  // Nothing visible, or everything visible: the answer does not depend on the data.
  if (tf.visible_count() == 0) {
    occ.occupied.assign(grid.block_count(), 0);
    return occ;
  }
  if (tf.visible_count() == tf.size()) {
    occ.occupied.assign(grid.block_count(), 1);
    return occ;
  }
  occ.occupied.assign(grid.block_count(), 0);
  if (mode == OccupancyMode::voxel) {
    for_each_block(grid, [&](std::size_t idx, BlockCoord c) {
      occ.occupied[idx] = for_block_rows(volume, grid, c, [&](const std::uint16_t* p, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
          if (tf.alpha(p[i]) > 0.0) return true;
        }
        return false;
      });
    });
    return occ;
  }
  const auto owned = ranges_or_compute(volume, grid, ranges);
  const auto& r = ranges != nullptr ? *ranges : owned;
  for (std::size_t i = 0; i < r.size(); ++i) occ.occupied[i] = tf.any_visible(r[i].lo, r[i].hi);
  return occ;
}

DistanceMap distance_transform(const OccupancyMap& occ) {
  DistanceMap dm{occ.bdims, std::vector<std::uint8_t>(occ.occupied.size())};
  if (dm.dist.size() != occ.bdims.count()) throw Error(ErrorCode::invalid_argument, "occupancy size mismatch");
  for (std::size_t i = 0; i < dm.dist.size(); ++i) dm.dist[i] = occ.occupied[i] ? 0 : kMaxDistance;
  chamfer_inplace(dm.dist.data(), dm.bdims);
  return dm;
}

PdmSet::PdmSet(PartitionScheme scheme, BlockGrid grid, std::vector<DistanceMap> pdms, double init_ms)
    : scheme_(std::move(scheme)), grid_(std::move(grid)), pdms_(std::move(pdms)), init_ms_(init_ms) {
  if (pdms_.size() != scheme_.size()) throw Error(ErrorCode::invalid_argument, "one PDM per partition required");
  for (const auto& m : pdms_) {
    if (!(m.bdims == grid_.block_dims()) || m.dist.size() != grid_.block_count()) {
      throw Error(ErrorCode::invalid_argument, "PDM shape does not match the block grid");
    }
  }
}

PdmSet build_pdm_set(const Volume& volume, const BlockGrid& grid, const PartitionScheme& scheme,
                     OccupancyMode mode, unsigned threads, const std::vector<BlockRange>* ranges) {
  check_grid(volume, grid);
  if ((std::size_t{1} << scheme.bits()) <= volume.rho_max()) {
    throw Error(ErrorCode::invalid_argument, "partition scheme does not cover the volume's intensity range");
  }
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = scheme.size();
  const std::size_t blocks = grid.block_count();

  // The maps start as POMs (0 = occupied, 255 = empty) and are transformed in place.
  std::vector<DistanceMap> maps(n, DistanceMap{grid.block_dims(), std::vector<std::uint8_t>(blocks, kMaxDistance)});
  if (mode == OccupancyMode::range_apron) {
    const auto owned = ranges_or_compute(volume, grid, ranges);
    const auto& r = ranges != nullptr ? *ranges : owned;
    for (std::size_t i = 0; i < blocks; ++i) {
      const std::size_t first = scheme.partition_of(r[i].lo);
      const std::size_t last = scheme.partition_of(r[i].hi);
      for (std::size_t p = first; p <= last; ++p) maps[p - 1].dist[i] = 0;
    }
  } else {
    for_each_block(grid, [&](std::size_t idx, BlockCoord c) {
      for_block_rows(volume, grid, c, [&](const std::uint16_t* p, std::size_t len) {
        for (std::size_t j = 0; j < len; ++j) maps[scheme.partition_of(p[j]) - 1].dist[idx] = 0;
        return false;
      });
    });
  }
  parallel_for_interleaved(n, resolve_threads(threads),
                           [&](unsigned, std::size_t p) { chamfer_inplace(maps[p].dist.data(), grid.block_dims()); });
  return PdmSet(scheme, grid, std::move(maps), elapsed_ms(start));
}

CombineResult combine_with_stats(const PdmSet& pdms, const PartitionSelection& selection, CombineMode mode) {
  const std::size_t blocks = pdms.grid().block_count();
  std::vector<const std::uint8_t*> srcs;
  srcs.reserve(selection.size());
  for (std::size_t p : selection.selected) {
    if (p < 1 || p > pdms.size()) {
      throw Error(ErrorCode::invalid_argument, "partition index " + std::to_string(p) + " outside [1, n]");
    }
    srcs.push_back(pdms.map(p).dist.data());
  }
  CombineResult out{DistanceMap{pdms.grid().block_dims(), std::vector<std::uint8_t>(blocks, kMaxDistance)}, 0};
  if (srcs.empty()) return out;

  const auto& k = simd::active();
  std::uint8_t* dst = out.map.dist.data();
  if (mode == CombineMode::direct) {
    k.min_u8_multi(dst, srcs.data(), srcs.size(), blocks);
    out.passes = 1;
    return out;
  }
  // Each pass reads the accumulator plus up to kMapsPerPass maps.
  std::vector<const std::uint8_t*> pass;
  for (std::size_t first = 0; first < srcs.size(); first += kMapsPerPass) {
    const std::size_t last = std::min(srcs.size(), first + kMapsPerPass);
    pass.clear();
    if (out.passes > 0) pass.push_back(dst);
    pass.insert(pass.end(), srcs.begin() + static_cast<std::ptrdiff_t>(first),
                srcs.begin() + static_cast<std::ptrdiff_t>(last));
    k.min_u8_multi(dst, pass.data(), pass.size(), blocks);
    ++out.passes;
  }
  return out;
}

DistanceMap combine(const PdmSet& pdms, const PartitionSelection& selection, CombineMode mode) {
  return combine_with_stats(pdms, selection, mode).map;
}

DistanceMap standard_distance_map(const Volume& volume, const BlockGrid& grid, const TransferFunction& tf,
                                  OccupancyMode mode, const std::vector<BlockRange>* ranges) {
  return distance_transform(occupancy_for_tf(volume, grid, tf, mode, ranges));
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'P', 'D', 'M', 'S'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4] = {};
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw Error(ErrorCode::parse, "truncated PDM file header");
  return b[0] | (b[1] << 8) | (b[2] << 16) | (std::uint32_t{b[3]} << 24);
}

}  // namespace

void save_pdm_set(const PdmSet& set, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
  const Dims& bd = set.grid().block_dims();
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, bd.x);
  put_u32(out, bd.y);
  put_u32(out, bd.z);
  put_u32(out, static_cast<std::uint32_t>(set.size()));
  for (const auto& m : set.maps()) {
    out.write(reinterpret_cast<const char*>(m.dist.data()), static_cast<std::streamsize>(m.dist.size()));
  }
  if (!out) throw Error(ErrorCode::io, "write failed for " + path.string());
}

PdmSet load_pdm_set(const std::filesystem::path& path, const PartitionScheme& scheme, const BlockGrid& grid) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw Error(ErrorCode::parse, "not a PDM file: " + path.string());
  if (get_u32(in) != kVersion) throw Error(ErrorCode::parse, "unsupported PDM file version");
  const Dims bd{get_u32(in), get_u32(in), get_u32(in)};
  const std::uint32_t n = get_u32(in);
  if (!(bd == grid.block_dims()) || n != scheme.size()) {
    throw Error(ErrorCode::size_mismatch, "PDM file shape does not match the requested grid/scheme");
  }
  std::vector<DistanceMap> maps(n, DistanceMap{bd, std::vector<std::uint8_t>(bd.count())});
  for (auto& m : maps) {
    in.read(reinterpret_cast<char*>(m.dist.data()), static_cast<std::streamsize>(m.dist.size()));
    if (!in) throw Error(ErrorCode::size_mismatch, "truncated PDM file");
  }
  return PdmSet(scheme, grid, std::move(maps));
}

}  // namespace pdm
