#pragma once
// Brute-force reference implementations recomputed from the definitions.

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdlib>
#include <random>
#include <vector>

#include "pdm/acceleration.hpp"
#include "pdm/transfer_function.hpp"
#include "pdm/volume.hpp"

namespace oracle {

using pdm::Dims;

inline Dims block_dims(const Dims& d, std::uint32_t b) {
  return {(d.x + b - 1) / b, (d.y + b - 1) / b, (d.z + b - 1) / b};
}

/// Min and max over the block plus a one-voxel apron, clipped to the volume.
inline std::vector<pdm::BlockRange> block_min_max(const pdm::Volume& v, std::uint32_t b) {
  const Dims& d = v.dims();
  const Dims bd = block_dims(d, b);
  std::vector<pdm::BlockRange> out(bd.count());
  for (std::uint32_t bz = 0; bz < bd.z; ++bz) {
    for (std::uint32_t by = 0; by < bd.y; ++by) {
      for (std::uint32_t bx = 0; bx < bd.x; ++bx) {
        std::uint16_t lo = 0xFFFF;
        std::uint16_t hi = 0;
        for (std::int64_t k = std::int64_t{bz} * b - 1; k <= std::int64_t{bz} * b + b; ++k) {
          for (std::int64_t j = std::int64_t{by} * b - 1; j <= std::int64_t{by} * b + b; ++j) {
            for (std::int64_t i = std::int64_t{bx} * b - 1; i <= std::int64_t{bx} * b + b; ++i) {
              if (i < 0 || j < 0 || k < 0 || i >= d.x || j >= d.y || k >= d.z) continue;
              const auto s = v.at(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                                  static_cast<std::uint32_t>(k));
              lo = std::min(lo, s);
              hi = std::max(hi, s);
            }
          }
        }
        out[bd.index(bx, by, bz)] = {lo, hi};
      }
    }
  }
  return out;
}

/// Does `pred(value)` hold for some voxel inside the block (no apron)?
template <class Pred>
bool any_voxel(const pdm::Volume& v, std::uint32_t b, std::uint32_t bx, std::uint32_t by, std::uint32_t bz,
               Pred pred) {
  const Dims& d = v.dims();
  for (std::uint32_t k = bz * b; k < std::min(d.z, bz * b + b); ++k) {
    for (std::uint32_t j = by * b; j < std::min(d.y, by * b + b); ++j) {
      for (std::uint32_t i = bx * b; i < std::min(d.x, bx * b + b); ++i) {
        if (pred(v.at(i, j, k))) return true;
      }
    }
  }
  return false;
}

/// Occupancy for an arbitrary intensity predicate.
template <class Pred>
pdm::OccupancyMap occupancy(const pdm::Volume& v, std::uint32_t b, pdm::OccupancyMode mode, Pred pred) {
  const Dims bd = block_dims(v.dims(), b);
  pdm::OccupancyMap occ{bd, std::vector<std::uint8_t>(bd.count(), 0)};
  const auto ranges = block_min_max(v, b);
  for (std::uint32_t bz = 0; bz < bd.z; ++bz) {
    for (std::uint32_t by = 0; by < bd.y; ++by) {
      for (std::uint32_t bx = 0; bx < bd.x; ++bx) {
        const std::size_t idx = bd.index(bx, by, bz);
        bool hit = false;
        if (mode == pdm::OccupancyMode::voxel) {
          hit = any_voxel(v, b, bx, by, bz, pred);
        } else {
          for (std::uint32_t s = ranges[idx].lo; s <= ranges[idx].hi && !hit; ++s) hit = pred(s);
        }
        occ.occupied[idx] = hit ? 1 : 0;
      }
    }
  }
  return occ;
}

inline pdm::OccupancyMap occupancy_tf(const pdm::Volume& v, std::uint32_t b, pdm::OccupancyMode mode,
                                      const pdm::TransferFunction& tf) {
  return occupancy(v, b, mode, [&](std::uint32_t s) { return tf.alpha(s) > 0.0; });
}

inline pdm::OccupancyMap occupancy_partition(const pdm::Volume& v, std::uint32_t b, pdm::OccupancyMode mode,
                                             pdm::Partition p) {
  return occupancy(v, b, mode, [&](std::uint32_t s) { return s >= p.lo && s <= p.hi; });
}

/// All-pairs Chebyshev distance to the nearest occupied block, clamped to 255.
inline pdm::DistanceMap distance(const pdm::OccupancyMap& occ) {
  const Dims& d = occ.bdims;
  std::vector<std::array<std::int64_t, 3>> seeds;
  for (std::uint32_t z = 0; z < d.z; ++z) {
    for (std::uint32_t y = 0; y < d.y; ++y) {
      for (std::uint32_t x = 0; x < d.x; ++x) {
        if (occ.at(x, y, z)) seeds.push_back({x, y, z});
      }
    }
  }
  pdm::DistanceMap out{d, std::vector<std::uint8_t>(d.count(), pdm::kMaxDistance)};
  for (std::uint32_t z = 0; z < d.z; ++z) {
    for (std::uint32_t y = 0; y < d.y; ++y) {
      for (std::uint32_t x = 0; x < d.x; ++x) {
        std::int64_t best = pdm::kMaxDistance;
        for (const auto& s : seeds) {
          const std::int64_t c =
              std::max({std::abs(s[0] - x), std::abs(s[1] - y), std::abs(s[2] - std::int64_t{z})});
          best = std::min(best, c);
        }
        out.dist[d.index(x, y, z)] = static_cast<std::uint8_t>(best);
      }
    }
  }
  return out;
}

/// Partitions containing at least one intensity with non-zero alpha.
inline std::vector<std::size_t> selection(const pdm::TransferFunction& tf, const pdm::PartitionScheme& scheme) {
  std::vector<std::size_t> out;
  for (std::size_t p = 1; p <= scheme.size(); ++p) {
    const auto& part = scheme.partition(p);
    for (std::uint32_t s = part.lo; s <= part.hi; ++s) {
      if (tf.alpha(s) > 0.0) {
        out.push_back(p);
        break;
      }
    }
  }
  return out;
}

/// D' from scratch: distance to the nearest block occupied by any selected partition.
inline pdm::DistanceMap combined(const pdm::Volume& v, std::uint32_t b, pdm::OccupancyMode mode,
                                 const pdm::PartitionScheme& scheme, const std::vector<std::size_t>& sel) {
  return distance(occupancy(v, b, mode, [&](std::uint32_t s) {
    return std::find(sel.begin(), sel.end(), scheme.partition_of(s)) != sel.end();
  }));
}

// ---------------------------------------------------------------------------
// Random generators shared by property tests.

inline pdm::Volume random_volume(std::mt19937_64& rng, Dims d, int levels) {
  std::uniform_int_distribution<int> pick(0, 3);
  std::vector<std::uint16_t> voxels(d.count());
  // Piecewise-constant blobs on a zero background so occupancy is neither empty nor full.
  std::uniform_int_distribution<int> val(0, levels - 1);
  for (auto& s : voxels) s = 0;
  const int blobs = 1 + pick(rng) * 2;
  for (int n = 0; n < blobs; ++n) {
    std::uniform_int_distribution<std::uint32_t> cx(0, d.x - 1), cy(0, d.y - 1), cz(0, d.z - 1);
    const std::uint32_t x0 = cx(rng), y0 = cy(rng), z0 = cz(rng);
    const std::uint32_t x1 = std::min(d.x, x0 + 1 + cx(rng) / 2), y1 = std::min(d.y, y0 + 1 + cy(rng) / 2),
                        z1 = std::min(d.z, z0 + 1 + cz(rng) / 2);
    const auto value = static_cast<std::uint16_t>(val(rng));
    for (std::uint32_t k = z0; k < z1; ++k) {
      for (std::uint32_t j = y0; j < y1; ++j) {
        for (std::uint32_t i = x0; i < x1; ++i) voxels[d.index(i, j, k)] = value;
      }
    }
  }
  // Sprinkle of noise.
  std::uniform_int_distribution<std::size_t> where(0, voxels.size() - 1);
  for (std::size_t n = 0; n < voxels.size() / 50; ++n) voxels[where(rng)] = static_cast<std::uint16_t>(val(rng));
  return pdm::make_volume(d, 8, std::move(voxels));
}

/// Random TF whose visible set is a few random intensity intervals.
inline pdm::TransferFunction random_tf(std::mt19937_64& rng, int bits) {
  const std::size_t size = std::size_t{1} << bits;
  std::vector<pdm::Rgba> lut(size);
  std::uniform_int_distribution<std::size_t> at(0, size - 1);
  std::uniform_int_distribution<int> count(1, 4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int intervals = count(rng);
  for (int n = 0; n < intervals; ++n) {
    std::size_t a = at(rng), b = at(rng);
    if (a > b) std::swap(a, b);
    b = std::min(b, a + size / 6);
    for (std::size_t i = a; i <= b; ++i) lut[i] = {unit(rng), unit(rng), unit(rng), 0.01 + 0.3 * unit(rng)};
  }
  return pdm::TransferFunction(bits, std::move(lut));
}

/// TF visible on exactly the listed partitions.
inline pdm::TransferFunction aligned_tf(const pdm::PartitionScheme& scheme, const std::vector<std::size_t>& parts,
                                        double alpha = 0.1) {
  std::vector<pdm::Rgba> lut(std::size_t{1} << scheme.bits());
  for (std::size_t p : parts) {
    const auto& r = scheme.partition(p);
    for (std::uint32_t i = r.lo; i <= r.hi; ++i) lut[i] = {0.8, 0.5, 0.2, alpha};
  }
  return pdm::TransferFunction(scheme.bits(), std::move(lut));
}

inline pdm::OccupancyMap random_occupancy(std::mt19937_64& rng, Dims d, double density) {
  std::bernoulli_distribution hit(density);
  pdm::OccupancyMap occ{d, std::vector<std::uint8_t>(d.count())};
  for (auto& o : occ.occupied) o = hit(rng) ? 1 : 0;
  return occ;
}

}  // namespace oracle
