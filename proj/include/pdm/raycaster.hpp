#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "pdm/acceleration.hpp"
#include "pdm/transfer_function.hpp"
#include "pdm/volume.hpp"

namespace pdm {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double operator[](int axis) const noexcept { return axis == 0 ? x : axis == 1 ? y : z; }
  friend Vec3 operator+(Vec3 a, Vec3 b) noexcept { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) noexcept { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(Vec3 a, double s) noexcept { return {a.x * s, a.y * s, a.z * s}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

double dot(Vec3 a, Vec3 b) noexcept;
Vec3 cross(Vec3 a, Vec3 b) noexcept;
Vec3 normalize(Vec3 v);

/// Pinhole camera in world space (voxel index * spacing). The eye is rotated
/// by orbit_angle about the vertical (+y) axis through look_at.
struct Camera {
  Vec3 eye{0.0, 0.0, 1.0};
  Vec3 look_at{0.0, 0.0, 0.0};
  Vec3 up{0.0, 1.0, 0.0};
  double vertical_fov = 40.0;  // degrees
  double orbit_angle = 0.0;    // radians

  /// Camera on the +z side of the volume centre, far enough that the bounding
  /// sphere fills the vertical field of view, with the given elevation (radians).
  static Camera framing(const Volume& volume, double orbit_angle = 0.0, double elevation = 0.3);

  /// Effective eye position after applying orbit_angle.
  Vec3 orbit_eye() const;
};

enum class EssMode { none, block, distance, pdm };

EssMode parse_ess_mode(std::string_view name);
std::string_view to_string(EssMode mode) noexcept;

struct RenderSettings {
  int width = 256;
  int height = 256;
  double step = 0.5;  // in units of the smallest voxel spacing
  double ert_threshold = 0.98;
  EssMode ess = EssMode::none;
  bool ert_enabled = true;
  unsigned threads = 0;  // 0: PDM_THREADS or hardware concurrency
};

struct Framebuffer {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgba;  // row-major, top row first

  friend bool operator==(const Framebuffer&, const Framebuffer&) = default;
};

struct RenderStats {
  std::uint64_t rays = 0;              // rays that intersect the volume
  std::uint64_t samples_evaluated = 0; // interpolated, classified and composited
  std::uint64_t samples_skipped = 0;   // passed over by empty-space skipping
  std::uint64_t blocks_skipped = 0;    // sum over jumps of the cleared box width in blocks
  std::uint64_t skip_jumps = 0;        // number of empty-space jumps
  std::uint64_t ert_terminations = 0;
  double wall_time = 0.0;              // seconds

  void merge(const RenderStats& o) noexcept;
};

/// Acceleration input: nothing (none), an occupancy map (block) or a distance
/// map (distance: D, pdm: D').
using Acceleration =
    std::variant<std::monostate, std::reference_wrapper<const OccupancyMap>, std::reference_wrapper<const DistanceMap>>;

struct RenderResult {
  Framebuffer image;
  RenderStats stats;
};

/// Front-to-back emission-absorption ray casting on a fixed parametric sample
/// grid t_k = t_entry + k * step. Empty-space skipping changes which k are
/// evaluated, never where they are, so every ESS mode produces the same image
/// as `none` whenever the acceleration map is conservative.
RenderResult render(const Volume& volume, const TransferFunction& tf, const Camera& camera,
                    const RenderSettings& settings, const BlockGrid& grid, Acceleration accel);

// ---------------------------------------------------------------------------
// Lower-level pieces, exposed for testing.

/// A ray in voxel index space with its fixed sample grid.
struct SampledRay {
  Vec3 origin;     // index space
  Vec3 direction;  // index space, not normalised when spacing is anisotropic
  double t_entry = 0.0;
  double step = 0.0;
  std::uint64_t sample_count = 0;  // samples k in [0, sample_count)

  Vec3 position(std::uint64_t k) const noexcept {
    const double t = t_entry + static_cast<double>(k) * step;
    return origin + direction * t;
  }
};

/// Clips the ray to the sampling domain [0, dims-1]^3. nullopt on a miss.
std::optional<SampledRay> make_sampled_ray(Vec3 origin, Vec3 direction, const Dims& dims, double step);

/// Block containing sample position p (clamped to the volume).
BlockCoord block_of(Vec3 p, const Dims& dims, const BlockGrid& grid) noexcept;

/// Index of the next sample to process after sample k, which lies in block
/// `block`. With `halo` >= 0 every block within Chebyshev distance `halo` of
/// `block` is known to be empty, so the next sample is the first one at or
/// beyond the ray's exit from that box. halo < 0 means "occupied": returns k + 1.
/// Always returns a value > k.
std::uint64_t ess_advance(const SampledRay& ray, std::uint64_t k, BlockCoord block, int halo,
                          const Dims& dims, const BlockGrid& grid) noexcept;

/// Halo for the given mode and acceleration map at `block`, as used by
/// ess_advance: -1 when the block must be sampled.
int ess_halo(EssMode mode, const Acceleration& accel, const BlockGrid& grid, BlockCoord block) noexcept;

}  // namespace pdm
