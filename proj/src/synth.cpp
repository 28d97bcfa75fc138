// Desk-scale stand-ins for CT/micro-CT datasets. All generators are pure
// functions of (kind, dims, seed); randomness comes from a splitmix64 hash so
// output is identical across platforms and standard libraries.

#include <algorithm>
#include <cmath>
#include <string>

#include "pdm/error.hpp"
#include "pdm/volume.hpp"

namespace pdm {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(splitmix64(seed ^ 0x5EEDull)) {}
  double uniform() {
    state_ = splitmix64(state_);
    return static_cast<double>(state_ >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::uint64_t state_;
};

// Lattice value noise in [0, 1], smoothstep-interpolated between lattice points.
class ValueNoise {
 public:
  ValueNoise(std::uint64_t seed, double cell) : seed_(seed), cell_(cell) {}

  double operator()(double x, double y, double z) const {
    const double fx = x / cell_;
    const double fy = y / cell_;
    const double fz = z / cell_;
    const auto ix = static_cast<std::int64_t>(std::floor(fx));
    const auto iy = static_cast<std::int64_t>(std::floor(fy));
    const auto iz = static_cast<std::int64_t>(std::floor(fz));
    const double tx = smooth(fx - ix);
    const double ty = smooth(fy - iy);
    const double tz = smooth(fz - iz);
    double acc = 0.0;
    for (int c = 0; c < 8; ++c) {
      const int dx = c & 1;
      const int dy = (c >> 1) & 1;
      const int dz = (c >> 2) & 1;
      const double w = (dx ? tx : 1 - tx) * (dy ? ty : 1 - ty) * (dz ? tz : 1 - tz);
      acc += w * lattice(ix + dx, iy + dy, iz + dz);
    }
    return acc;
  }

 private:
  static double smooth(double t) { return t * t * (3.0 - 2.0 * t); }
  double lattice(std::int64_t i, std::int64_t j, std::int64_t k) const {
    std::uint64_t h = splitmix64(seed_ ^ static_cast<std::uint64_t>(i) * 0x8CB92BA72F3D8DD7ull);
    h = splitmix64(h ^ static_cast<std::uint64_t>(j) * 0xA24BAED4963EE407ull);
    h = splitmix64(h ^ static_cast<std::uint64_t>(k) * 0x9FB21C651E98DF25ull);
    return static_cast<double>(h >> 11) * 0x1.0p-53;
  }

  std::uint64_t seed_;
  double cell_;
};

std::uint16_t to_u8(double v) { return static_cast<std::uint16_t>(std::clamp(std::lround(v), 0L, 255L)); }

// Linear falloff from `peak` at distance 0 of a surface to 0 at `width`.
double ramp(double distance, double width) { return std::clamp(1.0 - distance / width, 0.0, 1.0); }

template <typename Fn>
std::vector<std::uint16_t> fill(Dims dims, Fn&& fn) {
  std::vector<std::uint16_t> v(dims.count());
  for (std::uint32_t k = 0; k < dims.z; ++k) {
    for (std::uint32_t j = 0; j < dims.y; ++j) {
      for (std::uint32_t i = 0; i < dims.x; ++i) v[dims.index(i, j, k)] = fn(i + 0.0, j + 0.0, k + 0.0);
    }
  }
  return v;
}

double min_extent(Dims d) { return std::min({d.x, d.y, d.z}) * 1.0; }

std::vector<std::uint16_t> sphere_shell(Dims d, std::uint64_t seed) {
  Rng rng(seed);
  const double m = min_extent(d);
  const double cx = d.x * 0.5 + rng.uniform(-0.05, 0.05) * m;
  const double cy = d.y * 0.5 + rng.uniform(-0.05, 0.05) * m;
  const double cz = d.z * 0.5 + rng.uniform(-0.05, 0.05) * m;
  const double r_mid = m * rng.uniform(0.30, 0.36);
  const double half_thickness = m * rng.uniform(0.04, 0.07);
  const double r_core = m * rng.uniform(0.08, 0.14);
  const double edge = std::max(1.5, m / 40.0);
  const ValueNoise noise(seed * 31 + 7, std::max(4.0, m / 10.0));
  return fill(d, [&](double x, double y, double z) {
    const double r = std::sqrt((x - cx) * (x - cx) + (y - cy) * (y - cy) + (z - cz) * (z - cz));
    const double shell = ramp(std::max(0.0, std::abs(r - r_mid) - half_thickness), edge);
    const double core = ramp(std::max(0.0, r - r_core), edge);
    double v = std::max(shell * (170.0 + 80.0 * noise(x, y, z)), core * (60.0 + 30.0 * noise(z, x, y)));
    return to_u8(v);
  });
}

std::vector<std::uint16_t> two_spheres(Dims d, std::uint64_t seed) {
  Rng rng(seed);
  const double m = min_extent(d);
  struct Ball {
    double x, y, z, r, value;
  };
  Ball balls[2];
  for (int b = 0; b < 2; ++b) {
    const double side = b == 0 ? -1.0 : 1.0;
    balls[b] = {d.x * (0.5 + side * rng.uniform(0.15, 0.22)), d.y * rng.uniform(0.35, 0.65),
                d.z * rng.uniform(0.35, 0.65), m * rng.uniform(0.16, 0.24), b == 0 ? 110.0 : 220.0};
  }
  const double edge = std::max(2.0, m / 24.0);
  const ValueNoise noise(seed * 17 + 3, std::max(4.0, m / 12.0));
  return fill(d, [&](double x, double y, double z) {
    double v = 12.0 + 6.0 * noise(x, y, z);
    for (const Ball& b : balls) {
      const double r = std::sqrt((x - b.x) * (x - b.x) + (y - b.y) * (y - b.y) + (z - b.z) * (z - b.z));
      v = std::max(v, ramp(std::max(0.0, r - b.r), edge) * (b.value + 25.0 * noise(z, y, x)));
    }
    return to_u8(v);
  });
}

std::vector<std::uint16_t> noise_field(Dims d, std::uint64_t seed) {
  const double m = min_extent(d);
  const ValueNoise coarse(seed * 13 + 1, std::max(4.0, m / 4.0));
  const ValueNoise fine(seed * 29 + 5, std::max(2.0, m / 16.0));
  return fill(d, [&](double x, double y, double z) {
    const double n = 0.75 * coarse(x, y, z) + 0.25 * fine(x, y, z);
    // stretch the centre-heavy distribution so both ends of [0,255] occur
    return to_u8(std::clamp((n - 0.2) / 0.6, 0.0, 1.0) * 255.0);
  });
}

std::vector<std::uint16_t> background_dominant(Dims d, std::uint64_t seed) {
  Rng rng(seed);
  const double m = min_extent(d);
  struct Blob {
    double x, y, z, rx, ry, rz, peak;
  };
  const int count = 3 + static_cast<int>(rng.uniform() * 3.0);
  std::vector<Blob> blobs;
  for (int b = 0; b < count; ++b) {
    blobs.push_back({d.x * rng.uniform(0.25, 0.75), d.y * rng.uniform(0.25, 0.75), d.z * rng.uniform(0.25, 0.75),
                     m * rng.uniform(0.08, 0.16), m * rng.uniform(0.08, 0.16), m * rng.uniform(0.08, 0.16),
                     rng.uniform(120.0, 250.0)});
  }
  return fill(d, [&](double x, double y, double z) {
    double v = 0.0;
    for (const Blob& b : blobs) {
      const double qx = (x - b.x) / b.rx;
      const double qy = (y - b.y) / b.ry;
      const double qz = (z - b.z) / b.rz;
      const double q = std::sqrt(qx * qx + qy * qy + qz * qz);
      if (q < 1.0) v = std::max(v, 1.0 + (b.peak - 1.0) * (1.0 - q));
    }
    return to_u8(v);
  });
}

}  // namespace

SynthKind parse_synth_kind(std::string_view name) {
  if (name == "sphere_shell") return SynthKind::sphere_shell;
  if (name == "two_spheres") return SynthKind::two_spheres;
  if (name == "noise") return SynthKind::noise;
  if (name == "background_dominant") return SynthKind::background_dominant;
  throw Error(ErrorCode::invalid_argument, "unknown synthetic volume kind '" + std::string(name) + "'");
}

std::string_view to_string(SynthKind kind) noexcept {
  switch (kind) {
    case SynthKind::sphere_shell:
      return "sphere_shell";
    case SynthKind::two_spheres:
      return "two_spheres";
    case SynthKind::noise:
      return "noise";
    case SynthKind::background_dominant:
      return "background_dominant";
  }
  return "unknown";
}

Volume synth_volume(SynthKind kind, Dims dims, std::uint64_t seed) {
  if (dims.x < 8 || dims.y < 8 || dims.z < 8) {
    throw Error(ErrorCode::invalid_argument, "synthetic volumes need every dimension >= 8");
  }
  std::vector<std::uint16_t> voxels;
  switch (kind) {
    case SynthKind::sphere_shell:
      voxels = sphere_shell(dims, seed);
      break;
    case SynthKind::two_spheres:
      voxels = two_spheres(dims, seed);
      break;
    case SynthKind::noise:
      voxels = noise_field(dims, seed);
      break;
    case SynthKind::background_dominant:
      voxels = background_dominant(dims, seed);
      break;
  }
  return make_volume(dims, 8, std::move(voxels));
}

}  // namespace pdm
