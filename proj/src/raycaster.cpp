#include "pdm/raycaster.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "pdm/error.hpp"
#include "pdm/parallel.hpp"

namespace pdm {

double dot(Vec3 a, Vec3 b) noexcept { return a.x * b.x + a.y * b.y + a.z * b.z; }

Vec3 cross(Vec3 a, Vec3 b) noexcept {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

Vec3 normalize(Vec3 v) {
  const double len = std::sqrt(dot(v, v));
  if (!(len > 0.0)) throw Error(ErrorCode::invalid_argument, "cannot normalise a zero vector");
  return v * (1.0 / len);
}

Camera Camera::framing(const Volume& volume, double orbit_angle, double elevation) {
  const Dims& d = volume.dims();
  const auto& s = volume.spacing();
  const Vec3 extent{(d.x - 1) * s[0], (d.y - 1) * s[1], (d.z - 1) * s[2]};
  Camera cam;
  cam.look_at = extent * 0.5;
  const double radius = 0.5 * std::sqrt(dot(extent, extent));
  const double distance = radius / std::sin(cam.vertical_fov * std::numbers::pi / 360.0);
  cam.eye = cam.look_at + Vec3{0.0, std::sin(elevation), std::cos(elevation)} * distance;
  cam.orbit_angle = orbit_angle;
  return cam;
}

Vec3 Camera::orbit_eye() const {
  const double theta = std::fmod(orbit_angle, 2.0 * std::numbers::pi);
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const Vec3 rel = eye - look_at;
  return look_at + Vec3{rel.x * c + rel.z * s, rel.y, -rel.x * s + rel.z * c};
}

EssMode parse_ess_mode(std::string_view name) {
  if (name == "none") return EssMode::none;
  if (name == "block") return EssMode::block;
  if (name == "distance") return EssMode::distance;
  if (name == "pdm") return EssMode::pdm;
  throw Error(ErrorCode::invalid_argument, "unknown ESS mode '" + std::string(name) + "'");
}

std::string_view to_string(EssMode mode) noexcept {
  switch (mode) {
    case EssMode::none:
      return "none";
    case EssMode::block:
      return "block";
    case EssMode::distance:
      return "distance";
    case EssMode::pdm:
      return "pdm";
  }
  return "unknown";
}

void RenderStats::merge(const RenderStats& o) noexcept {
  rays += o.rays;
  samples_evaluated += o.samples_evaluated;
  samples_skipped += o.samples_skipped;
  blocks_skipped += o.blocks_skipped;
  skip_jumps += o.skip_jumps;
  ert_terminations += o.ert_terminations;
}

std::optional<SampledRay> make_sampled_ray(Vec3 origin, Vec3 direction, const Dims& dims, double step) {
  double t_near = 0.0;
  double t_far = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    const double lo = 0.0;
    const double hi = dims[a] - 1.0;
    const double o = origin[a];
    const double d = direction[a];
    if (d == 0.0) {
      if (o < lo || o > hi) return std::nullopt;
      continue;
    }
    double t0 = (lo - o) / d;
    double t1 = (hi - o) / d;
    if (t0 > t1) std::swap(t0, t1);
    t_near = std::max(t_near, t0);
    t_far = std::min(t_far, t1);
  }
  if (!(t_far >= t_near)) return std::nullopt;
  SampledRay ray{origin, direction, t_near, step, 0};
  ray.sample_count = static_cast<std::uint64_t>(std::floor((t_far - t_near) / step)) + 1;
  return ray;
}

namespace {

std::uint32_t clamp_index(double v, std::uint32_t n) noexcept {
  if (!(v > 0.0)) return 0;
  const double hi = n - 1.0;
  return static_cast<std::uint32_t>(v >= hi ? hi : v);
}

}  // namespace

BlockCoord block_of(Vec3 p, const Dims& dims, const BlockGrid& grid) noexcept {
  const std::uint32_t b = grid.block_size();
  return {clamp_index(p.x, dims.x) / b, clamp_index(p.y, dims.y) / b, clamp_index(p.z, dims.z) / b};
}

std::uint64_t ess_advance(const SampledRay& ray, std::uint64_t k, BlockCoord block, int halo, const Dims& dims,
                          const BlockGrid& grid) noexcept {
  if (halo < 0) return k + 1;
  const Dims& bd = grid.block_dims();
  const auto b = static_cast<double>(grid.block_size());
  const std::uint32_t c[3] = {block.x, block.y, block.z};
  std::uint32_t lo[3];
  std::uint32_t hi[3];
  double t_exit = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    lo[a] = c[a] > static_cast<std::uint32_t>(halo) ? c[a] - halo : 0;
    hi[a] = std::min<std::uint64_t>(std::uint64_t{c[a]} + halo, bd[a] - 1);
    const double d = ray.direction[a];
    const double o = ray.origin[a];
    // Positions p with floor(p / b) in [lo, hi] form the half-open slab [lo*b, (hi+1)*b).
    if (d > 0.0) {
      t_exit = std::min(t_exit, ((hi[a] + 1) * b - o) / d);
    } else if (d < 0.0) {
      t_exit = std::min(t_exit, (lo[a] * b - o) / d);
    }
  }
  std::uint64_t next = ray.sample_count;
  const double steps = std::ceil((t_exit - ray.t_entry) / ray.step);
  if (steps < static_cast<double>(ray.sample_count)) next = steps > 0.0 ? static_cast<std::uint64_t>(steps) : 0;
  next = std::max(next, k + 1);

  // Guard against rounding: every sample before `next` must still be inside the
  // cleared box. Coordinates are monotone in k, so checking the last one suffices.
  auto inside = [&](std::uint64_t j) {
    const BlockCoord q = block_of(ray.position(j), dims, grid);
    return q.x >= lo[0] && q.x <= hi[0] && q.y >= lo[1] && q.y <= hi[1] && q.z >= lo[2] && q.z <= hi[2];
  };
  while (next - 1 > k && !inside(next - 1)) --next;
  return next;
}

int ess_halo(EssMode mode, const Acceleration& accel, const BlockGrid& grid, BlockCoord block) noexcept {
  const std::size_t idx = grid.index(block);
  switch (mode) {
    case EssMode::none:
      return -1;
    case EssMode::block:
      return std::get<1>(accel).get().occupied[idx] != 0 ? -1 : 0;
    case EssMode::distance:
    case EssMode::pdm: {
      const int d = std::get<2>(accel).get().dist[idx];
      return d - 1;
    }
  }
  return -1;
}

namespace {

void check_accel(EssMode mode, const Acceleration& accel, const BlockGrid& grid) {
  auto mismatch = [&](const char* need) {
    throw Error(ErrorCode::accel_mismatch,
                std::string("ESS mode '") + std::string(to_string(mode)) + "' requires " + need);
  };
  switch (mode) {
    case EssMode::none:
      if (accel.index() != 0) mismatch("no acceleration map");
      return;
    case EssMode::block:
      if (accel.index() != 1) mismatch("an occupancy map");
      if (!(std::get<1>(accel).get().bdims == grid.block_dims())) mismatch("a map matching the block grid");
      return;
    case EssMode::distance:
    case EssMode::pdm:
      if (accel.index() != 2) mismatch("a distance map");
      if (!(std::get<2>(accel).get().bdims == grid.block_dims())) mismatch("a map matching the block grid");
      return;
  }
}

class Sampler {
 public:
  explicit Sampler(const Volume& v) : d_(v.dims()), data_(v.voxels().data()) {}

  // Trilinear interpolation at p (clamped to the sampling domain).
  double operator()(Vec3 p) const noexcept {
    const std::uint32_t x0 = clamp_index(p.x, d_.x);
    const std::uint32_t y0 = clamp_index(p.y, d_.y);
    const std::uint32_t z0 = clamp_index(p.z, d_.z);
    const double fx = std::clamp(p.x - x0, 0.0, 1.0);
    const double fy = std::clamp(p.y - y0, 0.0, 1.0);
    const double fz = std::clamp(p.z - z0, 0.0, 1.0);
    const std::size_t sx = x0 + 1 < d_.x ? 1 : 0;
    const std::size_t sy = y0 + 1 < d_.y ? d_.x : 0;
    const std::size_t sz = z0 + 1 < d_.z ? std::size_t{d_.x} * d_.y : 0;
    const std::uint16_t* b = data_ + d_.index(x0, y0, z0);
    auto lerp = [](double a, double c, double t) { return a + t * (c - a); };
    const double c00 = lerp(b[0], b[sx], fx);
    const double c10 = lerp(b[sy], b[sy + sx], fx);
    const double c01 = lerp(b[sz], b[sz + sx], fx);
    const double c11 = lerp(b[sz + sy], b[sz + sy + sx], fx);
    return lerp(lerp(c00, c10, fy), lerp(c01, c11, fy), fz);
  }

 private:
  Dims d_;
  const std::uint16_t* data_;
};

std::uint8_t to_byte(double v) noexcept {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

RenderResult render(const Volume& volume, const TransferFunction& tf, const Camera& camera,
                    const RenderSettings& settings, const BlockGrid& grid, Acceleration accel) {
  if (settings.width <= 0 || settings.height <= 0) {
    throw Error(ErrorCode::invalid_argument, "framebuffer size must be positive");
  }
  if (!(settings.step > 0.0)) throw Error(ErrorCode::invalid_argument, "step must be > 0");
  if (!(settings.ert_threshold > 0.0 && settings.ert_threshold <= 1.0)) {
    throw Error(ErrorCode::invalid_argument, "ERT threshold must be in (0, 1]");
  }
  if (!(camera.vertical_fov > 0.0 && camera.vertical_fov < 180.0)) {
    throw Error(ErrorCode::invalid_argument, "vertical fov must be in (0, 180) degrees");
  }
  if (tf.size() <= volume.rho_max()) throw Error(ErrorCode::invalid_argument, "TF does not cover the volume's intensity range");
  if (!(grid.volume_dims() == volume.dims())) throw Error(ErrorCode::invalid_argument, "grid does not match volume");
  check_accel(settings.ess, accel, grid);

  const auto start = std::chrono::steady_clock::now();
  const Dims& dims = volume.dims();
  const auto& sp = volume.spacing();
  const Vec3 eye = camera.orbit_eye();
  const Vec3 forward = normalize(camera.look_at - eye);
  const Vec3 right = normalize(cross(forward, camera.up));
  const Vec3 up = cross(right, forward);
  const double tan_half = std::tan(camera.vertical_fov * std::numbers::pi / 360.0);
  const double aspect = static_cast<double>(settings.width) / settings.height;
  const double step = settings.step * std::min({sp[0], sp[1], sp[2]});
  const Vec3 eye_idx{eye.x / sp[0], eye.y / sp[1], eye.z / sp[2]};
  const double lut_max = static_cast<double>(tf.size() - 1);
  const Sampler sample(volume);

  RenderResult out;
  out.image = {settings.width, settings.height,
               std::vector<std::uint8_t>(std::size_t{4} * settings.width * settings.height, 0)};
  const unsigned threads = resolve_threads(settings.threads);
  std::vector<RenderStats> per_worker(threads);

  parallel_for_interleaved(static_cast<std::size_t>(settings.height), threads, [&](unsigned w, std::size_t row) {
    RenderStats& st = per_worker[w];
    const double v = (1.0 - 2.0 * (row + 0.5) / settings.height) * tan_half;
    for (int col = 0; col < settings.width; ++col) {
      const double u = (2.0 * (col + 0.5) / settings.width - 1.0) * tan_half * aspect;
      const Vec3 dir = normalize(forward + right * u + up * v);
      const Vec3 dir_idx{dir.x / sp[0], dir.y / sp[1], dir.z / sp[2]};
      const auto ray = make_sampled_ray(eye_idx, dir_idx, dims, step);
      double cr = 0.0, cg = 0.0, cb = 0.0, ca = 0.0;
      if (ray) {
        ++st.rays;
        std::uint64_t k = 0;
        while (k < ray->sample_count) {
          const Vec3 p = ray->position(k);
          if (settings.ess != EssMode::none) {
            const BlockCoord blk = block_of(p, dims, grid);
            const int halo = ess_halo(settings.ess, accel, grid, blk);
            if (halo >= 0) {
              const std::uint64_t next = ess_advance(*ray, k, blk, halo, dims, grid);
              st.samples_skipped += next - k;
              st.blocks_skipped += 2 * static_cast<std::uint64_t>(halo) + 1;
              ++st.skip_jumps;
              k = next;
              continue;
            }
          }
          ++st.samples_evaluated;
          const double value = sample(p);
          const Rgba& c = tf[static_cast<std::size_t>(std::lround(std::min(value, lut_max)))];
          const double weight = (1.0 - ca) * c.a;
          cr += weight * c.r;
          cg += weight * c.g;
          cb += weight * c.b;
          ca += weight;
          if (settings.ert_enabled && ca >= settings.ert_threshold) {
            ++st.ert_terminations;
            break;
          }
          ++k;
        }
      }
      std::uint8_t* px = out.image.rgba.data() + (row * settings.width + col) * 4;
      px[0] = to_byte(cr);
      px[1] = to_byte(cg);
      px[2] = to_byte(cb);
      px[3] = to_byte(ca);
    }
  });

  for (const auto& st : per_worker) out.stats.merge(st);
  out.stats.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace pdm
