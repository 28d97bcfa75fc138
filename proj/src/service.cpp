#include <algorithm>
#include <chrono>
#include <cmath>

#include "pdm/error.hpp"
#include "pdm/image.hpp"
#include "pdm/parallel.hpp"
#include "pdm/service.hpp"

namespace pdm {

using nlohmann::json;

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

PartitionScheme make_scheme(SchemeKind kind, std::size_t n, const Volume& v) {
  return kind == SchemeKind::uniform ? scheme_uniform(n, v.bits()) : scheme_with_min_special(n, v.bits(), v.rho_min());
}

}  // namespace

std::string map_checksum(const DistanceMap& map) { return checksum(map.dist); }

TfState::TfState(const VolumeSession& session, TransferFunction tf, OccupancyMode mode)
    : tf_(std::move(tf)), mode_(mode) {
  auto t0 = std::chrono::steady_clock::now();
  selection_ = select_partitions(tf_, session.scheme);
  select_ms_ = ms_since(t0);
  t0 = std::chrono::steady_clock::now();
  dprime_ = combine(session.pdms, selection_, CombineMode::chunked);
  combine_ms_ = ms_since(t0);
}

const OccupancyMap& TfState::occupancy(const VolumeSession& session) const {
  std::call_once(occ_once_, [&] { occ_ = occupancy_for_tf(session.volume, session.grid, tf_, mode_, &session.ranges); });
  return occ_;
}

const DistanceMap& TfState::distance(const VolumeSession& session) const {
  std::call_once(dist_once_, [&] { dist_ = distance_transform(occupancy(session)); });
  return dist_;
}

FrameRequest parse_frame_request(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::parse, "frame request must be a JSON object");
  FrameRequest r;
  try {
    if (j.contains("angle")) r.angle = j.at("angle").get<double>();
    if (j.contains("w")) r.width = j.at("w").get<int>();
    if (j.contains("h")) r.height = j.at("h").get<int>();
    if (j.contains("ess")) r.ess = parse_ess_mode(j.at("ess").get<std::string>());
    if (j.contains("step")) r.step = j.at("step").get<double>();
    if (j.contains("ert")) r.ert = j.at("ert").get<bool>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, std::string("invalid frame request: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::parse, e.what());
  }
  if (!std::isfinite(r.angle)) throw Error(ErrorCode::parse, "angle must be finite");
  if (r.width <= 0 || r.height <= 0) throw Error(ErrorCode::parse, "w and h must be positive");
  if (!(r.step > 0.0) || !std::isfinite(r.step)) throw Error(ErrorCode::parse, "step must be > 0");
  return r;
}

RenderService::RenderService(ServiceConfig config) : config_(config) {}

json RenderService::load_volume(const json& spec) {
  Volume volume;
  std::string label;
  ServiceConfig cfg = config_;
  try {
    if (spec.contains("path")) {
      const auto data = spec.at("path").get<std::string>();
      const auto meta = spec.contains("meta") ? spec.at("meta").get<std::string>() : data + ".json";
      volume = load_raw(data, meta);
      label = std::filesystem::path(data).filename().string();
    } else if (spec.contains("synth")) {
      const SynthKind kind = parse_synth_kind(spec.at("synth").get<std::string>());
      Dims dims{64, 64, 64};
      if (spec.contains("dims")) {
        const auto& d = spec.at("dims");
        dims = {d.at(0).get<std::uint32_t>(), d.at(1).get<std::uint32_t>(), d.at(2).get<std::uint32_t>()};
      }
      const auto seed = spec.value("seed", std::uint64_t{1});
      volume = synth_volume(kind, dims, seed);
      label = std::string(to_string(kind));
    } else {
      throw Error(ErrorCode::parse, "volume spec needs \"path\" or \"synth\"");
    }
    if (spec.contains("partitions")) cfg.partitions = spec.at("partitions").get<std::size_t>();
    if (spec.contains("scheme")) cfg.scheme = parse_scheme_kind(spec.at("scheme").get<std::string>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, std::string("invalid volume spec: ") + e.what());
  }

  install(build_session(std::move(volume), std::move(label), cfg));
  return info();
}

void RenderService::load_volume(Volume volume, std::string label) {
  install(build_session(std::move(volume), std::move(label), config_));
}

std::shared_ptr<const VolumeSession> RenderService::build_session(Volume volume, std::string label,
                                                                  const ServiceConfig& cfg) const {
  auto session = std::make_shared<VolumeSession>();
  session->label = std::move(label);
  session->scheme_kind = cfg.scheme;
  session->grid = BlockGrid(volume.dims(), cfg.block_size);
  const unsigned threads = resolve_threads(cfg.threads);
  session->ranges = block_min_max(volume, session->grid, threads);
  session->scheme = make_scheme(cfg.scheme, cfg.partitions, volume);
  session->pdms = build_pdm_set(volume, session->grid, session->scheme, cfg.occupancy, threads, &session->ranges);
  session->histogram = histogram_256(volume);
  session->volume = std::move(volume);
  return session;
}

void RenderService::install(std::shared_ptr<const VolumeSession> session) {
  std::lock_guard writer(writer_mu_);
  auto tf = std::make_shared<TfState>(*session, tf_archetype(TfArchetype::tf1, session->volume.bits()),
                                      config_.occupancy);
  tf->set_version(next_tf_version_++);
  std::lock_guard lock(state_mu_);
  session_ = std::move(session);
  tf_ = std::move(tf);
}

RenderService::Snapshot RenderService::snapshot() const {
  std::lock_guard lock(state_mu_);
  if (!session_) throw Error(ErrorCode::no_session, "no volume loaded");
  return {session_, tf_};
}

json RenderService::info() const {
  const Snapshot snap = snapshot();
  const VolumeSession& s = *snap.session;
  const Dims& d = s.volume.dims();
  json parts = json::array();
  for (const auto& p : s.scheme.partitions()) parts.push_back({p.lo, p.hi});
  return {{"label", s.label},
          {"dims", {d.x, d.y, d.z}},
          {"bits", s.volume.bits()},
          {"intensity_range", {s.volume.rho_min(), s.volume.rho_max()}},
          {"block_size", s.grid.block_size()},
          {"n", s.scheme.size()},
          {"scheme", std::string(to_string(s.scheme_kind))},
          {"partitions", std::move(parts)},
          {"pdm_memory_bytes", s.pdms.memory_bytes()},
          {"one_time_init_ms", s.pdms.init_ms()},
          {"histogram", s.histogram},
          {"tf_version", snap.tf->version()}};
}

json RenderService::post_tf(const json& tf_json) {
  std::lock_guard writer(writer_mu_);
  const Snapshot snap = snapshot();
  TransferFunction tf = tf_from_json(tf_json);
  if (tf.size() != snap.session->volume.lut_size()) {
    throw Error(ErrorCode::invalid_argument, "TF bit depth does not match the loaded volume");
  }
  auto state = std::make_shared<TfState>(*snap.session, std::move(tf), config_.occupancy);
  state->set_version(next_tf_version_++);
  {
    std::lock_guard lock(state_mu_);
    tf_ = state;
  }
  const auto& dp = state->dprime().dist;
  const auto occupied = static_cast<double>(std::count(dp.begin(), dp.end(), std::uint8_t{0}));
  return {{"selection", state->selection().selected},
          {"select_ms", state->select_ms()},
          {"combine_ms", state->combine_ms()},
          {"dprime_nonzero_fraction", dp.empty() ? 0.0 : occupied / static_cast<double>(dp.size())},
          {"dprime_checksum", map_checksum(state->dprime())},
          {"tf_version", state->version()}};
}

FrameResponse RenderService::render_frame(const FrameRequest& request) {
  if (static_cast<std::size_t>(request.width) * request.height > config_.max_pixels) {
    throw Error(ErrorCode::invalid_argument, "requested frame is too large");
  }
  const Snapshot snap = snapshot();
  const VolumeSession& s = *snap.session;
  const TfState& t = *snap.tf;

  RenderSettings rs;
  rs.width = request.width;
  rs.height = request.height;
  rs.step = request.step;
  rs.ess = request.ess;
  rs.ert_enabled = request.ert;
  rs.threads = config_.threads;
  Acceleration accel;
  switch (request.ess) {
    case EssMode::none:
      break;
    case EssMode::block:
      accel = std::cref(t.occupancy(s));
      break;
    case EssMode::distance:
      accel = std::cref(t.distance(s));
      break;
    case EssMode::pdm:
      accel = std::cref(t.dprime());
      break;
  }
  const Camera cam = Camera::framing(s.volume, request.angle);
  RenderResult r = render(s.volume, t.tf(), cam, rs, s.grid, accel);

  FrameResponse out;
  {
    std::lock_guard lock(frame_mu_);
    out.frame_id = next_frame_id_++;
  }
  out.tf_version = t.version();
  out.png = encode_png(r.image);
  out.image = std::move(r.image);
  out.stats = r.stats;
  out.select_ms = t.select_ms();
  out.combine_ms = t.combine_ms();
  return out;
}

}  // namespace pdm
