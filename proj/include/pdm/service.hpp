#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pdm/acceleration.hpp"
#include "pdm/raycaster.hpp"
#include "pdm/transfer_function.hpp"
#include "pdm/volume.hpp"

namespace pdm {

struct ServiceConfig {
  std::size_t partitions = 64;
  SchemeKind scheme = SchemeKind::uniform;
  OccupancyMode occupancy = OccupancyMode::range_apron;
  std::uint32_t block_size = kDefaultBlockSize;
  unsigned threads = 0;
  std::size_t max_pixels = 2048 * 2048;
};

/// Volume-dependent state, immutable once loaded.
struct VolumeSession {
  std::string label;
  Volume volume;
  BlockGrid grid;
  std::vector<BlockRange> ranges;
  SchemeKind scheme_kind = SchemeKind::uniform;
  PartitionScheme scheme;
  PdmSet pdms;
  std::vector<std::uint64_t> histogram;
};

/// TF-dependent state. tf, selection and dprime always belong together;
/// the occupancy map and D for the baseline modes are derived on first use.
class TfState {
 public:
  TfState(const VolumeSession& session, TransferFunction tf, OccupancyMode mode);

  const TransferFunction& tf() const noexcept { return tf_; }
  const PartitionSelection& selection() const noexcept { return selection_; }
  const DistanceMap& dprime() const noexcept { return dprime_; }
  double select_ms() const noexcept { return select_ms_; }
  double combine_ms() const noexcept { return combine_ms_; }
  std::uint64_t version() const noexcept { return version_; }
  void set_version(std::uint64_t v) noexcept { version_ = v; }

  const OccupancyMap& occupancy(const VolumeSession& session) const;
  const DistanceMap& distance(const VolumeSession& session) const;

 private:
  TransferFunction tf_;
  OccupancyMode mode_;
  PartitionSelection selection_;
  DistanceMap dprime_;
  double select_ms_ = 0.0;
  double combine_ms_ = 0.0;
  std::uint64_t version_ = 0;

  mutable std::once_flag occ_once_;
  mutable std::once_flag dist_once_;
  mutable OccupancyMap occ_;
  mutable DistanceMap dist_;
};

struct FrameRequest {
  double angle = 0.0;
  int width = 256;
  int height = 256;
  EssMode ess = EssMode::pdm;
  double step = 0.5;
  bool ert = true;
};

/// Parses {angle, w, h, ess, step, ert}; all fields optional. Throws Error{parse}.
FrameRequest parse_frame_request(const nlohmann::json& j);

struct FrameResponse {
  std::uint64_t frame_id = 0;
  std::uint64_t tf_version = 0;
  Framebuffer image;
  std::vector<std::uint8_t> png;
  RenderStats stats;
  double select_ms = 0.0;
  double combine_ms = 0.0;
};

/// Live session behind the HTTP/WebSocket endpoints. TF updates serialise
/// through one writer; renders take a snapshot of (volume, tf, D') and never
/// observe a half-applied update.
class RenderService {
 public:
  explicit RenderService(ServiceConfig config = {});

  /// {"path": "...", "meta": "..."} or {"synth": kind, "dims": [x,y,z], "seed": s};
  /// optional "partitions" and "scheme" override the service defaults.
  nlohmann::json load_volume(const nlohmann::json& spec);
  void load_volume(Volume volume, std::string label);

  /// dims, bits, n, scheme, 256-bin histogram. Throws Error{no_session}.
  nlohmann::json info() const;

  /// Replaces the TF and recomputes S and D'. Malformed input throws
  /// Error{parse}/Error{invalid_argument} and leaves the session unchanged.
  nlohmann::json post_tf(const nlohmann::json& tf_json);

  FrameResponse render_frame(const FrameRequest& request);

  struct Snapshot {
    std::shared_ptr<const VolumeSession> session;
    std::shared_ptr<const TfState> tf;
  };
  /// Throws Error{no_session} before a volume is loaded.
  Snapshot snapshot() const;

  const ServiceConfig& config() const noexcept { return config_; }

 private:
  std::shared_ptr<const VolumeSession> build_session(Volume volume, std::string label,
                                                     const ServiceConfig& cfg) const;
  void install(std::shared_ptr<const VolumeSession> session);

  ServiceConfig config_;
  mutable std::mutex state_mu_;  // guards the two pointers below
  std::shared_ptr<const VolumeSession> session_;
  std::shared_ptr<const TfState> tf_;
  std::mutex writer_mu_;  // serialises volume loads and TF posts
  std::uint64_t next_tf_version_ = 1;
  std::mutex frame_mu_;
  std::uint64_t next_frame_id_ = 1;
};

/// Stable digest of a distance map, for comparing D' across requests.
std::string map_checksum(const DistanceMap& map);

/// HTTP + WebSocket front end on one port. Endpoints:
///   GET /api/info, POST /api/tf, POST /api/volume,
///   GET /api/frame?angle&w&h&ess&step (PNG body),
///   WebSocket /api/stream (JSON request -> JSON header + binary PNG),
///   static files from `static_dir` when set.
class HttpServer {
 public:
  HttpServer(RenderService& service, std::string host, std::uint16_t port,
             std::optional<std::filesystem::path> static_dir = std::nullopt);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds and starts accepting. Throws Error{io} when the address is in use.
  void start();
  void stop();
  std::uint16_t port() const noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace pdm
