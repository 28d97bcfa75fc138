#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pdm/acceleration.hpp"
#include "pdm/raycaster.hpp"
#include "pdm/transfer_function.hpp"
#include "pdm/volume.hpp"

namespace pdm {

/// Either a RAW file pair or a synthetic volume.
struct VolumeSpec {
  std::optional<std::filesystem::path> data;
  std::optional<std::filesystem::path> meta;
  SynthKind kind = SynthKind::sphere_shell;
  Dims dims{128, 128, 128};
  std::uint64_t seed = 1;

  std::string label() const;
};

Volume load_volume(const VolumeSpec& spec);

struct NamedTf {
  std::string name;
  TransferFunction tf;
};

struct RotationSpec {
  int revolutions = 2;
  int frames = 8;
  double duration_s = 10.0;  // nominal period the frames are spread over
};

struct BenchScenario {
  VolumeSpec volume;
  std::vector<NamedTf> tfs;
  std::vector<std::size_t> partition_counts{16, 32, 64, 128, 256};
  SchemeKind scheme = SchemeKind::uniform;
  OccupancyMode occupancy = OccupancyMode::range_apron;
  std::uint32_t block_size = kDefaultBlockSize;
  RenderSettings render;
  RotationSpec rotation;
  int repetitions = 5;  // timed repetitions after one discarded warm-up
  bool run_rotation = true;

  /// Throws Error{invalid_argument} on empty TF/partition lists or frames < 1.
  void validate() const;
};

/// TF1..TF4 archetypes at the given bit depth.
std::vector<NamedTf> default_tfs(int bits);

struct InitRow {
  std::size_t partitions = 0;
  double one_time_init_ms = 0.0;
  std::size_t memory_bytes = 0;
};

struct UpdateRow {
  std::string tf;
  std::size_t partitions = 0;
  std::size_t selected = 0;
  std::size_t combine_passes = 0;
  double update_ms_baseline = 0.0;
  double update_ms_pdm = 0.0;
  double speedup_ratio = 0.0;
  bool slower_than_baseline = false;  // flagged, never an error
};

struct FrameRecord {
  std::string tf;
  EssMode mode = EssMode::none;
  std::size_t partitions = 0;  // 0 unless mode == pdm
  SchemeKind scheme = SchemeKind::uniform;
  int frame = 0;
  double angle = 0.0;
  double time_s = 0.0;  // position on the nominal rotation timeline
  RenderStats stats;
};

struct EnvironmentRecord {
  std::string cpu;
  unsigned threads = 1;
  std::string simd;
  std::string compiler;
  std::string build;
};

struct BenchReport {
  std::string dataset;
  Dims dims;
  SchemeKind scheme = SchemeKind::uniform;
  OccupancyMode occupancy = OccupancyMode::range_apron;
  std::vector<std::size_t> partition_counts;
  std::vector<InitRow> init;
  std::vector<UpdateRow> updates;
  std::vector<FrameRecord> frames;
  EnvironmentRecord environment;
};

EnvironmentRecord capture_environment(unsigned threads);

/// Median of `repetitions` timed runs (after one warm-up) of `fn`, in ms.
double median_ms(int repetitions, const std::function<void()>& fn);

/// One-time PDM build per n and, per TF, the baseline full
/// recompute against select + combine.
void run_update_bench(const BenchScenario& scenario, const Volume& volume, BenchReport& report);

/// Orbit renders over the rotation for every ESS mode and partition count,
/// plus the uniform vs min-special comparison at 32 partitions.
void run_rotation_bench(const BenchScenario& scenario, const Volume& volume, BenchReport& report);

BenchReport run_bench(const BenchScenario& scenario);

nlohmann::json report_to_json(const BenchReport& report);

/// Flat table: dataset,size,computation_type,tf,no_ess,block_ess,distance_map,pdm_<n>...
std::string report_to_csv(const BenchReport& report);
std::string csv_header(const std::vector<std::size_t>& partition_counts);

nlohmann::json stats_to_json(const RenderStats& stats);

}  // namespace pdm
