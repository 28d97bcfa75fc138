#include "pdm/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "pdm/error.hpp"
#include "pdm/parallel.hpp"
#include "pdm/simd/kernels.hpp"

namespace pdm {

using nlohmann::json;

std::string VolumeSpec::label() const {
  if (data) return data->filename().string();
  std::ostringstream os;
  os << to_string(kind) << '_' << dims.x << 'x' << dims.y << 'x' << dims.z << "_s" << seed;
  return os.str();
}

Volume load_volume(const VolumeSpec& spec) {
  if (spec.data) {
    if (!spec.meta) throw Error(ErrorCode::invalid_argument, "a RAW volume needs a meta file");
    return load_raw(*spec.data, *spec.meta);
  }
  return synth_volume(spec.kind, spec.dims, spec.seed);
}

void BenchScenario::validate() const {
  if (tfs.empty()) throw Error(ErrorCode::invalid_argument, "scenario needs at least one TF");
  if (partition_counts.empty()) throw Error(ErrorCode::invalid_argument, "scenario needs partition counts");
  if (rotation.frames < 1) throw Error(ErrorCode::invalid_argument, "rotation needs at least one frame");
  if (repetitions < 1) throw Error(ErrorCode::invalid_argument, "repetitions must be >= 1");
}

std::vector<NamedTf> default_tfs(int bits) {
  return {{"TF1", tf_archetype(TfArchetype::tf1, bits)},
          {"TF2", tf_archetype(TfArchetype::tf2, bits)},
          {"TF3", tf_archetype(TfArchetype::tf3, bits)},
          {"TF4", tf_archetype(TfArchetype::tf4, bits)}};
}

EnvironmentRecord capture_environment(unsigned threads) {
  EnvironmentRecord env;
  env.threads = threads;
  env.simd = std::string(simd::isa_name(simd::active().isa));
  std::ifstream cpuinfo("/proc/cpuinfo");
  for (std::string line; std::getline(cpuinfo, line);) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) env.cpu = line.substr(colon + 2);
      break;
    }
  }
  if (env.cpu.empty()) env.cpu = "unknown";
#if defined(__clang__)
  env.compiler = "clang " __clang_version__;
#elif defined(__GNUC__)
  env.compiler = "gcc " __VERSION__;
#else
  env.compiler = "unknown";
#endif
#ifdef NDEBUG
  env.build = "release";
#else
  env.build = "debug";
#endif
  return env;
}

double median_ms(int repetitions, const std::function<void()>& fn) {
  fn();  // warm-up, discarded
  std::vector<double> samples;
  samples.reserve(repetitions);
  for (int r = 0; r < repetitions; ++r) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    samples.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count());
  }
  std::sort(samples.begin(), samples.end());
  const std::size_t mid = samples.size() / 2;
  const double m = samples.size() % 2 == 1 ? samples[mid] : 0.5 * (samples[mid - 1] + samples[mid]);
  // A timing of exactly zero would break the ratio; clock resolution is ~1 ns.
  return std::max(m, 1e-6);
}

namespace {

PartitionScheme make_scheme(SchemeKind kind, std::size_t n, const Volume& volume) {
  return kind == SchemeKind::uniform ? scheme_uniform(n, volume.bits())
                                     : scheme_with_min_special(n, volume.bits(), volume.rho_min());
}

}  // namespace

void run_update_bench(const BenchScenario& scenario, const Volume& volume, BenchReport& report) {
  scenario.validate();
  const BlockGrid grid(volume.dims(), scenario.block_size);
  const unsigned threads = resolve_threads(scenario.render.threads);
  // TF-independent per-block ranges are part of the volume load for both methods.
  const auto ranges = block_min_max(volume, grid, threads);

  std::map<std::string, double> baseline;
  for (const auto& [name, tf] : scenario.tfs) {
    baseline[name] = median_ms(scenario.repetitions, [&] {
      const auto d = standard_distance_map(volume, grid, tf, scenario.occupancy, &ranges);
      if (d.dist.empty()) throw Error(ErrorCode::invariant, "empty distance map");
    });
  }

  for (std::size_t n : scenario.partition_counts) {
    const PartitionScheme scheme = make_scheme(scenario.scheme, n, volume);
    const PdmSet set = build_pdm_set(volume, grid, scheme, scenario.occupancy, threads, &ranges);
    report.init.push_back({n, set.init_ms(), set.memory_bytes()});
    for (const auto& [name, tf] : scenario.tfs) {
      UpdateRow row;
      row.tf = name;
      row.partitions = n;
      const PartitionSelection sel = select_partitions(tf, scheme);
      row.selected = sel.size();
      row.combine_passes = combine_with_stats(set, sel, CombineMode::chunked).passes;
      row.update_ms_pdm = median_ms(scenario.repetitions, [&] {
        const auto s = select_partitions(tf, scheme);
        const auto d = combine(set, s);
        if (d.dist.empty()) throw Error(ErrorCode::invariant, "empty distance map");
      });
      row.update_ms_baseline = baseline[name];
      row.speedup_ratio = row.update_ms_baseline / row.update_ms_pdm;
      row.slower_than_baseline = row.speedup_ratio < 1.0;
      report.updates.push_back(row);
    }
  }
}

void run_rotation_bench(const BenchScenario& scenario, const Volume& volume, BenchReport& report) {
  scenario.validate();
  const BlockGrid grid(volume.dims(), scenario.block_size);
  const unsigned threads = resolve_threads(scenario.render.threads);
  const auto ranges = block_min_max(volume, grid, threads);

  struct PdmConfig {
    std::size_t n;
    SchemeKind scheme;
  };
  std::vector<PdmConfig> configs;
  for (std::size_t n : scenario.partition_counts) configs.push_back({n, scenario.scheme});
  // Uniform vs min-special at 32 partitions.
  for (SchemeKind kind : {SchemeKind::uniform, SchemeKind::min_special}) {
    const bool present = std::any_of(configs.begin(), configs.end(),
                                     [&](const PdmConfig& c) { return c.n == 32 && c.scheme == kind; });
    if (!present && volume.lut_size() >= 32) configs.push_back({32, kind});
  }

  std::vector<std::pair<PdmConfig, PdmSet>> sets;
  for (const auto& c : configs) {
    sets.emplace_back(c, build_pdm_set(volume, grid, make_scheme(c.scheme, c.n, volume), scenario.occupancy,
                                       threads, &ranges));
  }

  const int frames = scenario.rotation.frames;
  for (const auto& [name, tf] : scenario.tfs) {
    const OccupancyMap occ = occupancy_for_tf(volume, grid, tf, scenario.occupancy, &ranges);
    const DistanceMap dmap = distance_transform(occ);
    std::vector<DistanceMap> dprimes;
    for (const auto& [c, set] : sets) dprimes.push_back(combine(set, select_partitions(tf, set.scheme())));

    for (int f = 0; f < frames; ++f) {
      const double angle = 2.0 * std::numbers::pi * scenario.rotation.revolutions * f / frames;
      const double time_s = scenario.rotation.duration_s * f / frames;
      const Camera cam = Camera::framing(volume, angle);
      auto record = [&](EssMode mode, std::size_t n, SchemeKind scheme, Acceleration accel) {
        RenderSettings rs = scenario.render;
        rs.ess = mode;
        const RenderResult r = render(volume, tf, cam, rs, grid, accel);
        report.frames.push_back({name, mode, n, scheme, f, angle, time_s, r.stats});
      };
      record(EssMode::none, 0, scenario.scheme, std::monostate{});
      record(EssMode::block, 0, scenario.scheme, std::cref(occ));
      record(EssMode::distance, 0, scenario.scheme, std::cref(dmap));
      for (std::size_t i = 0; i < sets.size(); ++i) {
        record(EssMode::pdm, sets[i].first.n, sets[i].first.scheme, std::cref(dprimes[i]));
      }
    }
  }
}

BenchReport run_bench(const BenchScenario& scenario) {
  scenario.validate();
  const Volume volume = load_volume(scenario.volume);
  BenchReport report;
  report.dataset = scenario.volume.label();
  report.dims = volume.dims();
  report.scheme = scenario.scheme;
  report.occupancy = scenario.occupancy;
  report.partition_counts = scenario.partition_counts;
  report.environment = capture_environment(resolve_threads(scenario.render.threads));
  run_update_bench(scenario, volume, report);
  if (scenario.run_rotation) run_rotation_bench(scenario, volume, report);
  return report;
}

// ---------------------------------------------------------------------------

json stats_to_json(const RenderStats& s) {
  return {{"rays", s.rays},
          {"samples_evaluated", s.samples_evaluated},
          {"samples_skipped", s.samples_skipped},
          {"blocks_skipped", s.blocks_skipped},
          {"skip_jumps", s.skip_jumps},
          {"ert_terminations", s.ert_terminations},
          {"wall_time", s.wall_time}};
}

json report_to_json(const BenchReport& r) {
  json j;
  j["dataset"] = r.dataset;
  j["dims"] = {r.dims.x, r.dims.y, r.dims.z};
  j["scheme"] = std::string(to_string(r.scheme));
  j["occupancy"] = std::string(to_string(r.occupancy));
  j["partition_counts"] = r.partition_counts;
  json init = json::array();
  for (const auto& row : r.init) {
    init.push_back({{"partitions", row.partitions},
                    {"one_time_init_ms", row.one_time_init_ms},
                    {"memory_bytes", row.memory_bytes}});
  }
  j["one_time_init"] = std::move(init);
  json updates = json::array();
  for (const auto& u : r.updates) {
    updates.push_back({{"tf", u.tf},
                       {"partitions", u.partitions},
                       {"selected", u.selected},
                       {"combine_passes", u.combine_passes},
                       {"update_ms_baseline", u.update_ms_baseline},
                       {"update_ms_pdm", u.update_ms_pdm},
                       {"speedup_ratio", u.speedup_ratio},
                       {"slower_than_baseline", u.slower_than_baseline}});
  }
  j["updates"] = std::move(updates);
  json frames = json::array();
  for (const auto& f : r.frames) {
    frames.push_back({{"tf", f.tf},
                      {"mode", std::string(to_string(f.mode))},
                      {"partitions", f.partitions},
                      {"scheme", std::string(to_string(f.scheme))},
                      {"frame", f.frame},
                      {"angle", f.angle},
                      {"time_s", f.time_s},
                      {"stats", stats_to_json(f.stats)}});
  }
  j["frames"] = std::move(frames);
  j["environment"] = {{"cpu", r.environment.cpu},
                      {"threads", r.environment.threads},
                      {"simd", r.environment.simd},
                      {"compiler", r.environment.compiler},
                      {"build", r.environment.build}};
  return j;
}

std::string csv_header(const std::vector<std::size_t>& partition_counts) {
  std::string h = "dataset,size,computation_type,tf,no_ess,block_ess,distance_map";
  for (std::size_t n : partition_counts) h += ",pdm_" + std::to_string(n);
  return h;
}

std::string report_to_csv(const BenchReport& r) {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed;
  os << csv_header(r.partition_counts) << '\n';
  const std::string size = std::to_string(r.dims.x) + "x" + std::to_string(r.dims.y) + "x" + std::to_string(r.dims.z);
  const std::string prefix = r.dataset + "," + size + ",";

  os << prefix << "one_time_init_ms,all,-,-,-";
  for (std::size_t n : r.partition_counts) {
    const auto it = std::find_if(r.init.begin(), r.init.end(), [&](const InitRow& i) { return i.partitions == n; });
    os << ',';
    if (it != r.init.end()) os << it->one_time_init_ms;
  }
  os << '\n';

  std::vector<std::string> tfs;
  for (const auto& u : r.updates) {
    if (std::find(tfs.begin(), tfs.end(), u.tf) == tfs.end()) tfs.push_back(u.tf);
  }
  for (const auto& tf : tfs) {
    os << prefix << "update_ms," << tf << ",-,-,";
    bool first = true;
    for (std::size_t n : r.partition_counts) {
      const auto it = std::find_if(r.updates.begin(), r.updates.end(),
                                   [&](const UpdateRow& u) { return u.tf == tf && u.partitions == n; });
      if (first) {
        os << (it != r.updates.end() ? it->update_ms_baseline : 0.0);
        first = false;
      }
      os << ',';
      if (it != r.updates.end()) os << it->update_ms_pdm;
    }
    os << '\n';
  }

  // Mean evaluated samples per frame, only for configurations in the main scheme.
  std::vector<std::string> frame_tfs;
  for (const auto& f : r.frames) {
    if (std::find(frame_tfs.begin(), frame_tfs.end(), f.tf) == frame_tfs.end()) frame_tfs.push_back(f.tf);
  }
  for (const auto& tf : frame_tfs) {
    auto mean = [&](EssMode mode, std::size_t n) -> std::string {
      std::uint64_t sum = 0;
      std::uint64_t count = 0;
      for (const auto& f : r.frames) {
        if (f.tf == tf && f.mode == mode && f.partitions == n && (mode != EssMode::pdm || f.scheme == r.scheme)) {
          sum += f.stats.samples_evaluated;
          ++count;
        }
      }
      if (count == 0) return "";
      std::ostringstream v;
      v.precision(1);
      v << std::fixed << static_cast<double>(sum) / count;
      return v.str();
    };
    os << prefix << "samples_evaluated_per_frame," << tf << ',' << mean(EssMode::none, 0) << ','
       << mean(EssMode::block, 0) << ',' << mean(EssMode::distance, 0);
    for (std::size_t n : r.partition_counts) os << ',' << mean(EssMode::pdm, n);
    os << '\n';
  }
  return os.str();
}

}  // namespace pdm
