// pdmvr: precompute, render, bench and serve from the command line.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "pdm/acceleration.hpp"
#include "pdm/bench.hpp"
#include "pdm/error.hpp"
#include "pdm/image.hpp"
#include "pdm/parallel.hpp"
#include "pdm/raycaster.hpp"
#include "pdm/service.hpp"

namespace {

using nlohmann::json;
using pdm::Error;
using pdm::ErrorCode;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitInvariant = 3;

struct VolumeOptions {
  std::string volume;
  std::string meta;
  std::string synth;
  std::string dims = "64x64x64";
  std::uint64_t seed = 1;
};

struct Options {
  VolumeOptions vol;
  std::string tf = "tf1";
  std::string bench_tfs = "all";
  std::size_t partitions = 64;
  std::string partition_list = "16,32,64,128,256";
  std::string scheme = "uniform";
  std::string ess = "pdm";
  std::string occupancy = "range-apron";
  std::uint32_t block_size = pdm::kDefaultBlockSize;
  std::string size = "256x256";
  double step = 0.5;
  double angle = 0.0;
  bool ert = true;
  unsigned threads = 0;
  std::string out;
  std::string report;
  int frames = 8;
  int repetitions = 5;
  bool no_rotation = false;
  std::string host = "127.0.0.1";
  int port = -1;
  std::string static_dir;
};

std::vector<std::uint32_t> parse_extent(const std::string& text, std::size_t count, const char* what) {
  std::vector<std::uint32_t> out;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, 'x');) {
    std::size_t used = 0;
    long v = -1;
    try {
      v = std::stol(part, &used);
    } catch (const std::logic_error&) {
    }
    if (used != part.size() || v < 0 || v > 1 << 20) {
      throw Error(ErrorCode::invalid_argument, std::string("malformed ") + what + ": " + text);
    }
    out.push_back(static_cast<std::uint32_t>(v));
  }
  if (out.size() != count) throw Error(ErrorCode::invalid_argument, std::string("malformed ") + what + ": " + text);
  return out;
}

std::vector<std::size_t> parse_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ',');) {
    std::size_t used = 0;
    long v = 0;
    try {
      v = std::stol(part, &used);
    } catch (const std::logic_error&) {
    }
    if (used != part.size() || v < 1) throw Error(ErrorCode::invalid_argument, "malformed partition list: " + text);
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw Error(ErrorCode::invalid_argument, "empty partition list");
  return out;
}

void add_volume_options(CLI::App* cmd, VolumeOptions& v) {
  auto* vol = cmd->add_option("--volume", v.volume, "RAW volume file");
  cmd->add_option("--meta", v.meta, "RAW metadata JSON (default: <volume>.json)");
  auto* synth = cmd->add_option("--synth", v.synth, "synthetic volume: sphere_shell|two_spheres|noise|background_dominant");
  cmd->add_option("--dims", v.dims, "synthetic volume dims XxYxZ");
  cmd->add_option("--seed", v.seed, "synthetic volume seed");
  vol->excludes(synth);
  synth->excludes(vol);
}

void check_volume_choice(const VolumeOptions& v) {
  if (v.volume.empty() == v.synth.empty()) {
    throw Error(ErrorCode::invalid_argument, "exactly one of --volume or --synth is required");
  }
}

pdm::VolumeSpec volume_spec(const VolumeOptions& v) {
  check_volume_choice(v);
  pdm::VolumeSpec spec;
  if (!v.volume.empty()) {
    spec.data = v.volume;
    spec.meta = v.meta.empty() ? v.volume + ".json" : v.meta;
  } else {
    spec.kind = pdm::parse_synth_kind(v.synth);
    const auto d = parse_extent(v.dims, 3, "--dims");
    spec.dims = {d[0], d[1], d[2]};
    spec.seed = v.seed;
  }
  return spec;
}

pdm::TransferFunction load_tf(const std::string& name, int bits) {
  if (name == "empty") return pdm::tf_empty(bits);
  if (name.size() == 3 && (name[0] == 't' || name[0] == 'T')) return pdm::tf_archetype(pdm::parse_tf_archetype(name), bits);
  std::ifstream in(name);
  if (!in) throw Error(ErrorCode::io, "cannot open TF file " + name);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, "malformed TF file " + name + ": " + e.what());
  }
  pdm::TransferFunction tf = pdm::tf_from_json(j);
  if (static_cast<int>(tf.bits()) != bits) throw Error(ErrorCode::invalid_argument, "TF bit depth does not match the volume");
  return tf;
}

pdm::PartitionScheme make_scheme(const Options& o, const pdm::Volume& v) {
  if (o.partitions < 1) throw Error(ErrorCode::invalid_argument, "--partitions must be >= 1");
  const auto kind = pdm::parse_scheme_kind(o.scheme);
  return kind == pdm::SchemeKind::uniform ? pdm::scheme_uniform(o.partitions, v.bits())
                                          : pdm::scheme_with_min_special(o.partitions, v.bits(), v.rho_min());
}

std::pair<int, int> parse_size(const std::string& text) {
  const auto s = parse_extent(text, 2, "--size");
  if (s[0] == 0 || s[1] == 0) throw Error(ErrorCode::invalid_argument, "--size must be at least 1x1");
  return {static_cast<int>(s[0]), static_cast<int>(s[1])};
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::io, "write failed for " + path);
}

int cmd_precompute(const Options& o) {
  if (o.partitions < 1) throw Error(ErrorCode::invalid_argument, "--partitions must be >= 1");
  const pdm::Volume volume = pdm::load_volume(volume_spec(o.vol));
  const pdm::BlockGrid grid(volume.dims(), o.block_size);
  const pdm::PartitionScheme scheme = make_scheme(o, volume);
  const auto mode = pdm::parse_occupancy_mode(o.occupancy);
  const unsigned threads = pdm::resolve_threads(o.threads);
  const pdm::PdmSet set = pdm::build_pdm_set(volume, grid, scheme, mode, threads);

  json parts = json::array();
  for (std::size_t p = 1; p <= set.size(); ++p) {
    const auto& d = set.map(p).dist;
    const auto occupied = std::count(d.begin(), d.end(), std::uint8_t{0});
    parts.push_back({{"partition", p},
                     {"range", {scheme.partition(p).lo, scheme.partition(p).hi}},
                     {"occupied_fraction", static_cast<double>(occupied) / static_cast<double>(d.size())}});
  }
  const json j = {{"dims", {volume.dims().x, volume.dims().y, volume.dims().z}},
                  {"block_size", o.block_size},
                  {"n", set.size()},
                  {"scheme", std::string(pdm::to_string(pdm::parse_scheme_kind(o.scheme)))},
                  {"occupancy", std::string(pdm::to_string(mode))},
                  {"one_time_init_ms", set.init_ms()},
                  {"memory_bytes", set.memory_bytes()},
                  {"partitions", parts}};
  if (!o.out.empty()) pdm::save_pdm_set(set, o.out);
  if (o.report == "json") {
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << "one-time init: " << set.init_ms() << " ms\n"
              << "memory: " << set.memory_bytes() << " bytes (" << set.size() << " x " << grid.block_count()
              << " blocks)\n";
    for (const auto& p : parts) {
      std::cout << "partition " << p["partition"] << " [" << p["range"][0] << ", " << p["range"][1]
                << "]: occupied " << p["occupied_fraction"].get<double>() << '\n';
    }
  }
  return kExitOk;
}

int cmd_render(const Options& o) {
  const auto [w, h] = parse_size(o.size);
  if (o.out.empty()) throw Error(ErrorCode::invalid_argument, "--out is required");
  if (!(o.step > 0.0)) throw Error(ErrorCode::invalid_argument, "--step must be > 0");
  const auto ess = pdm::parse_ess_mode(o.ess);
  const auto mode = pdm::parse_occupancy_mode(o.occupancy);
  const pdm::Volume volume = pdm::load_volume(volume_spec(o.vol));
  const pdm::TransferFunction tf = load_tf(o.tf, volume.bits());
  const pdm::BlockGrid grid(volume.dims(), o.block_size);
  const unsigned threads = pdm::resolve_threads(o.threads);

  pdm::OccupancyMap occ;
  pdm::DistanceMap dist;
  pdm::Acceleration accel;
  switch (ess) {
    case pdm::EssMode::none:
      break;
    case pdm::EssMode::block:
      occ = pdm::occupancy_for_tf(volume, grid, tf, mode);
      accel = std::cref(occ);
      break;
    case pdm::EssMode::distance:
      dist = pdm::standard_distance_map(volume, grid, tf, mode);
      accel = std::cref(dist);
      break;
    case pdm::EssMode::pdm: {
      const pdm::PartitionScheme scheme = make_scheme(o, volume);
      const pdm::PdmSet set = pdm::build_pdm_set(volume, grid, scheme, mode, threads);
      dist = pdm::combine(set, pdm::select_partitions(tf, scheme));
      accel = std::cref(dist);
      break;
    }
  }
  pdm::RenderSettings rs;
  rs.width = w;
  rs.height = h;
  rs.step = o.step;
  rs.ess = ess;
  rs.ert_enabled = o.ert;
  rs.threads = threads;
  const auto result = pdm::render(volume, tf, pdm::Camera::framing(volume, o.angle), rs, grid, accel);
  pdm::save_image(result.image, o.out);
  json j = pdm::stats_to_json(result.stats);
  j["checksum"] = pdm::checksum(result.image.rgba);
  std::cout << j.dump() << '\n';
  return kExitOk;
}

int cmd_bench(const Options& o) {
  pdm::BenchScenario sc;
  sc.volume = volume_spec(o.vol);
  sc.partition_counts = parse_list(o.partition_list);
  sc.scheme = pdm::parse_scheme_kind(o.scheme);
  sc.occupancy = pdm::parse_occupancy_mode(o.occupancy);
  sc.block_size = o.block_size;
  const auto [w, h] = parse_size(o.size);
  sc.render.width = w;
  sc.render.height = h;
  sc.render.step = o.step;
  sc.render.ert_enabled = o.ert;
  sc.render.threads = o.threads;
  sc.rotation.frames = o.frames;
  sc.repetitions = o.repetitions;
  sc.run_rotation = !o.no_rotation;
  const int bits = sc.volume.data ? pdm::read_raw_meta(*sc.volume.meta).bits : 8;
  if (o.bench_tfs == "all") {
    sc.tfs = pdm::default_tfs(bits);
  } else {
    std::stringstream ss(o.bench_tfs);
    for (std::string name; std::getline(ss, name, ',');) sc.tfs.push_back({name, load_tf(name, bits)});
  }
  const auto report = pdm::run_bench(sc);
  if (o.report == "csv") {
    write_text(o.out, pdm::report_to_csv(report));
  } else {
    write_text(o.out, pdm::report_to_json(report).dump(2) + "\n");
  }
  return kExitOk;
}

std::atomic<bool> g_stop{false};

int cmd_serve(const Options& o) {
  int port = o.port;
  if (port < 0) {
    const char* env = std::getenv("PDM_PORT");
    port = env != nullptr ? std::atoi(env) : 8080;
  }
  if (port < 0 || port > 65535) throw Error(ErrorCode::invalid_argument, "port out of range");
  pdm::ServiceConfig cfg;
  cfg.partitions = o.partitions;
  cfg.scheme = pdm::parse_scheme_kind(o.scheme);
  cfg.occupancy = pdm::parse_occupancy_mode(o.occupancy);
  cfg.block_size = o.block_size;
  cfg.threads = o.threads;
  if (cfg.partitions < 1) throw Error(ErrorCode::invalid_argument, "--partitions must be >= 1");
  pdm::RenderService service(cfg);
  if (!o.vol.volume.empty() || !o.vol.synth.empty()) {
    const auto spec = volume_spec(o.vol);
    service.load_volume(pdm::load_volume(spec), spec.label());
  }
  std::optional<std::filesystem::path> dir;
  if (!o.static_dir.empty()) dir = o.static_dir;
  pdm::HttpServer server(service, o.host, static_cast<std::uint16_t>(port), dir);
  server.start();
  std::cout << "listening on " << o.host << ':' << server.port() << std::endl;
  std::signal(SIGINT, [](int) { g_stop = true; });
  std::signal(SIGTERM, [](int) { g_stop = true; });
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  return kExitOk;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument:
      return kExitUsage;
    case ErrorCode::invariant:
    case ErrorCode::accel_mismatch:
      return kExitInvariant;
    default:
      return kExitIo;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Software DVR with partitioned distance maps"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--partitions", o.partitions, "number of intensity partitions n")->check(CLI::PositiveNumber);
    cmd->add_option("--scheme", o.scheme, "uniform|min-special");
    cmd->add_option("--occupancy", o.occupancy, "voxel|range-apron");
    cmd->add_option("--block-size", o.block_size, "block edge length b");
    cmd->add_option("--threads", o.threads, "worker threads (default PDM_THREADS or all cores)");
  };

  auto* pre = app.add_subcommand("precompute", "build the partitioned distance maps");
  add_volume_options(pre, o.vol);
  add_common(pre);
  pre->add_option("--out", o.out, "dump the maps to this file");
  pre->add_option("--report", o.report, "json for machine-readable output")->check(CLI::IsMember({"json", "text"}));

  auto* ren = app.add_subcommand("render", "render one frame to PNG");
  add_volume_options(ren, o.vol);
  add_common(ren);
  ren->add_option("--tf", o.tf, "tf1..tf4, empty, or a TF JSON file");
  ren->add_option("--ess", o.ess, "none|block|distance|pdm");
  ren->add_option("--size", o.size, "viewport WxH");
  ren->add_option("--step", o.step, "sample spacing in voxels");
  ren->add_option("--angle", o.angle, "orbit angle in radians");
  ren->add_flag("--ert,!--no-ert", o.ert, "early ray termination");
  ren->add_option("--out", o.out, "output PNG")->required();

  auto* ben = app.add_subcommand("bench", "update-time and rotation benchmark");
  add_volume_options(ben, o.vol);
  add_common(ben);
  ben->add_option("--partition-counts", o.partition_list, "comma-separated partition counts");
  ben->add_option("--tf", o.bench_tfs, "all, or comma-separated tf1..tf4 / TF JSON files");
  ben->add_option("--size", o.size, "viewport WxH");
  ben->add_option("--step", o.step, "sample spacing in voxels");
  ben->add_flag("--ert,!--no-ert", o.ert, "early ray termination");
  ben->add_option("--frames", o.frames, "frames per rotation");
  ben->add_option("--repetitions", o.repetitions, "timed repetitions per measurement");
  ben->add_flag("--no-rotation", o.no_rotation, "skip the rotation renders");
  ben->add_option("--report", o.report, "json|csv")->check(CLI::IsMember({"json", "csv"}));
  ben->add_option("--out", o.out, "report file (default stdout)");

  auto* srv = app.add_subcommand("serve", "HTTP and WebSocket render service");
  add_volume_options(srv, o.vol);
  add_common(srv);
  srv->add_option("--host", o.host, "bind address");
  srv->add_option("--port", o.port, "port (default PDM_PORT or 8080)");
  srv->add_option("--static", o.static_dir, "directory of static UI files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*pre) return cmd_precompute(o);
    if (*ren) return cmd_render(o);
    if (*ben) return cmd_bench(o);
    return cmd_serve(o);
  } catch (const Error& e) {
    std::cerr << "error (" << pdm::to_string(e.code()) << "): " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInvariant;
  }
}
