#include <algorithm>
#include <sstream>

#include "doctest.h"
#include "pdm/bench.hpp"
#include "pdm/error.hpp"

using namespace pdm;

namespace {

BenchScenario small_scenario() {
  BenchScenario sc;
  sc.volume.kind = SynthKind::sphere_shell;
  sc.volume.dims = {24, 24, 24};
  sc.volume.seed = 3;
  sc.tfs = {{"TF1", tf_archetype(TfArchetype::tf1, 8)}, {"TF3", tf_archetype(TfArchetype::tf3, 8)}};
  sc.partition_counts = {4, 16};
  sc.render.width = 20;
  sc.render.height = 20;
  sc.render.threads = 1;
  sc.rotation.frames = 2;
  sc.repetitions = 1;
  return sc;
}

}  // namespace

TEST_CASE("scenario validation") {
  BenchScenario sc = small_scenario();
  CHECK_NOTHROW(sc.validate());
  sc.tfs.clear();
  CHECK_THROWS_AS(sc.validate(), Error);
  sc = small_scenario();
  sc.partition_counts.clear();
  CHECK_THROWS_AS(sc.validate(), Error);
  sc = small_scenario();
  sc.rotation.frames = 0;
  CHECK_THROWS_AS(sc.validate(), Error);
}

TEST_CASE("median_ms discards the warm-up run") {
  int calls = 0;
  const double m = median_ms(3, [&] { ++calls; });
  CHECK(calls == 4);
  CHECK(m > 0.0);
}

TEST_CASE("CSV header follows the documented schema") {
  CHECK(csv_header({16, 32, 64, 128, 256}) ==
        "dataset,size,computation_type,tf,no_ess,block_ess,distance_map,pdm_16,pdm_32,pdm_64,pdm_128,pdm_256");
  const BenchReport r = run_bench(small_scenario());
  std::istringstream csv(report_to_csv(r));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "dataset,size,computation_type,tf,no_ess,block_ess,distance_map,pdm_4,pdm_16");
  int rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 8);
  }
  // init + 2 update rows + 2 sample rows.
  CHECK(rows == 5);
}

TEST_CASE("report contents") {
  const BenchReport r = run_bench(small_scenario());
  CHECK(r.init.size() == 2);
  CHECK(r.init[0].memory_bytes == 4 * 6 * 6 * 6);
  CHECK(r.updates.size() == 4);
  for (const auto& u : r.updates) {
    CHECK(u.slower_than_baseline == (u.speedup_ratio < 1.0));
    CHECK(u.combine_passes == (u.selected + kMapsPerPass - 1) / kMapsPerPass);
  }
  // 2 TFs x 2 frames x (none, block, distance, pdm_4, pdm_16, uniform_32, min_special_32).
  CHECK(r.frames.size() == 2 * 2 * 7);
  const auto j = report_to_json(r);
  CHECK(j.at("frames").size() == r.frames.size());
  CHECK(j.at("environment").at("threads") == 1);
}

TEST_CASE("one frame per mode when frames = 1") {
  BenchScenario sc = small_scenario();
  sc.rotation.frames = 1;
  sc.tfs.resize(1);
  const BenchReport r = run_bench(sc);
  int none = 0, block = 0, distance = 0;
  for (const auto& f : r.frames) {
    none += f.mode == EssMode::none;
    block += f.mode == EssMode::block;
    distance += f.mode == EssMode::distance;
  }
  CHECK(none == 1);
  CHECK(block == 1);
  CHECK(distance == 1);
}

TEST_CASE("counters are reproducible and ordered") {
  const BenchReport a = run_bench(small_scenario());
  const BenchReport b = run_bench(small_scenario());
  REQUIRE(a.frames.size() == b.frames.size());
  for (std::size_t i = 0; i < a.frames.size(); ++i) {
    CHECK(a.frames[i].stats.samples_evaluated == b.frames[i].stats.samples_evaluated);
    CHECK(a.frames[i].stats.samples_skipped == b.frames[i].stats.samples_skipped);
    CHECK(a.frames[i].stats.ert_terminations == b.frames[i].stats.ert_terminations);
  }
  for (const auto& f : a.frames) {
    if (f.mode != EssMode::pdm) continue;
    for (const auto& g : a.frames) {
      if (g.tf == f.tf && g.frame == f.frame && g.mode == EssMode::distance) {
        CHECK(g.stats.samples_evaluated <= f.stats.samples_evaluated);
      }
    }
  }
}

TEST_CASE("upper-half TF skips samples on the sphere shell") {
  BenchScenario sc = small_scenario();
  sc.partition_counts = {64};
  sc.tfs = {{"TF3", tf_archetype(TfArchetype::tf3, 8)}};
  const BenchReport r = run_bench(sc);
  double none = 0, pdm = 0;
  for (const auto& f : r.frames) {
    if (f.mode == EssMode::none) none += f.stats.samples_evaluated;
    if (f.mode == EssMode::pdm && f.partitions == 64) pdm += f.stats.samples_evaluated;
  }
  CHECK(pdm < none);
}
