#include <filesystem>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "pdm/acceleration.hpp"
#include "pdm/error.hpp"

using namespace pdm;

namespace {

// The 6x6 intensity map of the worked example, one row per y, as a depth-1 grid.
Volume worked_example() {
  const std::vector<std::uint16_t> rows = {
      0, 0, 1, 1, 0, 0,  //
      0, 2, 1, 0, 4, 5,  //
      1, 1, 0, 0, 5, 4,  //
      0, 0, 0, 0, 0, 6,  //
      4, 4, 0, 0, 7, 6,  //
      5, 3, 0, 0, 0, 0,  //
  };
  return make_volume({6, 6, 1}, 8, rows);
}

TransferFunction tf3(std::initializer_list<std::uint32_t> support) {
  std::vector<Rgba> lut(8);
  for (auto i : support) lut[i] = {1.0, 1.0, 1.0, 0.5};
  return TransferFunction(3, std::move(lut));
}

void check_lipschitz(const DistanceMap& m) {
  const Dims& d = m.bdims;
  for (std::uint32_t z = 0; z < d.z; ++z) {
    for (std::uint32_t y = 0; y < d.y; ++y) {
      for (std::uint32_t x = 0; x < d.x; ++x) {
        const int v = m.at(x, y, z);
        if (v == kMaxDistance) continue;
        for (int dz = -1; dz <= 1; ++dz) {
          for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
              const long nx = long{x} + dx, ny = long{y} + dy, nz = long{z} + dz;
              if (nx < 0 || ny < 0 || nz < 0 || nx >= d.x || ny >= d.y || nz >= d.z) continue;
              const int w = m.at(std::uint32_t(nx), std::uint32_t(ny), std::uint32_t(nz));
              CHECK(std::abs(v - w) <= 1);
            }
          }
        }
      }
    }
  }
}

bool leq(const DistanceMap& a, const DistanceMap& b) {
  for (std::size_t i = 0; i < a.dist.size(); ++i) {
    if (a.dist[i] > b.dist[i]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("occupancy mode names") {
  CHECK(parse_occupancy_mode("range-apron") == OccupancyMode::range_apron);
  CHECK(parse_occupancy_mode("range_apron") == OccupancyMode::range_apron);
  CHECK(parse_occupancy_mode("voxel") == OccupancyMode::voxel);
  CHECK_THROWS_AS(parse_occupancy_mode("bogus"), Error);
}

TEST_CASE("partition occupancy on a constant volume") {
  const Volume v = make_volume({8, 8, 8}, 8, std::vector<std::uint16_t>(512, 5));
  const BlockGrid g(v.dims(), 4);
  for (auto mode : {OccupancyMode::voxel, OccupancyMode::range_apron}) {
    CHECK(occupancy_for_partition(v, g, {4, 5}, mode).occupied_count() == g.block_count());
    CHECK(occupancy_for_partition(v, g, {0, 1}, mode).occupied_count() == 0);
  }
}

TEST_CASE("TF occupancy fast paths and a single bright voxel") {
  const Volume v = synth_volume(SynthKind::sphere_shell, {16, 16, 16}, 1);
  const BlockGrid g(v.dims(), 4);
  for (auto mode : {OccupancyMode::voxel, OccupancyMode::range_apron}) {
    CHECK(occupancy_for_tf(v, g, tf_empty(8), mode).occupied_count() == 0);
    CHECK(occupancy_for_tf(v, g, tf_archetype(TfArchetype::tf2, 8), mode).occupied_count() == g.block_count());
  }

  std::vector<std::uint16_t> voxels(12 * 12 * 12, 0);
  const Dims d{12, 12, 12};
  voxels[d.index(5, 9, 2)] = 200;
  const Volume one = make_volume(d, 8, voxels);
  std::vector<Rgba> lut(256);
  lut[200].a = 1.0;
  const auto occ = occupancy_for_tf(one, BlockGrid(d, 4), TransferFunction(8, lut), OccupancyMode::voxel);
  REQUIRE(occ.occupied_count() == 1);
  CHECK(occ.at(1, 2, 0));
}

TEST_CASE("occupancy matches brute force in both modes") {
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 60; ++rep) {
    std::uniform_int_distribution<std::uint32_t> ext(3, 17);
    const Dims d{ext(rng), ext(rng), ext(rng)};
    const Volume v = oracle::random_volume(rng, d, 256);
    const std::uint32_t b = 1 + rep % 4;
    const BlockGrid g(d, b);
    const auto tf = oracle::random_tf(rng, 8);
    for (auto mode : {OccupancyMode::voxel, OccupancyMode::range_apron}) {
      CHECK(occupancy_for_tf(v, g, tf, mode).occupied == oracle::occupancy_tf(v, b, mode, tf).occupied);
      const Partition p{static_cast<std::uint32_t>(rng() % 128), static_cast<std::uint32_t>(128 + rng() % 128)};
      CHECK(occupancy_for_partition(v, g, p, mode).occupied == oracle::occupancy_partition(v, b, mode, p).occupied);
    }
  }
}

TEST_CASE("range_apron occupancy is conservative") {
  std::mt19937_64 rng(8);
  for (int rep = 0; rep < 30; ++rep) {
    const Volume v = oracle::random_volume(rng, {13, 11, 9}, 256);
    const BlockGrid g(v.dims(), 4);
    const auto tf = oracle::random_tf(rng, 8);
    const auto vox = occupancy_for_tf(v, g, tf, OccupancyMode::voxel);
    const auto apron = occupancy_for_tf(v, g, tf, OccupancyMode::range_apron);
    for (std::size_t i = 0; i < vox.occupied.size(); ++i) CHECK(apron.occupied[i] >= vox.occupied[i]);
  }
}

TEST_CASE("distance transform basics") {
  const Dims d{5, 5, 5};
  OccupancyMap all{d, std::vector<std::uint8_t>(d.count(), 1)};
  CHECK(distance_transform(all).dist == std::vector<std::uint8_t>(d.count(), 0));
  OccupancyMap none{d, std::vector<std::uint8_t>(d.count(), 0)};
  CHECK(distance_transform(none).dist == std::vector<std::uint8_t>(d.count(), 255));

  OccupancyMap centre{d, std::vector<std::uint8_t>(d.count(), 0)};
  centre.occupied[d.index(2, 2, 2)] = 1;
  const auto m = distance_transform(centre);
  for (std::uint32_t z = 0; z < 5; ++z) {
    for (std::uint32_t y = 0; y < 5; ++y) {
      for (std::uint32_t x = 0; x < 5; ++x) {
        const int expect = std::max({std::abs(int(x) - 2), std::abs(int(y) - 2), std::abs(int(z) - 2)});
        CHECK(m.at(x, y, z) == expect);
      }
    }
  }
}

TEST_CASE("distance transform of a random 8^3 grid equals brute force") {
  std::mt19937_64 rng(7);
  const auto occ = oracle::random_occupancy(rng, {8, 8, 8}, 0.05);
  CHECK(distance_transform(occ) == oracle::distance(occ));
}

TEST_CASE("distance transform clamps at 255") {
  const Dims d{300, 1, 1};
  OccupancyMap occ{d, std::vector<std::uint8_t>(d.count(), 0)};
  occ.occupied[0] = 1;
  const auto m = distance_transform(occ);
  CHECK(m.at(254, 0, 0) == 254);
  CHECK(m.at(255, 0, 0) == 255);
  CHECK(m.at(299, 0, 0) == 255);
  CHECK(m == oracle::distance(occ));
}

TEST_CASE("distance transform on thin and odd shapes") {
  std::mt19937_64 rng(99);
  const Dims shapes[] = {{1, 1, 1}, {1, 1, 40}, {40, 1, 1}, {1, 33, 1}, {2, 3, 37}, {37, 2, 3}, {65, 3, 2}};
  for (const Dims& d : shapes) {
    for (double density : {0.0, 0.02, 0.3, 1.0}) {
      const auto occ = oracle::random_occupancy(rng, d, density);
      CHECK(distance_transform(occ) == oracle::distance(occ));
    }
  }
}

TEST_CASE("distance maps are 1-Lipschitz below the clamp") {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 10; ++rep) {
    check_lipschitz(distance_transform(oracle::random_occupancy(rng, {9, 7, 6}, 0.03)));
  }
}

TEST_CASE("build_pdm_set with one partition") {
  const Volume v = synth_volume(SynthKind::two_spheres, {20, 16, 12}, 3);
  const BlockGrid g(v.dims(), 4);
  for (auto mode : {OccupancyMode::voxel, OccupancyMode::range_apron}) {
    const PdmSet set = build_pdm_set(v, g, scheme_uniform(1, 8), mode);
    REQUIRE(set.size() == 1);
    CHECK(set.map(1).dist == std::vector<std::uint8_t>(g.block_count(), 0));
  }
}

TEST_CASE("build_pdm_set on a constant volume") {
  const Volume v = make_volume({8, 8, 8}, 8, std::vector<std::uint16_t>(512, 100));
  const BlockGrid g(v.dims(), 4);
  const PdmSet set = build_pdm_set(v, g, scheme_uniform(4, 8), OccupancyMode::range_apron);
  int zero_maps = 0, empty_maps = 0;
  for (std::size_t p = 1; p <= 4; ++p) {
    const auto& m = set.map(p).dist;
    if (m == std::vector<std::uint8_t>(m.size(), 0)) ++zero_maps;
    if (m == std::vector<std::uint8_t>(m.size(), 255)) ++empty_maps;
  }
  CHECK(zero_maps == 1);
  CHECK(empty_maps == 3);
  CHECK(set.map(2).dist[0] == 0);
  CHECK(set.memory_bytes() == 4 * 8);
}

TEST_CASE("build_pdm_set matches per-partition brute force") {
  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 20; ++rep) {
    const Volume v = oracle::random_volume(rng, {14, 10, 9}, 256);
    const std::uint32_t b = 1 + rep % 4;
    const BlockGrid g(v.dims(), b);
    const std::size_t n = std::size_t{1} << (1 + rep % 6);
    const auto scheme = rep % 2 ? scheme_uniform(n, 8) : scheme_with_min_special(n, 8, v.rho_min());
    const auto mode = rep % 3 == 0 ? OccupancyMode::voxel : OccupancyMode::range_apron;
    const PdmSet set = build_pdm_set(v, g, scheme, mode, 1 + rep % 3);
    for (std::size_t p = 1; p <= n; ++p) {
      CAPTURE(p);
      CHECK(set.map(p) == oracle::distance(oracle::occupancy_partition(v, b, mode, scheme.partition(p))));
    }
  }
}

TEST_CASE("build_pdm_set rejects a scheme that does not cover the volume") {
  const Volume v = make_volume({4, 4, 4}, 8, std::vector<std::uint16_t>(64, 9));
  CHECK_THROWS_AS(build_pdm_set(v, BlockGrid(v.dims(), 4), scheme_uniform(4, 3), OccupancyMode::voxel), Error);
}

TEST_CASE("combine examples") {
  const Volume v = synth_volume(SynthKind::sphere_shell, {24, 24, 24}, 1);
  const BlockGrid g(v.dims(), 4);
  const PdmSet set = build_pdm_set(v, g, scheme_uniform(16, 8), OccupancyMode::range_apron);
  for (std::size_t p = 1; p <= 16; ++p) CHECK(combine(set, {{p}}) == set.map(p));
  const auto empty = combine_with_stats(set, {});
  CHECK(empty.map.dist == std::vector<std::uint8_t>(g.block_count(), 255));
  CHECK_THROWS_AS(combine(set, {{0}}), Error);
  CHECK_THROWS_AS(combine(set, {{17}}), Error);
}

TEST_CASE("combine is idempotent, order-free and monotone; chunked equals direct") {
  std::mt19937_64 rng(12);
  const Volume v = oracle::random_volume(rng, {20, 20, 20}, 256);
  const BlockGrid g(v.dims(), 4);
  const std::size_t n = 32;
  const PdmSet set = build_pdm_set(v, g, scheme_uniform(n, 8), OccupancyMode::range_apron);
  for (int rep = 0; rep < 40; ++rep) {
    std::vector<std::size_t> s1;
    for (std::size_t p = 1; p <= n; ++p) {
      if (rng() % 3 == 0) s1.push_back(p);
    }
    std::vector<std::size_t> s2 = s1;
    for (std::size_t p = 1; p <= n; ++p) {
      if (rng() % 4 == 0 && std::find(s2.begin(), s2.end(), p) == s2.end()) s2.push_back(p);
    }
    const auto d1 = combine(set, {s1});
    auto dup = s1;
    dup.insert(dup.end(), s1.begin(), s1.end());
    CHECK(combine(set, {dup}) == d1);
    auto rev = s1;
    std::reverse(rev.begin(), rev.end());
    CHECK(combine(set, {rev}) == d1);
    const auto d2 = combine(set, {s2});
    CHECK(leq(d2, d1));
    const auto chunked = combine_with_stats(set, {s2}, CombineMode::chunked);
    CHECK(chunked.map == d2);
    CHECK(chunked.passes == (s2.size() + kMapsPerPass - 1) / kMapsPerPass);
    std::sort(s1.begin(), s1.end());
    CHECK(d1 == oracle::combined(v, 4, OccupancyMode::range_apron, set.scheme(), s1));
    check_lipschitz(d1);
  }
}

TEST_CASE("standard distance map examples") {
  const Volume v = synth_volume(SynthKind::noise, {16, 16, 16}, 1);
  const BlockGrid g(v.dims(), 4);
  CHECK(standard_distance_map(v, g, tf_empty(8), OccupancyMode::range_apron).dist ==
        std::vector<std::uint8_t>(g.block_count(), 255));
  CHECK(standard_distance_map(v, g, tf_archetype(TfArchetype::tf2, 8), OccupancyMode::range_apron).dist ==
        std::vector<std::uint8_t>(g.block_count(), 0));
}

TEST_CASE("worked example: POMs, PDMs, S and D'") {
  const Volume v = worked_example();
  const BlockGrid g(v.dims(), 1);
  const auto scheme = scheme_uniform(4, 3);
  const PdmSet set = build_pdm_set(v, g, scheme, OccupancyMode::voxel);
  for (std::size_t p = 1; p <= 4; ++p) {
    const auto pom = occupancy_for_partition(v, g, scheme.partition(p), OccupancyMode::voxel);
    const auto expect = oracle::occupancy_partition(v, 1, OccupancyMode::voxel, scheme.partition(p));
    CHECK(pom.occupied == expect.occupied);
    CHECK(set.map(p) == oracle::distance(expect));
  }
  const auto tf_a = tf3({2, 3, 6, 7});
  const auto tf_b = tf3({3, 6, 7});
  const auto s_a = select_partitions(tf_a, scheme);
  const auto s_b = select_partitions(tf_b, scheme);
  CHECK(s_a.selected == std::vector<std::size_t>{2, 4});
  CHECK(s_b.selected == std::vector<std::size_t>{2, 4});
  const auto dp = combine(set, s_a);
  CHECK(dp == combine(set, s_b));
  CHECK(dp == oracle::combined(v, 1, OccupancyMode::voxel, scheme, {2, 4}));
  const auto d_a = standard_distance_map(v, g, tf_a, OccupancyMode::voxel);
  const auto d_b = standard_distance_map(v, g, tf_b, OccupancyMode::voxel);
  CHECK(dp == d_a);
  CHECK(leq(dp, d_b));
  CHECK_FALSE(dp == d_b);
}

TEST_CASE("refinement never lowers D'") {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 30; ++rep) {
    const Volume v = oracle::random_volume(rng, {16, 12, 12}, 256);
    const BlockGrid g(v.dims(), 4);
    const auto tf = oracle::random_tf(rng, 8);
    const auto mode = rep % 2 ? OccupancyMode::voxel : OccupancyMode::range_apron;
    // Split one partition of a coarse scheme into two.
    std::vector<Partition> coarse = scheme_uniform(8, 8).partitions();
    const std::size_t k = rng() % coarse.size();
    std::vector<Partition> fine;
    for (std::size_t i = 0; i < coarse.size(); ++i) {
      if (i == k) {
        const std::uint32_t mid = coarse[i].lo + static_cast<std::uint32_t>(rng() % (coarse[i].hi - coarse[i].lo));
        fine.push_back({coarse[i].lo, mid});
        fine.push_back({mid + 1, coarse[i].hi});
      } else {
        fine.push_back(coarse[i]);
      }
    }
    const PartitionScheme sc(8, coarse), sf(8, fine);
    const auto dc = combine(build_pdm_set(v, g, sc, mode), select_partitions(tf, sc));
    const auto df = combine(build_pdm_set(v, g, sf, mode), select_partitions(tf, sf));
    CHECK(leq(dc, df));
  }
}

TEST_CASE("PDM set file round trip") {
  const Volume v = synth_volume(SynthKind::sphere_shell, {16, 16, 16}, 2);
  const BlockGrid g(v.dims(), 4);
  const auto scheme = scheme_uniform(8, 8);
  const PdmSet set = build_pdm_set(v, g, scheme, OccupancyMode::range_apron);
  const auto path = std::filesystem::temp_directory_path() / "pdm_test_roundtrip.pdms";
  save_pdm_set(set, path);
  const PdmSet back = load_pdm_set(path, scheme, g);
  CHECK(back.maps() == set.maps());
  CHECK_THROWS_AS(load_pdm_set(path, scheme_uniform(4, 8), g), Error);
  CHECK_THROWS_AS(load_pdm_set(path.string() + ".missing", scheme, g), Error);
  std::filesystem::remove(path);
}
