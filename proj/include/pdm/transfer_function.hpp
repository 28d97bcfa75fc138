#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace pdm {

struct Rgba {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;
  double a = 0.0;
  friend bool operator==(const Rgba&, const Rgba&) = default;
};

struct ControlPoint {
  std::uint32_t intensity = 0;
  Rgba color;
};

/// 1D transfer function stored as a fully baked lookup table with one entry per
/// representable intensity (2^bits entries).
class TransferFunction {
 public:
  TransferFunction() = default;

  /// Validates length and channel ranges.
  TransferFunction(int bits, std::vector<Rgba> lut, std::vector<ControlPoint> control_points = {});

  int bits() const noexcept { return bits_; }
  std::size_t size() const noexcept { return lut_.size(); }
  const Rgba& operator[](std::size_t i) const noexcept { return lut_[i]; }
  double alpha(std::size_t i) const noexcept { return lut_[i].a; }
  const std::vector<Rgba>& lut() const noexcept { return lut_; }
  const std::vector<ControlPoint>& control_points() const noexcept { return control_points_; }

  /// Prefix counts of the non-zero-alpha indicator: visible_prefix()[i] is the
  /// number of intensities j < i with alpha(j) > 0. Length size() + 1.
  const std::vector<std::uint32_t>& visible_prefix() const noexcept { return visible_prefix_; }

  /// True iff some intensity in [lo, hi] has non-zero alpha. O(1).
  bool any_visible(std::uint32_t lo, std::uint32_t hi) const noexcept {
    return visible_prefix_[hi + 1] - visible_prefix_[lo] > 0;
  }

  std::size_t visible_count() const noexcept { return visible_prefix_.back(); }

 private:
  int bits_ = 8;
  std::vector<Rgba> lut_;
  std::vector<ControlPoint> control_points_;
  std::vector<std::uint32_t> visible_prefix_;
};

/// Piecewise-linear bake. Points must be strictly increasing in intensity,
/// at least two, with endpoints at 0 and 2^bits - 1.
TransferFunction bake_lut(std::span<const ControlPoint> points, int bits);

enum class TfArchetype { tf1, tf2, tf3, tf4 };

TfArchetype parse_tf_archetype(std::string_view name);

/// TF1: everything but intensity 0 visible. TF2: everything visible.
/// TF3: upper half visible. TF4: second and fourth quarters visible.
TransferFunction tf_archetype(TfArchetype kind, int bits);

/// All-zero-alpha TF.
TransferFunction tf_empty(int bits);

/// Accepts {bits, control_points:[{i,r,g,b,a},...]} or {bits, lut:[[r,g,b,a],...]}.
TransferFunction tf_from_json(const nlohmann::json& j);
nlohmann::json tf_to_json(const TransferFunction& tf);

// ---------------------------------------------------------------------------
// Intensity partitions

/// Inclusive intensity range [lo, hi].
struct Partition {
  std::uint32_t lo = 0;
  std::uint32_t hi = 0;
  friend bool operator==(const Partition&, const Partition&) = default;
};

/// Contiguous, non-overlapping partitions covering [0, 2^bits - 1].
/// Partition numbers are 1-based in the public interface.
class PartitionScheme {
 public:
  PartitionScheme() = default;
  PartitionScheme(int bits, std::vector<Partition> partitions);

  int bits() const noexcept { return bits_; }
  std::size_t size() const noexcept { return partitions_.size(); }
  const Partition& partition(std::size_t p) const { return partitions_.at(p - 1); }
  const std::vector<Partition>& partitions() const noexcept { return partitions_; }

  /// 1-based partition number holding `intensity`.
  std::size_t partition_of(std::uint32_t intensity) const noexcept { return owner_[intensity]; }

 private:
  int bits_ = 8;
  std::vector<Partition> partitions_;
  std::vector<std::uint16_t> owner_;
};

/// n near-uniform partitions; widths differ by at most one.
PartitionScheme scheme_uniform(std::size_t n, int bits);

/// Partition 1 = [0, rho_min]; the rest split near-uniformly into n - 1.
PartitionScheme scheme_with_min_special(std::size_t n, int bits, std::uint32_t rho_min);

enum class SchemeKind { uniform, min_special };
SchemeKind parse_scheme_kind(std::string_view name);
std::string_view to_string(SchemeKind kind) noexcept;

/// Sorted set of 1-based partition numbers.
struct PartitionSelection {
  std::vector<std::size_t> selected;
  bool empty() const noexcept { return selected.empty(); }
  std::size_t size() const noexcept { return selected.size(); }
  friend bool operator==(const PartitionSelection&, const PartitionSelection&) = default;
};

/// p is selected iff some intensity in partition p has non-zero alpha.
PartitionSelection select_partitions(const TransferFunction& tf, const PartitionScheme& scheme);

}  // namespace pdm
