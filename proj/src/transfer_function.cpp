#include "pdm/transfer_function.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pdm/error.hpp"

namespace pdm {

using nlohmann::json;

namespace {

// Volumes are 8 or 16 bit; TFs and schemes may cover any smaller range.
void check_bits(int bits) {
  if (bits < 1 || bits > 16) {
    throw Error(ErrorCode::unsupported_bit_depth, "bit depth must be in [1, 16], got " + std::to_string(bits));
  }
}

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

TransferFunction::TransferFunction(int bits, std::vector<Rgba> lut, std::vector<ControlPoint> control_points)
    : bits_(bits), lut_(std::move(lut)), control_points_(std::move(control_points)) {
  check_bits(bits);
  if (lut_.size() != (std::size_t{1} << bits)) {
    throw Error(ErrorCode::invalid_argument, "TF LUT must have 2^bits entries");
  }
  visible_prefix_.assign(lut_.size() + 1, 0);
  for (std::size_t i = 0; i < lut_.size(); ++i) {
    const Rgba& c = lut_[i];
    if (!in_unit(c.r) || !in_unit(c.g) || !in_unit(c.b) || !in_unit(c.a)) {
      throw Error(ErrorCode::invalid_argument, "TF channel outside [0,1] at intensity " + std::to_string(i));
    }
    visible_prefix_[i + 1] = visible_prefix_[i] + (c.a > 0.0 ? 1u : 0u);
  }
}

TransferFunction bake_lut(std::span<const ControlPoint> points, int bits) {
  check_bits(bits);
  const std::uint32_t last = (1u << bits) - 1;
  if (points.size() < 2) throw Error(ErrorCode::invalid_argument, "need at least two control points");
  if (points.front().intensity != 0 || points.back().intensity != last) {
    throw Error(ErrorCode::invalid_argument, "control points must start at 0 and end at 2^bits-1");
  }
  for (std::size_t k = 1; k < points.size(); ++k) {
    if (points[k].intensity <= points[k - 1].intensity) {
      throw Error(ErrorCode::invalid_argument, "control points must be strictly increasing");
    }
  }
  std::vector<Rgba> lut(std::size_t{last} + 1);
  for (std::size_t k = 0; k + 1 < points.size(); ++k) {
    const ControlPoint& p0 = points[k];
    const ControlPoint& p1 = points[k + 1];
    const double span = static_cast<double>(p1.intensity - p0.intensity);
    for (std::uint32_t i = p0.intensity; i <= p1.intensity; ++i) {
      const double t = (i - p0.intensity) / span;
      auto mix = [t](double a, double b) { return t == 1.0 ? b : a + t * (b - a); };
      lut[i] = {mix(p0.color.r, p1.color.r), mix(p0.color.g, p1.color.g), mix(p0.color.b, p1.color.b),
                mix(p0.color.a, p1.color.a)};
    }
  }
  return TransferFunction(bits, std::move(lut), {points.begin(), points.end()});
}

TfArchetype parse_tf_archetype(std::string_view name) {
  if (name == "TF1" || name == "tf1") return TfArchetype::tf1;
  if (name == "TF2" || name == "tf2") return TfArchetype::tf2;
  if (name == "TF3" || name == "tf3") return TfArchetype::tf3;
  if (name == "TF4" || name == "tf4") return TfArchetype::tf4;
  throw Error(ErrorCode::invalid_argument, "unknown TF archetype '" + std::string(name) + "'");
}

TransferFunction tf_archetype(TfArchetype kind, int bits) {
  check_bits(bits);
  const std::size_t n = std::size_t{1} << bits;
  const std::size_t quarter = n / 4;
  auto visible = [&](std::size_t i) {
    switch (kind) {
      case TfArchetype::tf1:
        return i != 0;
      case TfArchetype::tf2:
        return true;
      case TfArchetype::tf3:
        return i >= n / 2;
      case TfArchetype::tf4:
        return (i >= quarter && i < 2 * quarter) || i >= 3 * quarter;
    }
    return false;
  };
  std::vector<Rgba> lut(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n - 1);
    lut[i] = {t, 1.0 - std::abs(2.0 * t - 1.0), 1.0 - t, visible(i) ? 0.02 + 0.18 * t : 0.0};
  }
  return TransferFunction(bits, std::move(lut));
}

TransferFunction tf_empty(int bits) {
  check_bits(bits);
  return TransferFunction(bits, std::vector<Rgba>(std::size_t{1} << bits));
}

TransferFunction tf_from_json(const json& j) {
  try {
    const int bits = j.at("bits").get<int>();
    check_bits(bits);
    if (j.contains("control_points")) {
      std::vector<ControlPoint> points;
      for (const auto& p : j.at("control_points")) {
        const auto i = p.at("i").get<std::int64_t>();
        if (i < 0 || i >= (std::int64_t{1} << bits)) throw Error(ErrorCode::parse, "control point intensity out of range");
        points.push_back({static_cast<std::uint32_t>(i),
                          {p.at("r").get<double>(), p.at("g").get<double>(), p.at("b").get<double>(),
                           p.at("a").get<double>()}});
      }
      return bake_lut(points, bits);
    }
    if (j.contains("lut")) {
      std::vector<Rgba> lut;
      for (const auto& e : j.at("lut")) {
        if (!e.is_array() || e.size() != 4) throw Error(ErrorCode::parse, "lut entries must be [r,g,b,a]");
        lut.push_back({e[0].get<double>(), e[1].get<double>(), e[2].get<double>(), e[3].get<double>()});
      }
      return TransferFunction(bits, std::move(lut));
    }
    throw Error(ErrorCode::parse, "TF JSON needs control_points or lut");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, std::string("invalid TF JSON: ") + e.what());
  }
}

json tf_to_json(const TransferFunction& tf) {
  json j;
  j["bits"] = tf.bits();
  if (!tf.control_points().empty()) {
    json pts = json::array();
    for (const auto& p : tf.control_points()) {
      pts.push_back({{"i", p.intensity}, {"r", p.color.r}, {"g", p.color.g}, {"b", p.color.b}, {"a", p.color.a}});
    }
    j["control_points"] = std::move(pts);
  } else {
    json lut = json::array();
    for (const auto& c : tf.lut()) lut.push_back({c.r, c.g, c.b, c.a});
    j["lut"] = std::move(lut);
  }
  return j;
}

// ---------------------------------------------------------------------------

PartitionScheme::PartitionScheme(int bits, std::vector<Partition> partitions)
    : bits_(bits), partitions_(std::move(partitions)) {
  check_bits(bits);
  const std::uint32_t last = (1u << bits) - 1;
  if (partitions_.empty()) throw Error(ErrorCode::invalid_argument, "scheme needs at least one partition");
  std::uint32_t next = 0;
  for (const Partition& p : partitions_) {
    if (p.lo != next || p.hi < p.lo) {
      throw Error(ErrorCode::invalid_argument, "partitions must be contiguous, ordered and non-empty");
    }
    next = p.hi + 1;
  }
  if (partitions_.back().hi != last) throw Error(ErrorCode::invalid_argument, "partitions must cover 0..2^bits-1");
  owner_.resize(std::size_t{last} + 1);
  for (std::size_t p = 0; p < partitions_.size(); ++p) {
    for (std::uint32_t i = partitions_[p].lo; i <= partitions_[p].hi; ++i) owner_[i] = static_cast<std::uint16_t>(p + 1);
  }
}

namespace {

// n near-uniform ranges over [first, first + count).
void split_uniform(std::vector<Partition>& out, std::uint32_t first, std::uint64_t count, std::size_t n) {
  for (std::size_t p = 0; p < n; ++p) {
    const auto lo = static_cast<std::uint32_t>(first + p * count / n);
    const auto hi = static_cast<std::uint32_t>(first + (p + 1) * count / n - 1);
    out.push_back({lo, hi});
  }
}

}  // namespace

PartitionScheme scheme_uniform(std::size_t n, int bits) {
  check_bits(bits);
  const std::uint64_t range = std::uint64_t{1} << bits;
  if (n < 1 || n > range) throw Error(ErrorCode::invalid_argument, "partition count must be in [1, 2^bits]");
  std::vector<Partition> parts;
  parts.reserve(n);
  split_uniform(parts, 0, range, n);
  return PartitionScheme(bits, std::move(parts));
}

PartitionScheme scheme_with_min_special(std::size_t n, int bits, std::uint32_t rho_min) {
  check_bits(bits);
  const std::uint64_t range = std::uint64_t{1} << bits;
  if (n < 2 || n > range) throw Error(ErrorCode::invalid_argument, "min-special scheme needs 2 <= n <= 2^bits");
  if (rho_min >= range - n + 1) {
    throw Error(ErrorCode::invalid_argument, "not enough intensities above rho_min for n-1 partitions");
  }
  std::vector<Partition> parts;
  parts.reserve(n);
  parts.push_back({0, rho_min});
  split_uniform(parts, rho_min + 1, range - rho_min - 1, n - 1);
  return PartitionScheme(bits, std::move(parts));
}

SchemeKind parse_scheme_kind(std::string_view name) {
  if (name == "uniform") return SchemeKind::uniform;
  if (name == "min-special" || name == "min_special") return SchemeKind::min_special;
  throw Error(ErrorCode::invalid_argument, "unknown scheme '" + std::string(name) + "'");
}

std::string_view to_string(SchemeKind kind) noexcept {
  return kind == SchemeKind::uniform ? "uniform" : "min_special";
}

PartitionSelection select_partitions(const TransferFunction& tf, const PartitionScheme& scheme) {
  if (tf.size() != (std::size_t{1} << scheme.bits())) {
    throw Error(ErrorCode::invalid_argument, "TF and partition scheme disagree on bit depth");
  }
  PartitionSelection s;
  for (std::size_t p = 1; p <= scheme.size(); ++p) {
    const Partition& part = scheme.partition(p);
    if (tf.any_visible(part.lo, part.hi)) s.selected.push_back(p);
  }
  return s;
}

}  // namespace pdm
