#include "pdm/volume.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>

#include "json.hpp"
#include "pdm/error.hpp"
#include "pdm/parallel.hpp"
#include "pdm/simd/kernels.hpp"

namespace pdm {

using nlohmann::json;

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument:
      return "invalid_argument";
    case ErrorCode::size_mismatch:
      return "size_mismatch";
    case ErrorCode::unsupported_bit_depth:
      return "unsupported_bit_depth";
    case ErrorCode::io:
      return "io";
    case ErrorCode::parse:
      return "parse";
    case ErrorCode::accel_mismatch:
      return "accel_mismatch";
    case ErrorCode::no_session:
      return "no_session";
    case ErrorCode::invariant:
      return "invariant";
  }
  return "unknown";
}

Volume make_volume(Dims dims, int bits, std::vector<std::uint16_t> voxels,
                   std::array<double, 3> spacing) {
  if (bits != 8 && bits != 16) {
    throw Error(ErrorCode::unsupported_bit_depth, "bit depth must be 8 or 16, got " + std::to_string(bits));
  }
  if (dims.count() == 0) throw Error(ErrorCode::invalid_argument, "volume dims must be positive");
  if (voxels.size() != dims.count()) {
    throw Error(ErrorCode::size_mismatch, "voxel count " + std::to_string(voxels.size()) +
                                              " does not match dims (" + std::to_string(dims.count()) + ")");
  }
  for (double s : spacing) {
    if (!(s > 0.0) || !std::isfinite(s)) throw Error(ErrorCode::invalid_argument, "spacing must be positive");
  }
  std::uint16_t lo = 0;
  std::uint16_t hi = 0;
  simd::active().minmax_u16(voxels.data(), voxels.size(), &lo, &hi);
  if (bits == 8 && hi > 255) throw Error(ErrorCode::invalid_argument, "8-bit volume holds values above 255");

  Volume v;
  v.dims_ = dims;
  v.bits_ = bits;
  v.rho_min_ = lo;
  v.rho_max_ = hi;
  v.spacing_ = spacing;
  v.voxels_ = std::move(voxels);
  return v;
}

// ---------------------------------------------------------------------------
// RAW + JSON sidecar

RawMeta read_raw_meta(const std::filesystem::path& path_meta) {
  std::ifstream in(path_meta);
  if (!in) throw Error(ErrorCode::io, "cannot open meta file " + path_meta.string());
  RawMeta meta;
  try {
    const json j = json::parse(in);
    const auto& d = j.at("dims");
    if (!d.is_array() || d.size() != 3) throw Error(ErrorCode::parse, "meta dims must be [nx,ny,nz]");
    for (const auto& e : d) {
      if (!e.is_number_integer() || e.get<std::int64_t>() <= 0) {
        throw Error(ErrorCode::parse, "meta dims must be positive integers");
      }
    }
    meta.dims = {d[0].get<std::uint32_t>(), d[1].get<std::uint32_t>(), d[2].get<std::uint32_t>()};
    meta.bits = j.at("bits").get<int>();
    if (j.contains("endianness")) {
      const auto e = j.at("endianness").get<std::string>();
      if (e == "le") {
        meta.endianness = Endianness::little;
      } else if (e == "be") {
        meta.endianness = Endianness::big;
      } else {
        throw Error(ErrorCode::parse, "endianness must be \"le\" or \"be\"");
      }
    }
    if (j.contains("spacing")) {
      const auto& s = j.at("spacing");
      if (!s.is_array() || s.size() != 3) throw Error(ErrorCode::parse, "meta spacing must be [sx,sy,sz]");
      meta.spacing = {s[0].get<double>(), s[1].get<double>(), s[2].get<double>()};
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, std::string("invalid meta JSON: ") + e.what());
  }
  if (meta.bits != 8 && meta.bits != 16) {
    throw Error(ErrorCode::unsupported_bit_depth, "bit depth must be 8 or 16, got " + std::to_string(meta.bits));
  }
  return meta;
}

Volume load_raw(const std::filesystem::path& path_data, const std::filesystem::path& path_meta) {
  const RawMeta meta = read_raw_meta(path_meta);
  std::ifstream in(path_data, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open data file " + path_data.string());
  in.seekg(0, std::ios::end);
  const auto length = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);

  const std::size_t bytes_per_voxel = meta.bits / 8;
  const std::size_t expected = meta.dims.count() * bytes_per_voxel;
  if (length != expected) {
    throw Error(ErrorCode::size_mismatch, "data file has " + std::to_string(length) + " bytes, meta implies " +
                                              std::to_string(expected));
  }
  std::vector<unsigned char> raw(length);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(length));
  if (!in) throw Error(ErrorCode::io, "short read from " + path_data.string());

  std::vector<std::uint16_t> voxels(meta.dims.count());
  if (meta.bits == 8) {
    std::copy(raw.begin(), raw.end(), voxels.begin());
  } else {
    const bool big = meta.endianness == Endianness::big;
    for (std::size_t i = 0; i < voxels.size(); ++i) {
      const unsigned b0 = raw[2 * i];
      const unsigned b1 = raw[2 * i + 1];
      voxels[i] = static_cast<std::uint16_t>(big ? (b0 << 8) | b1 : (b1 << 8) | b0);
    }
  }
  return make_volume(meta.dims, meta.bits, std::move(voxels), meta.spacing);
}

void save_raw(const Volume& volume, const std::filesystem::path& path_data,
              const std::filesystem::path& path_meta, Endianness endianness) {
  std::ofstream out(path_data, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path_data.string());
  const auto& v = volume.voxels();
  if (volume.bits() == 8) {
    std::vector<unsigned char> raw(v.begin(), v.end());
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  } else {
    std::vector<unsigned char> raw(v.size() * 2);
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto lo = static_cast<unsigned char>(v[i] & 0xFF);
      const auto hi = static_cast<unsigned char>(v[i] >> 8);
      raw[2 * i] = endianness == Endianness::big ? hi : lo;
      raw[2 * i + 1] = endianness == Endianness::big ? lo : hi;
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  }
  if (!out) throw Error(ErrorCode::io, "write failed for " + path_data.string());

  const auto& d = volume.dims();
  const json meta = {{"dims", {d.x, d.y, d.z}},
                     {"bits", volume.bits()},
                     {"endianness", endianness == Endianness::big ? "be" : "le"},
                     {"spacing", volume.spacing()}};
  std::ofstream mo(path_meta);
  if (!mo) throw Error(ErrorCode::io, "cannot write " + path_meta.string());
  mo << meta.dump(2) << '\n';
}

std::vector<std::uint64_t> histogram_256(const Volume& volume) {
  std::vector<std::uint64_t> h(256, 0);
  const unsigned shift = volume.bits() - 8;
  for (std::uint16_t v : volume.voxels()) ++h[v >> shift];
  return h;
}

// ---------------------------------------------------------------------------
// Block grid

BlockGrid::BlockGrid(Dims volume_dims, std::uint32_t block_size) : b_(block_size), dims_(volume_dims) {
  if (block_size == 0) throw Error(ErrorCode::invalid_argument, "block size must be >= 1");
  if (volume_dims.count() == 0) throw Error(ErrorCode::invalid_argument, "volume dims must be positive");
  auto blocks = [&](std::uint32_t n) { return (n + block_size - 1) / block_size; };
  bdims_ = {blocks(volume_dims.x), blocks(volume_dims.y), blocks(volume_dims.z)};
}

std::array<std::uint32_t, 2> BlockGrid::voxel_span(int axis, std::uint32_t block) const noexcept {
  const std::uint32_t begin = block * b_;
  return {begin, std::min(begin + b_, dims_[axis])};
}

std::vector<BlockRange> block_min_max(const Volume& volume, const BlockGrid& grid, unsigned threads) {
  const Dims& d = volume.dims();
  const Dims& bd = grid.block_dims();
  const auto& kernels = simd::active();
  std::vector<BlockRange> out(grid.block_count());

  auto apron = [&](int axis, std::uint32_t block) {
    auto span = grid.voxel_span(axis, block);
    const std::uint32_t lo = span[0] == 0 ? 0 : span[0] - 1;
    const std::uint32_t hi = std::min(span[1] + 1, d[axis]);
    return std::array<std::uint32_t, 2>{lo, hi};
  };

  // Reduce the apron-extended (y, z) slab of rows to one min row and one max
  // row, then take the per-block x windows of those rows.
  const std::size_t rows = std::size_t{bd.y} * bd.z;
  parallel_for(rows, std::max(1u, threads), [&](unsigned, std::size_t begin, std::size_t end) {
    std::vector<std::uint16_t> row_lo(d.x);
    std::vector<std::uint16_t> row_hi(d.x);
    for (std::size_t r = begin; r < end; ++r) {
      const auto by = static_cast<std::uint32_t>(r % bd.y);
      const auto bz = static_cast<std::uint32_t>(r / bd.y);
      const auto ys = apron(1, by);
      const auto zs = apron(2, bz);
      std::fill(row_lo.begin(), row_lo.end(), std::numeric_limits<std::uint16_t>::max());
      std::fill(row_hi.begin(), row_hi.end(), std::uint16_t{0});
      for (std::uint32_t z = zs[0]; z < zs[1]; ++z) {
        for (std::uint32_t y = ys[0]; y < ys[1]; ++y) {
          kernels.minmax_accumulate_u16(row_lo.data(), row_hi.data(), volume.voxels().data() + d.index(0, y, z),
                                        d.x);
        }
      }
      for (std::uint32_t bx = 0; bx < bd.x; ++bx) {
        const auto xs = apron(0, bx);
        std::uint16_t lo = 0;
        std::uint16_t hi = 0;
        std::uint16_t unused = 0;
        kernels.minmax_u16(row_lo.data() + xs[0], xs[1] - xs[0], &lo, &unused);
        kernels.minmax_u16(row_hi.data() + xs[0], xs[1] - xs[0], &unused, &hi);
        out[grid.index({bx, by, bz})] = {lo, hi};
      }
    }
  });
  return out;
}

}  // namespace pdm
