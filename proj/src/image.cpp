#include "pdm/image.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

#include "pdm/error.hpp"

namespace pdm {
namespace {

// libpng reports errors by longjmp; the message is stashed for the C++ side.
thread_local char g_png_error[256];

void png_fail(png_structp png, png_const_charp msg) {
  std::snprintf(g_png_error, sizeof g_png_error, "%s", msg);
  png_longjmp(png, 1);
}
void png_warn(png_structp, png_const_charp) {}

void write_to_vector(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void flush_noop(png_structp) {}

struct ReadCursor {
  const std::vector<std::uint8_t>* bytes;
  std::size_t offset;
};

void read_from_vector(png_structp png, png_bytep data, png_size_t length) {
  auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cur->offset + length > cur->bytes->size()) png_error(png, "unexpected end of data");
  std::memcpy(data, cur->bytes->data() + cur->offset, length);
  cur->offset += length;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const Framebuffer& fb) {
  if (fb.width <= 0 || fb.height <= 0) throw Error(ErrorCode::invalid_argument, "cannot encode an empty image");
  if (fb.rgba.size() != std::size_t{4} * fb.width * fb.height) {
    throw Error(ErrorCode::invalid_argument, "framebuffer pixel count does not match its size");
  }
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  if (png == nullptr) throw Error(ErrorCode::io, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  std::vector<std::uint8_t> out;
  std::vector<png_bytep> rows(fb.height);
  for (int y = 0; y < fb.height; ++y) {
    rows[y] = const_cast<png_bytep>(fb.rgba.data() + std::size_t{4} * fb.width * y);
  }
  if (info == nullptr || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::io, std::string("png encode: ") + (info == nullptr ? "no info struct" : g_png_error));
  }
  {
    png_set_write_fn(png, &out, write_to_vector, flush_noop);
    png_set_IHDR(png, info, static_cast<png_uint_32>(fb.width), static_cast<png_uint_32>(fb.height), 8,
                 PNG_COLOR_TYPE_RGBA, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 6);
    png_set_filter(png, 0, PNG_FILTER_SUB);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
  }
  png_destroy_write_struct(&png, &info);
  return out;
}

Framebuffer decode_png(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw Error(ErrorCode::parse, "not a PNG image");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  if (png == nullptr) throw Error(ErrorCode::io, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  Framebuffer fb;
  std::vector<png_bytep> rows;
  ReadCursor cursor{&bytes, 0};
  if (info == nullptr || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::parse, std::string("png decode: ") + (info == nullptr ? "no info struct" : g_png_error));
  }
  {
    png_set_read_fn(png, &cursor, read_from_vector);
    png_read_info(png, info);
    png_set_expand(png);
    png_set_strip_16(png);
    png_set_gray_to_rgb(png);
    png_set_add_alpha(png, 0xFF, PNG_FILLER_AFTER);
    png_read_update_info(png, info);
    fb.width = static_cast<int>(png_get_image_width(png, info));
    fb.height = static_cast<int>(png_get_image_height(png, info));
    fb.rgba.resize(std::size_t{4} * fb.width * fb.height);
    rows.resize(fb.height);
    for (int y = 0; y < fb.height; ++y) rows[y] = fb.rgba.data() + std::size_t{4} * fb.width * y;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return fb;
}

void save_image(const Framebuffer& fb, const std::filesystem::path& path) {
  const auto bytes = encode_png(fb);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::io, "write failed for " + path.string());
}

Framebuffer load_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_png(bytes);
}

std::string checksum(const std::vector<std::uint8_t>& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace pdm
