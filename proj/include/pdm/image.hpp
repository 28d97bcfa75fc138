#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pdm/raycaster.hpp"

namespace pdm {

/// Lossless RGBA8 PNG. Encoding parameters are fixed so the same pixels always
/// produce the same bytes.
std::vector<std::uint8_t> encode_png(const Framebuffer& fb);
Framebuffer decode_png(const std::vector<std::uint8_t>& bytes);

/// Throws Error{invalid_argument} for an empty framebuffer and Error{io} when
/// the file cannot be written.
void save_image(const Framebuffer& fb, const std::filesystem::path& path);
Framebuffer load_image(const std::filesystem::path& path);

/// FNV-1a 64 over the pixel bytes, as 16 hex digits.
std::string checksum(const std::vector<std::uint8_t>& bytes);

}  // namespace pdm
