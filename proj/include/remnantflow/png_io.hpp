#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "remnantflow/image.hpp"

namespace rf {

using Bytes = std::vector<std::uint8_t>;

/// Decodes 8/16-bit gray, gray+alpha, RGB or RGBA PNG. Alpha is dropped;
/// gray decodes to one channel, everything else to three.
RasterImage decode_png(std::span<const std::uint8_t> bytes);
RasterImage read_png(const std::filesystem::path& path);

/// 8-bit PNG; one-channel images become grayscale, three-channel RGB.
/// Values are clamped and rounded to the nearest 1/255 step.
Bytes encode_png(const RasterImage& image);
void write_png(const std::filesystem::path& path, const RasterImage& image);

/// Masks are stored as 8-bit grayscale with values {0, 255}.
Bytes encode_mask_png(const BinaryMask& mask);
void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask);
BinaryMask read_mask_png(const std::filesystem::path& path);

Bytes read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace rf
