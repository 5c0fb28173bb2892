#include "remnantflow/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>

namespace rf {
namespace {

struct ReadCursor {
  std::span<const std::uint8_t> data;
  std::size_t offset = 0;
};

void read_callback(png_structp png, png_bytep out, png_size_t length) {
  auto* cursor = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cursor->offset + length > cursor->data.size()) png_error(png, "truncated PNG stream");
  std::memcpy(out, cursor->data.data() + cursor->offset, length);
  cursor->offset += length;
}

void write_callback(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<Bytes*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void flush_callback(png_structp) {}

[[noreturn]] void libpng_error(png_structp png, png_const_charp message) {
  auto* text = static_cast<std::string*>(png_get_error_ptr(png));
  *text = message;
  std::longjmp(png_jmpbuf(png), 1);
}

void libpng_warning(png_structp, png_const_charp) {}

Bytes encode_rows(const std::vector<std::uint8_t>& pixels, Index rows, Index cols, int color_type,
                  int channels) {
  Bytes out;
  std::string error;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error, libpng_error, libpng_warning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::io, "cannot allocate PNG encoder");
  }
  std::vector<png_bytep> row_ptrs(static_cast<std::size_t>(rows));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::io, "PNG encode failed: " + error);
  }
  png_set_write_fn(png, &out, write_callback, flush_callback);
  png_set_IHDR(png, info, static_cast<png_uint_32>(cols), static_cast<png_uint_32>(rows), 8, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  for (Index r = 0; r < rows; ++r)
    row_ptrs[static_cast<std::size_t>(r)] =
        const_cast<png_bytep>(pixels.data() + static_cast<std::size_t>(r * cols * channels));
  png_set_rows(png, info, row_ptrs.data());
  png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

}  // namespace

RasterImage decode_png(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0)
    throw Error(ErrorKind::validation, "not a PNG stream");
  std::string error;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error, libpng_error, libpng_warning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorKind::io, "cannot allocate PNG decoder");
  }
  ReadCursor cursor{bytes, 0};
  RasterImage image;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorKind::validation, "corrupt PNG: " + error);
  }
  png_set_read_fn(png, &cursor, read_callback);
  png_read_png(png, info, PNG_TRANSFORM_EXPAND | PNG_TRANSFORM_STRIP_ALPHA | PNG_TRANSFORM_PACKING, nullptr);
  const Index cols = png_get_image_width(png, info);
  const Index rows = png_get_image_height(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  const int channels = png_get_channels(png, info);
  png_bytepp row_ptrs = png_get_rows(png, info);
  const int out_channels = channels >= 3 ? 3 : 1;
  image = RasterImage(rows, cols, out_channels);
  const double scale = bit_depth == 16 ? 65535.0 : 255.0;
  for (Index r = 0; r < rows; ++r) {
    const png_bytep row = row_ptrs[r];
    for (Index c = 0; c < cols; ++c) {
      for (int ch = 0; ch < out_channels; ++ch) {
        const std::size_t idx = static_cast<std::size_t>(c * channels + ch);
        const double v = bit_depth == 16 ? (row[2 * idx] << 8 | row[2 * idx + 1]) : row[idx];
        image(r, c, ch) = v / scale;
      }
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

RasterImage read_png(const std::filesystem::path& path) {
  const Bytes bytes = read_file(path);
  try {
    return decode_png(bytes);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what(), path.string());
  }
}

Bytes encode_png(const RasterImage& image) {
  if (image.empty()) throw Error(ErrorKind::validation, "cannot encode an empty image");
  const int channels = image.channels() == 1 ? 1 : 3;
  if (image.channels() != 1 && image.channels() != 3)
    throw Error(ErrorKind::validation, "PNG encoding supports 1 or 3 channels");
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(image.rows() * image.cols() * channels));
  std::size_t i = 0;
  for (Index r = 0; r < image.rows(); ++r)
    for (Index c = 0; c < image.cols(); ++c)
      for (int ch = 0; ch < channels; ++ch)
        pixels[i++] = static_cast<std::uint8_t>(std::lround(std::clamp(image(r, c, ch), 0.0, 1.0) * 255.0));
  return encode_rows(pixels, image.rows(), image.cols(),
                     channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, channels);
}

void write_png(const std::filesystem::path& path, const RasterImage& image) {
  write_file_atomic(path, encode_png(image));
}

Bytes encode_mask_png(const BinaryMask& mask) {
  if (mask.size() == 0) throw Error(ErrorKind::validation, "cannot encode an empty mask");
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(mask.size()));
  std::size_t i = 0;
  for (Index r = 0; r < mask.rows(); ++r)
    for (Index c = 0; c < mask.cols(); ++c) pixels[i++] = mask(r, c) ? 255 : 0;
  return encode_rows(pixels, mask.rows(), mask.cols(), PNG_COLOR_TYPE_GRAY, 1);
}

void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask) {
  write_file_atomic(path, encode_mask_png(mask));
}

BinaryMask read_mask_png(const std::filesystem::path& path) { return binarize(read_png(path)); }

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::not_found, "cannot open " + path.string(), path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  static thread_local std::mt19937_64 salt{std::random_device{}()};
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(salt() & 0xffffff);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path.string(), path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::io, "short write to " + path.string(), path.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorKind::io, "cannot rename into " + path.string(), path.string());
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()),
                                                        text.size()));
}

}  // namespace rf
