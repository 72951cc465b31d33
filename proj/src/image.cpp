#include "latentswipe/image.hpp"

#include "latentswipe/errors.hpp"

#include <png.h>

#include <array>
#include <cstring>

namespace latentswipe {

namespace {

void png_error_fn(png_structp, png_const_charp msg) { throw FormatError(std::string("png: ") + msg); }
void png_warning_fn(png_structp, png_const_charp) {}

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
  if (cur->offset + length > cur->bytes->size()) throw FormatError("png: truncated data");
  std::memcpy(data, cur->bytes->data() + cur->offset, length);
  cur->offset += length;
}

constexpr char kBase64Alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

}  // namespace

std::vector<std::uint8_t> encode_png(const ImageBuffer& image) {
  if (!image.valid() || image.height == 0 || image.width == 0) throw FormatError("encode_png: invalid image");
  std::vector<std::uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
  if (!png) throw FormatError("png: cannot create write struct");
  png_infop info = png_create_info_struct(png);
  try {
    if (!info) throw FormatError("png: cannot create info struct");
    png_set_write_fn(png, &out, write_to_vector, flush_noop);
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (std::size_t r = 0; r < image.height; ++r)
      png_write_row(png, const_cast<png_bytep>(image.at(r, 0)));
    png_write_end(png, nullptr);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
  return out;
}

ImageBuffer decode_png(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw FormatError("not a PNG stream");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
  if (!png) throw FormatError("png: cannot create read struct");
  png_infop info = png_create_info_struct(png);
  ReadCursor cursor{&bytes, 0};
  ImageBuffer image;
  try {
    if (!info) throw FormatError("png: cannot create info struct");
    png_set_read_fn(png, &cursor, read_from_vector);
    png_read_info(png, info);
    const auto color = png_get_color_type(png, info);
    if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);
    image = ImageBuffer(png_get_image_height(png, info), png_get_image_width(png, info));
    if (png_get_rowbytes(png, info) != image.width * 3) throw FormatError("png: unsupported pixel layout");
    for (std::size_t r = 0; r < image.height; ++r) png_read_row(png, image.at(r, 0), nullptr);
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    for (int s = 18; s >= 0; s -= 6) out.push_back(kBase64Alphabet[(v >> s) & 63]);
  }
  if (i < bytes.size()) {
    std::uint32_t v = bytes[i] << 16;
    if (i + 1 < bytes.size()) v |= bytes[i + 1] << 8;
    out.push_back(kBase64Alphabet[(v >> 18) & 63]);
    out.push_back(kBase64Alphabet[(v >> 12) & 63]);
    out.push_back(i + 1 < bytes.size() ? kBase64Alphabet[(v >> 6) & 63] : '=');
    out.push_back('=');
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  std::array<int, 256> lookup;
  lookup.fill(-1);
  for (int i = 0; i < 64; ++i) lookup[static_cast<unsigned char>(kBase64Alphabet[i])] = i;
  std::vector<std::uint8_t> out;
  std::uint32_t acc = 0;
  int bits = 0;
  for (char ch : text) {
    if (ch == '=') break;
    if (ch == '\n' || ch == '\r' || ch == ' ') continue;
    const int v = lookup[static_cast<unsigned char>(ch)];
    if (v < 0) throw FormatError("invalid base64 character");
    acc = (acc << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xff));
    }
  }
  return out;
}

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed) {
  const auto* p = static_cast<const std::uint8_t*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace latentswipe
