#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace latentswipe {

// Row-major 8-bit RGB raster.
struct ImageBuffer {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;

  ImageBuffer() = default;
  ImageBuffer(std::size_t h, std::size_t w) : height(h), width(w), pixels(h * w * 3, 0) {}

  bool valid() const { return pixels.size() == height * width * 3; }
  std::uint8_t* at(std::size_t row, std::size_t col) { return pixels.data() + (row * width + col) * 3; }
  const std::uint8_t* at(std::size_t row, std::size_t col) const {
    return pixels.data() + (row * width + col) * 3;
  }
  bool operator==(const ImageBuffer&) const = default;
};

std::vector<std::uint8_t> encode_png(const ImageBuffer& image);
// Accepts 8-bit RGB/RGBA/gray PNGs; throws FormatError otherwise.
ImageBuffer decode_png(const std::vector<std::uint8_t>& bytes);

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace latentswipe
