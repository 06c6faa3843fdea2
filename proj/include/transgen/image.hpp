#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace transgen {

// 8-bit interleaved RGB, row-major, top row first.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::uint8_t* pixel(int x, int y) { return data.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
  const std::uint8_t* pixel(int x, int y) const {
    return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }

  bool operator==(const RgbImage&) const = default;
};

// Binary mask; every element is 0 or 1.
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  Mask() = default;
  Mask(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0) {}

  std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }

  bool empty() const;
  std::size_t count() const;

  bool operator==(const Mask&) const = default;
};

// Binary netpbm I/O. Masks are stored as P5 with maxval 255 (0 / 255) and
// read back as 0 / 1 (any nonzero sample is foreground).
RgbImage read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const RgbImage& image);
Mask read_pgm_mask(const std::filesystem::path& path);
void write_pgm_mask(const std::filesystem::path& path, const Mask& mask);

}  // namespace transgen
