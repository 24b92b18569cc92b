#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "nerfmir/common.hpp"

namespace nerfmir {

/// Interleaved row-major 8-bit image, 1 or 3 channels.
struct Image8 {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> data;

  Image8() = default;
  Image8(int w, int h, int c, std::uint8_t fill = 0)
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * h * c, fill) {
    if (w <= 0 || h <= 0 || (c != 1 && c != 3))
      throw ValidationError("Image8: bad dimensions");
  }

  std::size_t index(int row, int col, int ch = 0) const {
    return (static_cast<std::size_t>(row) * width + col) * channels + ch;
  }
  std::uint8_t& at(int row, int col, int ch = 0) { return data[index(row, col, ch)]; }
  std::uint8_t at(int row, int col, int ch = 0) const { return data[index(row, col, ch)]; }

  bool same_shape(const Image8& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
  bool operator==(const Image8& o) const = default;
};

/// round(255 * clamp(v, 0, 1))
inline std::uint8_t quantize8(double v) {
  if (v <= 0.0) return 0;
  if (v >= 1.0) return 255;
  return static_cast<std::uint8_t>(std::lround(255.0 * v));
}

/// Channel value on the [0, 1] scale.
inline double to_unit(std::uint8_t v) { return static_cast<double>(v) / 255.0; }

}  // namespace nerfmir
