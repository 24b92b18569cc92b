#pragma once

#include <vector>

#include "nerfmir/common.hpp"

namespace nerfmir {

struct PixelRect {
  int row0 = 0, col0 = 0;
  int rows = 0, cols = 0;

  long long area() const { return static_cast<long long>(rows) * cols; }
  bool contains(int r, int c) const {
    return r >= row0 && r < row0 + rows && c >= col0 && c < col0 + cols;
  }
};

/// Row-major tiling of an image into unit x unit cells. When unit does not
/// divide the image size the trailing row/column of cells is clipped, so
/// every pixel belongs to exactly one cell.
struct PatchGrid {
  int unit = 0;
  int tiles_x = 0, tiles_y = 0;       // columns, rows of cells
  std::vector<PixelRect> rects;       // index -> rectangle, row-major

  int count() const { return static_cast<int>(rects.size()); }
  int index_of_pixel(int row, int col) const {
    return (row / unit) * tiles_x + (col / unit);
  }
};

PatchGrid split_patches(int width, int height, int unit);

}  // namespace nerfmir
