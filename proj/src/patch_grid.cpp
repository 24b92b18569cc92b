#include "nerfmir/patch_grid.hpp"

#include <algorithm>
#include <string>

namespace nerfmir {

PatchGrid split_patches(int width, int height, int unit) {
  if (unit < 1) throw ValidationError("split_patches: unit must be >= 1");
  if (width <= 0 || height <= 0) throw ValidationError("split_patches: empty image");
  if (unit > std::min(width, height)) {
    throw ValidationError("split_patches: unit " + std::to_string(unit) +
                          " exceeds image side " + std::to_string(std::min(width, height)));
  }

  PatchGrid grid;
  grid.unit = unit;
  grid.tiles_x = (width + unit - 1) / unit;
  grid.tiles_y = (height + unit - 1) / unit;
  grid.rects.reserve(static_cast<std::size_t>(grid.tiles_x) * grid.tiles_y);
  for (int ty = 0; ty < grid.tiles_y; ++ty) {
    for (int tx = 0; tx < grid.tiles_x; ++tx) {
      PixelRect r;
      r.row0 = ty * unit;
      r.col0 = tx * unit;
      r.rows = std::min(unit, height - r.row0);
      r.cols = std::min(unit, width - r.col0);
      grid.rects.push_back(r);
    }
  }
  return grid;
}

}  // namespace nerfmir
