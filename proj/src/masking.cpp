#include "nerfmir/masking.hpp"

#include <algorithm>
#include <cmath>

#include "nerfmir/dataset.hpp"
#include "nerfmir/parallel.hpp"
#include "nerfmir/patch_grid.hpp"
#include "nerfmir/rng.hpp"

namespace nerfmir {

long long MaskMatrix::count() const {
  long long n = 0;
  for (auto b : bits) n += b;
  return n;
}

namespace {

void rasterize_cell(MaskMatrix& mask, const PixelRect& rect, int unit, MaskShape shape) {
  if (shape == MaskShape::square) {
    for (int r = rect.row0; r < rect.row0 + rect.rows; ++r)
      for (int c = rect.col0; c < rect.col0 + rect.cols; ++c) mask.at(r, c) = 1;
    return;
  }
  // Round: pixel centers strictly inside the circle inscribed in the nominal
  // (unclipped) cell.
  const double cy = rect.row0 + unit / 2.0;
  const double cx = rect.col0 + unit / 2.0;
  const double r2 = (unit / 2.0) * (unit / 2.0);
  for (int r = rect.row0; r < rect.row0 + rect.rows; ++r) {
    for (int c = rect.col0; c < rect.col0 + rect.cols; ++c) {
      const double dy = r + 0.5 - cy;
      const double dx = c + 0.5 - cx;
      if (dy * dy + dx * dx < r2) mask.at(r, c) = 1;
    }
  }
}

}  // namespace

MaskMatrix generate_mask(int width, int height, const MaskSpec& spec,
                         std::span<const std::uint32_t> selected_cells) {
  const PatchGrid grid = split_patches(width, height, spec.unit);
  MaskMatrix mask(width, height);
  for (auto cell : selected_cells) {
    if (cell >= static_cast<std::uint32_t>(grid.count()))
      throw ValidationError("generate_mask: cell index out of range");
    rasterize_cell(mask, grid.rects[cell], spec.unit, spec.shape);
  }
  return mask;
}

std::vector<MaskMatrix> generate_masks(const Dataset& dataset, const MaskSpec& spec,
                                       std::string* warning) {
  if (spec.level < 0.0 || spec.level > 1.0)
    throw ValidationError("generate_masks: level must be in [0, 1]");
  if (dataset.views.empty()) throw ValidationError("generate_masks: empty dataset");
  const int w = dataset.intrinsics.width;
  const int h = dataset.intrinsics.height;
  if (spec.unit < 1 || spec.unit > std::min(w, h))
    throw ValidationError("generate_masks: unit must be in [1, min(W, H)]");

  const PatchGrid grid = split_patches(w, h, spec.unit);
  const auto k = static_cast<std::uint32_t>(grid.count());
  const auto n_selected =
      static_cast<std::uint32_t>(std::floor(spec.level * k + 0.5));  // round half up
  if (warning) warning->clear();
  if (n_selected == 0 && spec.level > 0.0 && warning) {
    *warning = "generate_masks: level " + std::to_string(spec.level) +
               " rounds to zero cells of " + std::to_string(k) + "; masks are empty";
  }

  std::vector<std::vector<std::uint32_t>> selections(dataset.views.size());
  if (spec.style == MaskStyle::fixed) {
    Rng rng(substream(spec.seed, 0x66697865));  // one shared draw
    const auto cells = rng.sample_without_replacement(k, n_selected);
    for (auto& s : selections) s = cells;
  } else {
    for (std::size_t v = 0; v < selections.size(); ++v) {
      Rng rng(substream(spec.seed, 0x72616e64, v));
      selections[v] = rng.sample_without_replacement(k, n_selected);
    }
  }

  std::vector<MaskMatrix> masks(dataset.views.size());
  parallel_for(masks.size(), Exec::parallel, [&](std::size_t v) {
    masks[v] = generate_mask(w, h, spec, selections[v]);
  });
  return masks;
}

Image8 apply_mask(const Image8& image, const MaskMatrix& mask,
                  const std::array<std::uint8_t, 3>& fill) {
  if (image.width != mask.width || image.height != mask.height)
    throw ValidationError("apply_mask: mask/image dimension mismatch");
  if (image.channels != 3) throw ValidationError("apply_mask: expected a 3-channel image");
  Image8 out = image;
  for (int r = 0; r < image.height; ++r) {
    for (int c = 0; c < image.width; ++c) {
      if (mask.at(r, c)) {
        out.at(r, c, 0) = fill[0];
        out.at(r, c, 1) = fill[1];
        out.at(r, c, 2) = fill[2];
      }
    }
  }
  return out;
}

MaskMatrix mask_from_boxes(std::span<const BoundingBox> boxes, int width, int height) {
  if (width <= 0 || height <= 0) throw ValidationError("mask_from_boxes: empty image");
  MaskMatrix mask(width, height);
  for (const auto& box : boxes) {
    const int top = box.row - box.height / 2;
    const int left = box.col - box.width / 2;
    const int r0 = std::max(0, top);
    const int r1 = std::min(height, top + box.height);
    const int c0 = std::max(0, left);
    const int c1 = std::min(width, left + box.width);
    for (int r = r0; r < r1; ++r)
      for (int c = c0; c < c1; ++c) mask.at(r, c) = 1;
  }
  return mask;
}

}  // namespace nerfmir
