#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nerfmir/image.hpp"

namespace nerfmir {

struct Dataset;

/// Per-view binary occlusion map, 1 = masked.
struct MaskMatrix {
  int width = 0, height = 0;
  std::vector<std::uint8_t> bits;  // row-major, values 0/1

  MaskMatrix() = default;
  MaskMatrix(int w, int h)
      : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}

  std::uint8_t at(int row, int col) const { return bits[static_cast<std::size_t>(row) * width + col]; }
  std::uint8_t& at(int row, int col) { return bits[static_cast<std::size_t>(row) * width + col]; }
  long long count() const;
  bool operator==(const MaskMatrix&) const = default;
};

enum class MaskShape { square, round };
enum class MaskStyle { random, fixed };

/// Recipe for synthetic occlusions: which fraction of grid cells to mask,
/// with what shape, whether each view draws its own cells (random) or all
/// views share one draw (fixed), and the RGB value masked pixels take.
struct MaskSpec {
  double level = 0.25;
  MaskShape shape = MaskShape::square;
  MaskStyle style = MaskStyle::random;
  int unit = 10;
  std::array<std::uint8_t, 3> fill{96, 96, 96};
  std::uint64_t seed = 0;
};

/// Detector output box, given by its center pixel and extent.
struct BoundingBox {
  int row = 0, col = 0;  // center
  int width = 0, height = 0;
};

/// One mask per view. Cells are selected on the spec.unit grid:
/// round(level * K) of them, without replacement; style=fixed shares one
/// selection across views, style=random draws per view from the substream
/// (seed, view_index). If level > 0 rounds to zero cells, masks come back
/// empty and *warning (when given) says so.
std::vector<MaskMatrix> generate_masks(const Dataset& dataset, const MaskSpec& spec,
                                       std::string* warning = nullptr);

/// Mask for a single image size (the per-view worker behind generate_masks).
MaskMatrix generate_mask(int width, int height, const MaskSpec& spec,
                         std::span<const std::uint32_t> selected_cells);

/// output[p] = fill where mask is set, input[p] elsewhere.
Image8 apply_mask(const Image8& image, const MaskMatrix& mask,
                  const std::array<std::uint8_t, 3>& fill);

/// Union of the boxes clipped to the image; boxes fully outside contribute
/// nothing.
MaskMatrix mask_from_boxes(std::span<const BoundingBox> boxes, int width, int height);

}  // namespace nerfmir
