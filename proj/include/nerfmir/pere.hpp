#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "nerfmir/image.hpp"
#include "nerfmir/parallel.hpp"
#include "nerfmir/patch_grid.hpp"

namespace nerfmir {

// PERE: per-patch image entropy decides how many rays each patch gets.
// Textured patches emit more rays, flat (and freshly masked, fill-colored)
// patches fall back to the one-ray floor.

struct PatchHistogram {
  std::array<std::array<std::uint32_t, 256>, 3> counts{};  // per channel
  std::uint64_t total = 0;                                 // pixels in the patch
};

PatchHistogram patch_histogram(const Image8& image, const PixelRect& rect);

/// Shannon entropy of the per-channel intensity frequencies, summed over the
/// three channels, in nats. Empty bins contribute zero.
double patch_entropy(const PatchHistogram& hist);

struct PatchWeights {
  std::vector<double> entropy;  // H(P_k) >= 0
  std::vector<double> weight;   // normalized, sums to 1
};

/// Entropy per patch, normalized across the grid. A fully constant image
/// (all entropies zero) falls back to uniform 1/K weights.
PatchWeights patch_weights(const Image8& image, const PatchGrid& grid,
                           Exec exec = Exec::parallel);

struct RayBudget {
  std::vector<int> counts;  // per patch, each >= 1
  long long total = 0;
};

/// The weight that earns exactly one ray, 1 / (K * rays_per_patch). Patches
/// below the threshold get the floor allocation.
double default_w_min(int patch_count, int rays_per_patch);

/// Per-patch ray counts: floor-thresholded shares of K * rays_per_patch,
/// integerized by floor plus largest-remainder top-up. Every patch keeps at
/// least one ray.
RayBudget assign_rays(const PatchWeights& weights, int rays_per_patch, double w_min);

/// One epoch's stochastic realization of the budget: `count` draws (default
/// budget.total), each picking a patch with probability proportional to its
/// budget and a uniform pixel inside that patch. Returns (row, col) pairs.
std::vector<std::pair<int, int>> sample_ray_pixels(const RayBudget& budget,
                                                   const PatchGrid& grid,
                                                   std::uint64_t seed,
                                                   std::size_t count = 0);

/// Min-max normalized per-patch budget rendered through a fixed color ramp
/// (dark blue -> red -> yellow, see ramp_color). A constant budget renders
/// at the mid-ramp color.
Image8 heatmap(const RayBudget& budget, const PatchGrid& grid);

/// The heatmap's color ramp, t in [0, 1].
std::array<std::uint8_t, 3> ramp_color(double t);

/// CSV rows (patch_index, entropy, weight, rays) for inspection.
void write_budget_csv(const std::filesystem::path& path, const PatchWeights& weights,
                      const RayBudget& budget);

}  // namespace nerfmir
