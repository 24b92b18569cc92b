#include "nerfmir/pere.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "nerfmir/rng.hpp"

namespace nerfmir {

PatchHistogram patch_histogram(const Image8& image, const PixelRect& rect) {
  if (rect.rows <= 0 || rect.cols <= 0) throw ValidationError("patch_histogram: empty rect");
  if (rect.row0 < 0 || rect.col0 < 0 || rect.row0 + rect.rows > image.height ||
      rect.col0 + rect.cols > image.width) {
    throw ValidationError("patch_histogram: rect outside the image");
  }
  if (image.channels != 3) throw ValidationError("patch_histogram: expected 3 channels");

  PatchHistogram hist;
  hist.total = static_cast<std::uint64_t>(rect.area());
  for (int r = rect.row0; r < rect.row0 + rect.rows; ++r) {
    for (int c = rect.col0; c < rect.col0 + rect.cols; ++c) {
      for (int ch = 0; ch < 3; ++ch) ++hist.counts[ch][image.at(r, c, ch)];
    }
  }
  return hist;
}

double patch_entropy(const PatchHistogram& hist) {
  if (hist.total == 0) return 0.0;
  const double inv_total = 1.0 / static_cast<double>(hist.total);
  double h = 0.0;
  for (const auto& channel : hist.counts) {
    for (std::uint32_t count : channel) {
      if (count == 0) continue;
      const double p = count * inv_total;
      h -= p * std::log(p);
    }
  }
  return h;
}

PatchWeights patch_weights(const Image8& image, const PatchGrid& grid, Exec exec) {
  const std::size_t k = grid.rects.size();
  if (k == 0) throw ValidationError("patch_weights: empty grid");

  PatchWeights pw;
  pw.entropy.resize(k);
  parallel_for(k, exec, [&](std::size_t i) {
    pw.entropy[i] = patch_entropy(patch_histogram(image, grid.rects[i]));
  });

  pw.weight.resize(k);
  const double sum = std::accumulate(pw.entropy.begin(), pw.entropy.end(), 0.0);
  if (sum > 0.0) {
    for (std::size_t i = 0; i < k; ++i) pw.weight[i] = pw.entropy[i] / sum;
  } else {
    std::fill(pw.weight.begin(), pw.weight.end(), 1.0 / static_cast<double>(k));
  }
  return pw;
}

double default_w_min(int patch_count, int rays_per_patch) {
  return 1.0 / (static_cast<double>(patch_count) * rays_per_patch);
}

RayBudget assign_rays(const PatchWeights& weights, int rays_per_patch, double w_min) {
  const std::size_t k = weights.weight.size();
  if (k == 0) throw ValidationError("assign_rays: no patches");
  if (rays_per_patch < 1) throw ValidationError("assign_rays: rays_per_patch must be >= 1");
  if (w_min < 0.0 || w_min >= 1.0) throw ValidationError("assign_rays: w_min must be in [0, 1)");

  const double total_rays = static_cast<double>(k) * rays_per_patch;

  std::vector<double> raw(k);
  for (std::size_t i = 0; i < k; ++i) {
    raw[i] = weights.weight[i] < w_min ? 1.0 : weights.weight[i] * total_rays;
  }
  const double raw_sum = std::accumulate(raw.begin(), raw.end(), 0.0);
  const auto target = static_cast<long long>(std::floor(raw_sum + 0.5));

  RayBudget budget;
  budget.counts.resize(k);
  std::vector<double> remainder(k);
  long long base_sum = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const int base = std::max(1, static_cast<int>(std::floor(raw[i])));
    budget.counts[i] = base;
    remainder[i] = raw[i] - base;  // negative when the floor lifted the share
    base_sum += base;
  }

  long long deficit = target - base_sum;
  if (deficit > 0) {
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t i = 0; i < k && deficit > 0; ++i, --deficit) ++budget.counts[order[i]];
  }

  budget.total = std::accumulate(budget.counts.begin(), budget.counts.end(), 0LL);
  return budget;
}

std::vector<std::pair<int, int>> sample_ray_pixels(const RayBudget& budget,
                                                   const PatchGrid& grid,
                                                   std::uint64_t seed, std::size_t count) {
  const std::size_t k = budget.counts.size();
  if (k != grid.rects.size())
    throw ValidationError("sample_ray_pixels: budget does not match the grid");
  if (count == 0) count = static_cast<std::size_t>(budget.total);

  // Cumulative counts for inverse-CDF patch draws.
  std::vector<long long> cdf(k);
  long long acc = 0;
  for (std::size_t i = 0; i < k; ++i) {
    acc += budget.counts[i];
    cdf[i] = acc;
  }

  Rng rng(seed);
  std::vector<std::pair<int, int>> pixels;
  pixels.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    const auto u = static_cast<long long>(rng.next_below(static_cast<std::uint64_t>(acc)));
    const std::size_t p =
        std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
    const PixelRect& rect = grid.rects[p];
    const int r = rect.row0 + static_cast<int>(rng.next_below(rect.rows));
    const int c = rect.col0 + static_cast<int>(rng.next_below(rect.cols));
    pixels.emplace_back(r, c);
  }
  return pixels;
}

std::array<std::uint8_t, 3> ramp_color(double t) {
  // Five-stop linear ramp: navy, blue, red, orange, yellow.
  static constexpr double stops[5][3] = {{0.05, 0.03, 0.35},
                                         {0.12, 0.30, 0.78},
                                         {0.80, 0.16, 0.13},
                                         {0.97, 0.55, 0.12},
                                         {0.99, 0.93, 0.35}};
  t = std::clamp(t, 0.0, 1.0);
  const double x = t * 4.0;
  const int lo = std::min(3, static_cast<int>(x));
  const double f = x - lo;
  std::array<std::uint8_t, 3> rgb;
  for (int ch = 0; ch < 3; ++ch) {
    rgb[ch] = quantize8(stops[lo][ch] * (1.0 - f) + stops[lo + 1][ch] * f);
  }
  return rgb;
}

Image8 heatmap(const RayBudget& budget, const PatchGrid& grid) {
  if (budget.counts.size() != grid.rects.size())
    throw ValidationError("heatmap: budget does not match the grid");
  const auto [mn, mx] = std::minmax_element(budget.counts.begin(), budget.counts.end());

  int width = 0, height = 0;
  for (const auto& r : grid.rects) {
    width = std::max(width, r.col0 + r.cols);
    height = std::max(height, r.row0 + r.rows);
  }

  Image8 img(width, height, 3);
  for (std::size_t i = 0; i < grid.rects.size(); ++i) {
    const double t = (*mx == *mn)
                         ? 0.5
                         : (budget.counts[i] - *mn) / static_cast<double>(*mx - *mn);
    const auto rgb = ramp_color(t);
    const PixelRect& rect = grid.rects[i];
    for (int r = rect.row0; r < rect.row0 + rect.rows; ++r) {
      for (int c = rect.col0; c < rect.col0 + rect.cols; ++c) {
        img.at(r, c, 0) = rgb[0];
        img.at(r, c, 1) = rgb[1];
        img.at(r, c, 2) = rgb[2];
      }
    }
  }
  return img;
}

void write_budget_csv(const std::filesystem::path& path, const PatchWeights& weights,
                      const RayBudget& budget) {
  if (weights.weight.size() != budget.counts.size())
    throw ValidationError("write_budget_csv: weights/budget size mismatch");
  std::ofstream out(path);
  if (!out) throw IoError("write_budget_csv: cannot write " + path.string());
  out << "patch_index,entropy,weight,rays\n";
  for (std::size_t i = 0; i < budget.counts.size(); ++i) {
    out << i << ',' << weights.entropy[i] << ',' << weights.weight[i] << ','
        << budget.counts[i] << '\n';
  }
}

}  // namespace nerfmir
