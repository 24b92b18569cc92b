#pragma once

#include <limits>

#include "nerfmir/image.hpp"
#include "nerfmir/masking.hpp"

namespace nerfmir {

enum class Region { full, masked_only, unmasked_only };

struct MetricReport {
  double psnr = 0;   // dB; +infinity when mse == 0
  double ssim = 0;   // [-1, 1]; NaN for region-restricted reports
  double mse = 0;    // on the [0, 1] scale
  Region region = Region::full;
};

/// Mean squared error over the selected region, channels pooled, pixel
/// values on [0, 1].
double image_mse(const Image8& a, const Image8& b, const MaskMatrix* mask = nullptr,
                 Region region = Region::full);

/// 10 * log10(1 / mse); +infinity sentinel for identical inputs.
double psnr(const Image8& a, const Image8& b, const MaskMatrix* mask = nullptr,
            Region region = Region::full);

/// Single-scale SSIM: 11x11 Gaussian window (sigma 1.5), K1=0.01, K2=0.03,
/// dynamic range 1.0, valid windows only, per-channel then averaged.
double ssim(const Image8& a, const Image8& b);

inline double psnr_from_mse(double mse) {
  if (mse <= 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

}  // namespace nerfmir
