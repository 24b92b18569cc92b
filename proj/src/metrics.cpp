#include "nerfmir/metrics.hpp"

#include <cmath>
#include <vector>

namespace nerfmir {

namespace {

bool pixel_selected(const MaskMatrix* mask, Region region, int r, int c) {
  if (region == Region::full) return true;
  if (!mask || mask->bits.empty())
    return region == Region::unmasked_only;  // no mask means nothing is masked
  const bool masked = mask->at(r, c) != 0;
  return region == Region::masked_only ? masked : !masked;
}

}  // namespace

double image_mse(const Image8& a, const Image8& b, const MaskMatrix* mask, Region region) {
  if (!a.same_shape(b)) throw ValidationError("image_mse: shape mismatch");
  if (region != Region::full && mask && !mask->bits.empty() &&
      (mask->width != a.width || mask->height != a.height)) {
    throw ValidationError("image_mse: mask shape mismatch");
  }

  double acc = 0;
  long long n = 0;
  for (int r = 0; r < a.height; ++r) {
    for (int c = 0; c < a.width; ++c) {
      if (!pixel_selected(mask, region, r, c)) continue;
      for (int ch = 0; ch < a.channels; ++ch) {
        const double d = to_unit(a.at(r, c, ch)) - to_unit(b.at(r, c, ch));
        acc += d * d;
      }
      ++n;
    }
  }
  if (n == 0) throw ValidationError("image_mse: empty region");
  return acc / (static_cast<double>(n) * a.channels);
}

double psnr(const Image8& a, const Image8& b, const MaskMatrix* mask, Region region) {
  return psnr_from_mse(image_mse(a, b, mask, region));
}

namespace {

constexpr int kWindow = 11;

std::vector<double> gaussian_kernel() {
  std::vector<double> k(kWindow);
  const double sigma = 1.5;
  double sum = 0;
  for (int i = 0; i < kWindow; ++i) {
    const double x = i - (kWindow - 1) / 2.0;
    k[i] = std::exp(-x * x / (2.0 * sigma * sigma));
    sum += k[i];
  }
  for (auto& v : k) v /= sum;
  return k;
}

// Separable Gaussian filter, valid region only: output is
// (h - 10) x (w - 10).
std::vector<double> filter_valid(const std::vector<double>& img, int w, int h, int& ow,
                                 int& oh) {
  static const std::vector<double> kernel = gaussian_kernel();
  ow = w - kWindow + 1;
  oh = h - kWindow + 1;
  std::vector<double> horiz(static_cast<std::size_t>(ow) * h);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < ow; ++c) {
      double acc = 0;
      for (int i = 0; i < kWindow; ++i) acc += kernel[i] * img[static_cast<std::size_t>(r) * w + c + i];
      horiz[static_cast<std::size_t>(r) * ow + c] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int r = 0; r < oh; ++r) {
    for (int c = 0; c < ow; ++c) {
      double acc = 0;
      for (int i = 0; i < kWindow; ++i) acc += kernel[i] * horiz[static_cast<std::size_t>(r + i) * ow + c];
      out[static_cast<std::size_t>(r) * ow + c] = acc;
    }
  }
  return out;
}

double ssim_channel(const std::vector<double>& x, const std::vector<double>& y, int w,
                    int h) {
  constexpr double k1 = 0.01, k2 = 0.03, dynamic_range = 1.0;
  constexpr double c1 = (k1 * dynamic_range) * (k1 * dynamic_range);
  constexpr double c2 = (k2 * dynamic_range) * (k2 * dynamic_range);

  std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }

  int ow = 0, oh = 0;
  const auto mu_x = filter_valid(x, w, h, ow, oh);
  const auto mu_y = filter_valid(y, w, h, ow, oh);
  const auto s_xx = filter_valid(xx, w, h, ow, oh);
  const auto s_yy = filter_valid(yy, w, h, ow, oh);
  const auto s_xy = filter_valid(xy, w, h, ow, oh);

  double acc = 0;
  for (std::size_t i = 0; i < mu_x.size(); ++i) {
    const double var_x = s_xx[i] - mu_x[i] * mu_x[i];
    const double var_y = s_yy[i] - mu_y[i] * mu_y[i];
    const double cov = s_xy[i] - mu_x[i] * mu_y[i];
    const double num = (2.0 * mu_x[i] * mu_y[i] + c1) * (2.0 * cov + c2);
    const double den = (mu_x[i] * mu_x[i] + mu_y[i] * mu_y[i] + c1) * (var_x + var_y + c2);
    acc += num / den;
  }
  return acc / static_cast<double>(mu_x.size());
}

}  // namespace

double ssim(const Image8& a, const Image8& b) {
  if (!a.same_shape(b)) throw ValidationError("ssim: shape mismatch");
  if (a.width < kWindow || a.height < kWindow)
    throw ValidationError("ssim: image smaller than the 11x11 window");

  double acc = 0;
  std::vector<double> x(static_cast<std::size_t>(a.width) * a.height);
  std::vector<double> y(x.size());
  for (int ch = 0; ch < a.channels; ++ch) {
    for (int r = 0; r < a.height; ++r) {
      for (int c = 0; c < a.width; ++c) {
        x[static_cast<std::size_t>(r) * a.width + c] = to_unit(a.at(r, c, ch));
        y[static_cast<std::size_t>(r) * a.width + c] = to_unit(b.at(r, c, ch));
      }
    }
    acc += ssim_channel(x, y, a.width, a.height);
  }
  return acc / a.channels;
}

}  // namespace nerfmir
