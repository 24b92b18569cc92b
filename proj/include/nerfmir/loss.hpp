#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "nerfmir/common.hpp"

namespace nerfmir {

/// Dynamically-weighted squared-error loss over a ray batch:
///   L = (1 - alpha) * sum_{unmasked} ||pred - target||^2
///     +      alpha  * sum_{masked}   ||pred - target||^2.
/// unmasked/masked hold the raw (unweighted) partial sums, so
/// total == (1-alpha)*unmasked + alpha*masked.
template <typename T>
struct DwLoss {
  double total = 0;
  double unmasked = 0;
  double masked = 0;
  std::vector<std::array<T, 3>> grad;  // dL/dpred per ray
};

template <typename T>
DwLoss<T> dw_loss(std::span<const std::array<T, 3>> pred,
                  std::span<const std::array<T, 3>> target,
                  std::span<const std::uint8_t> is_masked, double alpha) {
  if (pred.size() != target.size() || pred.size() != is_masked.size())
    throw ValidationError("dw_loss: batch length mismatch");
  if (alpha < 0.0 || alpha > 1.0) throw ValidationError("dw_loss: alpha must be in [0, 1]");

  DwLoss<T> out;
  out.grad.assign(pred.size(), {T(0), T(0), T(0)});
  for (std::size_t r = 0; r < pred.size(); ++r) {
    double sq = 0;
    for (int ch = 0; ch < 3; ++ch) {
      const double d = static_cast<double>(pred[r][ch]) - static_cast<double>(target[r][ch]);
      sq += d * d;
    }
    const double w = is_masked[r] ? alpha : (1.0 - alpha);
    if (is_masked[r]) {
      out.masked += sq;
    } else {
      out.unmasked += sq;
    }
    for (int ch = 0; ch < 3; ++ch) {
      const double d = static_cast<double>(pred[r][ch]) - static_cast<double>(target[r][ch]);
      out.grad[r][ch] = static_cast<T>(2.0 * w * d);
    }
  }
  out.total = (1.0 - alpha) * out.unmasked + alpha * out.masked;
  return out;
}

}  // namespace nerfmir
