#pragma once

#include <cmath>
#include <numbers>

#include "nerfmir/common.hpp"

namespace nerfmir {

/// Frequency counts for the Fourier feature encodings of positions and view
/// directions. An encoded 3-vector has length 3 + 6L (identity concatenated
/// with sin/cos pairs at frequencies 2^0 ... 2^(L-1), times pi).
struct EncodingConfig {
  int l_pos = 10;
  int l_dir = 4;

  static int encoded_size(int l) { return 3 + 6 * l; }
  int pos_size() const { return encoded_size(l_pos); }
  int dir_size() const { return encoded_size(l_dir); }
};

/// out = [x, sin(2^0 pi x), cos(2^0 pi x), ..., sin(2^{L-1} pi x), cos(2^{L-1} pi x)],
/// written as 3 + 6L scalars.
template <typename T>
void positional_encoding(const T x[3], int l, T* out) {
  if (l < 0) throw ValidationError("positional_encoding: L must be >= 0");
  out[0] = x[0];
  out[1] = x[1];
  out[2] = x[2];
  T freq = static_cast<T>(std::numbers::pi);
  for (int band = 0; band < l; ++band) {
    const int base = 3 + 6 * band;
    for (int i = 0; i < 3; ++i) {
      const T arg = freq * x[i];
      out[base + i] = std::sin(arg);
      out[base + 3 + i] = std::cos(arg);
    }
    freq *= static_cast<T>(2);
  }
}

}  // namespace nerfmir
