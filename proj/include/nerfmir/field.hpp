#pragma once

// The radiance field: encoded position through four ReLU hidden layers of
// width 64. Density branches off the third hidden layer (softplus head), the
// encoded view direction joins before the fourth, and the color head applies
// a sigmoid. Density therefore never sees the direction. Forward caches
// activations so the manual reverse pass can accumulate exact parameter
// gradients over a batch.

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nerfmir/common.hpp"
#include "nerfmir/encoding.hpp"
#include "nerfmir/rng.hpp"

namespace nerfmir {

template <typename T>
struct Linear {
  int in = 0, out = 0;
  std::vector<T> w;  // out x in, row-major
  std::vector<T> b;  // out

  Linear() = default;
  Linear(int in_, int out_) : in(in_), out(out_), w(static_cast<std::size_t>(in_) * out_, T(0)), b(out_, T(0)) {}

  void forward(const T* x, T* y) const {
    for (int o = 0; o < out; ++o) {
      T acc = b[o];
      const T* row = w.data() + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) acc += row[i] * x[i];
      y[o] = acc;
    }
  }

  /// Accumulates dL/dW, dL/db from dL/dy and the cached input; optionally
  /// writes dL/dx.
  void backward(const T* x, const T* dy, Linear<T>& grad, T* dx) const {
    for (int o = 0; o < out; ++o) {
      const T g = dy[o];
      grad.b[o] += g;
      T* grow = grad.w.data() + static_cast<std::size_t>(o) * in;
      const T* row = w.data() + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) grow[i] += g * x[i];
      if (dx) {
        for (int i = 0; i < in; ++i) dx[i] += g * row[i];
      }
    }
  }
};

inline constexpr int kHiddenWidth = 64;

template <typename T>
struct Mlp {
  EncodingConfig encoding;
  Linear<T> l0, l1, l2;     // position trunk
  Linear<T> sigma_head;     // 64 -> 1, softplus outside
  Linear<T> l3;             // concat(trunk, encoded dir) -> 64
  Linear<T> rgb_head;       // 64 -> 3, sigmoid outside

  Mlp() = default;
  explicit Mlp(const EncodingConfig& enc, int width = kHiddenWidth)
      : encoding(enc),
        l0(enc.pos_size(), width),
        l1(width, width),
        l2(width, width),
        sigma_head(width, 1),
        l3(width + enc.dir_size(), width),
        rgb_head(width, 3) {}

  int width() const { return l0.out; }

  template <typename F>
  void for_each_layer(F&& f) {
    f(l0); f(l1); f(l2); f(sigma_head); f(l3); f(rgb_head);
  }
  template <typename F>
  void for_each_layer(F&& f) const {
    f(l0); f(l1); f(l2); f(sigma_head); f(l3); f(rgb_head);
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for_each_layer([&](const Linear<T>& l) { n += l.w.size() + l.b.size(); });
    return n;
  }

  void fill(T value) {
    for_each_layer([&](Linear<T>& l) {
      std::fill(l.w.begin(), l.w.end(), value);
      std::fill(l.b.begin(), l.b.end(), value);
    });
  }

  Mlp<T> zeros_like() const {
    Mlp<T> z = *this;
    z.fill(T(0));
    return z;
  }
};

/// Uniform fan-in initialization, limit sqrt(6 / fan_in), biases zero.
template <typename T>
Mlp<T> init_mlp(const EncodingConfig& enc, std::uint64_t seed, int width = kHiddenWidth) {
  Mlp<T> mlp(enc, width);
  Rng rng(substream(seed, 0x6d6c70));
  mlp.for_each_layer([&](Linear<T>& l) {
    const double limit = std::sqrt(6.0 / l.in);
    for (auto& w : l.w) w = static_cast<T>((2.0 * rng.next_double() - 1.0) * limit);
  });
  return mlp;
}

namespace detail {

template <typename T>
T softplus(T u) {
  if (u > T(30)) return u;
  if (u < T(-30)) return std::exp(u);
  return std::log1p(std::exp(u));
}

template <typename T>
T sigmoid(T u) {
  if (u >= T(0)) {
    const T e = std::exp(-u);
    return T(1) / (T(1) + e);
  }
  const T e = std::exp(u);
  return e / (T(1) + e);
}

}  // namespace detail

/// Per-sample activations kept for the reverse pass; laid out as contiguous
/// arrays of batch_size rows.
template <typename T>
struct FieldCache {
  int batch = 0;
  int width = 0, pos_dim = 0, dir_dim = 0;
  std::vector<T> enc_pos, h0, h1, h2, sigma_pre, enc_dir, x3, h3, rgb;

  void resize(int batch_size, const Mlp<T>& mlp) {
    batch = batch_size;
    width = mlp.width();
    pos_dim = mlp.encoding.pos_size();
    dir_dim = mlp.encoding.dir_size();
    const auto n = static_cast<std::size_t>(batch_size);
    enc_pos.resize(n * pos_dim);
    h0.resize(n * width);
    h1.resize(n * width);
    h2.resize(n * width);
    sigma_pre.resize(n);
    enc_dir.resize(n * dir_dim);
    x3.resize(n * (width + dir_dim));
    h3.resize(n * width);
    rgb.resize(n * 3);
  }
};

template <typename T>
void throw_non_finite(const char* where, int sample) {
  throw NumericError(std::string("field_forward: non-finite value in ") + where +
                     " at sample " + std::to_string(sample));
}

/// Evaluates the field for a batch of (position, direction) rows (3 scalars
/// each). rgb gets 3 values per sample in [0,1], sigma one non-negative
/// density. Pass a cache to enable field_backward afterwards.
template <typename T>
void field_forward(const Mlp<T>& mlp, const T* positions, const T* directions, int batch,
                   T* rgb, T* sigma, FieldCache<T>* cache = nullptr) {
  if (batch <= 0) throw ValidationError("field_forward: empty batch");
  const int width = mlp.width();
  const int pos_dim = mlp.encoding.pos_size();
  const int dir_dim = mlp.encoding.dir_size();
  if (cache) cache->resize(batch, mlp);

  std::vector<T> enc_pos(pos_dim), h0(width), h1(width), h2(width), enc_dir(dir_dim),
      x3(width + dir_dim), h3(width), rgb_pre(3);

  for (int s = 0; s < batch; ++s) {
    positional_encoding(positions + 3 * s, mlp.encoding.l_pos, enc_pos.data());
    mlp.l0.forward(enc_pos.data(), h0.data());
    for (auto& v : h0) v = v > T(0) ? v : T(0);
    mlp.l1.forward(h0.data(), h1.data());
    for (auto& v : h1) v = v > T(0) ? v : T(0);
    mlp.l2.forward(h1.data(), h2.data());
    for (auto& v : h2) v = v > T(0) ? v : T(0);

    T sigma_pre;
    mlp.sigma_head.forward(h2.data(), &sigma_pre);
    sigma[s] = detail::softplus(sigma_pre);

    positional_encoding(directions + 3 * s, mlp.encoding.l_dir, enc_dir.data());
    std::copy(h2.begin(), h2.end(), x3.begin());
    std::copy(enc_dir.begin(), enc_dir.end(), x3.begin() + width);
    mlp.l3.forward(x3.data(), h3.data());
    for (auto& v : h3) v = v > T(0) ? v : T(0);
    mlp.rgb_head.forward(h3.data(), rgb_pre.data());
    for (int ch = 0; ch < 3; ++ch) rgb[3 * s + ch] = detail::sigmoid(rgb_pre[ch]);

    if (!std::isfinite(static_cast<double>(sigma[s]))) throw_non_finite<T>("sigma head", s);
    for (int ch = 0; ch < 3; ++ch) {
      if (!std::isfinite(static_cast<double>(rgb[3 * s + ch])))
        throw_non_finite<T>("rgb head", s);
    }

    if (cache) {
      const auto n = static_cast<std::size_t>(s);
      std::copy(enc_pos.begin(), enc_pos.end(), cache->enc_pos.begin() + n * pos_dim);
      std::copy(h0.begin(), h0.end(), cache->h0.begin() + n * width);
      std::copy(h1.begin(), h1.end(), cache->h1.begin() + n * width);
      std::copy(h2.begin(), h2.end(), cache->h2.begin() + n * width);
      cache->sigma_pre[n] = sigma_pre;
      std::copy(enc_dir.begin(), enc_dir.end(), cache->enc_dir.begin() + n * dir_dim);
      std::copy(x3.begin(), x3.end(), cache->x3.begin() + n * (width + dir_dim));
      std::copy(h3.begin(), h3.end(), cache->h3.begin() + n * width);
      std::copy(rgb + 3 * s, rgb + 3 * s + 3, cache->rgb.begin() + n * 3);
    }
  }
}

/// Convenience single-sample forward.
template <typename T>
void field_forward_one(const Mlp<T>& mlp, const T position[3], const T direction[3],
                       T rgb[3], T& sigma) {
  field_forward(mlp, position, direction, 1, rgb, &sigma);
}

/// Reverse pass: accumulates exact parameter gradients (summed over the
/// batch) into grad from upstream d_rgb (3 per sample) and d_sigma (1 per
/// sample). The cache must come from the matching field_forward call.
template <typename T>
void field_backward(const Mlp<T>& mlp, const FieldCache<T>& cache, const T* d_rgb,
                    const T* d_sigma, Mlp<T>& grad) {
  if (cache.batch <= 0) throw ValidationError("field_backward: empty batch");
  if (cache.width != mlp.width() || cache.pos_dim != mlp.encoding.pos_size() ||
      cache.dir_dim != mlp.encoding.dir_size()) {
    throw ValidationError("field_backward: cache does not match the network");
  }
  const int width = cache.width;
  const int x3_dim = width + cache.dir_dim;

  std::vector<T> d_rgb_pre(3), d_h3(width), d_x3(x3_dim), d_h2(width), d_h1(width),
      d_h0(width);

  for (int s = 0; s < cache.batch; ++s) {
    const auto n = static_cast<std::size_t>(s);
    const T* h0 = cache.h0.data() + n * width;
    const T* h1 = cache.h1.data() + n * width;
    const T* h2 = cache.h2.data() + n * width;
    const T* x3 = cache.x3.data() + n * x3_dim;
    const T* h3 = cache.h3.data() + n * width;
    const T* rgb = cache.rgb.data() + n * 3;
    const T* enc_pos = cache.enc_pos.data() + n * cache.pos_dim;

    // rgb head: sigmoid' = y (1 - y)
    for (int ch = 0; ch < 3; ++ch)
      d_rgb_pre[ch] = d_rgb[3 * s + ch] * rgb[ch] * (T(1) - rgb[ch]);
    std::fill(d_h3.begin(), d_h3.end(), T(0));
    mlp.rgb_head.backward(h3, d_rgb_pre.data(), grad.rgb_head, d_h3.data());

    for (int i = 0; i < width; ++i) d_h3[i] = h3[i] > T(0) ? d_h3[i] : T(0);
    std::fill(d_x3.begin(), d_x3.end(), T(0));
    mlp.l3.backward(x3, d_h3.data(), grad.l3, d_x3.data());

    // sigma head: softplus' = sigmoid(pre)
    const T d_sigma_pre = d_sigma[s] * detail::sigmoid(cache.sigma_pre[n]);
    std::copy(d_x3.begin(), d_x3.begin() + width, d_h2.begin());
    mlp.sigma_head.backward(h2, &d_sigma_pre, grad.sigma_head, d_h2.data());

    for (int i = 0; i < width; ++i) d_h2[i] = h2[i] > T(0) ? d_h2[i] : T(0);
    std::fill(d_h1.begin(), d_h1.end(), T(0));
    mlp.l2.backward(h1, d_h2.data(), grad.l2, d_h1.data());

    for (int i = 0; i < width; ++i) d_h1[i] = h1[i] > T(0) ? d_h1[i] : T(0);
    std::fill(d_h0.begin(), d_h0.end(), T(0));
    mlp.l1.backward(h0, d_h1.data(), grad.l1, d_h0.data());

    for (int i = 0; i < width; ++i) d_h0[i] = h0[i] > T(0) ? d_h0[i] : T(0);
    mlp.l0.backward(enc_pos, d_h0.data(), grad.l0, nullptr);
  }
}

/// grad_into += other, layer by layer, fixed order.
template <typename T>
void add_gradients(Mlp<T>& grad_into, const Mlp<T>& other) {
  auto add = [](Linear<T>& a, const Linear<T>& b) {
    for (std::size_t i = 0; i < a.w.size(); ++i) a.w[i] += b.w[i];
    for (std::size_t i = 0; i < a.b.size(); ++i) a.b[i] += b.b[i];
  };
  add(grad_into.l0, other.l0);
  add(grad_into.l1, other.l1);
  add(grad_into.l2, other.l2);
  add(grad_into.sigma_head, other.sigma_head);
  add(grad_into.l3, other.l3);
  add(grad_into.rgb_head, other.rgb_head);
}

}  // namespace nerfmir
