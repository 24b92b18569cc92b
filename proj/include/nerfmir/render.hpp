#pragma once

// Volume rendering along camera rays: stratified coarse samples, inverse-CDF
// importance samples from the coarse weights, and the quadrature
//   C = sum_i T_i (1 - exp(-sigma_i delta_i)) c_i,
// with transmittance T_i = exp(-sum_{j<i} sigma_j delta_j). The reverse pass
// of the quadrature is exact, so the whole ray pipeline is differentiable.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "nerfmir/camera.hpp"
#include "nerfmir/field.hpp"
#include "nerfmir/image.hpp"
#include "nerfmir/parallel.hpp"
#include "nerfmir/rng.hpp"

namespace nerfmir {

struct RenderConfig {
  int n_coarse = 32;
  int n_fine = 32;          // 0 disables the fine pass
  bool deterministic = false;  // bin centers / stratified midpoints, no jitter
  double delta_cap = 1e10;  // delta assigned to the final sample
  double eps_pdf = 1e-5;    // keeps the importance CDF non-degenerate
  std::uint64_t seed = 0;
};

/// Strictly increasing ray parameters plus the forward differences; the last
/// delta is the configured cap.
template <typename T>
struct SampleSet {
  std::vector<T> t;
  std::vector<T> delta;

  static SampleSet<T> from_t_values(std::vector<T> t_values, T delta_cap) {
    for (std::size_t i = 1; i < t_values.size(); ++i) {
      if (!(t_values[i] > t_values[i - 1]))
        throw ValidationError("SampleSet: t values must be strictly increasing");
    }
    SampleSet<T> s;
    s.t = std::move(t_values);
    s.delta.resize(s.t.size());
    for (std::size_t i = 0; i + 1 < s.t.size(); ++i) s.delta[i] = s.t[i + 1] - s.t[i];
    if (!s.t.empty()) s.delta.back() = delta_cap;
    return s;
  }
};

/// One draw per equal-width bin of [near, far]; bin centers when rng is null.
template <typename T>
SampleSet<T> stratified_samples(T near, T far, int n, Rng* rng, T delta_cap = T(1e10)) {
  if (n < 1) throw ValidationError("stratified_samples: need at least one sample");
  if (!(far > near)) throw ValidationError("stratified_samples: far must exceed near");
  std::vector<T> t(n);
  const T width = (far - near) / static_cast<T>(n);
  for (int i = 0; i < n; ++i) {
    const T u = rng ? static_cast<T>(rng->next_double()) : T(0.5);
    t[i] = near + width * (static_cast<T>(i) + u);
  }
  return SampleSet<T>::from_t_values(std::move(t), delta_cap);
}

/// Inverse-CDF draws from the piecewise-constant density proportional to
/// (interval_weights + eps_pdf) over the coarse intervals, merged and sorted
/// with the coarse samples. interval_weights has coarse.t.size()-1 entries.
/// Stratified u; midpoints when rng is null.
template <typename T>
SampleSet<T> importance_samples(const SampleSet<T>& coarse,
                                std::span<const T> interval_weights, int n_fine, Rng* rng,
                                T eps_pdf = T(1e-5), T delta_cap = T(1e10)) {
  const std::size_t n_int = coarse.t.size() >= 2 ? coarse.t.size() - 1 : 0;
  if (interval_weights.size() != n_int)
    throw ValidationError("importance_samples: weights must cover the coarse intervals");
  if (n_fine < 1) throw ValidationError("importance_samples: need at least one sample");
  if (n_int == 0) throw ValidationError("importance_samples: need at least two coarse samples");

  std::vector<T> cdf(n_int + 1, T(0));
  for (std::size_t i = 0; i < n_int; ++i) {
    const T w = std::max(T(0), interval_weights[i]) + eps_pdf;
    cdf[i + 1] = cdf[i] + w;
  }
  const T total = cdf.back();

  std::vector<T> t_new(n_fine);
  for (int j = 0; j < n_fine; ++j) {
    const T xi = rng ? static_cast<T>(rng->next_double()) : T(0.5);
    const T u = (static_cast<T>(j) + xi) / static_cast<T>(n_fine) * total;
    const std::size_t hi =
        std::min<std::size_t>(n_int, std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    const std::size_t idx = hi > 0 ? hi - 1 : 0;
    const T seg = cdf[idx + 1] - cdf[idx];
    const T frac = seg > T(0) ? (u - cdf[idx]) / seg : T(0.5);
    t_new[j] = coarse.t[idx] + frac * (coarse.t[idx + 1] - coarse.t[idx]);
  }

  std::vector<T> merged;
  merged.reserve(coarse.t.size() + t_new.size());
  merged.insert(merged.end(), coarse.t.begin(), coarse.t.end());
  merged.insert(merged.end(), t_new.begin(), t_new.end());
  std::sort(merged.begin(), merged.end());
  // Nudge exact duplicates apart so the set stays strictly increasing.
  for (std::size_t i = 1; i < merged.size(); ++i) {
    if (merged[i] <= merged[i - 1]) {
      merged[i] = std::nextafter(merged[i - 1], std::numeric_limits<T>::max());
    }
  }
  return SampleSet<T>::from_t_values(std::move(merged), delta_cap);
}

template <typename T>
struct CompositeResult {
  std::array<T, 3> rgb{};
  std::vector<T> weights;    // w_i = T_i (1 - exp(-sigma_i delta_i))
  T transmittance_end = T(1);
  T depth = T(0);            // sum w_i t_i, zero when t values are not supplied
};

/// The quadrature above. colors has 3 entries per sample. t_values may be
/// empty (depth comes back 0).
template <typename T>
CompositeResult<T> composite(std::span<const T> colors, std::span<const T> sigmas,
                             std::span<const T> deltas, std::span<const T> t_values = {}) {
  const std::size_t n = sigmas.size();
  if (colors.size() != 3 * n || deltas.size() != n)
    throw ValidationError("composite: length mismatch");
  if (!t_values.empty() && t_values.size() != n)
    throw ValidationError("composite: t_values length mismatch");

  CompositeResult<T> out;
  out.weights.resize(n);
  T transmittance = T(1);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(sigmas[i] >= T(0))) throw ValidationError("composite: negative density");
    if (!(deltas[i] > T(0))) throw ValidationError("composite: non-positive delta");
    const T att = std::exp(-sigmas[i] * deltas[i]);
    const T w = transmittance * (T(1) - att);
    out.weights[i] = w;
    for (int ch = 0; ch < 3; ++ch) out.rgb[ch] += w * colors[3 * i + ch];
    if (!t_values.empty()) out.depth += w * t_values[i];
    transmittance *= att;
  }
  out.transmittance_end = transmittance;
  return out;
}

/// Exact adjoint of composite w.r.t. colors and sigmas given upstream d_rgb.
/// Accumulates into d_colors (3 per sample) and d_sigmas.
template <typename T>
void composite_backward(std::span<const T> colors, std::span<const T> sigmas,
                        std::span<const T> deltas, const std::array<T, 3>& d_rgb,
                        std::span<T> d_colors, std::span<T> d_sigmas) {
  const std::size_t n = sigmas.size();
  if (colors.size() != 3 * n || deltas.size() != n || d_colors.size() != 3 * n ||
      d_sigmas.size() != n) {
    throw ValidationError("composite_backward: length mismatch");
  }

  // Forward quantities.
  std::vector<T> transmittance(n);  // T_i before sample i
  std::vector<T> att(n);
  T trans = T(1);
  for (std::size_t i = 0; i < n; ++i) {
    transmittance[i] = trans;
    att[i] = std::exp(-sigmas[i] * deltas[i]);
    trans *= att[i];
  }

  // dC/dc_i = w_i, per channel.
  for (std::size_t i = 0; i < n; ++i) {
    const T w = transmittance[i] * (T(1) - att[i]);
    for (int ch = 0; ch < 3; ++ch) d_colors[3 * i + ch] += d_rgb[ch] * w;
  }

  // dC/dsigma_i = delta_i (T_i exp(-sigma_i delta_i) c_i - sum_{j>i} w_j c_j).
  // Accumulate the tail sum right-to-left.
  std::array<T, 3> tail{};  // sum_{j>i} w_j c_j, dotted with d_rgb below
  for (std::size_t k = n; k-- > 0;) {
    const T w = transmittance[k] * (T(1) - att[k]);
    T ds = T(0);
    for (int ch = 0; ch < 3; ++ch) {
      ds += d_rgb[ch] *
            (transmittance[k] * att[k] * colors[3 * k + ch] - tail[ch]);
    }
    d_sigmas[k] += deltas[k] * ds;
    for (int ch = 0; ch < 3; ++ch) tail[ch] += w * colors[3 * k + ch];
  }
}

/// Any callable (pos[3], dir[3], rgb[3]&, sigma&) works as a field here; the
/// analytic test fields and the MLP share this path.
template <typename T, typename FieldFn>
void eval_field(FieldFn&& field, const Ray& ray, const SampleSet<T>& samples,
                std::vector<T>& colors, std::vector<T>& sigmas) {
  const std::size_t n = samples.t.size();
  colors.resize(3 * n);
  sigmas.resize(n);
  T pos[3], dir[3];
  for (int i = 0; i < 3; ++i) dir[i] = static_cast<T>(ray.direction[i]);
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < 3; ++k)
      pos[k] = static_cast<T>(ray.origin[k]) + samples.t[i] * dir[k];
    field(pos, dir, &colors[3 * i], sigmas[i]);
  }
}

template <typename T>
struct RayRender {
  std::array<T, 3> coarse_rgb{};
  std::array<T, 3> fine_rgb{};
};

/// Interval weights for the importance pass: mean of the two endpoint
/// composite weights.
template <typename T>
std::vector<T> interval_weights_from(const std::vector<T>& sample_weights) {
  std::vector<T> w(sample_weights.size() >= 1 ? sample_weights.size() - 1 : 0);
  for (std::size_t i = 0; i < w.size(); ++i)
    w[i] = (sample_weights[i] + sample_weights[i + 1]) / T(2);
  return w;
}

/// Two-pass render of a single ray with arbitrary coarse/fine field
/// callables. rng null means deterministic sampling.
template <typename T, typename CoarseFn, typename FineFn>
RayRender<T> render_ray_fields(CoarseFn&& coarse_field, FineFn&& fine_field, const Ray& ray,
                               const RenderConfig& cfg, Rng* rng) {
  if (!(ray.far > ray.near)) throw ValidationError("render_ray: far must exceed near");
  RayRender<T> out;

  const auto coarse = stratified_samples<T>(static_cast<T>(ray.near),
                                            static_cast<T>(ray.far), cfg.n_coarse, rng,
                                            static_cast<T>(cfg.delta_cap));
  std::vector<T> colors, sigmas;
  eval_field(coarse_field, ray, coarse, colors, sigmas);
  const auto cres = composite<T>(colors, sigmas, coarse.delta);
  out.coarse_rgb = cres.rgb;

  if (cfg.n_fine <= 0) {
    out.fine_rgb = out.coarse_rgb;
    return out;
  }

  const auto iw = interval_weights_from(cres.weights);
  const auto merged = importance_samples<T>(coarse, iw, cfg.n_fine, rng,
                                            static_cast<T>(cfg.eps_pdf),
                                            static_cast<T>(cfg.delta_cap));
  eval_field(fine_field, ray, merged, colors, sigmas);
  out.fine_rgb = composite<T>(colors, sigmas, merged.delta).rgb;
  return out;
}

template <typename T>
RayRender<T> render_ray(const Mlp<T>& coarse, const Mlp<T>& fine, const Ray& ray,
                        const RenderConfig& cfg, Rng* rng) {
  auto coarse_fn = [&](const T* p, const T* d, T* rgb, T& sigma) {
    field_forward(coarse, p, d, 1, rgb, &sigma);
  };
  auto fine_fn = [&](const T* p, const T* d, T* rgb, T& sigma) {
    field_forward(fine, p, d, 1, rgb, &sigma);
  };
  return render_ray_fields<T>(coarse_fn, fine_fn, ray, cfg, rng);
}

/// Full-frame render of the fine pass, quantized to 8 bits. Pixels are
/// independent; each derives its jitter stream from (seed, pixel index), so
/// serial and parallel execution give identical images.
template <typename T>
Image8 render_image(const Mlp<T>& coarse, const Mlp<T>& fine,
                    const CameraIntrinsics& intrinsics, const Pose& pose, double near,
                    double far, const RenderConfig& cfg, Exec exec = Exec::parallel) {
  intrinsics.validate();
  pose.validate();
  Image8 img(intrinsics.width, intrinsics.height, 3);
  const std::size_t n_pixels =
      static_cast<std::size_t>(intrinsics.width) * intrinsics.height;
  parallel_for(n_pixels, exec, [&](std::size_t p) {
    const int row = static_cast<int>(p) / intrinsics.width;
    const int col = static_cast<int>(p) % intrinsics.width;
    Ray ray = camera_ray(intrinsics, pose, row, col);
    ray.near = near;
    ray.far = far;
    Rng rng(substream(cfg.seed, 0x70697865, p));
    Rng* rng_ptr = cfg.deterministic ? nullptr : &rng;
    const auto r = render_ray(coarse, fine, ray, cfg, rng_ptr);
    for (int ch = 0; ch < 3; ++ch)
      img.at(row, col, ch) = quantize8(static_cast<double>(r.fine_rgb[ch]));
  });
  return img;
}

}  // namespace nerfmir
