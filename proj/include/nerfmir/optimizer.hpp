#pragma once

#include <cmath>

#include "nerfmir/field.hpp"

namespace nerfmir {

/// Adam with bias correction, defaults beta1=0.9, beta2=0.999, eps=1e-8.
template <typename T>
struct AdamState {
  Mlp<T> m, v;  // first/second moment accumulators, shapes mirror the network
  long long step = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  AdamState() = default;
  explicit AdamState(const Mlp<T>& params) : m(params.zeros_like()), v(params.zeros_like()) {}
};

template <typename T>
void adam_step(AdamState<T>& state, Mlp<T>& params, const Mlp<T>& grads, double lr) {
  state.step += 1;
  const double b1 = state.beta1, b2 = state.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));

  auto update = [&](Linear<T>& p, const Linear<T>& g, Linear<T>& m, Linear<T>& v) {
    auto apply = [&](T& pv, T gv, T& mv, T& vv) {
      const double gd = static_cast<double>(gv);
      if (!std::isfinite(gd)) throw NumericError("adam_step: non-finite gradient");
      const double mn = b1 * static_cast<double>(mv) + (1.0 - b1) * gd;
      const double vn = b2 * static_cast<double>(vv) + (1.0 - b2) * gd * gd;
      mv = static_cast<T>(mn);
      vv = static_cast<T>(vn);
      pv = static_cast<T>(static_cast<double>(pv) -
                          lr * (mn / bc1) / (std::sqrt(vn / bc2) + state.eps));
    };
    for (std::size_t i = 0; i < p.w.size(); ++i) apply(p.w[i], g.w[i], m.w[i], v.w[i]);
    for (std::size_t i = 0; i < p.b.size(); ++i) apply(p.b[i], g.b[i], m.b[i], v.b[i]);
  };

  update(params.l0, grads.l0, state.m.l0, state.v.l0);
  update(params.l1, grads.l1, state.m.l1, state.v.l1);
  update(params.l2, grads.l2, state.m.l2, state.v.l2);
  update(params.sigma_head, grads.sigma_head, state.m.sigma_head, state.v.sigma_head);
  update(params.l3, grads.l3, state.m.l3, state.v.l3);
  update(params.rgb_head, grads.rgb_head, state.m.rgb_head, state.v.rgb_head);
}

/// Exponential decay from lr_start at step 0 to lr_final at step == total;
/// log lr is affine in the step.
inline double lr_schedule(long long step, long long total, double lr_start = 5e-4,
                          double lr_final = 8e-5) {
  if (total <= 0) return lr_start;
  const double frac = static_cast<double>(step) / static_cast<double>(total);
  return lr_start * std::pow(lr_final / lr_start, frac);
}

}  // namespace nerfmir
