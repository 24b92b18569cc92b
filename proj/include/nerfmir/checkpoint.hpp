#pragma once

#include <filesystem>

#include "nerfmir/optimizer.hpp"
#include "nerfmir/trainer.hpp"

namespace nerfmir {

/// Self-describing training snapshot. Values are stored as doubles, so a
/// save/load round trip reproduces parameters and optimizer state exactly
/// (f32 values widen losslessly).
struct Checkpoint {
  EncodingConfig encoding;
  int width = kHiddenWidth;
  Precision precision = Precision::f32;
  long long train_step = 0;
  Mlp<double> coarse, fine;
  AdamState<double> opt_coarse, opt_fine;
};

template <typename To, typename From>
Mlp<To> convert_mlp(const Mlp<From>& src) {
  Mlp<To> out(src.encoding, src.width());
  auto conv = [](Linear<To>& dst, const Linear<From>& s) {
    for (std::size_t i = 0; i < s.w.size(); ++i) dst.w[i] = static_cast<To>(s.w[i]);
    for (std::size_t i = 0; i < s.b.size(); ++i) dst.b[i] = static_cast<To>(s.b[i]);
  };
  conv(out.l0, src.l0);
  conv(out.l1, src.l1);
  conv(out.l2, src.l2);
  conv(out.sigma_head, src.sigma_head);
  conv(out.l3, src.l3);
  conv(out.rgb_head, src.rgb_head);
  return out;
}

template <typename To, typename From>
AdamState<To> convert_adam(const AdamState<From>& src) {
  AdamState<To> out;
  out.m = convert_mlp<To>(src.m);
  out.v = convert_mlp<To>(src.v);
  out.step = src.step;
  out.beta1 = src.beta1;
  out.beta2 = src.beta2;
  out.eps = src.eps;
  return out;
}

template <typename T>
Checkpoint make_checkpoint(const Mlp<T>& coarse, const Mlp<T>& fine,
                           const AdamState<T>& opt_coarse, const AdamState<T>& opt_fine,
                           Precision precision, long long train_step) {
  Checkpoint cp;
  cp.encoding = coarse.encoding;
  cp.width = coarse.width();
  cp.precision = precision;
  cp.train_step = train_step;
  cp.coarse = convert_mlp<double>(coarse);
  cp.fine = convert_mlp<double>(fine);
  cp.opt_coarse = convert_adam<double>(opt_coarse);
  cp.opt_fine = convert_adam<double>(opt_fine);
  return cp;
}

template <typename T>
Checkpoint make_checkpoint(const TrainResult<T>& result, const TrainConfig& cfg,
                           long long train_step) {
  return make_checkpoint(result.coarse, result.fine, result.opt_coarse, result.opt_fine,
                         cfg.precision, train_step);
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& cp);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace nerfmir
