#pragma once

// PIRE: staged self-training. Each stage recomputes the PERE ray budgets on
// the current working images, trains with the dynamically-weighted loss, and
// ends by rewriting every originally-masked pixel with the fine-pass render
// through that pixel's camera ray. The weight alpha on masked-ray loss
// starts at alpha0 and grows by delta_alpha per stage, so early stages trust
// only clean pixels and later stages increasingly trust the model's own
// fill-ins.

#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "nerfmir/dataset.hpp"
#include "nerfmir/field.hpp"
#include "nerfmir/optimizer.hpp"
#include "nerfmir/pere.hpp"
#include "nerfmir/render.hpp"

namespace nerfmir {

enum class Precision { f32, f64 };

struct TrainConfig {
  long long epochs = 50;      // total epochs T, split across the stages
  int stages = 5;             // t
  double alpha0 = 0.0;
  double delta_alpha = 0.125;
  int rays_per_patch = 2;     // assumed average rays per patch
  double w_min = -1.0;        // < 0 selects 1 / (K * rays_per_patch)
  int patch_unit = 10;
  int batch = 256;            // rays per optimizer step
  RenderConfig sampling;
  EncodingConfig encoding;
  double lr_start = 5e-4, lr_final = 8e-5;
  std::uint64_t seed = 0;
  bool use_pere = true;       // off: uniform per-patch budgets
  bool use_pire = true;       // off: a single stage, no mid-training rewrites
  bool use_dw = true;         // off: plain unweighted loss over all rays
  bool float_rewrite = false; // keep unquantized rewrites as training targets
  int holdout_view = -1;      // excluded from training; PSNR logged per stage
  Precision precision = Precision::f32;
  Exec exec = Exec::parallel;

  void validate(std::size_t n_views, int image_width, int image_height) const;
};

struct TrainLogRow {
  long long epoch = 0;
  int stage = 0;  // 1-based
  double alpha = 0;
  double lr = 0;
  double loss_unmasked = 0;  // raw squared-error sum over unmasked rays (coarse+fine)
  double loss_masked = 0;
  double psnr_holdout = std::numeric_limits<double>::quiet_NaN();
};

struct StageRecord {
  int stage = 0;  // 1-based
  double alpha = 0;
  long long epoch_begin = 0, epoch_end = 0;  // [begin, end)
  long long rewritten_pixels = 0;
};

/// Splits [0, total_epochs) into `stages` contiguous ranges of
/// floor(total/stages) epochs, remainder appended to the last range.
std::vector<std::pair<long long, long long>> partition_stages(long long total_epochs,
                                                              int stages);

/// alpha_prev + delta_alpha, clamped at 1 (the clamp reports through
/// *warning when given).
double advance_alpha(double alpha_prev, double delta_alpha, std::string* warning = nullptr);

/// Replaces every masked pixel of every view with the fine-pass render of
/// the given fields through that pixel's ray; unmasked pixels are untouched
/// and masks are preserved. float_targets, when given, mirrors the rewrite
/// at full precision (quantized values unless unquantized=true). Returns the
/// number of pixels rewritten.
template <typename T>
long long rewrite_masked_regions(Dataset& working, const Mlp<T>& coarse, const Mlp<T>& fine,
                                 const RenderConfig& cfg, std::uint64_t stream_tag,
                                 Exec exec,
                                 std::vector<std::vector<float>>* float_targets = nullptr,
                                 bool unquantized = false);

template <typename T>
struct StageView {
  int stage = 0;  // 1-based, rewrite for this stage already applied
  double alpha = 0;
  long long epochs_done = 0;
  const Dataset& working;
  const Mlp<T>& coarse;
  const Mlp<T>& fine;
  const AdamState<T>& opt_coarse;
  const AdamState<T>& opt_fine;
};

template <typename T>
using StageCallback = std::function<void(const StageView<T>&)>;

template <typename T>
struct TrainResult {
  Mlp<T> coarse, fine;
  AdamState<T> opt_coarse, opt_fine;
  Dataset restored;  // original pixels where unmasked, final renders where masked
  std::vector<TrainLogRow> log;
  std::vector<StageRecord> stages;
};

/// Runs the full loop on a dataset whose views carry masks (views without a
/// mask train as fully unmasked). Deterministic for a fixed config and seed.
template <typename T>
TrainResult<T> train(const Dataset& dataset, const TrainConfig& cfg,
                     const StageCallback<T>& on_stage = {});

extern template TrainResult<float> train<float>(const Dataset&, const TrainConfig&,
                                                const StageCallback<float>&);
extern template TrainResult<double> train<double>(const Dataset&, const TrainConfig&,
                                                  const StageCallback<double>&);
extern template long long rewrite_masked_regions<float>(Dataset&, const Mlp<float>&,
                                                        const Mlp<float>&,
                                                        const RenderConfig&, std::uint64_t,
                                                        Exec,
                                                        std::vector<std::vector<float>>*,
                                                        bool);
extern template long long rewrite_masked_regions<double>(Dataset&, const Mlp<double>&,
                                                         const Mlp<double>&,
                                                         const RenderConfig&, std::uint64_t,
                                                         Exec,
                                                         std::vector<std::vector<float>>*,
                                                         bool);

}  // namespace nerfmir
