#include "nerfmir/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "nerfmir/loss.hpp"
#include "nerfmir/metrics.hpp"

namespace nerfmir {

namespace {

// Substream tags.
constexpr std::uint64_t kTagSample = 0x73616d70;   // per (epoch, view) pixel draws
constexpr std::uint64_t kTagShuffle = 0x73687566;  // per epoch ray order
constexpr std::uint64_t kTagJitter = 0x6a697474;   // per (epoch, ray) sample jitter
constexpr std::uint64_t kTagRewrite = 0x72657772;  // per (stage, view) rewrite renders
constexpr std::uint64_t kTagCoarse = 0x636f6172;
constexpr std::uint64_t kTagFine = 0x66696e65;

// Rays per reduction block. Block partials are combined in index order, so
// results do not depend on the thread count.
constexpr int kBlockRays = 16;

std::vector<float> image_to_floats(const Image8& img) {
  std::vector<float> out(img.data.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<float>(img.data[i]) / 255.0f;
  return out;
}

}  // namespace

void TrainConfig::validate(std::size_t n_views, int image_width, int image_height) const {
  if (stages < 1) throw ValidationError("train: stages must be >= 1");
  if (epochs < stages) throw ValidationError("train: epochs must be >= stages");
  if (alpha0 < 0.0 || delta_alpha < 0.0)
    throw ValidationError("train: alpha0 and delta_alpha must be non-negative");
  if (alpha0 + (stages - 1) * delta_alpha > 1.0 + 1e-12)
    throw ValidationError("train: alpha exceeds 1 before the last stage");
  if (rays_per_patch < 1) throw ValidationError("train: rays_per_patch must be >= 1");
  if (batch < 1) throw ValidationError("train: batch must be >= 1");
  if (patch_unit < 1 || patch_unit > std::min(image_width, image_height))
    throw ValidationError("train: patch_unit must be in [1, min(W, H)]");
  if (w_min >= 1.0) throw ValidationError("train: w_min must be < 1");
  if (sampling.n_coarse < 1) throw ValidationError("train: need at least one coarse sample");
  if (sampling.n_fine < 0) throw ValidationError("train: n_fine must be >= 0");
  if (holdout_view >= static_cast<int>(n_views))
    throw ValidationError("train: holdout view out of range");
  if (n_views == 1 && holdout_view == 0)
    throw ValidationError("train: the only view cannot be the holdout");
}

std::vector<std::pair<long long, long long>> partition_stages(long long total_epochs,
                                                              int stages) {
  if (stages < 1 || total_epochs < stages)
    throw ValidationError("partition_stages: need total >= stages >= 1");
  const long long base = total_epochs / stages;
  std::vector<std::pair<long long, long long>> ranges;
  ranges.reserve(stages);
  long long begin = 0;
  for (int j = 0; j < stages; ++j) {
    long long end = begin + base;
    if (j == stages - 1) end = total_epochs;  // remainder goes to the last stage
    ranges.emplace_back(begin, end);
    begin = end;
  }
  return ranges;
}

double advance_alpha(double alpha_prev, double delta_alpha, std::string* warning) {
  double next = alpha_prev + delta_alpha;
  if (next > 1.0) {
    if (warning) *warning = "advance_alpha: clamping alpha to 1.0";
    next = 1.0;
  }
  return next;
}

template <typename T>
long long rewrite_masked_regions(Dataset& working, const Mlp<T>& coarse, const Mlp<T>& fine,
                                 const RenderConfig& cfg, std::uint64_t stream_tag, Exec exec,
                                 std::vector<std::vector<float>>* float_targets,
                                 bool unquantized) {
  long long total_rewritten = 0;
  for (std::size_t v = 0; v < working.views.size(); ++v) {
    View& view = working.views[v];
    if (!view.mask) continue;

    // Gather the masked pixels; they render independently.
    std::vector<std::pair<int, int>> pixels;
    for (int r = 0; r < view.image.height; ++r)
      for (int c = 0; c < view.image.width; ++c)
        if (view.mask->at(r, c)) pixels.emplace_back(r, c);
    if (pixels.empty()) continue;

    std::vector<std::array<T, 3>> rendered(pixels.size());
    parallel_for(pixels.size(), exec, [&](std::size_t i) {
      const auto [r, c] = pixels[i];
      Ray ray = camera_ray(working.intrinsics, view.pose, r, c);
      ray.near = working.near;
      ray.far = working.far;
      ray.view_index = static_cast<int>(v);
      Rng rng(substream(cfg.seed, stream_tag ^ kTagRewrite, v,
                        static_cast<std::uint64_t>(r) * view.image.width + c));
      Rng* rng_ptr = cfg.deterministic ? nullptr : &rng;
      rendered[i] = render_ray(coarse, fine, ray, cfg, rng_ptr).fine_rgb;
    });

    for (std::size_t i = 0; i < pixels.size(); ++i) {
      const auto [r, c] = pixels[i];
      for (int ch = 0; ch < 3; ++ch) {
        const double value = static_cast<double>(rendered[i][ch]);
        const std::uint8_t q = quantize8(value);
        view.image.at(r, c, ch) = q;
        if (float_targets) {
          (*float_targets)[v][view.image.index(r, c, ch)] =
              unquantized ? static_cast<float>(value) : static_cast<float>(q) / 255.0f;
        }
      }
    }
    total_rewritten += static_cast<long long>(pixels.size());
  }
  return total_rewritten;
}

namespace {

struct RayTask {
  int view = 0;
  int row = 0, col = 0;
  std::uint8_t masked = 0;
};

template <typename T>
struct RayWorkspace {
  FieldCache<T> cache;
  std::vector<T> pos, dir, rgb, sigma, d_colors, d_sigmas;
  std::vector<T> coarse_weights;  // composite weights of the last pass
};

template <typename T>
struct BlockResult {
  Mlp<T> grad_coarse, grad_fine;
  double loss_unmasked = 0, loss_masked = 0;
};

template <typename T>
class Trainer {
 public:
  Trainer(const Dataset& dataset, const TrainConfig& cfg, const StageCallback<T>& on_stage)
      : cfg_(cfg), on_stage_(on_stage) {
    dataset.validate();
    cfg.validate(dataset.views.size(), dataset.intrinsics.width,
                 dataset.intrinsics.height);
    working_ = dataset;
    grid_ = split_patches(dataset.intrinsics.width, dataset.intrinsics.height,
                          cfg.patch_unit);
    for (const auto& view : working_.views) {
      targets_.push_back(image_to_floats(view.image));
      masks_.push_back(view.mask ? *view.mask : MaskMatrix());
    }
    result_.coarse = init_mlp<T>(cfg.encoding, substream(cfg.seed, kTagCoarse));
    result_.fine = init_mlp<T>(cfg.encoding, substream(cfg.seed, kTagFine));
    result_.opt_coarse = AdamState<T>(result_.coarse);
    result_.opt_fine = AdamState<T>(result_.fine);
  }

  TrainResult<T> run() {
    const int t_eff = cfg_.use_pire ? cfg_.stages : 1;
    const auto ranges = partition_stages(cfg_.epochs, t_eff);
    double alpha = cfg_.alpha0;

    for (int j = 0; j < t_eff; ++j) {
      compute_budgets();
      for (long long epoch = ranges[j].first; epoch < ranges[j].second; ++epoch) {
        const double lr = lr_schedule(epoch, cfg_.epochs, cfg_.lr_start, cfg_.lr_final);
        const auto stats = run_epoch(epoch, alpha, lr);
        result_.log.push_back({epoch, j + 1, alpha, lr, stats.first, stats.second,
                               std::numeric_limits<double>::quiet_NaN()});
      }

      // Stage-boundary rewrite. For the last stage (and for single-stage
      // runs) this only produces the restored output; nothing trains on it.
      const long long rewritten = rewrite_masked_regions(
          working_, result_.coarse, result_.fine, cfg_.sampling,
          substream(cfg_.seed, kTagRewrite, static_cast<std::uint64_t>(j)), cfg_.exec,
          &targets_, cfg_.float_rewrite);
      result_.stages.push_back(
          {j + 1, alpha, ranges[j].first, ranges[j].second, rewritten});

      if (cfg_.holdout_view >= 0 && !result_.log.empty()) {
        result_.log.back().psnr_holdout = holdout_psnr();
      }
      if (on_stage_) {
        on_stage_(StageView<T>{j + 1, alpha, ranges[j].second, working_, result_.coarse,
                               result_.fine, result_.opt_coarse, result_.opt_fine});
      }
      if (j + 1 < t_eff) alpha = advance_alpha(alpha, cfg_.delta_alpha);
    }

    result_.restored = working_;
    return std::move(result_);
  }

 private:
  void compute_budgets() {
    budgets_.assign(working_.views.size(), RayBudget{});
    const int k = grid_.count();
    const double w_min =
        cfg_.w_min >= 0 ? cfg_.w_min : default_w_min(k, cfg_.rays_per_patch);
    for (std::size_t v = 0; v < working_.views.size(); ++v) {
      if (static_cast<int>(v) == cfg_.holdout_view) continue;
      if (cfg_.use_pere) {
        const auto weights = patch_weights(working_.views[v].image, grid_, cfg_.exec);
        budgets_[v] = assign_rays(weights, cfg_.rays_per_patch, w_min);
      } else {
        budgets_[v].counts.assign(k, cfg_.rays_per_patch);
        budgets_[v].total = static_cast<long long>(k) * cfg_.rays_per_patch;
      }
    }
  }

  std::pair<double, double> run_epoch(long long epoch, double alpha, double lr) {
    // Every view emits exactly K * rays_per_patch rays per epoch, drawn
    // multinomially from its budget, so ablations share the ray total.
    const std::size_t draws_per_view =
        static_cast<std::size_t>(grid_.count()) * cfg_.rays_per_patch;
    std::vector<RayTask> tasks;
    for (std::size_t v = 0; v < working_.views.size(); ++v) {
      if (static_cast<int>(v) == cfg_.holdout_view) continue;
      const auto pixels = sample_ray_pixels(
          budgets_[v], grid_, substream(cfg_.seed, kTagSample, epoch, v), draws_per_view);
      const MaskMatrix& mask = masks_[v];
      for (const auto& [r, c] : pixels) {
        const std::uint8_t m = mask.bits.empty() ? 0 : mask.at(r, c);
        tasks.push_back({static_cast<int>(v), r, c, m});
      }
    }
    Rng shuffle_rng(substream(cfg_.seed, kTagShuffle, epoch));
    shuffle_rng.shuffle(tasks);

    double loss_unmasked = 0, loss_masked = 0;
    for (std::size_t begin = 0; begin < tasks.size();
         begin += static_cast<std::size_t>(cfg_.batch)) {
      const std::size_t end = std::min(tasks.size(), begin + cfg_.batch);
      const auto [l_r, l_m] = run_batch(tasks, begin, end, epoch, alpha, lr);
      loss_unmasked += l_r;
      loss_masked += l_m;
    }
    if (!std::isfinite(loss_unmasked) || !std::isfinite(loss_masked)) {
      throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch));
    }
    return {loss_unmasked, loss_masked};
  }

  std::pair<double, double> run_batch(const std::vector<RayTask>& tasks, std::size_t begin,
                                      std::size_t end, long long epoch, double alpha,
                                      double lr) {
    const std::size_t n_rays = end - begin;
    const std::size_t n_blocks = (n_rays + kBlockRays - 1) / kBlockRays;
    std::vector<BlockResult<T>> blocks(n_blocks);

    parallel_for(n_blocks, cfg_.exec, [&](std::size_t blk) {
      BlockResult<T>& out = blocks[blk];
      out.grad_coarse = result_.coarse.zeros_like();
      out.grad_fine = result_.fine.zeros_like();
      RayWorkspace<T> ws;
      const std::size_t lo = begin + blk * kBlockRays;
      const std::size_t hi = std::min(end, lo + kBlockRays);
      for (std::size_t i = lo; i < hi; ++i) {
        process_ray(tasks[i], epoch, i, alpha, out, ws);
      }
    });

    // Fixed-order combine keeps results independent of the thread count.
    Mlp<T> grad_coarse = result_.coarse.zeros_like();
    Mlp<T> grad_fine = result_.fine.zeros_like();
    double loss_unmasked = 0, loss_masked = 0;
    for (const auto& blk : blocks) {
      add_gradients(grad_coarse, blk.grad_coarse);
      add_gradients(grad_fine, blk.grad_fine);
      loss_unmasked += blk.loss_unmasked;
      loss_masked += blk.loss_masked;
    }

    adam_step(result_.opt_coarse, result_.coarse, grad_coarse, lr);
    if (cfg_.sampling.n_fine > 0) {
      adam_step(result_.opt_fine, result_.fine, grad_fine, lr);
    }
    return {loss_unmasked, loss_masked};
  }

  void process_ray(const RayTask& task, long long epoch, std::size_t ray_ordinal,
                   double alpha, BlockResult<T>& out, RayWorkspace<T>& ws) {
    const View& view = working_.views[task.view];
    Ray ray = camera_ray(working_.intrinsics, view.pose, task.row, task.col);
    ray.near = working_.near;
    ray.far = working_.far;
    ray.view_index = task.view;

    Rng rng(substream(cfg_.seed, kTagJitter, static_cast<std::uint64_t>(epoch),
                      ray_ordinal));
    Rng* rng_ptr = cfg_.sampling.deterministic ? nullptr : &rng;

    std::array<T, 3> target;
    const std::vector<float>& tv = targets_[task.view];
    const std::size_t base = view.image.index(task.row, task.col, 0);
    for (int ch = 0; ch < 3; ++ch) target[ch] = static_cast<T>(tv[base + ch]);

    const double ray_weight =
        cfg_.use_dw ? (task.masked ? alpha : 1.0 - alpha) : 1.0;

    // Coarse pass.
    const auto coarse_set = stratified_samples<T>(
        static_cast<T>(ray.near), static_cast<T>(ray.far), cfg_.sampling.n_coarse, rng_ptr,
        static_cast<T>(cfg_.sampling.delta_cap));
    const double sq_c = pass(result_.coarse, out.grad_coarse, ray, coarse_set, target,
                             ray_weight, ws);

    double sq_f = 0;
    if (cfg_.sampling.n_fine > 0) {
      // Importance pass on top of the coarse weights (no gradient flows
      // through the sample placement).
      const auto iw = interval_weights_from(ws.coarse_weights);
      const auto merged = importance_samples<T>(
          coarse_set, iw, cfg_.sampling.n_fine, rng_ptr,
          static_cast<T>(cfg_.sampling.eps_pdf), static_cast<T>(cfg_.sampling.delta_cap));
      sq_f = pass(result_.fine, out.grad_fine, ray, merged, target, ray_weight, ws);
    }

    if (task.masked) {
      out.loss_masked += sq_c + sq_f;
    } else {
      out.loss_unmasked += sq_c + sq_f;
    }
  }

  /// Forward + composite + backward of one network along one sample set.
  /// Returns the raw squared error; gradients are scaled by ray_weight.
  double pass(const Mlp<T>& net, Mlp<T>& grad, const Ray& ray, const SampleSet<T>& samples,
              const std::array<T, 3>& target, double ray_weight, RayWorkspace<T>& ws) {
    const std::size_t n = samples.t.size();
    ws.pos.resize(3 * n);
    ws.dir.resize(3 * n);
    for (std::size_t i = 0; i < n; ++i) {
      for (int k = 0; k < 3; ++k) {
        ws.pos[3 * i + k] = static_cast<T>(ray.origin[k]) +
                            samples.t[i] * static_cast<T>(ray.direction[k]);
        ws.dir[3 * i + k] = static_cast<T>(ray.direction[k]);
      }
    }
    ws.rgb.resize(3 * n);
    ws.sigma.resize(n);
    field_forward(net, ws.pos.data(), ws.dir.data(), static_cast<int>(n), ws.rgb.data(),
                  ws.sigma.data(), &ws.cache);
    const auto comp = composite<T>(ws.rgb, ws.sigma, samples.delta);
    ws.coarse_weights = comp.weights;

    double sq = 0;
    std::array<T, 3> d_rgb;
    for (int ch = 0; ch < 3; ++ch) {
      const double diff = static_cast<double>(comp.rgb[ch]) - static_cast<double>(target[ch]);
      sq += diff * diff;
      d_rgb[ch] = static_cast<T>(2.0 * ray_weight * diff);
    }
    if (ray_weight != 0.0) {
      ws.d_colors.assign(3 * n, T(0));
      ws.d_sigmas.assign(n, T(0));
      composite_backward<T>(ws.rgb, ws.sigma, samples.delta, d_rgb, ws.d_colors,
                            ws.d_sigmas);
      field_backward(net, ws.cache, ws.d_colors.data(), ws.d_sigmas.data(), grad);
    }
    return sq;
  }

  double holdout_psnr() {
    const View& view = working_.views[cfg_.holdout_view];
    const Image8 rendered =
        render_image(result_.coarse, result_.fine, working_.intrinsics, view.pose,
                     working_.near, working_.far, cfg_.sampling, cfg_.exec);
    const MaskMatrix& mask = masks_[cfg_.holdout_view];
    // Unmasked pixels of the holdout are clean ground truth.
    return psnr(rendered, view.image, mask.bits.empty() ? nullptr : &mask,
                mask.bits.empty() ? Region::full : Region::unmasked_only);
  }

  TrainConfig cfg_;
  StageCallback<T> on_stage_;
  Dataset working_;
  PatchGrid grid_;
  std::vector<std::vector<float>> targets_;  // [view] -> H*W*3 values in [0,1]
  std::vector<MaskMatrix> masks_;            // original masks, loss routing
  std::vector<RayBudget> budgets_;
  TrainResult<T> result_;
};

}  // namespace

template <typename T>
TrainResult<T> train(const Dataset& dataset, const TrainConfig& cfg,
                     const StageCallback<T>& on_stage) {
  return Trainer<T>(dataset, cfg, on_stage).run();
}

template TrainResult<float> train<float>(const Dataset&, const TrainConfig&,
                                         const StageCallback<float>&);
template TrainResult<double> train<double>(const Dataset&, const TrainConfig&,
                                           const StageCallback<double>&);
template long long rewrite_masked_regions<float>(Dataset&, const Mlp<float>&,
                                                 const Mlp<float>&, const RenderConfig&,
                                                 std::uint64_t, Exec,
                                                 std::vector<std::vector<float>>*, bool);
template long long rewrite_masked_regions<double>(Dataset&, const Mlp<double>&,
                                                  const Mlp<double>&, const RenderConfig&,
                                                  std::uint64_t, Exec,
                                                  std::vector<std::vector<float>>*, bool);

}  // namespace nerfmir
