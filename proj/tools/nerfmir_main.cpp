// nerfmir: masked multi-view restoration with a neural radiance field.
// Subcommands cover the whole pipeline: gen-toy (procedural scenes), mask
// (occlusion datasets), train (PERE + dynamically-weighted loss + PIRE),
// render, eval (PSNR/SSIM/MSE per region) and heatmap (ray budgets).

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "nerfmir/checkpoint.hpp"
#include "nerfmir/dataset.hpp"
#include "nerfmir/masking.hpp"
#include "nerfmir/metrics.hpp"
#include "nerfmir/pere.hpp"
#include "nerfmir/png_io.hpp"
#include "nerfmir/render.hpp"
#include "nerfmir/toy_scene.hpp"
#include "nerfmir/trainer.hpp"

namespace fs = std::filesystem;
using namespace nerfmir;

namespace {

/// Collects everything a subcommand writes under --out and dumps the list as
/// files.json next to it.
class ArtifactList {
 public:
  explicit ArtifactList(fs::path out_dir) : dir_(std::move(out_dir)) {
    fs::create_directories(dir_);
  }
  const fs::path& dir() const { return dir_; }
  fs::path add(const std::string& name) {
    names_.push_back(name);
    return dir_ / name;
  }
  void note_dataset(const Dataset& ds, const std::string& subdir,
                    const std::string& manifest_name = "manifest.json") {
    names_.push_back(subdir + "/" + manifest_name);
    for (std::size_t i = 0; i < ds.views.size(); ++i) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%s/view_%03zu.png", subdir.c_str(), i);
      names_.push_back(buf);
      if (ds.views[i].mask) {
        std::snprintf(buf, sizeof(buf), "%s/mask_%03zu.png", subdir.c_str(), i);
        names_.push_back(buf);
      }
    }
  }
  ~ArtifactList() {
    try {
      nlohmann::json doc;
      doc["files"] = names_;
      std::ofstream out(dir_ / "files.json");
      out << doc.dump(2) << "\n";
    } catch (...) {
    }
  }

 private:
  fs::path dir_;
  std::vector<std::string> names_;
};

std::array<std::uint8_t, 3> parse_fill(const std::string& text) {
  std::array<std::uint8_t, 3> fill{};
  int r, g, b;
  if (std::sscanf(text.c_str(), "%d,%d,%d", &r, &g, &b) != 3 || r < 0 || r > 255 ||
      g < 0 || g > 255 || b < 0 || b > 255) {
    throw ValidationError("--fill expects R,G,B with each value in [0,255]");
  }
  fill = {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
          static_cast<std::uint8_t>(b)};
  return fill;
}

struct MaskArgs {
  std::string manifest, out;
  double level = 0.25;
  std::string shape = "square", style = "random", fill = "96,96,96";
  int unit = 10;
  std::uint64_t seed = 0;
};

int cmd_mask(const MaskArgs& args) {
  MaskSpec spec;
  spec.level = args.level;
  spec.unit = args.unit;
  spec.seed = args.seed;
  spec.fill = parse_fill(args.fill);
  spec.shape = args.shape == "round" ? MaskShape::round : MaskShape::square;
  spec.style = args.style == "fixed" ? MaskStyle::fixed : MaskStyle::random;

  Dataset ds = load_dataset(args.manifest);
  std::string warning;
  const auto masks = generate_masks(ds, spec, &warning);
  if (!warning.empty()) std::cerr << "warning: " << warning << "\n";

  for (std::size_t v = 0; v < ds.views.size(); ++v) {
    ds.views[v].image = apply_mask(ds.views[v].image, masks[v], spec.fill);
    ds.views[v].mask = masks[v];
  }

  ArtifactList artifacts(args.out);
  save_dataset(ds, artifacts.dir());
  artifacts.note_dataset(ds, ".");
  std::cout << "masked " << ds.views.size() << " views (level " << spec.level << ", unit "
            << spec.unit << ") -> " << args.out << "\n";
  return 0;
}

struct TrainArgs {
  std::string manifest, out;
  TrainConfig cfg;
  std::string precision = "f32";
  bool no_pere = false, no_pire = false, no_dw = false;
  bool deterministic = false;
  bool serial = false;
  int threads = 0;
};

void write_train_log(const fs::path& path, const std::vector<TrainLogRow>& log) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "epoch,stage,alpha,lr,loss_unmasked,loss_masked,psnr_holdout\n";
  for (const auto& row : log) {
    out << row.epoch << ',' << row.stage << ',' << row.alpha << ',' << row.lr << ','
        << row.loss_unmasked << ',' << row.loss_masked << ',';
    if (std::isnan(row.psnr_holdout)) {
      out << "";
    } else {
      out << row.psnr_holdout;
    }
    out << '\n';
  }
}

template <typename T>
int run_train(const Dataset& ds, TrainArgs& args, ArtifactList& artifacts) {
  StageCallback<T> on_stage = [&](const StageView<T>& stage) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "checkpoint_stage_%02d.json", stage.stage);
    save_checkpoint(artifacts.add(buf),
                    make_checkpoint(stage.coarse, stage.fine, stage.opt_coarse,
                                    stage.opt_fine, args.cfg.precision, stage.epochs_done));
    std::cout << "stage " << stage.stage << " done (alpha " << stage.alpha << ")\n";
  };

  const auto result = train<T>(ds, args.cfg, on_stage);

  save_checkpoint(artifacts.add("checkpoint_final.json"),
                  make_checkpoint(result, args.cfg, args.cfg.epochs));
  write_train_log(artifacts.add("train_log.csv"), result.log);
  const fs::path restored_dir = artifacts.dir() / "restored";
  save_dataset(result.restored, restored_dir);
  artifacts.note_dataset(result.restored, "restored");
  std::cout << "trained " << args.cfg.epochs << " epochs over " << result.stages.size()
            << " stage(s); restored dataset in " << restored_dir.string() << "\n";
  return 0;
}

int cmd_train(TrainArgs& args, bool dw_explicit) {
  if (args.threads > 0) set_threads(args.threads);
  args.cfg.exec = args.serial ? Exec::serial : Exec::parallel;
  args.cfg.sampling.deterministic = args.deterministic;
  args.cfg.sampling.seed = args.cfg.seed;
  args.cfg.precision = args.precision == "f64" ? Precision::f64 : Precision::f32;
  args.cfg.use_pere = !args.no_pere;
  args.cfg.use_pire = !args.no_pire;
  args.cfg.use_dw = !args.no_dw;
  if (args.no_pere && args.no_pire && !dw_explicit) {
    // The two flags together select the plain baseline trained on the
    // masked images as-is.
    args.cfg.use_dw = false;
    std::cout << "note: --no-pere --no-pire disables the dynamically-weighted loss "
                 "(plain baseline); pass --no-dw explicitly to silence this\n";
  }

  Dataset ds = load_dataset(args.manifest);
  ArtifactList artifacts(args.out);

  if (args.cfg.epochs == 0) {
    // Nothing to optimize; emit the initialization checkpoint and stop.
    if (args.cfg.precision == Precision::f64) {
      auto coarse = init_mlp<double>(args.cfg.encoding, substream(args.cfg.seed, 0x636f6172));
      auto fine = init_mlp<double>(args.cfg.encoding, substream(args.cfg.seed, 0x66696e65));
      save_checkpoint(artifacts.add("checkpoint_init.json"),
                      make_checkpoint(coarse, fine, AdamState<double>(coarse),
                                      AdamState<double>(fine), args.cfg.precision, 0));
    } else {
      auto coarse = init_mlp<float>(args.cfg.encoding, substream(args.cfg.seed, 0x636f6172));
      auto fine = init_mlp<float>(args.cfg.encoding, substream(args.cfg.seed, 0x66696e65));
      save_checkpoint(artifacts.add("checkpoint_init.json"),
                      make_checkpoint(coarse, fine, AdamState<float>(coarse),
                                      AdamState<float>(fine), args.cfg.precision, 0));
    }
    std::cout << "epochs 0: wrote the initialization checkpoint\n";
    return 0;
  }

  return args.cfg.precision == Precision::f64 ? run_train<double>(ds, args, artifacts)
                                              : run_train<float>(ds, args, artifacts);
}

struct RenderArgs {
  std::string checkpoint, manifest, out;
  int orbit = 0;  // 0: render the manifest poses
  RenderConfig sampling;
  bool deterministic = false;
  bool serial = false;
  int threads = 0;
};

template <typename T>
int run_render(const Checkpoint& cp, const Dataset& ds, const RenderArgs& args,
               ArtifactList& artifacts) {
  const auto coarse = convert_mlp<T>(cp.coarse);
  const auto fine = convert_mlp<T>(cp.fine);
  const Exec exec = args.serial ? Exec::serial : Exec::parallel;

  std::vector<Pose> poses;
  std::string prefix;
  if (args.orbit > 0) {
    // Orbit fitted to the manifest cameras: mean distance from the origin
    // and mean elevation, N equally spaced azimuths.
    double radius = 0, elevation = 0;
    for (const auto& view : ds.views) {
      const Vec3 t = view.pose.translation();
      const double r = norm(t);
      radius += r;
      elevation += std::asin(t[1] / r);
    }
    radius /= static_cast<double>(ds.views.size());
    elevation /= static_cast<double>(ds.views.size());
    ToySceneSpec orbit;
    orbit.views = args.orbit;
    orbit.orbit_radius = radius;
    orbit.elevation_deg = elevation * 180.0 / std::numbers::pi;
    for (int i = 0; i < args.orbit; ++i) poses.push_back(orbit_pose(orbit, i));
    prefix = "render_orbit_";
  } else {
    for (const auto& view : ds.views) poses.push_back(view.pose);
    prefix = "render_view_";
  }

  for (std::size_t i = 0; i < poses.size(); ++i) {
    const Image8 img = render_image(coarse, fine, ds.intrinsics, poses[i], ds.near,
                                    ds.far, args.sampling, exec);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s%03zu.png", prefix.c_str(), i);
    save_png(artifacts.add(buf), img);
  }
  std::cout << "rendered " << poses.size() << " view(s) -> " << artifacts.dir().string()
            << "\n";
  return 0;
}

int cmd_render(RenderArgs& args) {
  if (args.threads > 0) set_threads(args.threads);
  args.sampling.deterministic = args.deterministic;
  const Checkpoint cp = load_checkpoint(args.checkpoint);
  const Dataset ds = load_dataset(args.manifest);
  ArtifactList artifacts(args.out);
  return cp.precision == Precision::f64 ? run_render<double>(cp, ds, args, artifacts)
                                        : run_render<float>(cp, ds, args, artifacts);
}

struct EvalArgs {
  std::string test, ref, out;
  std::string scene = "", setting = "";
};

int cmd_eval(const EvalArgs& args) {
  const Dataset test = load_dataset(args.test);
  const Dataset ref = load_dataset(args.ref);
  if (test.views.size() != ref.views.size())
    throw ValidationError("eval: view counts differ (" + std::to_string(test.views.size()) +
                          " vs " + std::to_string(ref.views.size()) + ")");

  const std::string scene =
      args.scene.empty() ? fs::path(args.ref).parent_path().filename().string() : args.scene;

  struct Row {
    Region region;
    const char* name;
  };
  const Row rows[] = {{Region::full, "full"},
                      {Region::masked_only, "masked_only"},
                      {Region::unmasked_only, "unmasked_only"}};

  bool any_mask = false;
  for (const auto& v : test.views) any_mask = any_mask || v.mask.has_value();

  std::ofstream out(args.out);
  if (!out) throw IoError("eval: cannot write " + args.out);
  out << "scene,setting,region,psnr,ssim,mse\n";
  // LPIPS needs a pretrained perceptual network and is reported as an empty
  // placeholder column downstream; see README.
  for (const auto& row : rows) {
    if (row.region != Region::full && !any_mask) continue;
    double mse_num = 0;
    long long mse_count = 0;
    double ssim_acc = 0;
    for (std::size_t v = 0; v < test.views.size(); ++v) {
      const MaskMatrix* mask = test.views[v].mask ? &*test.views[v].mask : nullptr;
      // Pool squared error over all views for the region PSNR.
      const Image8& a = test.views[v].image;
      const Image8& b = ref.views[v].image;
      if (!a.same_shape(b)) throw ValidationError("eval: image shapes differ");
      for (int r = 0; r < a.height; ++r) {
        for (int c = 0; c < a.width; ++c) {
          const bool masked = mask && mask->at(r, c);
          if (row.region == Region::masked_only && !masked) continue;
          if (row.region == Region::unmasked_only && masked) continue;
          for (int ch = 0; ch < 3; ++ch) {
            const double d = to_unit(a.at(r, c, ch)) - to_unit(b.at(r, c, ch));
            mse_num += d * d;
          }
          ++mse_count;
        }
      }
      if (row.region == Region::full) ssim_acc += ssim(a, b);
    }
    if (mse_count == 0) continue;
    const double mse = mse_num / (3.0 * static_cast<double>(mse_count));
    out << scene << ',' << args.setting << ',' << row.name << ',' << psnr_from_mse(mse)
        << ',';
    if (row.region == Region::full) {
      out << ssim_acc / static_cast<double>(test.views.size());
    }
    out << ',' << mse << '\n';
  }
  std::cout << "wrote " << args.out << "\n";
  return 0;
}

struct HeatmapArgs {
  std::string manifest, out;
  int unit = 10;
  int rays_per_patch = 2;
  double w_min = -1.0;
};

int cmd_heatmap(const HeatmapArgs& args) {
  const Dataset ds = load_dataset(args.manifest);
  const PatchGrid grid =
      split_patches(ds.intrinsics.width, ds.intrinsics.height, args.unit);
  const double w_min = args.w_min >= 0
                           ? args.w_min
                           : default_w_min(grid.count(), args.rays_per_patch);
  ArtifactList artifacts(args.out);
  for (std::size_t v = 0; v < ds.views.size(); ++v) {
    const auto weights = patch_weights(ds.views[v].image, grid);
    const auto budget = assign_rays(weights, args.rays_per_patch, w_min);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "heatmap_%03zu.png", v);
    save_png(artifacts.add(buf), heatmap(budget, grid));
    std::snprintf(buf, sizeof(buf), "budget_%03zu.csv", v);
    write_budget_csv(artifacts.add(buf), weights, budget);
  }
  std::cout << "wrote heatmaps for " << ds.views.size() << " view(s) -> " << args.out
            << "\n";
  return 0;
}

struct GenToyArgs {
  std::string out;
  ToySceneSpec spec = two_primitive_scene();
};

int cmd_gen_toy(const GenToyArgs& args) {
  ArtifactList artifacts(args.out);
  const Dataset ds = generate_scene_dataset(args.spec);
  save_dataset(ds, artifacts.dir());
  artifacts.note_dataset(ds, ".");
  std::cout << "generated " << args.spec.views << " views (" << args.spec.width << "x"
            << args.spec.height << ") -> " << args.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nerfmir: masked multi-view image restoration with a radiance field"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from an INI/TOML config file");
  argv = app.ensure_utf8(argv);

  GenToyArgs gen_args;
  auto* gen = app.add_subcommand("gen-toy", "Generate a procedural toy scene dataset");
  gen->add_option("--out", gen_args.out, "Output directory")->required()->envname("NERFMIR_OUT");
  gen->add_option("--views", gen_args.spec.views, "Number of orbit views");
  gen->add_option("--width", gen_args.spec.width, "Image width");
  gen->add_option("--height", gen_args.spec.height, "Image height");
  gen->add_option("--radius", gen_args.spec.orbit_radius, "Orbit radius");
  gen->add_option("--elevation", gen_args.spec.elevation_deg, "Orbit elevation, degrees");
  gen->add_option("--fov", gen_args.spec.fov_deg, "Horizontal field of view, degrees");
  gen->add_option("--near", gen_args.spec.near, "Near bound");
  gen->add_option("--far", gen_args.spec.far, "Far bound");
  gen->add_option("--seed", gen_args.spec.seed, "Seed")->envname("NERFMIR_SEED");

  MaskArgs mask_args;
  auto* mask = app.add_subcommand("mask", "Occlude a dataset with synthetic masks");
  mask->add_option("--manifest", mask_args.manifest, "Input dataset manifest")->required();
  mask->add_option("--out", mask_args.out, "Output directory")->required()->envname("NERFMIR_OUT");
  mask->add_option("--level", mask_args.level, "Fraction of patches to mask");
  mask->add_option("--shape", mask_args.shape, "square | round")
      ->check(CLI::IsMember({"square", "round"}));
  mask->add_option("--style", mask_args.style, "random | fixed")
      ->check(CLI::IsMember({"random", "fixed"}));
  mask->add_option("--unit", mask_args.unit, "Mask cell side, pixels");
  mask->add_option("--fill", mask_args.fill, "Fill color R,G,B");
  mask->add_option("--seed", mask_args.seed, "Seed")->envname("NERFMIR_SEED");

  TrainArgs train_args;
  auto* tr = app.add_subcommand("train", "Train the restoration field");
  tr->add_option("--manifest", train_args.manifest, "Masked dataset manifest")->required();
  tr->add_option("--out", train_args.out, "Output directory")->required()->envname("NERFMIR_OUT");
  tr->add_option("--epochs", train_args.cfg.epochs, "Total training epochs");
  tr->add_option("--stages", train_args.cfg.stages, "Progressive stages");
  tr->add_option("--alpha0", train_args.cfg.alpha0, "Initial masked-loss weight");
  tr->add_option("--delta-alpha", train_args.cfg.delta_alpha, "Per-stage alpha increment");
  tr->add_option("--rays-per-patch", train_args.cfg.rays_per_patch,
                 "Assumed average rays per patch");
  tr->add_option("--wmin", train_args.cfg.w_min,
                 "Weight threshold for the one-ray floor (< 0: 1/(K*rays))");
  tr->add_option("--unit", train_args.cfg.patch_unit, "Patch side, pixels");
  tr->add_option("--batch", train_args.cfg.batch, "Rays per optimizer step");
  tr->add_option("--coarse", train_args.cfg.sampling.n_coarse, "Coarse samples per ray");
  tr->add_option("--fine", train_args.cfg.sampling.n_fine,
                 "Fine samples per ray (0 disables the fine pass)");
  tr->add_option("--lr-start", train_args.cfg.lr_start, "Initial learning rate");
  tr->add_option("--lr-final", train_args.cfg.lr_final, "Final learning rate");
  tr->add_option("--l-pos", train_args.cfg.encoding.l_pos, "Position encoding bands");
  tr->add_option("--l-dir", train_args.cfg.encoding.l_dir, "Direction encoding bands");
  tr->add_option("--seed", train_args.cfg.seed, "Seed")->envname("NERFMIR_SEED");
  tr->add_option("--holdout", train_args.cfg.holdout_view,
                 "View excluded from training, PSNR-logged per stage");
  tr->add_option("--precision", train_args.precision, "f32 | f64")
      ->check(CLI::IsMember({"f32", "f64"}));
  tr->add_flag("--no-pere", train_args.no_pere, "Uniform ray budgets");
  tr->add_flag("--no-pire", train_args.no_pire, "Single stage, no rewrites");
  auto* dw_flag =
      tr->add_flag("--no-dw", train_args.no_dw, "Plain unweighted loss over all rays");
  tr->add_flag("--float-rewrite", train_args.cfg.float_rewrite,
               "Keep unquantized rewrites as training targets");
  tr->add_flag("--deterministic", train_args.deterministic,
               "Bin-center sampling (no jitter)");
  tr->add_flag("--serial", train_args.serial, "Serial reference kernels");
  tr->add_option("--threads", train_args.threads, "OpenMP thread count")
      ->envname("NERFMIR_THREADS");

  RenderArgs render_args;
  auto* rn = app.add_subcommand("render", "Render views from a checkpoint");
  rn->add_option("--checkpoint", render_args.checkpoint, "Checkpoint file")->required();
  rn->add_option("--manifest", render_args.manifest,
                 "Dataset manifest providing intrinsics, bounds and poses")
      ->required();
  rn->add_option("--out", render_args.out, "Output directory")->required()->envname("NERFMIR_OUT");
  rn->add_option("--orbit", render_args.orbit,
                 "Render N orbit poses fitted to the manifest instead");
  rn->add_option("--coarse", render_args.sampling.n_coarse, "Coarse samples per ray");
  rn->add_option("--fine", render_args.sampling.n_fine, "Fine samples per ray");
  rn->add_option("--seed", render_args.sampling.seed, "Seed")->envname("NERFMIR_SEED");
  rn->add_flag("--deterministic", render_args.deterministic, "Bin-center sampling");
  rn->add_flag("--serial", render_args.serial, "Serial reference kernels");
  rn->add_option("--threads", render_args.threads, "OpenMP thread count")
      ->envname("NERFMIR_THREADS");

  EvalArgs eval_args;
  auto* ev = app.add_subcommand("eval", "Compare a dataset against ground truth");
  ev->add_option("--test", eval_args.test, "Manifest of restored/rendered images")
      ->required();
  ev->add_option("--ref", eval_args.ref, "Ground-truth manifest")->required();
  ev->add_option("--out", eval_args.out, "Output CSV path")->required()->envname("NERFMIR_OUT");
  ev->add_option("--scene", eval_args.scene, "Scene label (default: ref directory name)");
  ev->add_option("--setting", eval_args.setting, "Setting label for the CSV");

  HeatmapArgs heat_args;
  auto* hm = app.add_subcommand("heatmap", "Ray-budget heatmaps for a dataset");
  hm->add_option("--manifest", heat_args.manifest, "Dataset manifest")->required();
  hm->add_option("--out", heat_args.out, "Output directory")->required()->envname("NERFMIR_OUT");
  hm->add_option("--unit", heat_args.unit, "Patch side, pixels");
  hm->add_option("--rays-per-patch", heat_args.rays_per_patch, "Assumed rays per patch");
  hm->add_option("--wmin", heat_args.w_min, "Floor threshold (< 0: 1/(K*rays))");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_toy(gen_args);
    if (mask->parsed()) return cmd_mask(mask_args);
    if (tr->parsed()) return cmd_train(train_args, dw_flag->count() > 0);
    if (rn->parsed()) return cmd_render(render_args);
    if (ev->parsed()) return cmd_eval(eval_args);
    if (hm->parsed()) return cmd_heatmap(heat_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
