// Timing harness comparing the serial reference kernels against the OpenMP
// paths: full-frame rendering, per-patch entropy weights, and raw field
// forward/backward throughput. Usage: nerfmir_bench [repeats]

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <vector>

#include "nerfmir/field.hpp"
#include "nerfmir/parallel.hpp"
#include "nerfmir/pere.hpp"
#include "nerfmir/render.hpp"
#include "nerfmir/toy_scene.hpp"

using namespace nerfmir;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename F>
double time_best_of(int repeats, F&& fn) {
  double best = 1e30;
  for (int i = 0; i < repeats; ++i) {
    const auto start = Clock::now();
    fn();
    best = std::min(best, seconds_since(start));
  }
  return best;
}

void report(const char* name, double serial_s, double parallel_s) {
  std::printf("%-28s serial %8.3f ms   parallel %8.3f ms   speedup %.2fx\n", name,
              serial_s * 1e3, parallel_s * 1e3, serial_s / parallel_s);
}

}  // namespace

int main(int argc, char** argv) {
  const int repeats = argc > 1 ? std::atoi(argv[1]) : 3;
  std::printf("threads: %d\n", max_threads());

  ToySceneSpec spec = two_primitive_scene();
  spec.width = spec.height = 96;
  const Dataset scene = generate_scene_dataset(spec);

  EncodingConfig enc;
  const auto coarse = init_mlp<float>(enc, 1);
  const auto fine = init_mlp<float>(enc, 2);
  RenderConfig cfg;
  cfg.deterministic = true;

  // Full-frame render, fine pass included.
  {
    const auto& view = scene.views[0];
    Image8 out_s, out_p;
    const double t_serial = time_best_of(repeats, [&] {
      out_s = render_image(coarse, fine, scene.intrinsics, view.pose, scene.near,
                           scene.far, cfg, Exec::serial);
    });
    const double t_parallel = time_best_of(repeats, [&] {
      out_p = render_image(coarse, fine, scene.intrinsics, view.pose, scene.near,
                           scene.far, cfg, Exec::parallel);
    });
    report("render_image 96x96", t_serial, t_parallel);
    if (!(out_s == out_p)) std::printf("  MISMATCH: serial and parallel images differ\n");
  }

  // Entropy weights over a fine grid.
  {
    const PatchGrid grid = split_patches(scene.intrinsics.width, scene.intrinsics.height, 4);
    PatchWeights w_s, w_p;
    const double t_serial = time_best_of(
        repeats, [&] { w_s = patch_weights(scene.views[0].image, grid, Exec::serial); });
    const double t_parallel = time_best_of(
        repeats, [&] { w_p = patch_weights(scene.views[0].image, grid, Exec::parallel); });
    report("patch_weights unit=4", t_serial, t_parallel);
    if (w_s.weight != w_p.weight) std::printf("  MISMATCH: weights differ\n");
  }

  // Raw field throughput: forward+backward over a batch of points.
  {
    constexpr int kPoints = 4096;
    std::vector<float> pos(3 * kPoints), dir(3 * kPoints), rgb(3 * kPoints), sig(kPoints);
    std::vector<float> d_rgb(3 * kPoints, 0.1f), d_sig(kPoints, 0.1f);
    Rng rng(7);
    for (auto& v : pos) v = static_cast<float>(2.0 * rng.next_double() - 1.0);
    for (int i = 0; i < kPoints; ++i) {
      dir[3 * i] = 1;
      dir[3 * i + 1] = 0;
      dir[3 * i + 2] = 0;
    }
    FieldCache<float> cache;
    Mlp<float> grad = coarse.zeros_like();
    const double t = time_best_of(repeats, [&] {
      field_forward(coarse, pos.data(), dir.data(), kPoints, rgb.data(), sig.data(),
                    &cache);
      field_backward(coarse, cache, d_rgb.data(), d_sig.data(), grad);
    });
    std::printf("%-28s %8.3f ms  (%.2f us per point fwd+bwd)\n", "field fwd+bwd 4096 pts",
                t * 1e3, t * 1e6 / kPoints);
  }

  return 0;
}
