#pragma once

#include <filesystem>

#include "nerfmir/dataset.hpp"

namespace nerfmir {

enum class PrimitiveKind { sphere, box };

/// Flat-colored primitive. Spheres use size[0] as the radius; boxes are
/// axis-aligned with size as full extents.
struct Primitive {
  PrimitiveKind kind = PrimitiveKind::sphere;
  Vec3 center{0, 0, 0};
  Vec3 size{1, 1, 1};
  std::array<std::uint8_t, 3> rgb{255, 255, 255};
};

/// Procedural multi-view scene: cameras orbit the origin and look at it,
/// ground truth comes from analytic ray-primitive intersection (nearest hit
/// wins, black background). Flat colors keep the scene exactly learnable, so
/// restoration quality is attributable to the training machinery.
struct ToySceneSpec {
  std::vector<Primitive> primitives;
  int views = 12;
  double orbit_radius = 4.0;
  double elevation_deg = 18.0;
  int width = 64, height = 64;
  double fov_deg = 50.0;
  double near = 2.0, far = 6.0;
  std::uint64_t seed = 0;
};

/// The default two-primitive scene (a sphere and a box).
ToySceneSpec two_primitive_scene();

/// Pose i on the orbit, looking at the origin, +y up.
Pose orbit_pose(const ToySceneSpec& spec, int view_index);

/// First hit of the ray against the primitives within [t_min, t_max].
/// Returns the primitive index or -1; *t_hit gets the hit distance.
int first_hit(const ToySceneSpec& spec, const Vec3& origin, const Vec3& direction,
              double t_min, double t_max, double* t_hit = nullptr);

/// Ray-traced ground truth for one view.
Image8 render_toy_view(const ToySceneSpec& spec, int view_index);

/// The whole dataset in memory.
Dataset generate_scene_dataset(const ToySceneSpec& spec);

/// Writes PNGs plus manifest.json into out_dir; byte-identical for identical
/// specs.
void generate_scene(const ToySceneSpec& spec, const std::filesystem::path& out_dir);

}  // namespace nerfmir
