#include "nerfmir/toy_scene.hpp"

#include <cmath>
#include <numbers>

#include "nerfmir/parallel.hpp"

namespace nerfmir {

ToySceneSpec two_primitive_scene() {
  ToySceneSpec spec;
  spec.primitives = {
      {PrimitiveKind::sphere, {-0.8, 0.0, 0.1}, {0.9, 0.9, 0.9}, {214, 58, 46}},
      {PrimitiveKind::box, {0.85, 0.1, -0.2}, {1.1, 1.4, 0.9}, {52, 101, 204}},
  };
  return spec;
}

Pose orbit_pose(const ToySceneSpec& spec, int view_index) {
  if (spec.views < 2) throw ValidationError("toy scene: need at least two views");
  if (view_index < 0 || view_index >= spec.views)
    throw ValidationError("toy scene: view index out of range");

  const double azimuth = 2.0 * std::numbers::pi * view_index / spec.views;
  const double elevation = spec.elevation_deg * std::numbers::pi / 180.0;
  const Vec3 eye = {spec.orbit_radius * std::cos(elevation) * std::cos(azimuth),
                    spec.orbit_radius * std::sin(elevation),
                    spec.orbit_radius * std::cos(elevation) * std::sin(azimuth)};

  // Look at the origin: camera -z points at the target, +y up.
  const Vec3 z_cam = normalized(eye);  // eye - target, target = origin
  const Vec3 up = {0, 1, 0};
  const Vec3 x_cam = normalized(cross(up, z_cam));
  const Vec3 y_cam = cross(z_cam, x_cam);

  Pose pose;
  for (int r = 0; r < 3; ++r) {
    pose.m(r, 0) = x_cam[r];
    pose.m(r, 1) = y_cam[r];
    pose.m(r, 2) = z_cam[r];
    pose.m(r, 3) = eye[r];
  }
  return pose;
}

namespace {

CameraIntrinsics toy_intrinsics(const ToySceneSpec& spec) {
  CameraIntrinsics k;
  k.width = spec.width;
  k.height = spec.height;
  const double f =
      0.5 * spec.width / std::tan(0.5 * spec.fov_deg * std::numbers::pi / 180.0);
  k.fx = k.fy = f;
  k.cx = spec.width / 2.0;
  k.cy = spec.height / 2.0;
  return k;
}

bool hit_sphere(const Primitive& p, const Vec3& o, const Vec3& d, double t_min,
                double t_max, double* t_out) {
  const Vec3 oc = o - p.center;
  const double radius = p.size[0];
  const double b = dot(oc, d);
  const double c = dot(oc, oc) - radius * radius;
  const double disc = b * b - c;  // direction is unit length
  if (disc < 0) return false;
  const double sq = std::sqrt(disc);
  for (const double t : {-b - sq, -b + sq}) {
    if (t >= t_min && t <= t_max) {
      *t_out = t;
      return true;
    }
  }
  return false;
}

bool hit_box(const Primitive& p, const Vec3& o, const Vec3& d, double t_min, double t_max,
             double* t_out) {
  double t0 = t_min, t1 = t_max;
  for (int axis = 0; axis < 3; ++axis) {
    const double half = p.size[axis] / 2.0;
    const double lo = p.center[axis] - half;
    const double hi = p.center[axis] + half;
    if (std::abs(d[axis]) < 1e-12) {
      if (o[axis] < lo || o[axis] > hi) return false;
      continue;
    }
    double ta = (lo - o[axis]) / d[axis];
    double tb = (hi - o[axis]) / d[axis];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  *t_out = t0;
  return true;
}

}  // namespace

int first_hit(const ToySceneSpec& spec, const Vec3& origin, const Vec3& direction,
              double t_min, double t_max, double* t_hit) {
  int best = -1;
  double best_t = t_max;
  for (std::size_t i = 0; i < spec.primitives.size(); ++i) {
    const Primitive& p = spec.primitives[i];
    double t = 0;
    const bool hit = p.kind == PrimitiveKind::sphere
                         ? hit_sphere(p, origin, direction, t_min, best_t, &t)
                         : hit_box(p, origin, direction, t_min, best_t, &t);
    if (hit && t <= best_t) {
      best = static_cast<int>(i);
      best_t = t;
    }
  }
  if (best >= 0 && t_hit) *t_hit = best_t;
  return best;
}

Image8 render_toy_view(const ToySceneSpec& spec, int view_index) {
  const CameraIntrinsics intr = toy_intrinsics(spec);
  const Pose pose = orbit_pose(spec, view_index);
  Image8 img(spec.width, spec.height, 3);
  const std::size_t n = static_cast<std::size_t>(spec.width) * spec.height;
  parallel_for(n, Exec::parallel, [&](std::size_t px) {
    const int row = static_cast<int>(px) / spec.width;
    const int col = static_cast<int>(px) % spec.width;
    const Ray ray = camera_ray(intr, pose, row, col);
    const int hit = first_hit(spec, ray.origin, ray.direction, spec.near, spec.far);
    if (hit >= 0) {
      for (int ch = 0; ch < 3; ++ch) img.at(row, col, ch) = spec.primitives[hit].rgb[ch];
    }
  });
  return img;
}

Dataset generate_scene_dataset(const ToySceneSpec& spec) {
  if (spec.views < 2) throw ValidationError("toy scene: need at least two views");
  for (const auto& p : spec.primitives) {
    if (p.size[0] <= 0 || p.size[1] <= 0 || p.size[2] <= 0)
      throw ValidationError("toy scene: degenerate primitive");
  }
  Dataset ds;
  ds.intrinsics = toy_intrinsics(spec);
  ds.near = spec.near;
  ds.far = spec.far;
  ds.views.resize(spec.views);
  for (int v = 0; v < spec.views; ++v) {
    ds.views[v].pose = orbit_pose(spec, v);
    ds.views[v].image = render_toy_view(spec, v);
  }
  ds.validate();
  return ds;
}

void generate_scene(const ToySceneSpec& spec, const std::filesystem::path& out_dir) {
  save_dataset(generate_scene_dataset(spec), out_dir);
}

}  // namespace nerfmir
