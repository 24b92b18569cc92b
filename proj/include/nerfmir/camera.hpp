#pragma once

#include <array>
#include <cmath>

#include "nerfmir/common.hpp"

namespace nerfmir {

using Vec3 = std::array<double, 3>;

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double s, const Vec3& v) { return {s * v[0], s * v[1], s * v[2]}; }
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline Vec3 normalized(const Vec3& v) {
  const double n = norm(v);
  if (n == 0.0) throw ValidationError("normalized: zero vector");
  return (1.0 / n) * v;
}
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

struct CameraIntrinsics {
  double fx = 0, fy = 0;  // focal lengths, pixels
  double cx = 0, cy = 0;  // principal point, pixels
  int width = 0, height = 0;

  void validate() const;
};

/// Rigid camera-to-world transform, row-major 4x4. Camera space is -z
/// forward, +y up; pixel centers sit at half-integer coordinates.
struct Pose {
  std::array<double, 16> camera_to_world{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};

  double m(int r, int c) const { return camera_to_world[r * 4 + c]; }
  double& m(int r, int c) { return camera_to_world[r * 4 + c]; }

  Vec3 translation() const { return {m(0, 3), m(1, 3), m(2, 3)}; }
  Vec3 rotate(const Vec3& v) const {
    return {m(0, 0) * v[0] + m(0, 1) * v[1] + m(0, 2) * v[2],
            m(1, 0) * v[0] + m(1, 1) * v[1] + m(1, 2) * v[2],
            m(2, 0) * v[0] + m(2, 1) * v[1] + m(2, 2) * v[2]};
  }

  /// Rejects poses whose rotation block is not orthonormal within 1e-6 or
  /// whose bottom row is not (0,0,0,1).
  void validate() const;
};

struct Ray {
  Vec3 origin{};
  Vec3 direction{};  // unit length
  double near = 0, far = 0;
  int row = 0, col = 0;  // pixel the ray was emitted through
  int view_index = -1;
};

/// Ray through the center of pixel (row, col).
Ray camera_ray(const CameraIntrinsics& intrinsics, const Pose& pose, int row, int col);

}  // namespace nerfmir
