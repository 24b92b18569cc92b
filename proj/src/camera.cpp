#include "nerfmir/camera.hpp"

#include <string>

namespace nerfmir {

void CameraIntrinsics::validate() const {
  if (fx <= 0 || fy <= 0) throw ValidationError("intrinsics: focal lengths must be positive");
  if (width <= 0 || height <= 0) throw ValidationError("intrinsics: empty image plane");
  if (cx < 0 || cx >= width || cy < 0 || cy >= height)
    throw ValidationError("intrinsics: principal point outside the image");
}

void Pose::validate() const {
  constexpr double tol = 1e-6;
  for (int c = 0; c < 3; ++c) {
    if (std::abs(m(3, c)) > 0.0) throw ValidationError("pose: bottom row must be (0,0,0,1)");
  }
  if (m(3, 3) != 1.0) throw ValidationError("pose: bottom row must be (0,0,0,1)");

  // Columns of the rotation block must be unit length and pairwise orthogonal.
  for (int a = 0; a < 3; ++a) {
    for (int b = a; b < 3; ++b) {
      double d = 0;
      for (int r = 0; r < 3; ++r) d += m(r, a) * m(r, b);
      const double want = (a == b) ? 1.0 : 0.0;
      if (std::abs(d - want) > tol)
        throw ValidationError("pose: rotation block is not orthonormal");
    }
  }
}

Ray camera_ray(const CameraIntrinsics& intrinsics, const Pose& pose, int row, int col) {
  if (row < 0 || row >= intrinsics.height || col < 0 || col >= intrinsics.width) {
    throw ValidationError("camera_ray: pixel (" + std::to_string(row) + "," +
                          std::to_string(col) + ") outside image bounds");
  }
  const Vec3 dir_cam = {(col + 0.5 - intrinsics.cx) / intrinsics.fx,
                        -(row + 0.5 - intrinsics.cy) / intrinsics.fy, -1.0};
  Ray ray;
  ray.origin = pose.translation();
  ray.direction = normalized(pose.rotate(dir_cam));
  ray.row = row;
  ray.col = col;
  return ray;
}

}  // namespace nerfmir
