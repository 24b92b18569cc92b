#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "nerfmir/camera.hpp"
#include "nerfmir/image.hpp"
#include "nerfmir/masking.hpp"

namespace nerfmir {

struct View {
  Image8 image;  // H x W x 3
  Pose pose;
  std::optional<MaskMatrix> mask;
};

/// Posed multi-view image set with shared intrinsics and scene depth bounds.
struct Dataset {
  CameraIntrinsics intrinsics;
  double near = 0, far = 0;
  std::vector<View> views;

  void validate() const;
};

/// Reads a manifest (JSON) and the PNGs it references. View order follows
/// the manifest; pixels are preserved exactly.
Dataset load_dataset(const std::filesystem::path& manifest_path);

/// Writes PNGs plus a manifest into dir. load_dataset(save_dataset(d)) gives
/// back identical images, masks and poses.
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir,
                  const std::string& manifest_name = "manifest.json");

}  // namespace nerfmir
