#include "nerfmir/dataset.hpp"

#include <fstream>

#include "json.hpp"
#include "nerfmir/png_io.hpp"

namespace nerfmir {

using nlohmann::json;

void Dataset::validate() const {
  intrinsics.validate();
  if (views.empty()) throw ValidationError("empty dataset");
  if (near <= 0.0) throw ValidationError("dataset: near must be positive");
  if (far <= near) throw ValidationError("dataset: far must exceed near");
  for (std::size_t i = 0; i < views.size(); ++i) {
    const View& v = views[i];
    if (v.image.width != intrinsics.width || v.image.height != intrinsics.height ||
        v.image.channels != 3) {
      throw ValidationError("dataset: view " + std::to_string(i) +
                            " image size does not match the intrinsics");
    }
    v.pose.validate();
    if (v.mask && (v.mask->width != intrinsics.width || v.mask->height != intrinsics.height)) {
      throw ValidationError("dataset: view " + std::to_string(i) + " mask size mismatch");
    }
  }
}

namespace {

MaskMatrix mask_from_image(const Image8& img) {
  MaskMatrix m(img.width, img.height);
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) m.at(r, c) = img.at(r, c, 0) >= 128 ? 1 : 0;
  return m;
}

Image8 mask_to_image(const MaskMatrix& m) {
  Image8 img(m.width, m.height, 1);
  for (int r = 0; r < m.height; ++r)
    for (int c = 0; c < m.width; ++c) img.at(r, c) = m.at(r, c) ? 255 : 0;
  return img;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("load_dataset: cannot open " + manifest_path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("load_dataset: bad manifest " + manifest_path.string() + ": " + e.what());
  }

  Dataset ds;
  try {
    const auto& ji = doc.at("intrinsics");
    ds.intrinsics.fx = ji.at("fx").get<double>();
    ds.intrinsics.fy = ji.at("fy").get<double>();
    ds.intrinsics.cx = ji.at("cx").get<double>();
    ds.intrinsics.cy = ji.at("cy").get<double>();
    ds.intrinsics.width = ji.at("width").get<int>();
    ds.intrinsics.height = ji.at("height").get<int>();
    ds.near = doc.at("near").get<double>();
    ds.far = doc.at("far").get<double>();

    const auto root = manifest_path.parent_path();
    for (const auto& jv : doc.at("views")) {
      View v;
      const auto image_path = root / jv.at("image").get<std::string>();
      if (!std::filesystem::exists(image_path))
        throw IoError("load_dataset: missing image file " + image_path.string());
      v.image = load_png(image_path);
      const auto& jm = jv.at("camera_to_world");
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) v.pose.m(r, c) = jm.at(r).at(c).get<double>();
      if (jv.contains("mask")) {
        const auto mask_path = root / jv.at("mask").get<std::string>();
        if (!std::filesystem::exists(mask_path))
          throw IoError("load_dataset: missing mask file " + mask_path.string());
        v.mask = mask_from_image(load_png(mask_path));
      }
      ds.views.push_back(std::move(v));
    }
  } catch (const json::exception& e) {
    throw IoError("load_dataset: bad manifest " + manifest_path.string() + ": " + e.what());
  }

  ds.validate();
  return ds;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir,
                  const std::string& manifest_name) {
  dataset.validate();
  std::filesystem::create_directories(dir);

  json doc;
  doc["intrinsics"] = {{"fx", dataset.intrinsics.fx}, {"fy", dataset.intrinsics.fy},
                       {"cx", dataset.intrinsics.cx}, {"cy", dataset.intrinsics.cy},
                       {"width", dataset.intrinsics.width},
                       {"height", dataset.intrinsics.height}};
  doc["near"] = dataset.near;
  doc["far"] = dataset.far;
  doc["views"] = json::array();

  char name[64];
  for (std::size_t i = 0; i < dataset.views.size(); ++i) {
    const View& v = dataset.views[i];
    json jv;
    std::snprintf(name, sizeof(name), "view_%03zu.png", i);
    save_png(dir / name, v.image);
    jv["image"] = name;
    if (v.mask) {
      std::snprintf(name, sizeof(name), "mask_%03zu.png", i);
      save_png(dir / name, mask_to_image(*v.mask));
      jv["mask"] = name;
    }
    auto jm = json::array();
    for (int r = 0; r < 4; ++r) {
      auto row = json::array();
      for (int c = 0; c < 4; ++c) row.push_back(v.pose.m(r, c));
      jm.push_back(row);
    }
    jv["camera_to_world"] = jm;
    doc["views"].push_back(jv);
  }

  std::ofstream out(dir / manifest_name);
  if (!out) throw IoError("save_dataset: cannot write " + (dir / manifest_name).string());
  out << doc.dump(2) << "\n";
}

}  // namespace nerfmir
