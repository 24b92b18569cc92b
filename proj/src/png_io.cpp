#include "nerfmir/png_io.hpp"

#include <png.h>

#include <cstring>

namespace nerfmir {

Image8 load_png(const std::filesystem::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;

  if (!png_image_begin_read_from_file(&png, path.string().c_str())) {
    throw IoError("load_png: cannot read " + path.string() + ": " + png.message);
  }

  const bool gray = (png.format & PNG_FORMAT_FLAG_COLOR) == 0;
  png.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;

  Image8 out(static_cast<int>(png.width), static_cast<int>(png.height), gray ? 1 : 3);
  if (!png_image_finish_read(&png, nullptr, out.data.data(), 0, nullptr)) {
    png_image_free(&png);
    throw IoError("load_png: decode failed for " + path.string() + ": " + png.message);
  }
  return out;
}

void save_png(const std::filesystem::path& path, const Image8& image) {
  if (image.width <= 0 || image.height <= 0)
    throw ValidationError("save_png: empty image");

  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = image.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;

  if (!png_image_write_to_file(&png, path.string().c_str(), 0, image.data.data(), 0,
                               nullptr)) {
    throw IoError("save_png: cannot write " + path.string() + ": " + png.message);
  }
}

}  // namespace nerfmir
