#pragma once

#include <filesystem>

#include "nerfmir/image.hpp"

namespace nerfmir {

/// Reads an 8-bit PNG. RGB(A) files load as 3 channels (alpha dropped),
/// grayscale as 1 channel.
Image8 load_png(const std::filesystem::path& path);

/// Writes an 8-bit PNG (1 or 3 channels). Output bytes depend only on the
/// pixel content, so identical images produce identical files.
void save_png(const std::filesystem::path& path, const Image8& image);

}  // namespace nerfmir
