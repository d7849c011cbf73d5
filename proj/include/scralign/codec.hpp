#pragma once

#include <string>

#include "scralign/image.hpp"

namespace scralign {

// PNG/JPEG decode to grayscale via ITU-R 601 luma. Throws on unreadable files.
ImageGray load_image_gray(const std::string& path);

// 8-bit grayscale PNG
void save_image_png(const std::string& path, const ImageGray& image);

} // namespace scralign
