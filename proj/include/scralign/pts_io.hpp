#pragma once

#include <string>

#include "scralign/shape.hpp"

namespace scralign {

// Standard pts annotation text format:
//   version: 1
//   n_points: 49
//   {
//   x y
//   ...
//   }
Shape read_pts(const std::string& path);

void write_pts(const std::string& path, const Shape& shape);

// Accepts either a file already in scheme order (n_points == P) or a
// 68-point file, which is mapped through the canonical subset.
Shape read_pts_for_scheme(const std::string& path, const LandmarkScheme& scheme);

} // namespace scralign
