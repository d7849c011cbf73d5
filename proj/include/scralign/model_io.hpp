#pragma once

#include <string>

#include "scralign/training.hpp"

namespace scralign {

// Cascade model container: magic "SCRALMD1", u32 format version, u32 section
// count, section table (tag/offset/size), then the sections. All integers and
// floats little-endian; regressor payloads are 32-bit floats. Writing the
// same model twice produces identical bytes.
void save_cascade(const std::string& path, const CascadeModel& model);
CascadeModel load_cascade(const std::string& path);

// Standalone descriptor-map file: magic "BASIFTM1", version, geometry, LUT,
// sign map (column-major signed 8-bit).
void save_basift(const std::string& path, const BasiftModel& model);
BasiftModel load_basift(const std::string& path);

// Consistency checks on a stored model: structural invariants, densified
// equivalence of every composed stage, integer equivalence of the
// addition-based descriptor path. Returns human-readable failures; empty
// means the model verifies.
std::vector<std::string> verify_cascade(const CascadeModel& model, std::uint64_t seed = 1);

} // namespace scralign
