#pragma once

#include <vector>

#include "scralign/training.hpp"

namespace scralign {

struct FitResult {
    Shape final;
    std::vector<Shape> per_stage;   // shape after each stage
    std::vector<double> stage_ms;   // wall-clock per stage
};

// Run the cascade from an initial shape. Each stage extracts features at the
// current shape and adds the predicted displacement, denormalized by the
// initial shape's inter-ocular distance. Never reads ground truth.
FitResult fit(const ImageGray& image, const Shape& init, const CascadeModel& model);

} // namespace scralign
