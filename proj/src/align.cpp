#include "scralign/align.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace scralign {

FitResult fit(const ImageGray& image, const Shape& init, const CascadeModel& model) {
    if (init.size() != model.scheme.P)
        throw std::invalid_argument("fit: initial shape has wrong point count");
    const double iod = interocular_distance(init, model.scheme);

    FitResult result;
    Shape current = init;
    for (std::size_t k = 0; k < model.stages.size(); ++k) {
        const auto t0 = std::chrono::steady_clock::now();
        const std::vector<float> phi = extract_shape_features(image, current, model.extractor);
        const std::vector<float> delta = model.stages[k].apply(phi);
        for (int i = 0; i < model.scheme.P; ++i) {
            current.points[i].x += static_cast<double>(delta[2 * i]) * iod;
            current.points[i].y += static_cast<double>(delta[2 * i + 1]) * iod;
        }
        const auto t1 = std::chrono::steady_clock::now();
        if (!current.finite())
            throw std::runtime_error("fit: non-finite update at stage " + std::to_string(k + 1));
        result.per_stage.push_back(current);
        result.stage_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    result.final = current;
    return result;
}

} // namespace scralign
