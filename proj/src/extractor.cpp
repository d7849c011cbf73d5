#include "scralign/features.hpp"

#include <stdexcept>

namespace scralign {

std::vector<float> extract_shape_features(const ImageGray& image, const Shape& shape,
                                          const ExtractorConfig& extractor) {
    if (shape.size() == 0) throw std::invalid_argument("extract_shape_features: empty shape");
    std::vector<float> out(static_cast<std::size_t>(shape.size()) * kSiftDim);
    for (int i = 0; i < shape.size(); ++i) {
        const Point& p = shape.points[i];
        const ImageGray patch = extract_patch(image, p.x, p.y, extractor.patch_side);
        const SiftDescriptor d = extractor.kind == ExtractorConfig::Kind::Sift
                                     ? reference_sift(patch)
                                     : basift_extract(patch, extractor.basift);
        std::copy(d.begin(), d.end(), out.begin() + static_cast<std::size_t>(i) * kSiftDim);
    }
    return out;
}

} // namespace scralign
