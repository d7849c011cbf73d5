#include "scralign/image.hpp"

#include <cmath>

namespace scralign {

ImageGray extract_patch(const ImageGray& image, double cx, double cy, int side) {
    if (side < 8 || side % 2 != 0)
        throw std::invalid_argument("extract_patch: side must be even and >= 8");
    const int icx = static_cast<int>(std::lround(cx));
    const int icy = static_cast<int>(std::lround(cy));
    const int half = side / 2;
    ImageGray patch(side, side);
    for (int y = 0; y < side; ++y) {
        const int sy = icy - half + y;
        for (int x = 0; x < side; ++x) {
            patch.at(x, y) = image.at_clamped(icx - half + x, sy);
        }
    }
    return patch;
}

float luma601(unsigned char b, unsigned char g, unsigned char r) {
    return (0.299f * r + 0.587f * g + 0.114f * b) / 255.0f;
}

} // namespace scralign
