#pragma once

#include <vector>
#include <algorithm>
#include <stdexcept>

namespace scralign {

// Row-major grayscale image, intensities in [0,1].
struct ImageGray {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    ImageGray() = default;
    ImageGray(int w, int h, float fill = 0.0f)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {
        if (w < 1 || h < 1) throw std::invalid_argument("ImageGray: dims must be >= 1");
    }

    float& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    float at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }

    // edge-replicated read
    float at_clamped(int x, int y) const {
        x = std::clamp(x, 0, width - 1);
        y = std::clamp(y, 0, height - 1);
        return at(x, y);
    }

    bool valid() const {
        return width >= 1 && height >= 1 &&
               data.size() == static_cast<std::size_t>(width) * height;
    }
};

// side x side patch centered at the rounded center point. Out-of-bounds
// pixels are filled by edge replication, so any center is acceptable.
ImageGray extract_patch(const ImageGray& image, double cx, double cy, int side);

// ITU-R 601 luma from 8-bit BGR triplets (the decoder hands us BGR rows).
float luma601(unsigned char b, unsigned char g, unsigned char r);

} // namespace scralign
