#include "scralign/features.hpp"

#include <cmath>
#include <stdexcept>

namespace scralign {

GradientPair gradients(const ImageGray& patch) {
    if (patch.width < 3 || patch.height < 3)
        throw std::invalid_argument("gradients: patch side must be >= 3");
    GradientPair g;
    g.width = patch.width;
    g.height = patch.height;
    g.gx.resize(patch.data.size());
    g.gy.resize(patch.data.size());
    const int w = patch.width, h = patch.height;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            if (x == 0)
                g.gx[i] = patch.at(1, y) - patch.at(0, y);
            else if (x == w - 1)
                g.gx[i] = patch.at(w - 1, y) - patch.at(w - 2, y);
            else
                g.gx[i] = 0.5f * (patch.at(x + 1, y) - patch.at(x - 1, y));
            if (y == 0)
                g.gy[i] = patch.at(x, 1) - patch.at(x, 0);
            else if (y == h - 1)
                g.gy[i] = patch.at(x, h - 1) - patch.at(x, h - 2);
            else
                g.gy[i] = 0.5f * (patch.at(x, y + 1) - patch.at(x, y - 1));
        }
    }
    return g;
}

SiftDescriptor reference_sift(const ImageGray& patch) {
    const int side = patch.width;
    if (patch.height != side || side % 4 != 0 || side < 8)
        throw std::invalid_argument("reference_sift: square patch with side divisible by 4 required");
    const double cell = side / 4.0;
    const double sigma = side / 2.0;
    const double center = side / 2.0;
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);

    const GradientPair g = gradients(patch);

    double hist[4][4][8] = {};
    for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * side + x;
            const double gx = g.gx[i], gy = g.gy[i];
            const double mag = std::hypot(gx, gy);
            if (mag == 0.0) continue;
            double theta = std::atan2(gy, gx);
            if (theta < 0.0) theta += 2.0 * M_PI;

            const double cx = x + 0.5, cy = y + 0.5;
            const double wg = std::exp(-((cx - center) * (cx - center) +
                                         (cy - center) * (cy - center)) * inv2s2);

            // continuous coordinates relative to cell/bin centers
            const double u = cx / cell - 0.5;
            const double v = cy / cell - 0.5;
            const double ob = theta * (8.0 / (2.0 * M_PI)) - 0.5;

            const int u0 = static_cast<int>(std::floor(u));
            const int v0 = static_cast<int>(std::floor(v));
            const int o0 = static_cast<int>(std::floor(ob));
            const double du = u - u0, dv = v - v0, dob = ob - o0;

            const double w = mag * wg;
            for (int a = 0; a < 2; ++a) {
                const int iu = u0 + a;
                if (iu < 0 || iu > 3) continue;
                const double wu = a == 0 ? 1.0 - du : du;
                for (int b = 0; b < 2; ++b) {
                    const int iv = v0 + b;
                    if (iv < 0 || iv > 3) continue;
                    const double wv = b == 0 ? 1.0 - dv : dv;
                    for (int c = 0; c < 2; ++c) {
                        const int io = (((o0 + c) % 8) + 8) % 8;
                        const double wo = c == 0 ? 1.0 - dob : dob;
                        hist[iv][iu][io] += w * wu * wv * wo;
                    }
                }
            }
        }
    }

    double flat[kSiftDim];
    double norm2 = 0.0;
    for (int iv = 0; iv < 4; ++iv)
        for (int iu = 0; iu < 4; ++iu)
            for (int io = 0; io < 8; ++io) {
                const double h = hist[iv][iu][io];
                flat[(iv * 4 + iu) * 8 + io] = h;
                norm2 += h * h;
            }

    SiftDescriptor d{};
    if (norm2 == 0.0) return d; // flat patch: zero descriptor, no normalization

    double inv = 1.0 / std::sqrt(norm2);
    norm2 = 0.0;
    for (double& h : flat) {
        h = std::min(h * inv, 0.2);
        norm2 += h * h;
    }
    inv = 1.0 / std::sqrt(norm2);
    for (int i = 0; i < kSiftDim; ++i) d[i] = static_cast<float>(flat[i] * inv);
    return d;
}

} // namespace scralign
