#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "scralign/image.hpp"
#include "scralign/shape.hpp"

namespace scralign {

inline constexpr int kSiftDim = 128; // 4x4 spatial cells x 8 orientation bins

struct GradientPair {
    int width = 0;
    int height = 0;
    std::vector<float> gx;
    std::vector<float> gy;
};

// Central differences in the interior, one-sided at the borders.
GradientPair gradients(const ImageGray& patch);

// Per-pixel 3-bit orientation code, bits MSB->LSB:
//   [gx > 0, gy > 0, |gx| > |gy|]
// Strict inequalities; ties (including gx = gy = 0) take the false branch.
struct OrientationCodeMap {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> codes; // each in [0,7]
};

OrientationCodeMap orientation_codes(const GradientPair& g);

// Maps the 3-bit comparison code onto the standard octant binning
// (octant k covers atan2(gy,gx) in [k*45deg, (k+1)*45deg)). A bijection
// on {0..7}; validated against an atan2 oracle in the tests.
const std::array<std::uint8_t, 8>& code_lut();

// One active element per pixel: pixel i (row-major) with code c activates
// index i*8 + lut[c].
struct SparseBinaryFeature {
    int dim = 0;
    std::vector<std::int32_t> active; // sorted ascending
};

SparseBinaryFeature encode_onehot(const OrientationCodeMap& codes,
                                  const std::array<std::uint8_t, 8>& lut);

// ---------------------------------------------------------------------------
// Reference SIFT descriptor (fixed scale/orientation, descriptor only).
// Magnitude-weighted histogram over 4x4 cells x 8 bins with bilinear
// spatial/orientation interpolation and Gaussian spatial weighting
// (sigma = side/2), then L2-normalize, clip at 0.2, renormalize.
// ---------------------------------------------------------------------------

using SiftDescriptor = std::array<float, kSiftDim>;

SiftDescriptor reference_sift(const ImageGray& patch);

// ---------------------------------------------------------------------------
// BASIFT: sign-quantized linear map applied to the one-hot orientation
// encoding. The map is learned offline against reference SIFT targets on a
// generic (non-face) patch corpus; at runtime the apply is a pure
// integer-addition scan over the active columns.
// ---------------------------------------------------------------------------

struct BasiftModel {
    int d_sift = kSiftDim;
    int patch_side = 32;
    int dim = 32 * 32 * 8;
    std::array<std::uint8_t, 8> lut{};
    std::vector<std::int8_t> sign_map; // column-major, entries in {-1,0,+1}

    bool empty() const { return sign_map.empty(); }
    void validate() const;
};

struct BasiftFit {
    Eigen::MatrixXd map;        // d_sift x dim, full precision
    double lambda = 0.0;        // resolved ridge value
    double train_residual = 0.0; // mean squared residual per patch
    double train_relative = 0.0; // residual relative to mean squared target norm
    int n_patches = 0;
};

// Least-squares map from one-hot codes to reference SIFT, solved through the
// normal equations (dual n x n form when patches are scarcer than columns,
// primal otherwise). `ridge` is relative to the mean squared row norm of the
// design (= pixels per patch); ridge 0 on a singular system raises.
enum class NormalEquationRoute { Auto, Primal, Dual };

BasiftFit train_basift_map(const std::vector<ImageGray>& patches, double ridge,
                           NormalEquationRoute route = NormalEquationRoute::Auto);

// |value| <= zero_band -> 0, otherwise the sign.
std::vector<std::int8_t> quantize_sign(const Eigen::MatrixXd& map, double zero_band = 0.0);

BasiftModel make_basift_model(const Eigen::MatrixXd& map, int patch_side,
                              double zero_band = 0.0);

// Raw integer accumulation: sum of the sign-map columns selected by the
// active indices. The oracle tests compare this against a dense
// matrix-vector product in integer arithmetic; they must agree exactly.
std::array<std::int32_t, kSiftDim> basift_accumulate(const ImageGray& patch,
                                                     const BasiftModel& model);

std::array<std::int32_t, kSiftDim> basift_accumulate(const OrientationCodeMap& codes,
                                                     const BasiftModel& model);

// Accumulate, then L2-normalize into the SIFT scale (zero stays zero).
SiftDescriptor basift_extract(const ImageGray& patch, const BasiftModel& model);

// ---------------------------------------------------------------------------
// Shape-indexed features: concatenation of per-landmark descriptors.
// ---------------------------------------------------------------------------

struct ExtractorConfig {
    enum class Kind : std::uint32_t { Sift = 0, Basift = 1 };
    Kind kind = Kind::Sift;
    int patch_side = 32;
    BasiftModel basift; // used when kind == Basift
};

// Length kSiftDim * P, landmark order.
std::vector<float> extract_shape_features(const ImageGray& image, const Shape& shape,
                                          const ExtractorConfig& extractor);

} // namespace scralign
