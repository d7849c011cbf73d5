#include "scralign/features.hpp"

#include <cmath>
#include <stdexcept>

#include <omp.h>

#include <Eigen/Cholesky>

namespace scralign {

OrientationCodeMap orientation_codes(const GradientPair& g) {
    OrientationCodeMap m;
    m.width = g.width;
    m.height = g.height;
    m.codes.resize(g.gx.size());
    for (std::size_t i = 0; i < g.gx.size(); ++i) {
        const float gx = g.gx[i], gy = g.gy[i];
        m.codes[i] = static_cast<std::uint8_t>((gx > 0.0f ? 4 : 0) |
                                               (gy > 0.0f ? 2 : 0) |
                                               (std::fabs(gx) > std::fabs(gy) ? 1 : 0));
    }
    return m;
}

const std::array<std::uint8_t, 8>& code_lut() {
    // Octant membership of each comparison code, e.g. code 7
    // (gx>0, gy>0, |gx|>|gy|) lies in (0deg,45deg) -> octant 0.
    static const std::array<std::uint8_t, 8> lut = {5, 4, 2, 3, 6, 7, 1, 0};
    return lut;
}

SparseBinaryFeature encode_onehot(const OrientationCodeMap& codes,
                                  const std::array<std::uint8_t, 8>& lut) {
    SparseBinaryFeature f;
    const std::size_t n = codes.codes.size();
    f.dim = static_cast<int>(n * 8);
    f.active.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        f.active[i] = static_cast<std::int32_t>(i * 8 + lut[codes.codes[i]]);
    return f;
}

void BasiftModel::validate() const {
    if (patch_side < 8 || dim != patch_side * patch_side * 8 || d_sift != kSiftDim)
        throw std::runtime_error("BasiftModel: inconsistent geometry");
    if (sign_map.size() != static_cast<std::size_t>(d_sift) * dim)
        throw std::runtime_error("BasiftModel: sign map size mismatch");
    std::array<bool, 8> seen{};
    for (std::uint8_t v : lut) {
        if (v > 7 || seen[v]) throw std::runtime_error("BasiftModel: lut is not a permutation");
        seen[v] = true;
    }
    for (std::int8_t v : sign_map)
        if (v < -1 || v > 1) throw std::runtime_error("BasiftModel: sign map entry outside {-1,0,1}");
}

namespace {

// per-pixel octant bytes; the compact form of the one-hot encoding
std::vector<std::uint8_t> octant_bytes(const ImageGray& patch) {
    const OrientationCodeMap codes = orientation_codes(gradients(patch));
    std::vector<std::uint8_t> bins(codes.codes.size());
    const auto& lut = code_lut();
    for (std::size_t i = 0; i < bins.size(); ++i) bins[i] = lut[codes.codes[i]];
    return bins;
}

} // namespace

BasiftFit train_basift_map(const std::vector<ImageGray>& patches, double ridge,
                           NormalEquationRoute route) {
    if (patches.empty()) throw std::invalid_argument("train_basift_map: no patches");
    if (ridge < 0.0) throw std::invalid_argument("train_basift_map: negative ridge");
    const int side = patches.front().width;
    const int npix = side * side;
    const int dim = npix * 8;
    const int n = static_cast<int>(patches.size());
    for (const ImageGray& p : patches)
        if (p.width != side || p.height != side)
            throw std::invalid_argument("train_basift_map: mixed patch sizes");

    // design rows as per-pixel octant bytes + SIFT targets
    std::vector<std::vector<std::uint8_t>> rows(n);
    Eigen::MatrixXd targets(n, kSiftDim);
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
        rows[i] = octant_bytes(patches[i]);
        const SiftDescriptor d = reference_sift(patches[i]);
        for (int k = 0; k < kSiftDim; ++k) targets(i, k) = d[k];
    }

    // every design row has squared norm = npix, so trace(Gram)/n = npix
    const double lambda = ridge * static_cast<double>(npix);

    BasiftFit fit;
    fit.lambda = lambda;
    fit.n_patches = n;
    fit.map.setZero(kSiftDim, dim);

    const bool use_dual = route == NormalEquationRoute::Auto ? n <= dim
                                                             : route == NormalEquationRoute::Dual;
    if (use_dual) {
        // dual form: Gram(i,j) = #pixels where both patches chose the same octant
        Eigen::MatrixXd gram(n, n);
#pragma omp parallel for schedule(dynamic)
        for (int i = 0; i < n; ++i) {
            const std::uint8_t* a = rows[i].data();
            for (int j = i; j < n; ++j) {
                const std::uint8_t* b = rows[j].data();
                int same = 0;
                for (int k = 0; k < npix; ++k) same += a[k] == b[k];
                gram(i, j) = same;
                gram(j, i) = same;
            }
        }
        gram.diagonal().array() += lambda;
        Eigen::LLT<Eigen::MatrixXd> llt(gram);
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("train_basift_map: singular system; use ridge > 0");
        const Eigen::MatrixXd alpha = llt.solve(targets); // n x d_sift
        for (int i = 0; i < n; ++i)
            for (int p = 0; p < npix; ++p)
                fit.map.col(p * 8 + rows[i][p]) += alpha.row(i).transpose();
    } else {
        // primal form: co-occurrence counts of active indices
        Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(dim, dim);
        Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(kSiftDim, dim);
        for (int i = 0; i < n; ++i) {
            const auto& r = rows[i];
#pragma omp parallel for
            for (int p = 0; p < npix; ++p) {
                const int jp = p * 8 + r[p];
                double* grow = gram.col(jp).data(); // column == row by symmetry
                for (int q = 0; q < npix; ++q) grow[q * 8 + r[q]] += 1.0;
            }
            for (int p = 0; p < npix; ++p)
                cross.col(p * 8 + r[p]) += targets.row(i).transpose();
        }
        gram.diagonal().array() += lambda;
        Eigen::LLT<Eigen::MatrixXd> llt(gram);
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("train_basift_map: singular system; use ridge > 0");
        fit.map = llt.solve(cross.transpose()).transpose();
    }

    if (ridge == 0.0) {
        // cheap singularity guard: residual of the fitted system must be sane
        if (!fit.map.allFinite())
            throw std::runtime_error("train_basift_map: singular system; use ridge > 0");
    }

    double resid = 0.0, tgt = 0.0;
#pragma omp parallel for reduction(+ : resid, tgt) schedule(static)
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd pred = Eigen::VectorXd::Zero(kSiftDim);
        for (int p = 0; p < npix; ++p) pred += fit.map.col(p * 8 + rows[i][p]);
        resid += (pred - targets.row(i).transpose()).squaredNorm();
        tgt += targets.row(i).squaredNorm();
    }
    fit.train_residual = resid / n;
    fit.train_relative = tgt > 0.0 ? resid / tgt : 0.0;
    return fit;
}

std::vector<std::int8_t> quantize_sign(const Eigen::MatrixXd& map, double zero_band) {
    std::vector<std::int8_t> out(static_cast<std::size_t>(map.rows()) * map.cols());
    std::size_t k = 0;
    for (Eigen::Index j = 0; j < map.cols(); ++j)
        for (Eigen::Index i = 0; i < map.rows(); ++i) {
            const double v = map(i, j);
            out[k++] = std::fabs(v) <= zero_band ? 0 : (v > 0.0 ? 1 : -1);
        }
    return out;
}

BasiftModel make_basift_model(const Eigen::MatrixXd& map, int patch_side, double zero_band) {
    BasiftModel m;
    m.patch_side = patch_side;
    m.dim = patch_side * patch_side * 8;
    if (map.rows() != kSiftDim || map.cols() != m.dim)
        throw std::invalid_argument("make_basift_model: map dims do not match patch side");
    m.lut = code_lut();
    m.sign_map = quantize_sign(map, zero_band);
    m.validate();
    return m;
}

std::array<std::int32_t, kSiftDim> basift_accumulate(const ImageGray& patch,
                                                     const BasiftModel& model) {
    if (patch.width != model.patch_side || patch.height != model.patch_side)
        throw std::invalid_argument("basift_accumulate: patch does not match model geometry");
    return basift_accumulate(orientation_codes(gradients(patch)), model);
}

std::array<std::int32_t, kSiftDim> basift_accumulate(const OrientationCodeMap& codes,
                                                     const BasiftModel& model) {
    if (codes.width * codes.height * 8 != model.dim)
        throw std::invalid_argument("basift_accumulate: code map does not match model geometry");
    const std::int8_t* map = model.sign_map.data();
    const std::uint8_t* lut = model.lut.data();
    const std::uint8_t* code = codes.codes.data();
    const std::size_t npix = codes.codes.size();

    // Addition-only scan over the active columns (d_sift = 128 = 1 << 7).
    // Entries are in {-1,0,+1}, so every partial sum fits int16 as long as
    // the patch has at most 32767 pixels; the local buffer keeps the hot
    // loop free of aliasing with the int8 map.
    // the selected columns hop through a table much larger than L1/L2, so
    // fetch ahead; the index stream is fully computable from the codes
    constexpr std::size_t kAhead = 16;
    auto prefetch_col = [&](std::size_t i) {
        const std::size_t j = i * 8 + lut[code[i]];
        const char* p = reinterpret_cast<const char*>(map + (j << 7));
        __builtin_prefetch(p, 0, 1);
        __builtin_prefetch(p + 64, 0, 1);
    };

    std::array<std::int32_t, kSiftDim> out{};
    if (npix <= 32767) {
        alignas(64) std::int16_t acc[kSiftDim] = {};
        for (std::size_t i = 0; i < std::min(kAhead, npix); ++i) prefetch_col(i);
        for (std::size_t i = 0; i < npix; ++i) {
            if (i + kAhead < npix) prefetch_col(i + kAhead);
            const std::size_t j = i * 8 + lut[code[i]];
            const std::int8_t* col = map + (j << 7);
            for (int d = 0; d < kSiftDim; ++d)
                acc[d] = static_cast<std::int16_t>(acc[d] + col[d]);
        }
        for (int d = 0; d < kSiftDim; ++d) out[d] = acc[d];
    } else {
        alignas(64) std::int32_t acc[kSiftDim] = {};
        for (std::size_t i = 0; i < npix; ++i) {
            const std::size_t j = i * 8 + lut[code[i]];
            const std::int8_t* col = map + (j << 7);
            for (int d = 0; d < kSiftDim; ++d) acc[d] += col[d];
        }
        for (int d = 0; d < kSiftDim; ++d) out[d] = acc[d];
    }
    return out;
}

SiftDescriptor basift_extract(const ImageGray& patch, const BasiftModel& model) {
    const std::array<std::int32_t, kSiftDim> acc = basift_accumulate(patch, model);
    double norm2 = 0.0;
    for (std::int32_t v : acc) norm2 += static_cast<double>(v) * v;
    SiftDescriptor d{};
    if (norm2 == 0.0) return d;
    const double inv = 1.0 / std::sqrt(norm2);
    for (int i = 0; i < kSiftDim; ++i) d[i] = static_cast<float>(acc[i] * inv);
    return d;
}

} // namespace scralign
