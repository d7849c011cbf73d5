#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "scralign/rng.hpp"
#include "scralign/shape.hpp"

namespace scralign {

// ---------------------------------------------------------------------------
// Structured regressors: a regression transform factored into an ordered
// chain of components, each either block-diagonal or dense, applied
// nested-product style. Dense payloads are contiguous row-major so the block
// products reduce to small fixed-trip-count matrix-vector kernels.
// ---------------------------------------------------------------------------

struct BlockSpec {
    int row_offset = 0;
    int col_offset = 0;
    int rows = 0;
    int cols = 0;
};

enum class ComponentKind : std::uint32_t { BlockDiagonal = 0, Dense = 1 };

template <typename T>
struct DenseMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<T> data; // row-major

    DenseMatrix() = default;
    DenseMatrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, T(0)) {}

    T& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    T at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
};

// --- dense micro-kernels ----------------------------------------------------

// y[0..rows) = A (rows x cols, row-major) * x; fixed column count so the
// inner loop fully unrolls/vectorizes
template <typename T, int Cols>
inline void matvec_fixed(const T* a, int rows, const T* x, T* y) {
    for (int r = 0; r < rows; ++r) {
        const T* row = a + static_cast<std::size_t>(r) * Cols;
        T acc = T(0);
        for (int k = 0; k < Cols; ++k) acc += row[k] * x[k];
        y[r] = acc;
    }
}

template <typename T>
inline void matvec(const T* a, int rows, int cols, const T* x, T* y) {
    if (cols == 128) {
        matvec_fixed<T, 128>(a, rows, x, y);
        return;
    }
    for (int r = 0; r < rows; ++r) {
        const T* row = a + static_cast<std::size_t>(r) * cols;
        T acc = T(0);
        for (int k = 0; k < cols; ++k) acc += row[k] * x[k];
        y[r] = acc;
    }
}

// y[0..cols) += A^T * x[0..rows)
template <typename T>
inline void matvec_transpose_add(const T* a, int rows, int cols, const T* x, T* y) {
    for (int r = 0; r < rows; ++r) {
        const T* row = a + static_cast<std::size_t>(r) * cols;
        const T xr = x[r];
        for (int k = 0; k < cols; ++k) y[k] += row[k] * xr;
    }
}

// --- components ---------------------------------------------------------

template <typename T>
struct BlockSparseComponent {
    int out_dim = 0;
    int in_dim = 0;
    ComponentKind kind = ComponentKind::BlockDiagonal;
    std::vector<BlockSpec> blocks;
    std::vector<std::vector<T>> payloads; // row-major, one per block

    void validate() const {
        if (blocks.size() != payloads.size())
            throw std::runtime_error("component: block/payload count mismatch");
        if (kind == ComponentKind::Dense) {
            if (blocks.size() != 1 || blocks[0].rows != out_dim || blocks[0].cols != in_dim ||
                blocks[0].row_offset != 0 || blocks[0].col_offset != 0)
                throw std::runtime_error("component: dense kind must have one spanning block");
        }
        int prev_row_end = 0, prev_col_end = 0;
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            const BlockSpec& b = blocks[i];
            if (b.rows <= 0 || b.cols <= 0 || b.row_offset < 0 || b.col_offset < 0 ||
                b.row_offset + b.rows > out_dim || b.col_offset + b.cols > in_dim)
                throw std::runtime_error("component: block outside component dims");
            if (payloads[i].size() != static_cast<std::size_t>(b.rows) * b.cols)
                throw std::runtime_error("component: payload size mismatch");
            if (kind == ComponentKind::BlockDiagonal) {
                // blocks are stored in layout order and must be pairwise
                // disjoint in both rows and columns
                if (b.row_offset < prev_row_end || b.col_offset < prev_col_end)
                    throw std::runtime_error("component: overlapping blocks");
                prev_row_end = b.row_offset + b.rows;
                prev_col_end = b.col_offset + b.cols;
            }
        }
    }
};

// y = S * x; rows not covered by any block stay zero. Blocks write disjoint
// output rows, so the parallel schedule cannot change the result.
template <typename T>
void apply_component_serial(const BlockSparseComponent<T>& s, const T* x, T* y) {
    for (int r = 0; r < s.out_dim; ++r) y[r] = T(0);
    for (std::size_t i = 0; i < s.blocks.size(); ++i) {
        const BlockSpec& b = s.blocks[i];
        matvec(s.payloads[i].data(), b.rows, b.cols, x + b.col_offset, y + b.row_offset);
    }
}

template <typename T>
void apply_component_parallel(const BlockSparseComponent<T>& s, const T* x, T* y) {
    for (int r = 0; r < s.out_dim; ++r) y[r] = T(0);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(s.blocks.size()); ++i) {
        const BlockSpec& b = s.blocks[i];
        matvec(s.payloads[i].data(), b.rows, b.cols, x + b.col_offset, y + b.row_offset);
    }
}

template <typename T>
std::vector<T> apply_component(const BlockSparseComponent<T>& s, const std::vector<T>& x,
                               bool parallel = false) {
    if (static_cast<int>(x.size()) != s.in_dim)
        throw std::invalid_argument("apply_component: dimension mismatch");
    std::vector<T> y(s.out_dim);
    if (parallel)
        apply_component_parallel(s, x.data(), y.data());
    else
        apply_component_serial(s, x.data(), y.data());
    return y;
}

// y = S^T * x (x has out_dim entries). Blocks are column-disjoint, so the
// same scheduling argument applies.
template <typename T>
void apply_component_transpose(const BlockSparseComponent<T>& s, const T* x, T* y) {
    for (int c = 0; c < s.in_dim; ++c) y[c] = T(0);
    for (std::size_t i = 0; i < s.blocks.size(); ++i) {
        const BlockSpec& b = s.blocks[i];
        matvec_transpose_add(s.payloads[i].data(), b.rows, b.cols, x + b.row_offset,
                             y + b.col_offset);
    }
}

// --- compositions ---------------------------------------------------------

template <typename T>
struct SparseComposition {
    std::vector<BlockSparseComponent<T>> components; // applied first to last

    int in_dim() const { return components.empty() ? 0 : components.front().in_dim; }
    int out_dim() const { return components.empty() ? 0 : components.back().out_dim; }

    // chain compatibility is checked at construction, not at apply time
    void validate() const {
        if (components.empty()) throw std::runtime_error("composition: empty chain");
        for (std::size_t l = 0; l < components.size(); ++l) {
            components[l].validate();
            if (l > 0 && components[l].in_dim != components[l - 1].out_dim)
                throw std::runtime_error("composition: chain dimension mismatch");
        }
    }
};

template <typename T>
struct CompositionWorkspace {
    std::vector<T> a, b;

    void reserve_for(const SparseComposition<T>& c) {
        std::size_t m = 0;
        for (const auto& s : c.components) m = std::max(m, static_cast<std::size_t>(s.out_dim));
        a.resize(m);
        b.resize(m);
    }
};

// Nested evaluation S_L(...(S_2(S_1 x))); the dense product is never formed.
template <typename T>
void apply_composition(const SparseComposition<T>& c, const T* x, T* y,
                       CompositionWorkspace<T>& ws, bool parallel = false) {
    const std::size_t count = c.components.size();
    const T* cur = x;
    for (std::size_t l = 0; l < count; ++l) {
        T* dst = l == count - 1 ? y : (l % 2 == 0 ? ws.a.data() : ws.b.data());
        if (parallel)
            apply_component_parallel(c.components[l], cur, dst);
        else
            apply_component_serial(c.components[l], cur, dst);
        cur = dst;
    }
}

template <typename T>
std::vector<T> apply_composition(const SparseComposition<T>& c, const std::vector<T>& x,
                                 bool parallel = false) {
    if (static_cast<int>(x.size()) != c.in_dim())
        throw std::invalid_argument("apply_composition: dimension mismatch");
    CompositionWorkspace<T> ws;
    ws.reserve_for(c);
    std::vector<T> y(c.out_dim());
    apply_composition(c, x.data(), y.data(), ws, parallel);
    return y;
}

// --- densification (oracle / verification use only) -----------------------

template <typename T>
DenseMatrix<T> densify(const BlockSparseComponent<T>& s) {
    DenseMatrix<T> m(s.out_dim, s.in_dim);
    for (std::size_t i = 0; i < s.blocks.size(); ++i) {
        const BlockSpec& b = s.blocks[i];
        for (int r = 0; r < b.rows; ++r)
            for (int c = 0; c < b.cols; ++c)
                m.at(b.row_offset + r, b.col_offset + c) =
                    s.payloads[i][static_cast<std::size_t>(r) * b.cols + c];
    }
    return m;
}

template <typename T>
DenseMatrix<T> matmul(const DenseMatrix<T>& a, const DenseMatrix<T>& b) {
    if (a.cols != b.rows) throw std::invalid_argument("matmul: dimension mismatch");
    DenseMatrix<T> m(a.rows, b.cols);
#pragma omp parallel for schedule(static)
    for (int r = 0; r < a.rows; ++r)
        for (int k = 0; k < a.cols; ++k) {
            const T ark = a.at(r, k);
            if (ark == T(0)) continue;
            for (int c = 0; c < b.cols; ++c) m.data[static_cast<std::size_t>(r) * b.cols + c] += ark * b.at(k, c);
        }
    return m;
}

// Explicit product of the whole chain as one dense matrix.
template <typename T>
DenseMatrix<T> densify(const SparseComposition<T>& c) {
    DenseMatrix<T> m = densify(c.components.front());
    for (std::size_t l = 1; l < c.components.size(); ++l)
        m = matmul(densify(c.components[l]), m);
    return m;
}

template <typename T>
std::vector<T> apply_dense_serial(const DenseMatrix<T>& m, const std::vector<T>& x) {
    if (static_cast<int>(x.size()) != m.cols)
        throw std::invalid_argument("apply_dense: dimension mismatch");
    std::vector<T> y(m.rows);
    matvec(m.data.data(), m.rows, m.cols, x.data(), y.data());
    return y;
}

template <typename T>
void apply_dense_parallel(const DenseMatrix<T>& m, const T* x, T* y) {
#pragma omp parallel for schedule(static)
    for (int r = 0; r < m.rows; ++r) {
        const T* row = m.data.data() + static_cast<std::size_t>(r) * m.cols;
        T acc = T(0);
        for (int k = 0; k < m.cols; ++k) acc += row[k] * x[k];
        y[r] = acc;
    }
}

// --- operation counts -------------------------------------------------------

inline std::uint64_t flop_count(const BlockSpec& b) {
    return static_cast<std::uint64_t>(b.rows) * b.cols;
}

template <typename T>
std::uint64_t flop_count(const BlockSparseComponent<T>& s) {
    std::uint64_t n = 0;
    for (const BlockSpec& b : s.blocks) n += flop_count(b);
    return n;
}

template <typename T>
std::uint64_t flop_count(const SparseComposition<T>& c) {
    std::uint64_t n = 0;
    for (const auto& s : c.components) n += flop_count(s);
    return n;
}

template <typename T>
std::uint64_t flop_count(const DenseMatrix<T>& m) {
    return static_cast<std::uint64_t>(m.rows) * m.cols;
}

template <typename T>
double density(const BlockSparseComponent<T>& s) {
    return static_cast<double>(flop_count(s)) /
           (static_cast<double>(s.out_dim) * static_cast<double>(s.in_dim));
}

// --- structure builders -----------------------------------------------------
// Payloads start at zero; training (or a projection of a dense solution)
// fills them in.

// Strict per-landmark connectivity: P blocks reducing each landmark's
// descriptor independently. The largest and sparsest factor, stored first.
template <typename T>
BlockSparseComponent<T> build_component1(int P, int feat_per_lm = 128, int out_per_lm = 16) {
    BlockSparseComponent<T> s;
    s.kind = ComponentKind::BlockDiagonal;
    s.in_dim = P * feat_per_lm;
    s.out_dim = P * out_per_lm;
    for (int i = 0; i < P; ++i) {
        s.blocks.push_back({i * out_per_lm, i * feat_per_lm, out_per_lm, feat_per_lm});
        s.payloads.emplace_back(static_cast<std::size_t>(out_per_lm) * feat_per_lm, T(0));
    }
    s.validate();
    return s;
}

// Neighbourhood connectivity: one block per named landmark group, so points
// within a group interact and groups do not.
template <typename T>
BlockSparseComponent<T> build_component2(const LandmarkScheme& scheme, int in_per_lm = 16,
                                         int out_per_lm = 8) {
    scheme.validate(); // contiguous groups are a layout requirement here
    BlockSparseComponent<T> s;
    s.kind = ComponentKind::BlockDiagonal;
    s.in_dim = scheme.P * in_per_lm;
    s.out_dim = scheme.P * out_per_lm;
    for (const LandmarkScheme::Group& g : scheme.groups) {
        s.blocks.push_back(
            {g.begin * out_per_lm, g.begin * in_per_lm, g.size * out_per_lm, g.size * in_per_lm});
        s.payloads.emplace_back(
            static_cast<std::size_t>(g.size) * out_per_lm * g.size * in_per_lm, T(0));
    }
    s.validate();
    return s;
}

// Global rectification: fully dense map onto the 2P point update.
template <typename T>
BlockSparseComponent<T> build_component3(int P, int in_dim) {
    BlockSparseComponent<T> s;
    s.kind = ComponentKind::Dense;
    s.in_dim = in_dim;
    s.out_dim = 2 * P;
    s.blocks.push_back({0, 0, s.out_dim, s.in_dim});
    s.payloads.emplace_back(static_cast<std::size_t>(s.out_dim) * s.in_dim, T(0));
    s.validate();
    return s;
}

// The shipped three-factor structure for a P-landmark scheme.
template <typename T>
SparseComposition<T> build_paper_structure(const LandmarkScheme& scheme) {
    SparseComposition<T> c;
    c.components.push_back(build_component1<T>(scheme.P));
    c.components.push_back(build_component2<T>(scheme));
    c.components.push_back(build_component3<T>(scheme.P, c.components.back().out_dim));
    c.validate();
    return c;
}

template <typename T>
BlockSparseComponent<T> make_identity_component(int dim) {
    BlockSparseComponent<T> s;
    s.kind = ComponentKind::BlockDiagonal;
    s.in_dim = s.out_dim = dim;
    for (int i = 0; i < dim; ++i) {
        s.blocks.push_back({i, i, 1, 1});
        s.payloads.push_back({T(1)});
    }
    return s;
}

template <typename T>
void fill_random(BlockSparseComponent<T>& s, Rng& rng, double sigma = 1.0) {
    for (auto& payload : s.payloads)
        for (T& v : payload) v = static_cast<T>(rng.gaussian(0.0, sigma));
}

template <typename T>
void fill_random(SparseComposition<T>& c, Rng& rng, double sigma = 1.0) {
    for (auto& s : c.components) fill_random(s, rng, sigma);
}

template <typename To, typename From>
BlockSparseComponent<To> convert_component(const BlockSparseComponent<From>& s) {
    BlockSparseComponent<To> out;
    out.out_dim = s.out_dim;
    out.in_dim = s.in_dim;
    out.kind = s.kind;
    out.blocks = s.blocks;
    out.payloads.reserve(s.payloads.size());
    for (const auto& p : s.payloads) out.payloads.emplace_back(p.begin(), p.end());
    return out;
}

template <typename To, typename From>
SparseComposition<To> convert_composition(const SparseComposition<From>& c) {
    SparseComposition<To> out;
    out.components.reserve(c.components.size());
    for (const auto& s : c.components) out.components.push_back(convert_component<To, From>(s));
    return out;
}

template <typename To, typename From>
DenseMatrix<To> convert_dense(const DenseMatrix<From>& m) {
    DenseMatrix<To> out(m.rows, m.cols);
    for (std::size_t i = 0; i < m.data.size(); ++i) out.data[i] = static_cast<To>(m.data[i]);
    return out;
}

} // namespace scralign
