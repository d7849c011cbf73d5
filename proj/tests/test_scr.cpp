#include <doctest.h>

#include <cmath>

#include "scralign/rng.hpp"
#include "scralign/scr.hpp"
#include "scralign/shape.hpp"

using namespace scralign;

namespace {

// randomized block-diagonal component with irregular block sizes
BlockSparseComponent<double> random_block_diagonal(Rng& rng, int max_blocks = 6) {
    BlockSparseComponent<double> s;
    s.kind = ComponentKind::BlockDiagonal;
    int row = 0, col = 0;
    const int n_blocks = 1 + rng.uniform_int(max_blocks);
    for (int b = 0; b < n_blocks; ++b) {
        const int rows = 1 + rng.uniform_int(7);
        const int cols = 1 + rng.uniform_int(9);
        s.blocks.push_back({row, col, rows, cols});
        std::vector<double> payload(static_cast<std::size_t>(rows) * cols);
        for (double& v : payload) v = rng.gaussian();
        s.payloads.push_back(std::move(payload));
        row += rows + rng.uniform_int(3); // occasional uncovered rows
        col += cols;
    }
    s.out_dim = row + rng.uniform_int(2);
    s.in_dim = col;
    s.validate();
    return s;
}

std::vector<double> random_vector(int n, Rng& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.gaussian();
    return v;
}

double max_rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double norm = 0.0;
    for (double v : b) norm = std::max(norm, std::fabs(v));
    double rel = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        rel = std::max(rel, std::fabs(a[i] - b[i]) / std::max(norm, 1e-300));
    return rel;
}

} // namespace

TEST_CASE("identity component leaves the vector unchanged") {
    const auto id = make_identity_component<double>(9);
    Rng rng(1);
    const auto v = random_vector(9, rng);
    CHECK(apply_component(id, v) == v);
}

TEST_CASE("single block hand arithmetic") {
    BlockSparseComponent<double> s;
    s.kind = ComponentKind::BlockDiagonal;
    s.out_dim = 2;
    s.in_dim = 2;
    s.blocks.push_back({0, 0, 2, 2});
    s.payloads.push_back({1, 2, 3, 4});
    const auto y = apply_component(s, std::vector<double>{1, 1});
    CHECK(y[0] == 3.0);
    CHECK(y[1] == 7.0);
}

TEST_CASE("component apply matches densified product") {
    Rng rng(7);
    for (int trial = 0; trial < 30; ++trial) {
        const auto s = random_block_diagonal(rng);
        const auto v = random_vector(s.in_dim, rng);
        const auto fast = apply_component(s, v);
        const DenseMatrix<double> dense = densify(s);
        std::vector<double> slow(s.out_dim, 0.0);
        for (int r = 0; r < s.out_dim; ++r)
            for (int c = 0; c < s.in_dim; ++c) slow[r] += dense.at(r, c) * v[c];
        CHECK(max_rel_diff(fast, slow) < 1e-12);
    }
}

TEST_CASE("component apply is linear") {
    Rng rng(11);
    const auto s = random_block_diagonal(rng);
    const auto u = random_vector(s.in_dim, rng);
    const auto v = random_vector(s.in_dim, rng);
    const double a = rng.gaussian(), b = rng.gaussian();
    std::vector<double> combo(s.in_dim);
    for (int i = 0; i < s.in_dim; ++i) combo[i] = a * u[i] + b * v[i];
    const auto lhs = apply_component(s, combo);
    const auto su = apply_component(s, u);
    const auto sv = apply_component(s, v);
    std::vector<double> rhs(s.out_dim);
    for (int i = 0; i < s.out_dim; ++i) rhs[i] = a * su[i] + b * sv[i];
    CHECK(max_rel_diff(lhs, rhs) < 1e-12);
}

TEST_CASE("serial and parallel paths are bit-identical") {
    Rng rng(13);
    const LandmarkScheme& scheme = canonical_scheme_49();
    SparseComposition<float> comp = build_paper_structure<float>(scheme);
    fill_random(comp, rng, 0.1);
    std::vector<float> x(comp.in_dim());
    for (float& v : x) v = static_cast<float>(rng.gaussian());
    const auto serial = apply_composition(comp, x, false);
    const auto parallel = apply_composition(comp, x, true);
    CHECK(serial == parallel);

    const DenseMatrix<float> dense = densify(comp);
    std::vector<float> ys(dense.rows), yp(dense.rows);
    matvec(dense.data.data(), dense.rows, dense.cols, x.data(), ys.data());
    apply_dense_parallel(dense, x.data(), yp.data());
    CHECK(ys == yp);
}

TEST_CASE("composition basics") {
    SparseComposition<double> chain;
    chain.components = {make_identity_component<double>(5), make_identity_component<double>(5)};
    chain.validate();
    Rng rng(17);
    const auto v = random_vector(5, rng);
    CHECK(apply_composition(chain, v) == v);

    SparseComposition<double> single;
    single.components = {random_block_diagonal(rng)};
    const auto x = random_vector(single.in_dim(), rng);
    CHECK(apply_composition(single, x) == apply_component(single.components[0], x));
}

TEST_CASE("construction rejects incompatible chains") {
    SparseComposition<double> chain;
    chain.components = {make_identity_component<double>(5), make_identity_component<double>(6)};
    CHECK_THROWS(chain.validate());
}

TEST_CASE("validate rejects overlapping blocks and bad payloads") {
    BlockSparseComponent<double> s;
    s.kind = ComponentKind::BlockDiagonal;
    s.out_dim = 4;
    s.in_dim = 4;
    s.blocks.push_back({0, 0, 2, 2});
    s.payloads.push_back(std::vector<double>(4, 1.0));
    s.blocks.push_back({1, 2, 2, 2}); // row overlap
    s.payloads.push_back(std::vector<double>(4, 1.0));
    CHECK_THROWS(s.validate());

    BlockSparseComponent<double> t;
    t.kind = ComponentKind::BlockDiagonal;
    t.out_dim = 2;
    t.in_dim = 2;
    t.blocks.push_back({0, 0, 2, 2});
    t.payloads.push_back(std::vector<double>(3, 1.0)); // wrong size
    CHECK_THROWS(t.validate());
}

TEST_CASE("paper-dimension chain matches densify to 1e-9") {
    const LandmarkScheme& scheme = canonical_scheme_49();
    SparseComposition<double> comp = build_paper_structure<double>(scheme);
    Rng rng(23);
    fill_random(comp, rng, 0.3);
    CHECK(comp.in_dim() == 6272);
    CHECK(comp.out_dim() == 98);
    CHECK(comp.components[0].out_dim == 784);
    CHECK(comp.components[1].out_dim == 392);

    const DenseMatrix<double> dense = densify(comp);
    for (int trial = 0; trial < 10; ++trial) {
        const auto v = random_vector(6272, rng);
        const auto fast = apply_composition(comp, v);
        std::vector<double> slow(98, 0.0);
        for (int r = 0; r < 98; ++r) {
            const double* row = dense.data.data() + static_cast<std::size_t>(r) * 6272;
            double acc = 0.0;
            for (int c = 0; c < 6272; ++c) acc += row[c] * v[c];
            slow[r] = acc;
        }
        CHECK(max_rel_diff(fast, slow) < 1e-9);
    }
}

TEST_CASE("densify small cases") {
    SparseComposition<double> ids;
    ids.components = {make_identity_component<double>(4), make_identity_component<double>(4)};
    const DenseMatrix<double> m = densify(ids);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) CHECK(m.at(r, c) == (r == c ? 1.0 : 0.0));

    SparseComposition<double> scalars;
    BlockSparseComponent<double> a, b;
    a.kind = b.kind = ComponentKind::BlockDiagonal;
    a.out_dim = a.in_dim = b.out_dim = b.in_dim = 1;
    a.blocks.push_back({0, 0, 1, 1});
    a.payloads.push_back({2.5});
    b.blocks.push_back({0, 0, 1, 1});
    b.payloads.push_back({-3.0});
    scalars.components = {a, b};
    CHECK(densify(scalars).at(0, 0) == doctest::Approx(-7.5));
}

TEST_CASE("structure builders match the published dimensions") {
    const LandmarkScheme& scheme = canonical_scheme_49();

    const auto c1 = build_component1<double>(49);
    CHECK(c1.blocks.size() == 49);
    CHECK(c1.out_dim == 784);
    CHECK(c1.in_dim == 6272);
    CHECK(density(c1) == doctest::Approx(1.0 / 49.0));

    const auto c1_single = build_component1<double>(1);
    CHECK(c1_single.blocks.size() == 1);
    CHECK(c1_single.out_dim == 16);
    CHECK(c1_single.in_dim == 128);
    CHECK(density(c1_single) == doctest::Approx(1.0));

    const auto c2 = build_component2<double>(scheme);
    CHECK(c2.out_dim == 392);
    CHECK(c2.in_dim == 784);
    // sum over the named groups of (8g)(16g), over 392*784
    const double expected = (128.0 * (18 * 18 + 6 * 6 + 6 * 6 + 9 * 9 + 10 * 10)) / (392.0 * 784.0);
    CHECK(density(c2) == doctest::Approx(expected));
    CHECK(density(c2) == doctest::Approx(0.2403).epsilon(1e-3));

    LandmarkScheme one_group;
    one_group.P = 49;
    one_group.groups = {{"all", 0, 49}};
    one_group.iod_a = 19;
    one_group.iod_b = 28;
    const auto c2_dense = build_component2<double>(one_group);
    CHECK(density(c2_dense) == doctest::Approx(1.0));

    const auto c3 = build_component3<double>(49, 392);
    CHECK(c3.kind == ComponentKind::Dense);
    CHECK(c3.out_dim == 98);
    CHECK(c3.in_dim == 392);
    CHECK(density(c3) == doctest::Approx(1.0));
    // zero payload -> zero update
    Rng rng(31);
    const auto y = apply_component(c3, random_vector(392, rng));
    for (double v : y) CHECK(v == 0.0);
}

TEST_CASE("operation counts") {
    const LandmarkScheme& scheme = canonical_scheme_49();
    const auto comp = build_paper_structure<double>(scheme);
    const DenseMatrix<double> dense(98, 6272);

    CHECK(flop_count(dense) == 614656u);
    CHECK(flop_count(comp.components[0]) == 100352u);
    CHECK(flop_count(comp.components[1]) == 73856u);
    CHECK(flop_count(comp.components[2]) == 38416u);
    CHECK(flop_count(comp) == 212624u);
    CHECK(static_cast<double>(flop_count(dense)) / flop_count(comp) > 2.0);

    SparseComposition<double> ids;
    ids.components = {make_identity_component<double>(7), make_identity_component<double>(7)};
    CHECK(flop_count(ids) == 14u); // one 1x1 block per dimension per factor
}
