#include "scralign/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <stdexcept>

#include <omp.h>

#include "scralign/features.hpp"
#include "scralign/rng.hpp"
#include "scralign/scr.hpp"
#include "scralign/synth.hpp"

namespace scralign {

namespace {

inline void do_not_optimize(const void* p) { asm volatile("" : : "g"(p) : "memory"); }

// per-rep wall clock; the first tenth is warm-up and discarded
BenchRow time_reps(const std::string& name, int reps, std::uint64_t flops, int threads,
                   const std::function<void()>& body) {
    const int warmup = std::max(1, reps / 10);
    for (int i = 0; i < warmup; ++i) body();
    std::vector<double> ns(reps);
    for (int i = 0; i < reps; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        body();
        const auto t1 = std::chrono::steady_clock::now();
        ns[i] = std::chrono::duration<double, std::nano>(t1 - t0).count();
    }
    std::sort(ns.begin(), ns.end());
    BenchRow row;
    row.name = name;
    row.median_ns = ns[reps / 2];
    row.p10_ns = ns[reps / 10];
    row.p90_ns = ns[(reps * 9) / 10];
    row.flops = flops;
    row.threads = threads;
    return row;
}

} // namespace

std::vector<BenchRow> bench_regressor(int reps, std::uint64_t seed) {
    if (reps < 100) throw std::invalid_argument("bench_regressor: reps must be >= 100");

    const LandmarkScheme& scheme = canonical_scheme_49();
    SparseComposition<float> comp = build_paper_structure<float>(scheme);
    Rng rng(seed);
    fill_random(comp, rng, 0.05);
    const DenseMatrix<float> dense = densify(comp);

    // the two operators must agree before any timing happens
    CompositionWorkspace<float> ws;
    ws.reserve_for(comp);
    const int in_dim = comp.in_dim();
    const int out_dim = comp.out_dim();
    for (int probe = 0; probe < 8; ++probe) {
        std::vector<float> x(in_dim);
        for (float& v : x) v = static_cast<float>(rng.gaussian());
        std::vector<float> yc(out_dim), yd(out_dim);
        apply_composition(comp, x.data(), yc.data(), ws, false);
        matvec(dense.data.data(), dense.rows, dense.cols, x.data(), yd.data());
        double norm = 1e-6;
        for (int i = 0; i < out_dim; ++i) norm = std::max(norm, std::fabs((double)yd[i]));
        for (int i = 0; i < out_dim; ++i)
            if (std::fabs((double)yc[i] - yd[i]) / norm > 1e-3)
                throw std::runtime_error("bench_regressor: operators disagree; refusing to time");
    }

    // cycle through several inputs so the vector is not pinned in L1
    const int n_inputs = 16;
    std::vector<std::vector<float>> inputs(n_inputs, std::vector<float>(in_dim));
    for (auto& x : inputs)
        for (float& v : x) v = static_cast<float>(rng.gaussian());
    std::vector<float> y(out_dim);

    const int max_threads = omp_get_max_threads();
    std::vector<BenchRow> rows;
    int idx = 0;
    rows.push_back(time_reps("dense_serial", reps, flop_count(dense), 1, [&] {
        matvec(dense.data.data(), dense.rows, dense.cols, inputs[idx++ % n_inputs].data(),
               y.data());
        do_not_optimize(y.data());
    }));
    idx = 0;
    rows.push_back(time_reps("composed_serial", reps, flop_count(comp), 1, [&] {
        apply_composition(comp, inputs[idx++ % n_inputs].data(), y.data(), ws, false);
        do_not_optimize(y.data());
    }));
    idx = 0;
    rows.push_back(time_reps("dense_parallel", reps, flop_count(dense), max_threads, [&] {
        apply_dense_parallel(dense, inputs[idx++ % n_inputs].data(), y.data());
        do_not_optimize(y.data());
    }));
    idx = 0;
    rows.push_back(time_reps("composed_parallel", reps, flop_count(comp), max_threads, [&] {
        apply_composition(comp, inputs[idx++ % n_inputs].data(), y.data(), ws, true);
        do_not_optimize(y.data());
    }));
    return rows;
}

std::vector<BenchRow> bench_features(int n_patches, std::uint64_t seed) {
    if (n_patches < 1000) throw std::invalid_argument("bench_features: need >= 1000 patches");

    // shared corpus: both extractors see exactly the same patches
    const int side = 32;
    std::vector<ImageGray> patches;
    patches.reserve(n_patches);
    {
        Rng rng(seed);
        const ImageGray sheet = render_texture(512, rng);
        for (int i = 0; i < n_patches; ++i) {
            const double cx = rng.uniform(16.0, 496.0);
            const double cy = rng.uniform(16.0, 496.0);
            patches.push_back(extract_patch(sheet, cx, cy, side));
        }
    }

    // a quick map for timing purposes: trained on a small slice
    Rng map_rng(Rng::mix(seed, 0xbeef));
    std::vector<ImageGray> train_slice(patches.begin(),
                                       patches.begin() + std::min<std::size_t>(1500, patches.size()));
    const BasiftFit fit = train_basift_map(train_slice, 2.0);
    const BasiftModel model = make_basift_model(fit.map, side);

    std::vector<BenchRow> rows;
    int idx = 0;
    volatile float sink = 0.0f;

    auto per_patch = [&](const std::string& name, const std::function<void(const ImageGray&)>& f) {
        idx = 0;
        rows.push_back(time_reps(name, n_patches, 0, 1,
                                 [&] { f(patches[idx++ % n_patches]); }));
    };

    per_patch("sift", [&](const ImageGray& p) {
        const SiftDescriptor d = reference_sift(p);
        sink += d[0];
    });
    per_patch("basift", [&](const ImageGray& p) {
        const SiftDescriptor d = basift_extract(p, model);
        sink += d[0];
    });
    // per-step breakdown of the approximation
    per_patch("basift_gradients", [&](const ImageGray& p) {
        const GradientPair g = gradients(p);
        do_not_optimize(g.gx.data());
    });
    std::vector<GradientPair> grads;
    grads.reserve(n_patches);
    for (const ImageGray& p : patches) grads.push_back(gradients(p));
    idx = 0;
    rows.push_back(time_reps("basift_binning", n_patches, 0, 1, [&] {
        const OrientationCodeMap codes = orientation_codes(grads[idx % n_patches]);
        const SparseBinaryFeature f = encode_onehot(codes, model.lut);
        ++idx;
        do_not_optimize(f.active.data());
    }));
    std::vector<OrientationCodeMap> codes;
    codes.reserve(n_patches);
    for (const GradientPair& g : grads) codes.push_back(orientation_codes(g));
    idx = 0;
    rows.push_back(time_reps("basift_accumulate", n_patches, 0, 1, [&] {
        const auto acc = basift_accumulate(codes[idx++ % n_patches], model);
        sink += static_cast<float>(acc[0]);
    }));
    (void)sink;
    return rows;
}

void write_bench_csv(const std::string& path, const std::vector<BenchRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "case,median_ns,p10_ns,p90_ns,flops,threads\n";
    char buf[160];
    for (const BenchRow& r : rows) {
        std::snprintf(buf, sizeof(buf), ",%.1f,%.1f,%.1f,%llu,%d\n", r.median_ns, r.p10_ns,
                      r.p90_ns, static_cast<unsigned long long>(r.flops), r.threads);
        out << r.name << buf;
    }
}

} // namespace scralign
