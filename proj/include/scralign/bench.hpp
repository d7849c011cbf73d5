#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace scralign {

struct BenchRow {
    std::string name;
    double median_ns = 0.0;
    double p10_ns = 0.0;
    double p90_ns = 0.0;
    std::uint64_t flops = 0;
    int threads = 1;
};

// Dense full-size regressor apply vs the composed three-factor apply on the
// numerically identical operator (equality is verified through
// densification before any timing). Serial kernels isolate algorithmic
// cost; the OpenMP rows are reported separately.
std::vector<BenchRow> bench_regressor(int reps, std::uint64_t seed);

// Reference descriptor vs the sign-map approximation on one shared patch
// corpus, plus the approximation's per-step breakdown.
std::vector<BenchRow> bench_features(int n_patches, std::uint64_t seed);

void write_bench_csv(const std::string& path, const std::vector<BenchRow>& rows);

} // namespace scralign
