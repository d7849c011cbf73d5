#include "scralign/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <omp.h>

namespace scralign {

double normalized_error(const Shape& pred, const Shape& gt, const LandmarkScheme& scheme) {
    if (pred.size() != gt.size() || pred.size() != scheme.P)
        throw std::invalid_argument("normalized_error: point count mismatch");
    const double iod = interocular_distance(gt, scheme);
    double total = 0.0;
    for (int i = 0; i < gt.size(); ++i)
        total += std::hypot(pred.points[i].x - gt.points[i].x, pred.points[i].y - gt.points[i].y);
    return 100.0 * total / (static_cast<double>(gt.size()) * iod);
}

EvalReport evaluate(const CascadeModel& model, const std::vector<AnnotatedSample>& test,
                    int n_inits, std::uint64_t seed, double translate_sigma, double scale_sigma,
                    bool parallel) {
    if (n_inits < 1) throw std::invalid_argument("evaluate: n_inits must be >= 1");
    if (test.empty()) throw std::invalid_argument("evaluate: empty test set");

    const long n_rows = static_cast<long>(test.size()) * n_inits;
    EvalReport report;
    report.rows.resize(n_rows);

    std::string error;
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (long r = 0; r < n_rows; ++r) {
        try {
            const int si = static_cast<int>(r / n_inits);
            const int ii = static_cast<int>(r % n_inits);
            const AnnotatedSample& sample = test[si];
            Rng rng(Rng::mix(seed, 2, Rng::mix(si, ii)));
            const Shape init = perturbed_init(sample.ground_truth, model.mean_shape, model.scheme,
                                              translate_sigma, scale_sigma, rng);
            const FitResult fr = fit(sample.image, init, model);
            report.rows[r] = {sample.id, ii,
                              normalized_error(fr.final, sample.ground_truth, model.scheme)};
        } catch (const std::exception& ex) {
#pragma omp critical
            if (error.empty()) error = ex.what();
        }
    }
    if (!error.empty()) throw std::runtime_error(error);

    // summary
    std::vector<double> errs(n_rows);
    for (long r = 0; r < n_rows; ++r) errs[r] = report.rows[r].error_percent;
    double mean = 0.0;
    for (double e : errs) mean += e;
    mean /= static_cast<double>(n_rows);
    double var = 0.0;
    for (double e : errs) var += (e - mean) * (e - mean);
    var = n_rows > 1 ? var / static_cast<double>(n_rows - 1) : 0.0;
    std::vector<double> sorted = errs;
    std::sort(sorted.begin(), sorted.end());
    const double median = n_rows % 2 == 1
                              ? sorted[n_rows / 2]
                              : 0.5 * (sorted[n_rows / 2 - 1] + sorted[n_rows / 2]);
    double per_image = 0.0;
    for (std::size_t s = 0; s < test.size(); ++s) {
        double m = 0.0;
        for (int i = 0; i < n_inits; ++i) m += errs[s * n_inits + i];
        per_image += m / n_inits;
    }
    per_image /= static_cast<double>(test.size());
    report.summary = {mean, median, std::sqrt(var), per_image, n_rows};

    // cumulative error distribution on a fixed 0..15% grid, 0.1% steps
    report.ced.reserve(151);
    for (int t = 0; t <= 150; ++t) {
        const double thr = t * 0.1;
        const long count = std::count_if(errs.begin(), errs.end(),
                                         [&](double e) { return e <= thr; });
        report.ced.push_back({thr, static_cast<double>(count) / static_cast<double>(n_rows)});
    }
    return report;
}

void write_eval_rows_csv(const std::string& path, const EvalReport& report) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "sample_id,init_idx,error_percent\n";
    char buf[64];
    for (const EvalRow& r : report.rows) {
        std::snprintf(buf, sizeof(buf), ",%d,%.9g\n", r.init_idx, r.error_percent);
        out << r.sample_id << buf;
    }
}

void write_ced_csv(const std::string& path, const EvalReport& report) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "threshold_percent,fraction\n";
    char buf[64];
    for (const CedPoint& p : report.ced) {
        std::snprintf(buf, sizeof(buf), "%.1f,%.9g\n", p.threshold_percent, p.fraction);
        out << buf;
    }
}

void write_summary_json(const std::string& path, const EvalReport& report) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "{\n"
                  "  \"mean_error_percent\": %.9g,\n"
                  "  \"median_error_percent\": %.9g,\n"
                  "  \"stddev_error_percent\": %.9g,\n"
                  "  \"per_image_mean_error_percent\": %.9g,\n"
                  "  \"rows\": %ld\n"
                  "}\n",
                  report.summary.mean, report.summary.median, report.summary.stddev,
                  report.summary.per_image_mean, report.summary.rows);
    out << buf;
}

} // namespace scralign
