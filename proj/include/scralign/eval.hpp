#pragma once

#include <string>
#include <vector>

#include "scralign/align.hpp"

namespace scralign {

// 100 * mean point error / ground-truth inter-ocular distance.
double normalized_error(const Shape& pred, const Shape& gt, const LandmarkScheme& scheme);

struct EvalRow {
    std::string sample_id;
    int init_idx = 0;
    double error_percent = 0.0;
};

struct EvalSummary {
    double mean = 0.0;       // over all (sample, init) rows
    double median = 0.0;
    double stddev = 0.0;
    double per_image_mean = 0.0; // mean of per-sample means
    long rows = 0;
};

struct CedPoint {
    double threshold_percent = 0.0;
    double fraction = 0.0;
};

struct EvalReport {
    std::vector<EvalRow> rows; // sample-major, then init index
    EvalSummary summary;
    std::vector<CedPoint> ced;
};

// Multi-initialization protocol: n_inits seeded perturbed initializations per
// test sample, each fit independently. Initializations depend only on
// (seed, sample position, init index, sigmas), so two models evaluated with
// the same seed see identical init shapes row for row.
EvalReport evaluate(const CascadeModel& model, const std::vector<AnnotatedSample>& test,
                    int n_inits, std::uint64_t seed, double translate_sigma = 0.08,
                    double scale_sigma = 0.05, bool parallel = true);

// rows.csv: sample_id,init_idx,error_percent
void write_eval_rows_csv(const std::string& path, const EvalReport& report);
// ced.csv: threshold_percent,fraction  (0..15% in 0.1% steps)
void write_ced_csv(const std::string& path, const EvalReport& report);
// summary.json
void write_summary_json(const std::string& path, const EvalReport& report);

} // namespace scralign
