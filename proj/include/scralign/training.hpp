#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "scralign/dataio.hpp"
#include "scralign/features.hpp"
#include "scralign/ridge.hpp"
#include "scralign/rng.hpp"
#include "scralign/scr.hpp"

namespace scralign {

struct PerturbationParams {
    int n_train_perturb = 5;
    int n_val_perturb = 2;
    double translate_sigma = 0.08; // fraction of inter-ocular distance, per axis
    double scale_sigma = 0.05;
    std::uint64_t rng_seed = 1;
};

enum class RegressorKind : std::uint32_t { Dense = 0, Composition = 1 };
enum class InitMode { Zeros, ScaledRandom, RidgeProjected };

struct TrainConfig {
    int stages = 5;
    RegressorKind regressor = RegressorKind::Dense;
    InitMode init_mode = InitMode::ScaledRandom;
    double learn_rate = 0.1;
    int max_iters = 300;
    int patience = 20;
    int batch = 0; // 0 = full batch
    // golden-section bracket for the dense ridge, relative to the design scale
    double lambda_lo = 1e-6;
    double lambda_hi = 1e3;
    double golden_tol = 0.05; // on log(lambda)
    bool deterministic = true; // fixed-order chunked gradient reduction
    int reduction_chunks = 16;
    PerturbationParams perturb;
};

// Features and inter-ocular-normalized displacement targets, one row per
// (sample, perturbation).
struct RegressionProblem {
    Eigen::MatrixXd features; // rows x D
    Eigen::MatrixXd targets;  // rows x 2P

    long rows() const { return features.rows(); }
};

// Bookkeeping for one perturbed initialization as it moves through the
// cascade during training.
struct TrainRow {
    int sample_idx = 0;
    int init_idx = 0;
    Shape current;
    double iod_gt = 0.0;
};

struct StageLogEntry {
    int iteration = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct CascadeStage {
    RegressorKind kind = RegressorKind::Dense;
    DenseMatrix<float> dense;
    SparseComposition<float> composition;

    int input_dim() const {
        return kind == RegressorKind::Dense ? dense.cols : composition.in_dim();
    }
    int output_dim() const {
        return kind == RegressorKind::Dense ? dense.rows : composition.out_dim();
    }
    // delta in inter-ocular-normalized units
    std::vector<float> apply(const std::vector<float>& features) const;
};

struct CascadeModel {
    LandmarkScheme scheme;
    Shape mean_shape; // centered, unit inter-ocular distance
    ExtractorConfig extractor;
    std::vector<CascadeStage> stages;

    void validate() const;
};

// Mean shape similarity-fit to the ground truth, then per-axis translation
// noise ~ N(0, translate_sigma * iod) and scale noise ~ N(1, scale_sigma)
// about the centroid. Draw order: dx, dy, scale.
Shape perturbed_init(const Shape& gt, const Shape& mean_shape, const LandmarkScheme& scheme,
                     double translate_sigma, double scale_sigma, Rng& rng);

// stream_tag keys independent train/val/eval randomness off one seed
std::vector<TrainRow> generate_perturbations(const std::vector<AnnotatedSample>& samples,
                                             int n_per_sample, const PerturbationParams& params,
                                             const Shape& mean_shape, const LandmarkScheme& scheme,
                                             std::uint64_t stream_tag);

// Features at the rows' current shapes; targets (gt - current)/iod.
RegressionProblem stage_residuals(const std::vector<AnnotatedSample>& samples,
                                  const std::vector<TrainRow>& rows,
                                  const ExtractorConfig& extractor,
                                  const LandmarkScheme& scheme);

// Mean squared residual (mean over rows of the squared target-prediction
// difference) and its gradient with respect to every block payload. Entries
// outside the block supports are never formed. The chunked reduction makes
// the result independent of thread count and schedule.
struct ScrObjective {
    double loss = 0.0;
    SparseComposition<double> gradient;
};

ScrObjective scr_loss_and_gradient(const RegressionProblem& problem,
                                   const SparseComposition<double>& params, int chunks,
                                   const std::vector<long>* row_subset = nullptr);

double scr_loss(const RegressionProblem& problem, const SparseComposition<double>& params);

// Nested per-block SVD projection of a dense matrix onto a composition
// template; used as a warm start.
SparseComposition<double> project_dense_to_composition(const Eigen::MatrixXd& dense,
                                                       const SparseComposition<double>& structure);

struct ScrTrainResult {
    SparseComposition<double> composition; // snapshot with minimum validation loss
    std::vector<StageLogEntry> log;
    int best_iteration = -1;
    double best_val_loss = 0.0;
};

// Full-batch gradient descent on the composition payloads with
// early-stopping model selection against the validation problem.
ScrTrainResult train_stage_scr(const RegressionProblem& train, const RegressionProblem& val,
                               const SparseComposition<double>& structure, const TrainConfig& cfg,
                               Rng& rng);

struct DenseTrainResult {
    Eigen::MatrixXd regressor; // 2P x D
    double lambda = 0.0;
    std::vector<StageLogEntry> log; // one entry per lambda evaluation
};

// Closed-form ridge with golden-section search for lambda (log domain)
// against validation loss. Bracket is relative to the design scale.
DenseTrainResult train_stage_dense(const RegressionProblem& train, const RegressionProblem& val,
                                   double lambda_lo_rel, double lambda_hi_rel,
                                   double golden_tol = 0.05);

struct CascadeTrainReport {
    std::vector<std::vector<StageLogEntry>> stage_logs;
    // mean normalized error (percent) on the validation rows after stage k;
    // entry 0 is the initialization error
    std::vector<double> val_error_by_stage;
    std::vector<double> train_error_by_stage;
    std::vector<double> stage_lambda; // dense stages only
};

CascadeModel train_cascade(const std::vector<AnnotatedSample>& train_samples,
                           const std::vector<AnnotatedSample>& val_samples,
                           const TrainConfig& cfg, const ExtractorConfig& extractor,
                           const LandmarkScheme& scheme, CascadeTrainReport* report = nullptr);

void write_stage_log_csv(const std::string& path, const std::vector<StageLogEntry>& log);

} // namespace scralign
