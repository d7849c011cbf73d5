#include "scralign/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <omp.h>

#include <Eigen/SVD>

namespace scralign {

namespace {

SparseComposition<double> zero_like(const SparseComposition<double>& c) {
    SparseComposition<double> out = c;
    for (auto& comp : out.components)
        for (auto& payload : comp.payloads) std::fill(payload.begin(), payload.end(), 0.0);
    return out;
}

void axpy_composition(SparseComposition<double>& dst, const SparseComposition<double>& src,
                      double alpha) {
    for (std::size_t l = 0; l < dst.components.size(); ++l)
        for (std::size_t b = 0; b < dst.components[l].payloads.size(); ++b) {
            auto& d = dst.components[l].payloads[b];
            const auto& s = src.components[l].payloads[b];
            for (std::size_t i = 0; i < d.size(); ++i) d[i] += alpha * s[i];
        }
}

void scale_composition(SparseComposition<double>& c, double alpha) {
    for (auto& comp : c.components)
        for (auto& payload : comp.payloads)
            for (double& v : payload) v *= alpha;
}

double mean_normalized_error_percent(const std::vector<AnnotatedSample>& samples,
                                     const std::vector<TrainRow>& rows) {
    double total = 0.0;
    for (const TrainRow& row : rows) {
        const Shape& gt = samples[row.sample_idx].ground_truth;
        double e = 0.0;
        for (int i = 0; i < gt.size(); ++i)
            e += std::hypot(row.current.points[i].x - gt.points[i].x,
                            row.current.points[i].y - gt.points[i].y);
        total += 100.0 * e / (gt.size() * row.iod_gt);
    }
    return rows.empty() ? 0.0 : total / static_cast<double>(rows.size());
}

// forward pass keeping every intermediate, then block-restricted outer
// products on the way back
void accumulate_row_gradient(const SparseComposition<double>& params, const double* phi,
                             const double* target, SparseComposition<double>& grad,
                             std::vector<std::vector<double>>& h, // layer outputs, reused
                             std::vector<double>& u, std::vector<double>& u_prev,
                             double* loss_accum) {
    const std::size_t count = params.components.size();
    const double* cur = phi;
    for (std::size_t l = 0; l < count; ++l) {
        h[l].resize(params.components[l].out_dim);
        apply_component_serial(params.components[l], cur, h[l].data());
        cur = h[l].data();
    }
    const int out = params.components.back().out_dim;
    u.resize(out);
    double loss = 0.0;
    for (int i = 0; i < out; ++i) {
        const double r = h[count - 1][i] - target[i];
        loss += r * r;
        u[i] = 2.0 * r;
    }
    *loss_accum += loss;

    for (std::size_t l = count; l-- > 0;) {
        const auto& comp = params.components[l];
        const double* input = l == 0 ? phi : h[l - 1].data();
        auto& gcomp = grad.components[l];
        for (std::size_t b = 0; b < comp.blocks.size(); ++b) {
            const BlockSpec& blk = comp.blocks[b];
            auto& gp = gcomp.payloads[b];
            for (int r = 0; r < blk.rows; ++r) {
                const double ur = u[blk.row_offset + r];
                if (ur == 0.0) continue;
                double* grow = gp.data() + static_cast<std::size_t>(r) * blk.cols;
                const double* in = input + blk.col_offset;
                for (int c = 0; c < blk.cols; ++c) grow[c] += ur * in[c];
            }
        }
        if (l > 0) {
            u_prev.assign(comp.in_dim, 0.0);
            apply_component_transpose(comp, u.data(), u_prev.data());
            std::swap(u, u_prev);
        }
    }
}

} // namespace

std::vector<float> CascadeStage::apply(const std::vector<float>& features) const {
    if (kind == RegressorKind::Dense) return apply_dense_serial(dense, features);
    return apply_composition(composition, features, false);
}

void CascadeModel::validate() const {
    scheme.validate();
    if (mean_shape.size() != scheme.P) throw std::runtime_error("model: mean shape size mismatch");
    if (!mean_shape.finite()) throw std::runtime_error("model: non-finite mean shape");
    if (extractor.kind == ExtractorConfig::Kind::Basift) extractor.basift.validate();
    const int feat_dim = scheme.P * kSiftDim;
    for (const CascadeStage& s : stages) {
        if (s.kind == RegressorKind::Composition) s.composition.validate();
        if (s.input_dim() != feat_dim || s.output_dim() != 2 * scheme.P)
            throw std::runtime_error("model: stage dimensions inconsistent with scheme");
    }
}

Shape perturbed_init(const Shape& gt, const Shape& mean_shape, const LandmarkScheme& scheme,
                     double translate_sigma, double scale_sigma, Rng& rng) {
    const Shape base = fit_similarity(mean_shape, gt).apply(mean_shape);
    const double iod = interocular_distance(gt, scheme);
    const double dx = rng.gaussian(0.0, translate_sigma * iod);
    const double dy = rng.gaussian(0.0, translate_sigma * iod);
    const double s = rng.gaussian(1.0, scale_sigma);
    const Point c = base.centroid();
    Shape out = base;
    for (Point& p : out.points) {
        p.x = c.x + s * (p.x - c.x) + dx;
        p.y = c.y + s * (p.y - c.y) + dy;
    }
    return out;
}

std::vector<TrainRow> generate_perturbations(const std::vector<AnnotatedSample>& samples,
                                             int n_per_sample, const PerturbationParams& params,
                                             const Shape& mean_shape, const LandmarkScheme& scheme,
                                             std::uint64_t stream_tag) {
    if (n_per_sample < 1) throw std::invalid_argument("generate_perturbations: count must be >= 1");
    std::vector<TrainRow> rows;
    rows.reserve(samples.size() * n_per_sample);
    for (int i = 0; i < static_cast<int>(samples.size()); ++i) {
        const Shape& gt = samples[i].ground_truth;
        const double iod = interocular_distance(gt, scheme);
        for (int j = 0; j < n_per_sample; ++j) {
            // one stream per (sample, init): independent of iteration order
            Rng rng(Rng::mix(params.rng_seed, stream_tag, Rng::mix(i, j)));
            TrainRow row;
            row.sample_idx = i;
            row.init_idx = j;
            row.iod_gt = iod;
            row.current = perturbed_init(gt, mean_shape, scheme, params.translate_sigma,
                                         params.scale_sigma, rng);
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

RegressionProblem stage_residuals(const std::vector<AnnotatedSample>& samples,
                                  const std::vector<TrainRow>& rows,
                                  const ExtractorConfig& extractor,
                                  const LandmarkScheme& scheme) {
    const long n = static_cast<long>(rows.size());
    const int P = scheme.P;
    RegressionProblem prob;
    prob.features.resize(n, static_cast<long>(P) * kSiftDim);
    prob.targets.resize(n, 2 * P);

    std::string error;
#pragma omp parallel for schedule(dynamic)
    for (long r = 0; r < n; ++r) {
        try {
            const TrainRow& row = rows[r];
            const AnnotatedSample& s = samples[row.sample_idx];
            const std::vector<float> f = extract_shape_features(s.image, row.current, extractor);
            for (std::size_t k = 0; k < f.size(); ++k) prob.features(r, k) = f[k];
            for (int i = 0; i < P; ++i) {
                prob.targets(r, 2 * i) =
                    (s.ground_truth.points[i].x - row.current.points[i].x) / row.iod_gt;
                prob.targets(r, 2 * i + 1) =
                    (s.ground_truth.points[i].y - row.current.points[i].y) / row.iod_gt;
            }
        } catch (const std::exception& ex) {
#pragma omp critical
            if (error.empty()) error = ex.what();
        }
    }
    if (!error.empty()) throw std::runtime_error(error);
    return prob;
}

ScrObjective scr_loss_and_gradient(const RegressionProblem& problem,
                                   const SparseComposition<double>& params, int chunks,
                                   const std::vector<long>* row_subset) {
    const long n = row_subset ? static_cast<long>(row_subset->size()) : problem.rows();
    if (n == 0) throw std::invalid_argument("scr_loss_and_gradient: empty problem");
    chunks = std::max(1, std::min<int>(chunks, static_cast<int>(n)));
    const long chunk_len = (n + chunks - 1) / chunks;

    std::vector<SparseComposition<double>> partial(chunks, zero_like(params));
    std::vector<double> partial_loss(chunks, 0.0);
    const int in_dim = params.in_dim();

#pragma omp parallel for schedule(static, 1)
    for (int c = 0; c < chunks; ++c) {
        std::vector<std::vector<double>> h(params.components.size());
        std::vector<double> u, u_prev, phi(in_dim), target(params.out_dim());
        const long lo = c * chunk_len;
        const long hi = std::min<long>(n, lo + chunk_len);
        for (long k = lo; k < hi; ++k) {
            const long r = row_subset ? (*row_subset)[k] : k;
            for (int i = 0; i < in_dim; ++i) phi[i] = problem.features(r, i);
            for (int i = 0; i < params.out_dim(); ++i) target[i] = problem.targets(r, i);
            accumulate_row_gradient(params, phi.data(), target.data(), partial[c], h, u, u_prev,
                                    &partial_loss[c]);
        }
    }

    // fixed-order reduction: bitwise identical for any thread count
    ScrObjective obj;
    obj.gradient = std::move(partial[0]);
    obj.loss = partial_loss[0];
    for (int c = 1; c < chunks; ++c) {
        axpy_composition(obj.gradient, partial[c], 1.0);
        obj.loss += partial_loss[c];
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    obj.loss *= inv_n;
    scale_composition(obj.gradient, inv_n);
    return obj;
}

double scr_loss(const RegressionProblem& problem, const SparseComposition<double>& params) {
    const long n = problem.rows();
    if (n == 0) throw std::invalid_argument("scr_loss: empty problem");
    const int in_dim = params.in_dim();
    const int out_dim = params.out_dim();
    const int chunks = std::max(1, std::min<int>(16, static_cast<int>(n)));
    const long chunk_len = (n + chunks - 1) / chunks;
    std::vector<double> partial(chunks, 0.0);
#pragma omp parallel for schedule(static, 1)
    for (int c = 0; c < chunks; ++c) {
        CompositionWorkspace<double> ws;
        ws.reserve_for(params);
        std::vector<double> phi(in_dim), y(out_dim);
        const long lo = c * chunk_len;
        const long hi = std::min<long>(n, lo + chunk_len);
        for (long r = lo; r < hi; ++r) {
            for (int i = 0; i < in_dim; ++i) phi[i] = problem.features(r, i);
            apply_composition(params, phi.data(), y.data(), ws, false);
            double loss = 0.0;
            for (int i = 0; i < out_dim; ++i) {
                const double d = y[i] - problem.targets(r, i);
                loss += d * d;
            }
            partial[c] += loss;
        }
    }
    double total = 0.0;
    for (double v : partial) total += v;
    return total / static_cast<double>(n);
}

SparseComposition<double> project_dense_to_composition(const Eigen::MatrixXd& dense,
                                                       const SparseComposition<double>& structure) {
    const std::size_t count = structure.components.size();
    if (dense.rows() != structure.out_dim() || dense.cols() != structure.in_dim())
        throw std::invalid_argument("project_dense_to_composition: dimension mismatch");

    SparseComposition<double> out = zero_like(structure);
    Eigen::MatrixXd m = dense;
    for (std::size_t l = 0; l + 1 < count; ++l) {
        const auto& comp = structure.components[l];
        Eigen::MatrixXd next = Eigen::MatrixXd::Zero(m.rows(), comp.out_dim);
        for (std::size_t b = 0; b < comp.blocks.size(); ++b) {
            const BlockSpec& blk = comp.blocks[b];
            const Eigen::MatrixXd sub = m.middleCols(blk.col_offset, blk.cols);
            Eigen::BDCSVD<Eigen::MatrixXd> svd(sub, Eigen::ComputeThinU | Eigen::ComputeThinV);
            const int k = std::min<int>(blk.rows, static_cast<int>(svd.singularValues().size()));
            auto& payload = out.components[l].payloads[b];
            for (int r = 0; r < k; ++r)
                for (int c = 0; c < blk.cols; ++c)
                    payload[static_cast<std::size_t>(r) * blk.cols + c] = svd.matrixV()(c, r);
            next.middleCols(blk.row_offset, k) = sub * svd.matrixV().leftCols(k);
        }
        m = std::move(next);
    }
    // final factor takes whatever is left, block-restricted
    const auto& last = structure.components[count - 1];
    for (std::size_t b = 0; b < last.blocks.size(); ++b) {
        const BlockSpec& blk = last.blocks[b];
        auto& payload = out.components[count - 1].payloads[b];
        for (int r = 0; r < blk.rows; ++r)
            for (int c = 0; c < blk.cols; ++c)
                payload[static_cast<std::size_t>(r) * blk.cols + c] =
                    m(blk.row_offset + r, blk.col_offset + c);
    }
    return out;
}

ScrTrainResult train_stage_scr(const RegressionProblem& train, const RegressionProblem& val,
                               const SparseComposition<double>& structure, const TrainConfig& cfg,
                               Rng& rng) {
    if (val.rows() == 0) throw std::invalid_argument("train_stage_scr: empty validation set");
    structure.validate();
    if (train.features.cols() != structure.in_dim() || train.targets.cols() != structure.out_dim())
        throw std::invalid_argument("train_stage_scr: problem/structure dimension mismatch");

    SparseComposition<double> params = zero_like(structure);
    switch (cfg.init_mode) {
        case InitMode::Zeros:
            break;
        case InitMode::ScaledRandom:
            for (auto& comp : params.components)
                for (std::size_t b = 0; b < comp.blocks.size(); ++b) {
                    const double sigma = 1.0 / std::sqrt(static_cast<double>(comp.blocks[b].cols));
                    for (double& v : comp.payloads[b]) v = rng.gaussian(0.0, sigma);
                }
            break;
        case InitMode::RidgeProjected: {
            DenseTrainResult dense =
                train_stage_dense(train, val, cfg.lambda_lo, cfg.lambda_hi, cfg.golden_tol);
            params = project_dense_to_composition(dense.regressor, structure);
            break;
        }
    }

    const int chunks = cfg.deterministic ? cfg.reduction_chunks
                                         : std::max(1, omp_get_max_threads() * 4);
    ScrTrainResult result;
    SparseComposition<double> best = params;
    double best_val = std::numeric_limits<double>::infinity();
    int best_iter = -1;
    int since_improve = 0;

    std::vector<long> subset;
    for (int iter = 0; iter < cfg.max_iters; ++iter) {
        const std::vector<long>* rows_ptr = nullptr;
        if (cfg.batch > 0 && cfg.batch < train.rows()) {
            subset.resize(cfg.batch);
            for (int i = 0; i < cfg.batch; ++i)
                subset[i] = rng.uniform_int(static_cast<int>(train.rows()));
            rows_ptr = &subset;
        }
        ScrObjective obj = scr_loss_and_gradient(train, params, chunks, rows_ptr);
        const double val_loss = scr_loss(val, params);
        result.log.push_back({iter, obj.loss, val_loss});
        if (!std::isfinite(obj.loss) || !std::isfinite(val_loss))
            throw std::runtime_error("train_stage_scr: diverged at iteration " +
                                     std::to_string(iter) + " (learn_rate " +
                                     std::to_string(cfg.learn_rate) + ")");
        if (val_loss < best_val) {
            best_val = val_loss;
            best_iter = iter;
            best = params;
            since_improve = 0;
        } else if (++since_improve > cfg.patience) {
            break;
        }
        axpy_composition(params, obj.gradient, -cfg.learn_rate);
    }

    result.composition = std::move(best);
    result.best_iteration = best_iter;
    result.best_val_loss = best_val;
    return result;
}

DenseTrainResult train_stage_dense(const RegressionProblem& train, const RegressionProblem& val,
                                   double lambda_lo_rel, double lambda_hi_rel, double golden_tol) {
    if (!(lambda_lo_rel > 0.0) || !(lambda_hi_rel > lambda_lo_rel))
        throw std::invalid_argument("train_stage_dense: bracket must be positive and ordered");
    if (val.rows() == 0) throw std::invalid_argument("train_stage_dense: empty validation set");

    RidgeDesign design(train.features, train.targets);
    const double scale = design.scale();
    DenseTrainResult result;
    int evals = 0;

    auto val_loss_at = [&](double log_lambda) {
        const double lambda = std::exp(log_lambda);
        const Eigen::MatrixXd w = design.solve(lambda);
        const double vloss =
            (val.features * w - val.targets).squaredNorm() / static_cast<double>(val.rows());
        const double tloss =
            (train.features * w - train.targets).squaredNorm() / static_cast<double>(train.rows());
        result.log.push_back({evals++, tloss, vloss});
        return vloss;
    };

    const GoldenSectionResult gs = golden_section_minimize(
        val_loss_at, std::log(lambda_lo_rel * scale), std::log(lambda_hi_rel * scale), golden_tol,
        200);
    result.lambda = std::exp(gs.x);
    result.regressor = design.solve(result.lambda).transpose(); // 2P x D
    return result;
}

CascadeModel train_cascade(const std::vector<AnnotatedSample>& train_samples,
                           const std::vector<AnnotatedSample>& val_samples,
                           const TrainConfig& cfg, const ExtractorConfig& extractor,
                           const LandmarkScheme& scheme, CascadeTrainReport* report) {
    if (train_samples.empty() || val_samples.empty())
        throw std::invalid_argument("train_cascade: need non-empty train and validation sets");
    scheme.validate();

    std::vector<Shape> gts;
    gts.reserve(train_samples.size());
    for (const auto& s : train_samples) gts.push_back(s.ground_truth);
    const Shape mean_shape = compute_mean_shape(gts, scheme);

    std::vector<TrainRow> train_rows = generate_perturbations(
        train_samples, cfg.perturb.n_train_perturb, cfg.perturb, mean_shape, scheme, 0);
    std::vector<TrainRow> val_rows = generate_perturbations(
        val_samples, cfg.perturb.n_val_perturb, cfg.perturb, mean_shape, scheme, 1);

    CascadeModel model;
    model.scheme = scheme;
    model.mean_shape = mean_shape;
    model.extractor = extractor;

    if (report) {
        report->train_error_by_stage.push_back(
            mean_normalized_error_percent(train_samples, train_rows));
        report->val_error_by_stage.push_back(mean_normalized_error_percent(val_samples, val_rows));
    }

    for (int k = 0; k < cfg.stages; ++k) {
        RegressionProblem train_prob = stage_residuals(train_samples, train_rows, extractor, scheme);
        RegressionProblem val_prob = stage_residuals(val_samples, val_rows, extractor, scheme);

        CascadeStage stage;
        Eigen::MatrixXd dense_regressor;                 // used when dense
        SparseComposition<double> composition_regressor; // used when composed
        if (cfg.regressor == RegressorKind::Dense) {
            DenseTrainResult res =
                train_stage_dense(train_prob, val_prob, cfg.lambda_lo, cfg.lambda_hi, cfg.golden_tol);
            dense_regressor = res.regressor;
            stage.kind = RegressorKind::Dense;
            stage.dense = DenseMatrix<float>(static_cast<int>(dense_regressor.rows()),
                                             static_cast<int>(dense_regressor.cols()));
            for (int r = 0; r < stage.dense.rows; ++r)
                for (int c = 0; c < stage.dense.cols; ++c)
                    stage.dense.at(r, c) = static_cast<float>(dense_regressor(r, c));
            if (report) {
                report->stage_logs.push_back(std::move(res.log));
                report->stage_lambda.push_back(res.lambda);
            }
        } else {
            const SparseComposition<double> structure = build_paper_structure<double>(scheme);
            Rng stage_rng(Rng::mix(cfg.perturb.rng_seed, 100 + static_cast<std::uint64_t>(k)));
            ScrTrainResult res = train_stage_scr(train_prob, val_prob, structure, cfg, stage_rng);
            composition_regressor = std::move(res.composition);
            stage.kind = RegressorKind::Composition;
            stage.composition = convert_composition<float>(composition_regressor);
            if (report) report->stage_logs.push_back(std::move(res.log));
        }

        // advance every row by this stage's normalized prediction
        auto advance = [&](std::vector<TrainRow>& rows, const RegressionProblem& prob) {
            const long n = static_cast<long>(rows.size());
#pragma omp parallel for schedule(static)
            for (long r = 0; r < n; ++r) {
                const int P = scheme.P;
                std::vector<double> phi(prob.features.cols());
                for (long i = 0; i < prob.features.cols(); ++i) phi[i] = prob.features(r, i);
                std::vector<double> delta;
                if (cfg.regressor == RegressorKind::Dense) {
                    delta.assign(2 * P, 0.0);
                    for (int i = 0; i < 2 * P; ++i) {
                        double acc = 0.0;
                        for (long c = 0; c < dense_regressor.cols(); ++c)
                            acc += dense_regressor(i, c) * phi[c];
                        delta[i] = acc;
                    }
                } else {
                    delta = apply_composition(composition_regressor, phi, false);
                }
                for (int i = 0; i < P; ++i) {
                    rows[r].current.points[i].x += delta[2 * i] * rows[r].iod_gt;
                    rows[r].current.points[i].y += delta[2 * i + 1] * rows[r].iod_gt;
                }
            }
        };
        advance(train_rows, train_prob);
        advance(val_rows, val_prob);

        if (report) {
            report->train_error_by_stage.push_back(
                mean_normalized_error_percent(train_samples, train_rows));
            report->val_error_by_stage.push_back(
                mean_normalized_error_percent(val_samples, val_rows));
        }
        model.stages.push_back(std::move(stage));
    }

    model.validate();
    return model;
}

void write_stage_log_csv(const std::string& path, const std::vector<StageLogEntry>& log) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "iteration,train_loss,val_loss\n";
    char buf[128];
    for (const StageLogEntry& e : log) {
        std::snprintf(buf, sizeof(buf), "%d,%.12g,%.12g\n", e.iteration, e.train_loss, e.val_loss);
        out << buf;
    }
}

} // namespace scralign
