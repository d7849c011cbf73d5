#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "scralign/bench.hpp"
#include "scralign/codec.hpp"
#include "scralign/dataio.hpp"
#include "scralign/eval.hpp"
#include "scralign/model_io.hpp"
#include "scralign/pts_io.hpp"
#include "scralign/synth.hpp"
#include "scralign/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace scralign;

namespace {

struct TrainFileConfig {
    TrainConfig train;
    std::string regressor = "dense";
    std::string extractor = "sift";
    std::string basift_model;
    double val_fraction = 0.2;
};

TrainFileConfig read_train_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& ex) {
        throw std::runtime_error(std::string("config parse error: ") + ex.what());
    }

    static const std::set<std::string> known = {
        "stages", "regressor", "extractor", "basift_model", "learn_rate", "max_iters",
        "patience", "batch", "init_mode", "n_train_perturb", "n_val_perturb",
        "translate_sigma", "scale_sigma", "seed", "val_fraction", "lambda_lo", "lambda_hi",
        "golden_tol", "deterministic", "reduction_chunks"};
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw std::runtime_error("config: unknown key '" + key + "'");

    TrainFileConfig cfg;
    TrainConfig& t = cfg.train;
    t.stages = j.value("stages", 5);
    cfg.regressor = j.value("regressor", "dense");
    cfg.extractor = j.value("extractor", "sift");
    cfg.basift_model = j.value("basift_model", "");
    t.learn_rate = j.value("learn_rate", 0.1);
    t.max_iters = j.value("max_iters", 300);
    t.patience = j.value("patience", 20);
    t.batch = j.value("batch", 0);
    const std::string init = j.value("init_mode", "scaled_random");
    if (init == "zeros")
        t.init_mode = InitMode::Zeros;
    else if (init == "scaled_random")
        t.init_mode = InitMode::ScaledRandom;
    else if (init == "ridge_projected")
        t.init_mode = InitMode::RidgeProjected;
    else
        throw std::runtime_error("config: bad init_mode '" + init + "'");
    t.perturb.n_train_perturb = j.value("n_train_perturb", 5);
    t.perturb.n_val_perturb = j.value("n_val_perturb", 2);
    t.perturb.translate_sigma = j.value("translate_sigma", 0.08);
    t.perturb.scale_sigma = j.value("scale_sigma", 0.05);
    t.perturb.rng_seed = j.value("seed", 1ull);
    cfg.val_fraction = j.value("val_fraction", 0.2);
    t.lambda_lo = j.value("lambda_lo", 1e-6);
    t.lambda_hi = j.value("lambda_hi", 1e3);
    t.golden_tol = j.value("golden_tol", 0.05);
    t.deterministic = j.value("deterministic", true);
    t.reduction_chunks = j.value("reduction_chunks", 16);

    if (cfg.regressor == "dense")
        t.regressor = RegressorKind::Dense;
    else if (cfg.regressor == "scr")
        t.regressor = RegressorKind::Composition;
    else
        throw std::runtime_error("config: bad regressor '" + cfg.regressor + "'");
    if (cfg.extractor != "sift" && cfg.extractor != "basift")
        throw std::runtime_error("config: bad extractor '" + cfg.extractor + "'");
    if (cfg.extractor == "basift" && cfg.basift_model.empty())
        throw std::runtime_error("config: extractor 'basift' requires basift_model");
    if (t.patience > t.max_iters) throw std::runtime_error("config: patience > max_iters");
    if (t.stages < 1) throw std::runtime_error("config: stages must be >= 1");
    return cfg;
}

// subject-disjoint split, deterministic under the seed
void split_by_subject(const std::vector<AnnotatedSample>& all, double val_fraction,
                      std::uint64_t seed, std::vector<AnnotatedSample>* train,
                      std::vector<AnnotatedSample>* val) {
    std::vector<std::string> subjects;
    for (const auto& s : all) {
        const std::string subj = subject_of(s.id);
        if (subjects.empty() || std::find(subjects.begin(), subjects.end(), subj) == subjects.end())
            subjects.push_back(subj);
    }
    std::sort(subjects.begin(), subjects.end());
    Rng rng(Rng::mix(seed, 0x517>>1));
    for (std::size_t i = subjects.size(); i > 1; --i)
        std::swap(subjects[i - 1], subjects[rng.uniform_int(static_cast<int>(i))]);
    const std::size_t n_val = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(val_fraction * subjects.size())));
    std::set<std::string> val_subjects(subjects.end() - n_val, subjects.end());
    for (const auto& s : all)
        (val_subjects.count(subject_of(s.id)) ? *val : *train).push_back(s);
}

std::vector<ImageGray> crop_training_patches(const std::string& dir, int n_patches, int side,
                                             std::uint64_t seed) {
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        const std::string ext = e.path().extension().string();
        if (e.is_regular_file() && (ext == ".png" || ext == ".jpg" || ext == ".jpeg"))
            files.push_back(e.path().string());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw std::runtime_error("no images in " + dir);
    std::vector<ImageGray> images;
    images.reserve(files.size());
    for (const auto& f : files) images.push_back(load_image_gray(f));

    Rng rng(seed);
    std::vector<ImageGray> patches;
    patches.reserve(n_patches);
    const double h = side / 2.0;
    for (int i = 0; i < n_patches; ++i) {
        const ImageGray& img = images[rng.uniform_int(static_cast<int>(images.size()))];
        const double cx = rng.uniform(h, img.width - h);
        const double cy = rng.uniform(h, img.height - h);
        patches.push_back(extract_patch(img, cx, cy, side));
    }
    return patches;
}

int run_train(const std::string& config_path, const std::string& data_dir,
              const std::string& out_path, std::string log_dir, const std::string& scheme_path,
              std::int64_t seed_override) {
    TrainFileConfig cfg = read_train_config(config_path);
    if (seed_override >= 0)
        cfg.train.perturb.rng_seed = static_cast<std::uint64_t>(seed_override);

    ExtractorConfig extractor;
    if (cfg.extractor == "basift") {
        extractor.kind = ExtractorConfig::Kind::Basift;
        extractor.basift = load_basift(cfg.basift_model);
        extractor.patch_side = extractor.basift.patch_side;
    }

    const LandmarkScheme scheme =
        scheme_path.empty() ? canonical_scheme_49() : load_scheme_json(scheme_path);
    const auto all = load_annotated_set((fs::path(data_dir) / "images").string(),
                                        (fs::path(data_dir) / "annotations").string(), scheme);
    std::vector<AnnotatedSample> train, val;
    split_by_subject(all, cfg.val_fraction, cfg.train.perturb.rng_seed, &train, &val);
    std::printf("loaded %zu samples -> %zu train / %zu validation (subject-disjoint)\n",
                all.size(), train.size(), val.size());

    CascadeTrainReport report;
    const CascadeModel model = train_cascade(train, val, cfg.train, extractor, scheme, &report);
    save_cascade(out_path, model);
    std::printf("model written to %s\n", out_path.c_str());

    if (log_dir.empty()) log_dir = out_path + ".logs";
    fs::create_directories(log_dir);
    for (std::size_t k = 0; k < report.stage_logs.size(); ++k) {
        char name[64];
        std::snprintf(name, sizeof(name), "stage%zu.csv", k + 1);
        write_stage_log_csv((fs::path(log_dir) / name).string(), report.stage_logs[k]);
    }
    {
        std::ofstream out(fs::path(log_dir) / "stages.csv");
        out << "stage,train_error_percent,val_error_percent\n";
        char buf[96];
        for (std::size_t k = 0; k < report.val_error_by_stage.size(); ++k) {
            std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g\n", k,
                          report.train_error_by_stage[k], report.val_error_by_stage[k]);
            out << buf;
        }
    }
    for (std::size_t k = 0; k < report.val_error_by_stage.size(); ++k)
        std::printf("  stage %zu: train %.3f%%  val %.3f%%\n", k,
                    report.train_error_by_stage[k], report.val_error_by_stage[k]);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"scralign: cascaded landmark alignment with composed sparse regressors"};
    app.require_subcommand(1);

    // --- synth ---
    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    std::string synth_out, synth_kind = "faces";
    SynthFaceConfig synth_cfg;
    int synth_textures = 64, synth_tex_size = 256;
    std::uint64_t synth_seed = 7;
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--kind", synth_kind, "faces | textures")
        ->check(CLI::IsMember({"faces", "textures"}));
    synth->add_option("--subjects", synth_cfg.subjects);
    synth->add_option("--per-subject", synth_cfg.per_subject);
    synth->add_option("--offset", synth_cfg.subject_offset, "first subject id");
    synth->add_option("--size", synth_cfg.image_size);
    synth->add_option("--count", synth_textures, "texture image count");
    synth->add_option("--seed", synth_seed);

    // --- train-basift ---
    auto* tb = app.add_subcommand("train-basift", "learn the sign-quantized descriptor map");
    std::string tb_dir, tb_out;
    double tb_ridge = 2.0, tb_zero_band = 0.0;
    int tb_patches = 4000, tb_side = 32;
    std::uint64_t tb_seed = 11;
    tb->add_option("--patch-dir", tb_dir, "directory of source images")->required();
    tb->add_option("--out", tb_out, "output model path")->required();
    tb->add_option("--ridge", tb_ridge, "ridge relative to design scale");
    tb->add_option("--patches", tb_patches, "number of random crops");
    tb->add_option("--patch-side", tb_side);
    tb->add_option("--zero-band", tb_zero_band);
    tb->add_option("--seed", tb_seed);

    // --- train ---
    auto* tr = app.add_subcommand("train", "train a cascade from a config file");
    std::string tr_config, tr_data, tr_out, tr_logs, tr_scheme;
    std::int64_t tr_seed = -1;
    tr->add_option("--config", tr_config, "JSON config")->required();
    tr->add_option("--data", tr_data, "dataset directory (images/ + annotations/)")->required();
    tr->add_option("--out", tr_out, "output model path")->required();
    tr->add_option("--log-dir", tr_logs, "stage log directory (default <out>.logs)");
    tr->add_option("--scheme", tr_scheme, "landmark scheme JSON (default: built-in 49-point)");
    tr->add_option("--seed", tr_seed, "override the config seed");

    // --- fit ---
    auto* ft = app.add_subcommand("fit", "fit one image from an initial shape");
    std::string ft_model, ft_image, ft_init, ft_out = "fitted.pts";
    ft->add_option("--model", ft_model)->required();
    ft->add_option("--image", ft_image)->required();
    ft->add_option("--init", ft_init, "initial shape (pts)")->required();
    ft->add_option("--out", ft_out, "fitted shape output (pts)");

    // --- eval ---
    auto* ev = app.add_subcommand("eval", "multi-initialization evaluation");
    std::string ev_model, ev_data, ev_out;
    int ev_inits = 20;
    std::uint64_t ev_seed = 1;
    double ev_tsig = 0.08, ev_ssig = 0.05;
    ev->add_option("--model", ev_model)->required();
    ev->add_option("--data", ev_data)->required();
    ev->add_option("--inits", ev_inits, "initializations per sample");
    ev->add_option("--seed", ev_seed);
    ev->add_option("--translate-sigma", ev_tsig);
    ev->add_option("--scale-sigma", ev_ssig);
    ev->add_option("--out", ev_out, "report directory")->required();

    // --- verify ---
    auto* vf = app.add_subcommand("verify", "consistency checks on a stored model");
    std::string vf_model;
    vf->add_option("--model", vf_model)->required();

    // --- bench ---
    auto* bn = app.add_subcommand("bench", "regression/feature micro-benchmarks");
    bool bn_regressor = false, bn_features = false;
    int bn_reps = 2000, bn_patches = 10000;
    std::uint64_t bn_seed = 3;
    std::string bn_out = "bench.csv";
    bn->add_flag("--regressor", bn_regressor, "dense vs composed apply");
    bn->add_flag("--features", bn_features, "reference vs approximated descriptor");
    bn->add_option("--reps", bn_reps);
    bn->add_option("--patches", bn_patches);
    bn->add_option("--seed", bn_seed);
    bn->add_option("--out", bn_out, "CSV output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 2;
    }

    try {
        if (synth->parsed()) {
            synth_cfg.seed = synth_seed;
            if (synth_kind == "faces") {
                synth_face_dataset(synth_out, synth_cfg);
                std::printf("wrote %d face images to %s\n",
                            synth_cfg.subjects * synth_cfg.per_subject, synth_out.c_str());
            } else {
                synth_texture_corpus(synth_out, synth_textures, synth_tex_size, synth_seed);
                std::printf("wrote %d texture images to %s\n", synth_textures, synth_out.c_str());
            }
            return 0;
        }

        if (tb->parsed()) {
            const auto patches = crop_training_patches(tb_dir, tb_patches, tb_side, tb_seed);
            std::printf("training descriptor map on %zu patches (side %d)\n", patches.size(),
                        tb_side);
            const BasiftFit fit = train_basift_map(patches, tb_ridge);
            const BasiftModel model = make_basift_model(fit.map, tb_side, tb_zero_band);
            save_basift(tb_out, model);
            json diag = {{"n_patches", fit.n_patches},
                         {"ridge", tb_ridge},
                         {"lambda", fit.lambda},
                         {"zero_band", tb_zero_band},
                         {"train_residual", fit.train_residual},
                         {"train_relative", fit.train_relative}};
            std::ofstream(tb_out + ".json") << diag.dump(2) << "\n";
            std::printf("map written to %s (train residual %.6g, relative %.4f)\n", tb_out.c_str(),
                        fit.train_residual, fit.train_relative);
            return 0;
        }

        if (tr->parsed()) return run_train(tr_config, tr_data, tr_out, tr_logs, tr_scheme, tr_seed);

        if (ft->parsed()) {
            const CascadeModel model = load_cascade(ft_model);
            const ImageGray image = load_image_gray(ft_image);
            const Shape init = read_pts_for_scheme(ft_init, model.scheme);
            const FitResult result = fit(image, init, model);
            write_pts(ft_out, result.final);
            for (std::size_t k = 0; k < result.stage_ms.size(); ++k)
                std::printf("stage %zu: %.3f ms\n", k + 1, result.stage_ms[k]);
            std::printf("fitted shape written to %s\n", ft_out.c_str());
            return 0;
        }

        if (ev->parsed()) {
            const CascadeModel model = load_cascade(ev_model);
            const auto test = load_annotated_set((fs::path(ev_data) / "images").string(),
                                                 (fs::path(ev_data) / "annotations").string(),
                                                 model.scheme);
            const EvalReport report =
                evaluate(model, test, ev_inits, ev_seed, ev_tsig, ev_ssig);
            fs::create_directories(ev_out);
            write_eval_rows_csv((fs::path(ev_out) / "rows.csv").string(), report);
            write_ced_csv((fs::path(ev_out) / "ced.csv").string(), report);
            write_summary_json((fs::path(ev_out) / "summary.json").string(), report);
            std::printf("rows %ld  mean %.4f%%  median %.4f%%  std %.4f%%\n", report.summary.rows,
                        report.summary.mean, report.summary.median, report.summary.stddev);
            return 0;
        }

        if (vf->parsed()) {
            const CascadeModel model = load_cascade(vf_model);
            const auto failures = verify_cascade(model);
            if (failures.empty()) {
                std::printf("ok: %zu stages, extractor %s\n", model.stages.size(),
                            model.extractor.kind == ExtractorConfig::Kind::Sift ? "sift" : "basift");
                return 0;
            }
            for (const auto& f : failures) std::fprintf(stderr, "verify: %s\n", f.c_str());
            return 1;
        }

        if (bn->parsed()) {
            if (!bn_regressor && !bn_features) bn_regressor = bn_features = true;
            std::vector<BenchRow> rows;
            if (bn_regressor) {
                auto r = bench_regressor(bn_reps, bn_seed);
                rows.insert(rows.end(), r.begin(), r.end());
            }
            if (bn_features) {
                auto r = bench_features(bn_patches, bn_seed);
                rows.insert(rows.end(), r.begin(), r.end());
            }
            write_bench_csv(bn_out, rows);
            for (const BenchRow& r : rows)
                std::printf("%-20s median %10.1f ns  p10 %10.1f  p90 %10.1f  flops %8llu  threads %d\n",
                            r.name.c_str(), r.median_ns, r.p10_ns, r.p90_ns,
                            static_cast<unsigned long long>(r.flops), r.threads);
            std::printf("csv written to %s\n", bn_out.c_str());
            return 0;
        }
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        const std::string what = ex.what();
        const bool usage = what.find("config") != std::string::npos ||
                           what.find("cannot open") != std::string::npos ||
                           what.find("cannot read") != std::string::npos ||
                           what.find("cannot decode") != std::string::npos;
        return usage ? 2 : 1;
    }
    return 2;
}
