#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "crowdtex/errors.hpp"
#include "crowdtex/eval.hpp"
#include "crowdtex/kernels.hpp"
#include "crowdtex/log.hpp"
#include "crowdtex/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using namespace crowdtex;

struct RunConfig {
    // descriptor
    double radius = 1.0;
    int points = 8;
    std::string mapping = "riu2";
    std::string scheme = "joint";
    // grid geometry
    int block_size = 96;
    int cell_size = 32;
    double overlap = 0.5;
    // svm
    double c = 10.0;
    double gamma = 1.0;
    std::string kernel = "rbf";
    double tol = 1e-3;
    int max_passes = 100;
    bool grid_search = false;
    std::vector<double> c_grid{0.1, 1.0, 10.0, 100.0};
    std::vector<double> gamma_grid{0.01, 0.1, 1.0, 10.0};
    int folds = 5;
    double test_fraction = 0.3;
    // run
    std::uint64_t seed = 1;
    unsigned jobs = default_jobs();
    std::string manifest;
    std::string model = "model.clbpsvm";
    std::string overlay;
    std::string out = ".";
    std::vector<int> sizes{64, 96, 128};
    std::vector<std::string> descriptors{"clbp", "lbp", "glcm"};
    int per_class = 50;
    int frame_size = 384;
};

CLBPParams clbp_params(const RunConfig& cfg) {
    CLBPParams p;
    p.radius = cfg.radius;
    p.points = cfg.points;
    if (cfg.mapping == "full") {
        p.mapping = Mapping::full;
    } else if (cfg.mapping == "riu2") {
        p.mapping = Mapping::riu2;
    } else {
        raise(Errc::invalid_config, "mapping must be full or riu2, got " + cfg.mapping);
    }
    if (cfg.scheme == "concat") {
        p.scheme = Scheme::s_concat_m_concat_c;
    } else if (cfg.scheme == "joint") {
        p.scheme = Scheme::smc_joint;
    } else {
        raise(Errc::invalid_config, "scheme must be concat or joint, got " + cfg.scheme);
    }
    p.validate();
    return p;
}

SvmTrainParams svm_params(const RunConfig& cfg) {
    SvmTrainParams p;
    p.C = cfg.c;
    p.kernel.gamma = cfg.gamma;
    if (cfg.kernel == "rbf") {
        p.kernel.kind = KernelKind::rbf;
    } else if (cfg.kernel == "linear") {
        p.kernel.kind = KernelKind::linear;
    } else {
        raise(Errc::invalid_config, "kernel must be rbf or linear, got " + cfg.kernel);
    }
    p.tol = cfg.tol;
    p.max_passes = cfg.max_passes;
    p.seed = cfg.seed;
    p.validate();
    return p;
}

FeatureParams feature_params(const RunConfig& cfg, DescriptorKind kind = DescriptorKind::clbp) {
    FeatureParams f;
    f.descriptor = kind;
    f.clbp = clbp_params(cfg);
    f.cell_size = cfg.cell_size;
    f.overlap = cfg.overlap;
    if (cfg.cell_size < 1) raise(Errc::invalid_config, "cell_size must be >= 1");
    if (cfg.overlap < 0.0 || cfg.overlap >= 1.0) {
        raise(Errc::invalid_config, "overlap must be in [0, 1)");
    }
    if (cfg.block_size < cfg.cell_size) {
        raise(Errc::invalid_config, "block_size must be >= cell_size");
    }
    return f;
}

json config_json(const RunConfig& cfg) {
    return json{{"radius", cfg.radius},
                {"points", cfg.points},
                {"mapping", cfg.mapping},
                {"scheme", cfg.scheme},
                {"block_size", cfg.block_size},
                {"cell_size", cfg.cell_size},
                {"overlap", cfg.overlap},
                {"c", cfg.c},
                {"gamma", cfg.gamma},
                {"kernel", cfg.kernel},
                {"tol", cfg.tol},
                {"max_passes", cfg.max_passes},
                {"grid_search", cfg.grid_search},
                {"c_grid", cfg.c_grid},
                {"gamma_grid", cfg.gamma_grid},
                {"folds", cfg.folds},
                {"test_fraction", cfg.test_fraction},
                {"seed", cfg.seed},
                {"jobs", cfg.jobs},
                {"manifest", cfg.manifest},
                {"model", cfg.model},
                {"overlay", cfg.overlay},
                {"out", cfg.out},
                {"sizes", cfg.sizes},
                {"descriptors", cfg.descriptors},
                {"per_class", cfg.per_class},
                {"frame_size", cfg.frame_size},
                {"simd", kernels::simd_level()}};
}

// Config file values become defaults; CLI flags override. Unknown keys abort.
void apply_config_file(RunConfig& cfg, const fs::path& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::file_not_found, path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        raise(Errc::parse_error, path.string() + ": " + e.what());
    }
    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "radius") cfg.radius = value.get<double>();
            else if (key == "points") cfg.points = value.get<int>();
            else if (key == "mapping") cfg.mapping = value.get<std::string>();
            else if (key == "scheme") cfg.scheme = value.get<std::string>();
            else if (key == "block_size") cfg.block_size = value.get<int>();
            else if (key == "cell_size") cfg.cell_size = value.get<int>();
            else if (key == "overlap") cfg.overlap = value.get<double>();
            else if (key == "c") cfg.c = value.get<double>();
            else if (key == "gamma") cfg.gamma = value.get<double>();
            else if (key == "kernel") cfg.kernel = value.get<std::string>();
            else if (key == "tol") cfg.tol = value.get<double>();
            else if (key == "max_passes") cfg.max_passes = value.get<int>();
            else if (key == "grid_search") cfg.grid_search = value.get<bool>();
            else if (key == "c_grid") cfg.c_grid = value.get<std::vector<double>>();
            else if (key == "gamma_grid") cfg.gamma_grid = value.get<std::vector<double>>();
            else if (key == "folds") cfg.folds = value.get<int>();
            else if (key == "test_fraction") cfg.test_fraction = value.get<double>();
            else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
            else if (key == "jobs") cfg.jobs = value.get<unsigned>();
            else if (key == "manifest") cfg.manifest = value.get<std::string>();
            else if (key == "model") cfg.model = value.get<std::string>();
            else if (key == "overlay") cfg.overlay = value.get<std::string>();
            else if (key == "out") cfg.out = value.get<std::string>();
            else if (key == "sizes") cfg.sizes = value.get<std::vector<int>>();
            else if (key == "descriptors") cfg.descriptors = value.get<std::vector<std::string>>();
            else if (key == "per_class") cfg.per_class = value.get<int>();
            else if (key == "frame_size") cfg.frame_size = value.get<int>();
            else raise(Errc::invalid_config, path.string() + ": unknown config key " + key);
        } catch (const json::exception& e) {
            raise(Errc::parse_error, path.string() + ": key " + key + ": " + e.what());
        }
    }
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int cmd_train(const RunConfig& cfg) {
    const Manifest manifest = load_manifest(cfg.manifest);
    const FeatureParams fparams = feature_params(cfg);
    const LabeledFeatures data = extract_manifest_features(manifest, fparams, cfg.jobs);
    if (data.features.empty()) raise(Errc::empty, "manifest has no annotations");
    log_info("extracted " + std::to_string(data.features.size()) + " block features (dim " +
             std::to_string(data.features.front().size()) + ")");

    SvmTrainParams svm = svm_params(cfg);
    if (cfg.grid_search) {
        const auto gs = grid_search_cv(data.features, data.labels, cfg.c_grid, cfg.gamma_grid,
                                       cfg.folds, cfg.seed, svm, cfg.jobs);
        svm.C = gs.best_c;
        svm.kernel.gamma = gs.best_gamma;
        log_info("grid search picked C=" + std::to_string(gs.best_c) +
                 " gamma=" + std::to_string(gs.best_gamma));
    }

    MulticlassModel model = train_multiclass(data.features, data.labels, svm, cfg.jobs);
    model.descriptor = fparams.clbp;
    model.block_size = manifest.block_size > 0 ? manifest.block_size : cfg.block_size;
    model.cell_size = cfg.cell_size;
    model.overlap = cfg.overlap;
    if (!model.all_converged()) {
        log_info("warning: at least one pairwise SVM hit max_passes before convergence");
    }
    save_model(model, cfg.model);

    std::vector<DensityLabel> predictions(data.features.size());
    parallel_for(data.features.size(), cfg.jobs,
                 [&](std::size_t i) { predictions[i] = predict(model, data.features[i]).first; });
    const double train_acc = accuracy(confusion(predictions, data.labels));
    std::printf("train_accuracy %.6f\n", train_acc);
    std::printf("model %s\n", cfg.model.c_str());
    return 0;
}

int cmd_predict_frame(const RunConfig& cfg, const std::string& frame_path) {
    const MulticlassModel model = load_model(cfg.model);
    const GrayImage frame = load_grayscale(frame_path);
    const BlockGrid grid = partition_blocks(frame, model.block_size);

    FeatureParams fparams;
    fparams.descriptor = DescriptorKind::clbp;
    fparams.clbp = model.descriptor;
    fparams.cell_size = model.cell_size;
    fparams.overlap = model.overlap;
    const auto features = extract_block_features(frame, grid.blocks, fparams);

    std::vector<DensityLabel> labels(grid.blocks.size());
    std::vector<std::vector<int>> votes(grid.blocks.size());
    parallel_for(grid.blocks.size(), cfg.jobs, [&](std::size_t i) {
        auto [label, v] = predict(model, features[i]);
        labels[i] = label;
        votes[i] = std::move(v);
    });

    std::ostringstream csv;
    csv << "block_index,x,y,w,h,label";
    for (DensityLabel c : model.classes) csv << ",votes_" << label_name(c);
    csv << "\n";
    for (std::size_t i = 0; i < grid.blocks.size(); ++i) {
        const Rect& r = grid.blocks[i];
        csv << i << ',' << r.x << ',' << r.y << ',' << r.w << ',' << r.h << ','
            << label_name(labels[i]);
        for (int v : votes[i]) csv << ',' << v;
        csv << "\n";
    }
    std::fputs(csv.str().c_str(), stdout);

    if (!cfg.overlay.empty()) {
        const GrayImage rendered = overlay_labels(frame, grid, labels);
        save_png_gray(rendered, cfg.overlay);
        log_info("overlay written to " + cfg.overlay);
    }
    return 0;
}

int cmd_evaluate(const RunConfig& cfg) {
    const MulticlassModel model = load_model(cfg.model);
    const Manifest manifest = load_manifest(cfg.manifest);
    if (manifest.annotation_count() == 0) raise(Errc::empty, "test manifest has no annotations");

    FeatureParams fparams;
    fparams.descriptor = DescriptorKind::clbp;
    fparams.clbp = model.descriptor;
    fparams.cell_size = model.cell_size;
    fparams.overlap = model.overlap;
    const LabeledFeatures data = extract_manifest_features(manifest, fparams, cfg.jobs);

    std::vector<DensityLabel> predictions(data.features.size());
    parallel_for(data.features.size(), cfg.jobs,
                 [&](std::size_t i) { predictions[i] = predict(model, data.features[i]).first; });

    const ConfusionMatrix cm = confusion(predictions, data.labels);
    std::fputs(confusion_table(cm).c_str(), stdout);
    std::printf("accuracy %.6f\n", accuracy(cm));

    fs::create_directories(cfg.out);
    const fs::path csv_path = fs::path(cfg.out) / "confusion.csv";
    std::ofstream csv(csv_path);
    csv << confusion_csv(cm);
    log_info("confusion CSV written to " + csv_path.string());
    return 0;
}

int cmd_sweep(const RunConfig& cfg) {
    const Manifest manifest = load_manifest(cfg.manifest);

    SweepParams sp;
    sp.sizes = cfg.sizes;
    sp.svm = svm_params(cfg);
    sp.grid_search = cfg.grid_search;
    sp.c_grid = cfg.c_grid;
    sp.gamma_grid = cfg.gamma_grid;
    sp.k_folds = cfg.folds;
    sp.test_fraction = cfg.test_fraction;
    sp.seed = cfg.seed;

    fs::create_directories(cfg.out);
    std::ostringstream all_csv;
    all_csv << "descriptor,block_size,accuracy,seconds\n";
    bool any_error = false;
    for (const std::string& name : cfg.descriptors) {
        const auto kind = parse_descriptor(name);
        if (!kind) raise(Errc::invalid_config, "unknown descriptor " + name);
        sp.features = feature_params(cfg, *kind);
        const SweepReport report = sweep_block_sizes(manifest, sp, cfg.jobs);
        std::fputs(sweep_table(report).c_str(), stdout);
        const std::string csv = sweep_csv(report);
        all_csv << csv.substr(csv.find('\n') + 1); // drop per-report header
        if (!report.ok()) {
            any_error = true;
            for (const std::string& e : report.errors) {
                if (!e.empty()) log_error(e);
            }
        }
    }
    const fs::path csv_path = fs::path(cfg.out) / "sweep.csv";
    std::ofstream csv(csv_path);
    csv << all_csv.str();
    log_info("sweep CSV written to " + csv_path.string());
    if (any_error) raise(Errc::block_too_large, "at least one sweep size failed; see error rows");
    return 0;
}

int cmd_synth(const RunConfig& cfg) {
    SynthConfig sc;
    sc.per_class = cfg.per_class;
    sc.frame_size = cfg.frame_size;
    sc.block_size = cfg.block_size;
    sc.seed = cfg.seed;
    const Manifest manifest = synth_corpus(sc, cfg.out);
    std::printf("frames %zu\n", manifest.entries.size());
    std::printf("blocks %zu\n", manifest.annotation_count());
    std::printf("manifest %s\n", (fs::path(cfg.out) / "manifest.txt").string().c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    RunConfig cfg;

    // --config is applied before flag parsing so flags override file values.
    for (int i = 1; i < argc - 1; ++i) {
        if (std::string(argv[i]) == "--config") {
            try {
                apply_config_file(cfg, argv[i + 1]);
            } catch (const Error& e) {
                std::fprintf(stderr, "ERROR %s\n", e.what());
                return 1;
            }
        }
    }

    CLI::App app{"CLBP crowd-density estimation toolkit"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (flags override it)");

    std::string frame_path;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", cfg.seed, "root RNG seed");
        sub->add_option("--jobs", cfg.jobs, "worker threads");
        sub->add_option("--config", config_path, "JSON config file (flags override it)");
    };
    const auto add_descriptor = [&](CLI::App* sub) {
        sub->add_option("--radius", cfg.radius, "ring radius r");
        sub->add_option("--points", cfg.points, "ring sample count p");
        sub->add_option("--mapping", cfg.mapping, "code mapping: full|riu2");
        sub->add_option("--scheme", cfg.scheme, "histogram scheme: concat|joint");
        sub->add_option("--block-size", cfg.block_size, "block side in pixels");
        sub->add_option("--cell-size", cfg.cell_size, "cell side in pixels");
        sub->add_option("--overlap", cfg.overlap, "cell overlap fraction [0,1)");
    };
    const auto add_svm = [&](CLI::App* sub) {
        sub->add_option("--c", cfg.c, "soft-margin C");
        sub->add_option("--gamma", cfg.gamma, "rbf gamma");
        sub->add_option("--kernel", cfg.kernel, "kernel: rbf|linear");
        sub->add_option("--tol", cfg.tol, "SMO KKT tolerance");
        sub->add_option("--max-passes", cfg.max_passes, "SMO sweep limit");
        sub->add_flag("--grid-search,!--no-grid-search", cfg.grid_search,
                      "cross-validated C/gamma search");
        sub->add_option("--c-grid", cfg.c_grid, "grid-search C values")->delimiter(',');
        sub->add_option("--gamma-grid", cfg.gamma_grid, "grid-search gamma values")->delimiter(',');
        sub->add_option("--folds", cfg.folds, "cross-validation folds");
    };

    CLI::App* train = app.add_subcommand("train", "train a CLBP multi-class SVM from a manifest");
    train->add_option("--manifest", cfg.manifest, "labeled manifest")->required();
    train->add_option("--model", cfg.model, "output model file");
    add_descriptor(train);
    add_svm(train);
    add_common(train);

    CLI::App* predict_cmd = app.add_subcommand("predict", "label every block of a frame");
    predict_cmd->add_option("frame", frame_path, "input frame (PGM or PNG)")->required();
    predict_cmd->add_option("--model", cfg.model, "model file");
    predict_cmd->add_option("--overlay", cfg.overlay, "write label overlay PNG here");
    add_common(predict_cmd);

    CLI::App* evaluate = app.add_subcommand("evaluate", "confusion matrix on a labeled manifest");
    evaluate->add_option("--manifest", cfg.manifest, "labeled test manifest")->required();
    evaluate->add_option("--model", cfg.model, "model file");
    evaluate->add_option("--out", cfg.out, "output directory for CSV");
    add_common(evaluate);

    CLI::App* sweep = app.add_subcommand("sweep", "block-size / descriptor comparison");
    sweep->add_option("--manifest", cfg.manifest, "labeled manifest")->required();
    sweep->add_option("--sizes", cfg.sizes, "block sizes to sweep")->delimiter(',');
    sweep->add_option("--descriptors", cfg.descriptors, "descriptors: clbp,lbp,glcm")
        ->delimiter(',');
    sweep->add_option("--out", cfg.out, "output directory for CSV");
    sweep->add_option("--test-fraction", cfg.test_fraction, "held-out fraction per size");
    add_descriptor(sweep);
    add_svm(sweep);
    add_common(sweep);

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic labeled corpus");
    synth->add_option("--out", cfg.out, "output directory")->required();
    synth->add_option("--per-class", cfg.per_class, "annotated blocks per class");
    synth->add_option("--frame-size", cfg.frame_size, "frame side in pixels");
    synth->add_option("--block-size", cfg.block_size, "annotation block side");
    add_common(synth);

    CLI11_PARSE(app, argc, argv);

    try {
        log_info("effective config " + config_json(cfg).dump());
        if (train->parsed()) return cmd_train(cfg);
        if (predict_cmd->parsed()) return cmd_predict_frame(cfg, frame_path);
        if (evaluate->parsed()) return cmd_evaluate(cfg);
        if (sweep->parsed()) return cmd_sweep(cfg);
        if (synth->parsed()) return cmd_synth(cfg);
    } catch (const Error& e) {
        std::fprintf(stderr, "ERROR %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "ERROR Internal: %s\n", e.what());
        return 1;
    }
    return 0;
}
