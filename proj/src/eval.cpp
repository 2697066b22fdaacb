#include "crowdtex/eval.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "crowdtex/errors.hpp"
#include "crowdtex/parallel.hpp"
#include "crowdtex/rng.hpp"

namespace crowdtex {

// ---------------------------------------------------------------------------
// Confusion matrix
// ---------------------------------------------------------------------------

long long ConfusionMatrix::total() const {
    long long t = 0;
    for (long long c : counts) t += c;
    return t;
}

std::vector<double> ConfusionMatrix::row_percentages() const {
    const std::size_t k = classes.size();
    std::vector<double> pct(counts.size(), 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        long long row_total = 0;
        for (std::size_t j = 0; j < k; ++j) row_total += counts[i * k + j];
        if (row_total == 0) continue;
        for (std::size_t j = 0; j < k; ++j) {
            pct[i * k + j] = 100.0 * static_cast<double>(counts[i * k + j]) /
                             static_cast<double>(row_total);
        }
    }
    return pct;
}

ConfusionMatrix confusion(const std::vector<DensityLabel>& predictions,
                          const std::vector<DensityLabel>& truth) {
    if (predictions.size() != truth.size()) {
        raise(Errc::length_mismatch, "predictions and truth differ in length");
    }
    if (truth.empty()) raise(Errc::empty, "no samples to score");
    ConfusionMatrix cm;
    for (int i = 0; i < kLabelCount; ++i) cm.classes.push_back(static_cast<DensityLabel>(i));
    cm.counts.assign(static_cast<std::size_t>(kLabelCount) * kLabelCount, 0);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        cm.counts[static_cast<std::size_t>(truth[i]) * kLabelCount +
                  static_cast<std::size_t>(predictions[i])]++;
    }
    return cm;
}

double accuracy(const ConfusionMatrix& cm) {
    const long long t = cm.total();
    if (t == 0) raise(Errc::empty, "confusion matrix is empty");
    long long diag = 0;
    const std::size_t k = cm.classes.size();
    for (std::size_t i = 0; i < k; ++i) diag += cm.counts[i * k + i];
    return static_cast<double>(diag) / static_cast<double>(t);
}

std::string confusion_table(const ConfusionMatrix& cm) {
    const std::size_t k = cm.classes.size();
    const auto pct = cm.row_percentages();
    std::ostringstream out;
    out << std::setw(9) << "";
    for (DensityLabel c : cm.classes) out << std::setw(9) << label_name(c);
    out << "\n";
    for (std::size_t i = 0; i < k; ++i) {
        out << std::setw(9) << label_name(cm.classes[i]);
        for (std::size_t j = 0; j < k; ++j) {
            std::ostringstream cell;
            cell << std::fixed << std::setprecision(1) << pct[i * k + j] << "%";
            out << std::setw(9) << cell.str();
        }
        out << "\n";
    }
    return out.str();
}

std::string confusion_csv(const ConfusionMatrix& cm) {
    const std::size_t k = cm.classes.size();
    const auto pct = cm.row_percentages();
    std::ostringstream out;
    out << "truth";
    for (DensityLabel c : cm.classes) out << ',' << label_name(c) << "_count";
    for (DensityLabel c : cm.classes) out << ',' << label_name(c) << "_pct";
    out << "\n";
    for (std::size_t i = 0; i < k; ++i) {
        out << label_name(cm.classes[i]);
        for (std::size_t j = 0; j < k; ++j) out << ',' << cm.counts[i * k + j];
        for (std::size_t j = 0; j < k; ++j) {
            out << ',' << std::fixed << std::setprecision(4) << pct[i * k + j];
        }
        out << "\n";
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Feature extraction
// ---------------------------------------------------------------------------

const char* descriptor_name(DescriptorKind kind) {
    switch (kind) {
        case DescriptorKind::clbp: return "clbp";
        case DescriptorKind::lbp: return "lbp";
        case DescriptorKind::glcm: return "glcm";
    }
    return "?";
}

std::optional<DescriptorKind> parse_descriptor(const std::string& token) {
    if (token == "clbp") return DescriptorKind::clbp;
    if (token == "lbp") return DescriptorKind::lbp;
    if (token == "glcm") return DescriptorKind::glcm;
    return std::nullopt;
}

std::vector<std::vector<double>> extract_block_features(const GrayImage& frame,
                                                        const std::vector<Rect>& blocks,
                                                        const FeatureParams& params) {
    std::vector<std::vector<double>> out;
    out.reserve(blocks.size());
    switch (params.descriptor) {
        case DescriptorKind::clbp: {
            const CodePlanes planes = compute_code_planes(frame, params.clbp);
            for (const Rect& b : blocks) {
                out.push_back(block_feature_from_planes(planes, b, params.clbp, params.cell_size,
                                                        params.overlap, params.norm)
                                  .values);
            }
            break;
        }
        case DescriptorKind::lbp: {
            for (const Rect& b : blocks) {
                std::vector<double> feat;
                for (const Rect& cell : cells_of_block(b, params.cell_size, params.overlap)) {
                    const Histogram h = lbp_histogram(frame, cell, params.clbp);
                    feat.insert(feat.end(), h.bins.begin(), h.bins.end());
                }
                out.push_back(std::move(feat));
            }
            break;
        }
        case DescriptorKind::glcm: {
            for (const Rect& b : blocks) {
                std::vector<double> feat;
                for (const Rect& cell : cells_of_block(b, params.cell_size, params.overlap)) {
                    const auto stats = glcm_cell_features(frame, cell, params.glcm_levels);
                    feat.insert(feat.end(), stats.begin(), stats.end());
                }
                out.push_back(std::move(feat));
            }
            break;
        }
    }
    return out;
}

LabeledFeatures extract_manifest_features(const Manifest& manifest, const FeatureParams& params,
                                          unsigned jobs) {
    std::vector<std::vector<std::vector<double>>> per_frame(manifest.entries.size());
    parallel_for(manifest.entries.size(), jobs, [&](std::size_t e) {
        const FrameEntry& entry = manifest.entries[e];
        const GrayImage frame = load_grayscale(entry.frame_path);
        std::vector<Rect> blocks;
        blocks.reserve(entry.annotations.size());
        for (const auto& ann : entry.annotations) blocks.push_back(ann.block);
        per_frame[e] = extract_block_features(frame, blocks, params);
    });

    LabeledFeatures out;
    for (std::size_t e = 0; e < manifest.entries.size(); ++e) {
        const FrameEntry& entry = manifest.entries[e];
        for (std::size_t a = 0; a < entry.annotations.size(); ++a) {
            out.features.push_back(std::move(per_frame[e][a]));
            out.labels.push_back(entry.annotations[a].label);
        }
    }
    return out;
}

Standardizer Standardizer::fit(const std::vector<std::vector<double>>& features) {
    Standardizer s;
    if (features.empty()) return s;
    const std::size_t dim = features.front().size();
    s.mean.assign(dim, 0.0);
    s.inv_std.assign(dim, 1.0);
    for (const auto& f : features) {
        for (std::size_t d = 0; d < dim; ++d) s.mean[d] += f[d];
    }
    for (double& m : s.mean) m /= static_cast<double>(features.size());
    std::vector<double> var(dim, 0.0);
    for (const auto& f : features) {
        for (std::size_t d = 0; d < dim; ++d) {
            const double diff = f[d] - s.mean[d];
            var[d] += diff * diff;
        }
    }
    for (std::size_t d = 0; d < dim; ++d) {
        const double sd = std::sqrt(var[d] / static_cast<double>(features.size()));
        s.inv_std[d] = sd > 0.0 ? 1.0 / sd : 1.0;
    }
    return s;
}

void Standardizer::apply(std::vector<std::vector<double>>& features) const {
    for (auto& f : features) {
        for (std::size_t d = 0; d < f.size(); ++d) f[d] = (f[d] - mean[d]) * inv_std[d];
    }
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

std::vector<std::pair<Rect, DensityLabel>> relabel_blocks(const FrameEntry& entry, int block_size) {
    const BlockGrid grid = partition_blocks(entry.width, entry.height, block_size);
    std::vector<std::pair<Rect, DensityLabel>> out;
    for (const Rect& b : grid.blocks) {
        std::array<long long, kLabelCount> overlap{};
        for (const auto& ann : entry.annotations) {
            const int x0 = std::max(b.x, ann.block.x);
            const int y0 = std::max(b.y, ann.block.y);
            const int x1 = std::min(b.x + b.w, ann.block.x + ann.block.w);
            const int y1 = std::min(b.y + b.h, ann.block.y + ann.block.h);
            if (x0 < x1 && y0 < y1) {
                overlap[static_cast<std::size_t>(ann.label)] +=
                    static_cast<long long>(x1 - x0) * (y1 - y0);
            }
        }
        long long covered = 0;
        std::size_t best = 0;
        for (std::size_t i = 0; i < overlap.size(); ++i) {
            covered += overlap[i];
            if (overlap[i] > overlap[best]) best = i;
        }
        if (covered * 2 < b.area()) continue; // mostly unannotated
        out.emplace_back(b, static_cast<DensityLabel>(best));
    }
    return out;
}

namespace {

// Manifest whose annotations are the re-partitioned, relabeled blocks.
Manifest repartition_manifest(const Manifest& manifest, int block_size) {
    Manifest out = manifest;
    out.block_size = block_size;
    out.entries.clear();
    for (const FrameEntry& entry : manifest.entries) {
        FrameEntry ne = entry;
        ne.annotations.clear();
        for (const auto& [rect, label] : relabel_blocks(entry, block_size)) {
            BlockAnnotation ann;
            ann.frame_id = entry.frame_id;
            ann.block = rect;
            ann.label = label;
            ne.annotations.push_back(std::move(ann));
        }
        if (!ne.annotations.empty()) out.entries.push_back(std::move(ne));
    }
    return out;
}

double run_pipeline_accuracy(const Manifest& manifest, const SweepParams& params, int block_size,
                             unsigned jobs) {
    const Manifest sized = repartition_manifest(manifest, block_size);
    const auto [train_m, test_m] = split(sized, params.test_fraction,
                                         derive_seed(params.seed, {0x517Eull,
                                                                   static_cast<std::uint64_t>(block_size)}));

    LabeledFeatures train = extract_manifest_features(train_m, params.features, jobs);
    LabeledFeatures test = extract_manifest_features(test_m, params.features, jobs);

    if (params.features.descriptor == DescriptorKind::glcm) {
        const Standardizer scaler = Standardizer::fit(train.features);
        scaler.apply(train.features);
        scaler.apply(test.features);
    }

    SvmTrainParams svm = params.svm;
    svm.seed = derive_seed(params.seed, {0x5EEDull, static_cast<std::uint64_t>(block_size)});
    if (params.grid_search) {
        const auto gs = grid_search_cv(train.features, train.labels, params.c_grid,
                                       params.gamma_grid, params.k_folds, svm.seed, svm, jobs);
        svm.C = gs.best_c;
        svm.kernel.gamma = gs.best_gamma;
    }
    const MulticlassModel model = train_multiclass(train.features, train.labels, svm, jobs);

    std::vector<DensityLabel> predictions(test.features.size());
    parallel_for(test.features.size(), jobs, [&](std::size_t i) {
        predictions[i] = predict(model, test.features[i]).first;
    });
    return accuracy(confusion(predictions, test.labels));
}

} // namespace

SweepReport sweep_block_sizes(const Manifest& manifest, const SweepParams& params, unsigned jobs) {
    if (params.sizes.empty()) raise(Errc::invalid_config, "no block sizes to sweep");
    SweepReport report;
    report.descriptor = descriptor_name(params.features.descriptor);
    for (int size : params.sizes) {
        const auto start = std::chrono::steady_clock::now();
        double acc = std::numeric_limits<double>::quiet_NaN();
        std::string error;
        try {
            acc = run_pipeline_accuracy(manifest, params, size, jobs);
        } catch (const Error& e) {
            error = std::string("size ") + std::to_string(size) + ": " + e.what();
        }
        const auto stop = std::chrono::steady_clock::now();
        const double seconds =
            std::chrono::duration_cast<std::chrono::milliseconds>(stop - start).count() / 1000.0;
        report.block_sizes.push_back(size);
        report.accuracies.push_back(acc);
        report.seconds.push_back(seconds);
        report.errors.push_back(error);
    }
    return report;
}

bool SweepReport::ok() const {
    return std::all_of(errors.begin(), errors.end(),
                       [](const std::string& e) { return e.empty(); });
}

std::string sweep_csv(const SweepReport& report) {
    std::ostringstream out;
    out << "descriptor,block_size,accuracy,seconds\n";
    for (std::size_t i = 0; i < report.block_sizes.size(); ++i) {
        out << report.descriptor << ',' << report.block_sizes[i] << ',';
        if (report.errors[i].empty()) {
            out << std::setprecision(17) << report.accuracies[i];
        } else {
            out << "error";
        }
        out << ',' << std::fixed << std::setprecision(3) << report.seconds[i] << "\n";
        out.unsetf(std::ios::fixed);
    }
    return out.str();
}

std::string sweep_table(const SweepReport& report) {
    std::ostringstream out;
    out << "descriptor " << report.descriptor << "\n";
    out << std::setw(12) << "block_size" << std::setw(12) << "accuracy" << std::setw(12)
        << "seconds" << "\n";
    for (std::size_t i = 0; i < report.block_sizes.size(); ++i) {
        out << std::setw(12) << report.block_sizes[i];
        if (report.errors[i].empty()) {
            std::ostringstream acc;
            acc << std::fixed << std::setprecision(4) << report.accuracies[i];
            out << std::setw(12) << acc.str();
        } else {
            out << std::setw(12) << "error";
        }
        std::ostringstream sec;
        sec << std::fixed << std::setprecision(3) << report.seconds[i];
        out << std::setw(12) << sec.str() << "\n";
        if (!report.errors[i].empty()) out << "    " << report.errors[i] << "\n";
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Overlay
// ---------------------------------------------------------------------------

namespace {

// 5x7 glyphs for the label codes.
constexpr std::array<std::array<std::uint8_t, 7>, 4> kGlyphs{{
    // V
    {{0b10001, 0b10001, 0b10001, 0b10001, 0b01010, 0b01010, 0b00100}},
    // L
    {{0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b11111}},
    // M
    {{0b10001, 0b11011, 0b10101, 0b10101, 0b10001, 0b10001, 0b10001}},
    // H
    {{0b10001, 0b10001, 0b10001, 0b11111, 0b10001, 0b10001, 0b10001}},
}};

int glyph_index(char c) {
    switch (c) {
        case 'V': return 0;
        case 'L': return 1;
        case 'M': return 2;
        case 'H': return 3;
    }
    return -1;
}

void draw_glyph(GrayImage& img, char c, int x0, int y0, int scale, double value) {
    const int g = glyph_index(c);
    if (g < 0) return;
    for (int row = 0; row < 7; ++row) {
        for (int col = 0; col < 5; ++col) {
            if ((kGlyphs[static_cast<std::size_t>(g)][static_cast<std::size_t>(row)] >>
                 (4 - col)) & 1) {
                for (int sy = 0; sy < scale; ++sy) {
                    for (int sx = 0; sx < scale; ++sx) {
                        const int x = x0 + col * scale + sx;
                        const int y = y0 + row * scale + sy;
                        if (x >= 0 && y >= 0 && x < img.width && y < img.height) {
                            img.at(x, y) = value;
                        }
                    }
                }
            }
        }
    }
}

} // namespace

GrayImage overlay_labels(const GrayImage& image, const BlockGrid& grid,
                         const std::vector<DensityLabel>& labels) {
    if (labels.size() != grid.blocks.size()) {
        raise(Errc::count_mismatch, "got " + std::to_string(labels.size()) + " labels for " +
                                        std::to_string(grid.blocks.size()) + " blocks");
    }
    GrayImage out = image;
    for (std::size_t b = 0; b < grid.blocks.size(); ++b) {
        const Rect& r = grid.blocks[b];
        for (int x = r.x; x < r.x + r.w; ++x) {
            out.at(x, r.y) = 255.0;
            out.at(x, r.y + r.h - 1) = 255.0;
        }
        for (int y = r.y; y < r.y + r.h; ++y) {
            out.at(r.x, y) = 255.0;
            out.at(r.x + r.w - 1, y) = 255.0;
        }

        const char* code = label_code(labels[b]);
        const int scale = 2;
        const int len = static_cast<int>(std::string(code).size());
        const int text_w = len * 6 * scale;
        const int text_h = 7 * scale;
        const int tx = r.x + 4;
        const int ty = r.y + 4;
        // dark backing box for contrast
        for (int y = ty - 2; y < ty + text_h + 2; ++y) {
            for (int x = tx - 2; x < tx + text_w + 2; ++x) {
                if (x >= 0 && y >= 0 && x < out.width && y < out.height) out.at(x, y) = 0.0;
            }
        }
        for (int i = 0; i < len; ++i) {
            draw_glyph(out, code[i], tx + i * 6 * scale, ty, scale, 255.0);
        }
    }
    return out;
}

} // namespace crowdtex
