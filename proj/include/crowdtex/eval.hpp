#pragma once

#include <optional>
#include <string>
#include <vector>

#include "crowdtex/baselines.hpp"
#include "crowdtex/clbp.hpp"
#include "crowdtex/dataset.hpp"
#include "crowdtex/svm.hpp"

namespace crowdtex {

// ---------------------------------------------------------------------------
// Confusion matrix / accuracy
// ---------------------------------------------------------------------------

struct ConfusionMatrix {
    std::vector<DensityLabel> classes; // all four labels, fixed order
    std::vector<long long> counts;     // k x k row-major, rows = truth

    long long total() const;
    /// Row percentages (rows sum to 100 when the row is nonempty).
    std::vector<double> row_percentages() const;
};

ConfusionMatrix confusion(const std::vector<DensityLabel>& predictions,
                          const std::vector<DensityLabel>& truth);

double accuracy(const ConfusionMatrix& cm);

std::string confusion_table(const ConfusionMatrix& cm);
std::string confusion_csv(const ConfusionMatrix& cm);

// ---------------------------------------------------------------------------
// Feature extraction pipeline
// ---------------------------------------------------------------------------

enum class DescriptorKind : std::uint8_t { clbp = 0, lbp = 1, glcm = 2 };

const char* descriptor_name(DescriptorKind kind);
std::optional<DescriptorKind> parse_descriptor(const std::string& token);

struct FeatureParams {
    DescriptorKind descriptor = DescriptorKind::clbp;
    CLBPParams clbp;
    int cell_size = 32;
    double overlap = 0.5;
    CellNorm norm = CellNorm::per_cell;
    int glcm_levels = 8;
};

struct LabeledFeatures {
    std::vector<std::vector<double>> features;
    std::vector<DensityLabel> labels;
};

/// Block features for every annotation in the manifest, frame by frame
/// (frames processed in parallel, outputs in manifest order).
LabeledFeatures extract_manifest_features(const Manifest& manifest, const FeatureParams& params,
                                          unsigned jobs = 1);

/// Features for arbitrary block rects of one frame.
std::vector<std::vector<double>> extract_block_features(const GrayImage& frame,
                                                        const std::vector<Rect>& blocks,
                                                        const FeatureParams& params);

/// Optional z-score scaling (fit on train, apply everywhere). Histogram
/// descriptors ship pre-normalized; this exists for the GLCM/Haralick arm.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> inv_std;

    static Standardizer fit(const std::vector<std::vector<double>>& features);
    void apply(std::vector<std::vector<double>>& features) const;
};

// ---------------------------------------------------------------------------
// Block-size sweep
// ---------------------------------------------------------------------------

struct SweepParams {
    std::vector<int> sizes{64, 96, 128};
    FeatureParams features;
    SvmTrainParams svm;
    bool grid_search = true;
    std::vector<double> c_grid{0.1, 1.0, 10.0, 100.0};
    std::vector<double> gamma_grid{0.01, 0.1, 1.0, 10.0};
    int k_folds = 5;
    double test_fraction = 0.3;
    std::uint64_t seed = 1;
};

struct SweepReport {
    std::string descriptor;
    std::vector<int> block_sizes;
    std::vector<double> accuracies; // NaN for failed sizes
    std::vector<double> seconds;
    std::vector<std::string> errors; // empty string when the size succeeded

    bool ok() const;
};

/// Re-partitions the manifest frames at each size, relabels blocks by
/// dominant annotated overlap, splits fresh, retrains, and records held-out
/// accuracy and wall time. Per-size failures land in the report, tagged.
SweepReport sweep_block_sizes(const Manifest& manifest, const SweepParams& params,
                              unsigned jobs = 1);

std::string sweep_csv(const SweepReport& report);
std::string sweep_table(const SweepReport& report);

/// Blocks of one frame re-partitioned at `block_size`, labeled by dominant
/// overlap with the frame's annotations (>= 50% coverage, ties toward the
/// lower label). Blocks without enough annotated coverage are skipped.
std::vector<std::pair<Rect, DensityLabel>> relabel_blocks(const FrameEntry& entry, int block_size);

// ---------------------------------------------------------------------------
// Overlay rendering
// ---------------------------------------------------------------------------

/// Copy of the frame with block boundaries and a 2-letter label code drawn
/// per block.
GrayImage overlay_labels(const GrayImage& image, const BlockGrid& grid,
                         const std::vector<DensityLabel>& labels);

} // namespace crowdtex
