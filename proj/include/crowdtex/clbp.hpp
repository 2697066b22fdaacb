#pragma once

#include <cstdint>
#include <vector>

#include "crowdtex/image.hpp"

namespace crowdtex {

enum class Mapping : std::uint8_t { full = 0, riu2 = 1 };
enum class Scheme : std::uint8_t { s_concat_m_concat_c = 0, smc_joint = 1 };
enum class CellNorm : std::uint8_t { per_cell = 0, whole_vector = 1 };

struct CLBPParams {
    double radius = 1.0;
    int points = 8;
    Mapping mapping = Mapping::riu2;
    Scheme scheme = Scheme::smc_joint;

    bool operator==(const CLBPParams&) const = default;
    void validate() const;
};

/// One circular neighborhood: center gray level plus p ring samples,
/// counter-clockwise starting east.
struct NeighborSamples {
    double center = 0.0;
    std::vector<double> ring;
};

struct Histogram {
    std::vector<double> bins;
};

struct FeatureVector {
    std::vector<double> values;
    // provenance
    Rect block;
    CLBPParams params;
    int cell_size = 0;
    double overlap = 0.0;
};

/// Threshold convention: s(x) = 1 for x >= 0 (ties count as 1).
inline int sign_bit(double x) { return x >= 0.0 ? 1 : 0; }

NeighborSamples sample_neighbors(const GrayImage& image, int cx, int cy, const CLBPParams& params);

/// mu_{r,p}: mean |neighbor - center| over every interior center and every
/// ring position. Computed once per frame together with the image mean.
double global_magnitude_mean(const GrayImage& image, const CLBPParams& params);

std::uint32_t clbp_s_code(const NeighborSamples& samples);
std::uint32_t clbp_m_code(const NeighborSamples& samples, double mu);
inline int clbp_c_bit(double center, double global_mean) { return sign_bit(center - global_mean); }

/// Rotation-invariant uniform mapping: patterns with <= 2 circular bit
/// transitions map to their popcount (0..p), the rest share bucket p+1.
int riu2_map(std::uint32_t code, int points);

std::size_t histogram_bin_count(const CLBPParams& params);

Histogram cell_histogram(const GrayImage& image, const Rect& cell, double mu, double image_mean,
                         const CLBPParams& params);

FeatureVector block_feature(const GrayImage& image, const Rect& block, double mu, double image_mean,
                            const CLBPParams& params, int cell_size, double overlap,
                            CellNorm norm = CellNorm::per_cell);

/// Per-frame code planes: S/M/C for every pixel whose ring fits. The batch
/// extraction path computes these once per frame and bins cells out of them;
/// results are identical to the per-cell recomputation path.
struct CodePlanes {
    int width = 0;
    int height = 0;
    int margin = 0;
    double mu = 0.0;
    double mean = 0.0;
    std::vector<std::uint32_t> s;
    std::vector<std::uint32_t> m;
    std::vector<std::uint8_t> c;
};

CodePlanes compute_code_planes(const GrayImage& image, const CLBPParams& params);

FeatureVector block_feature_from_planes(const CodePlanes& planes, const Rect& block,
                                        const CLBPParams& params, int cell_size, double overlap,
                                        CellNorm norm = CellNorm::per_cell);

} // namespace crowdtex
