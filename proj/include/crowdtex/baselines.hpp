#pragma once

#include <array>
#include <vector>

#include "crowdtex/clbp.hpp"
#include "crowdtex/image.hpp"

namespace crowdtex {

struct GLCMParams {
    int dx = 1;
    int dy = 0;
    int levels = 8;
    bool symmetric = true;

    void validate() const;
};

/// Original LBP: histogram of CLBP_S codes only, mapping per params.
Histogram lbp_histogram(const GrayImage& image, const Rect& cell, const CLBPParams& params);

/// Normalized co-occurrence matrix (levels x levels, row-major) of quantized
/// gray pairs at the given offset.
std::vector<double> glcm(const GrayImage& image, const Rect& region, const GLCMParams& params);

/// [contrast, energy, entropy, homogeneity, correlation] over a normalized
/// GLCM. Entropy uses natural log with 0*log 0 = 0; correlation is 0 when a
/// marginal variance vanishes.
std::array<double, 5> haralick_features(const std::vector<double>& matrix, int levels);

/// Conventional Haralick cell descriptor: GLCMs at offsets
/// {(1,0),(0,1),(1,1),(1,-1)} averaged, then the 5 statistics.
std::array<double, 5> glcm_cell_features(const GrayImage& image, const Rect& cell, int levels = 8);

} // namespace crowdtex
