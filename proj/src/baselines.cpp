#include "crowdtex/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "crowdtex/errors.hpp"
#include "crowdtex/kernels.hpp"

namespace crowdtex {

void GLCMParams::validate() const {
    if (levels < 2) raise(Errc::invalid_config, "GLCM levels must be >= 2");
    if (dx == 0 && dy == 0) raise(Errc::invalid_config, "GLCM offset must be nonzero");
}

Histogram lbp_histogram(const GrayImage& image, const Rect& cell, const CLBPParams& params) {
    params.validate();
    const int m = kernels::ring_margin(params.radius);
    const int x0 = std::max(cell.x, m);
    const int y0 = std::max(cell.y, m);
    const int x1 = std::min(cell.x + cell.w, image.width - m);
    const int y1 = std::min(cell.y + cell.h, image.height - m);
    if (x0 >= x1 || y0 >= y1) {
        raise(Errc::empty_cell, "no valid ring center inside cell at (" + std::to_string(cell.x) +
                                    ", " + std::to_string(cell.y) + ")");
    }

    const std::size_t bin_count = params.mapping == Mapping::riu2
                                      ? static_cast<std::size_t>(params.points) + 2
                                      : std::size_t{1} << params.points;
    Histogram h;
    h.bins.assign(bin_count, 0.0);

    const auto ring = kernels::ring_offsets(params.radius, params.points);
    const int row_count = x1 - x0;
    std::vector<std::uint32_t> s_codes(static_cast<std::size_t>(row_count));
    std::vector<std::uint32_t> m_codes(static_cast<std::size_t>(row_count));
    long long total = 0;
    for (int y = y0; y < y1; ++y) {
        kernels::clbp_codes_row(image.pixels.data(), static_cast<std::size_t>(image.width), x0, y,
                                row_count, ring.data(), params.points, 0.0, s_codes.data(),
                                m_codes.data());
        for (int i = 0; i < row_count; ++i) {
            const std::uint32_t code = s_codes[static_cast<std::size_t>(i)];
            const std::size_t idx = params.mapping == Mapping::riu2
                                        ? static_cast<std::size_t>(riu2_map(code, params.points))
                                        : code;
            h.bins[idx] += 1.0;
            ++total;
        }
    }
    for (double& b : h.bins) b /= static_cast<double>(total);
    return h;
}

namespace {

inline int quantize_level(double gray, int levels) {
    const int q = static_cast<int>(gray * levels / 256.0);
    return std::clamp(q, 0, levels - 1);
}

} // namespace

std::vector<double> glcm(const GrayImage& image, const Rect& region, const GLCMParams& params) {
    params.validate();
    std::vector<double> matrix(static_cast<std::size_t>(params.levels) * params.levels, 0.0);
    long long pairs = 0;
    const int x0 = region.x, y0 = region.y;
    const int x1 = region.x + region.w, y1 = region.y + region.h;
    for (int y = y0; y < y1; ++y) {
        const int ny = y + params.dy;
        if (ny < y0 || ny >= y1) continue;
        for (int x = x0; x < x1; ++x) {
            const int nx = x + params.dx;
            if (nx < x0 || nx >= x1) continue;
            const int a = quantize_level(image.at(x, y), params.levels);
            const int b = quantize_level(image.at(nx, ny), params.levels);
            matrix[static_cast<std::size_t>(a) * params.levels + b] += 1.0;
            if (params.symmetric) matrix[static_cast<std::size_t>(b) * params.levels + a] += 1.0;
            ++pairs;
        }
    }
    if (pairs == 0) {
        raise(Errc::region_too_small, "region " + std::to_string(region.w) + "x" +
                                          std::to_string(region.h) + " has no pixel pair at offset (" +
                                          std::to_string(params.dx) + ", " + std::to_string(params.dy) +
                                          ")");
    }
    const double total = kernels::sum(matrix.data(), matrix.size());
    for (double& v : matrix) v /= total;
    return matrix;
}

std::array<double, 5> haralick_features(const std::vector<double>& matrix, int levels) {
    double contrast = 0.0, energy = 0.0, entropy = 0.0, homogeneity = 0.0;
    double mean_i = 0.0, mean_j = 0.0;
    for (int i = 0; i < levels; ++i) {
        for (int j = 0; j < levels; ++j) {
            const double p = matrix[static_cast<std::size_t>(i) * levels + j];
            const double diff = i - j;
            contrast += diff * diff * p;
            energy += p * p;
            if (p > 0.0) entropy -= p * std::log(p);
            homogeneity += p / (1.0 + diff * diff);
            mean_i += i * p;
            mean_j += j * p;
        }
    }
    double var_i = 0.0, var_j = 0.0, cov = 0.0;
    for (int i = 0; i < levels; ++i) {
        for (int j = 0; j < levels; ++j) {
            const double p = matrix[static_cast<std::size_t>(i) * levels + j];
            var_i += (i - mean_i) * (i - mean_i) * p;
            var_j += (j - mean_j) * (j - mean_j) * p;
            cov += (i - mean_i) * (j - mean_j) * p;
        }
    }
    const double denom = std::sqrt(var_i * var_j);
    const double correlation = denom > 0.0 ? cov / denom : 0.0;
    return {contrast, energy, entropy, homogeneity, correlation};
}

std::array<double, 5> glcm_cell_features(const GrayImage& image, const Rect& cell, int levels) {
    static constexpr std::array<std::pair<int, int>, 4> kOffsets{{{1, 0}, {0, 1}, {1, 1}, {1, -1}}};
    std::vector<double> averaged(static_cast<std::size_t>(levels) * levels, 0.0);
    for (const auto& [dx, dy] : kOffsets) {
        GLCMParams p;
        p.dx = dx;
        p.dy = dy;
        p.levels = levels;
        p.symmetric = true;
        const auto m = glcm(image, cell, p);
        for (std::size_t i = 0; i < m.size(); ++i) averaged[i] += m[i] * 0.25;
    }
    return haralick_features(averaged, levels);
}

} // namespace crowdtex
