#include "crowdtex/clbp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "crowdtex/errors.hpp"
#include "crowdtex/kernels.hpp"

namespace crowdtex {

void CLBPParams::validate() const {
    if (radius < 1.0 || !std::isfinite(radius)) raise(Errc::invalid_config, "radius must be >= 1");
    if (points < 4 || points > 24) raise(Errc::invalid_config, "points must be in [4, 24]");
    if (mapping == Mapping::full && scheme == Scheme::smc_joint && points > 8) {
        raise(Errc::invalid_config,
              "full mapping with the joint scheme needs points <= 8 (bin count is 2^(2p+1))");
    }
}

NeighborSamples sample_neighbors(const GrayImage& image, int cx, int cy, const CLBPParams& params) {
    params.validate();
    const int m = kernels::ring_margin(params.radius);
    if (cx < m || cy < m || cx >= image.width - m || cy >= image.height - m) {
        raise(Errc::out_of_bounds, "ring at (" + std::to_string(cx) + ", " + std::to_string(cy) +
                                       ") exits the image");
    }
    const auto ring = kernels::ring_offsets(params.radius, params.points);
    NeighborSamples out;
    out.center = image.at(cx, cy);
    out.ring.resize(static_cast<std::size_t>(params.points));
    kernels::ring_samples(image.pixels.data(), static_cast<std::size_t>(image.width), cx, cy,
                          ring.data(), params.points, out.ring.data());
    return out;
}

double global_magnitude_mean(const GrayImage& image, const CLBPParams& params) {
    params.validate();
    const int m = kernels::ring_margin(params.radius);
    const int iw = image.width - 2 * m;
    const int ih = image.height - 2 * m;
    if (iw < 1 || ih < 1) {
        raise(Errc::image_too_small, "no ring center fits a " + std::to_string(image.width) + "x" +
                                         std::to_string(image.height) + " image at radius " +
                                         std::to_string(params.radius));
    }
    const auto ring = kernels::ring_offsets(params.radius, params.points);
    double acc = 0.0;
    for (int y = m; y < image.height - m; ++y) {
        acc += kernels::ring_abs_sum_row(image.pixels.data(), static_cast<std::size_t>(image.width),
                                         m, y, iw, ring.data(), params.points);
    }
    return acc / (static_cast<double>(iw) * ih * params.points);
}

std::uint32_t clbp_s_code(const NeighborSamples& samples) {
    std::uint32_t code = 0;
    for (std::size_t n = 0; n < samples.ring.size(); ++n) {
        if (samples.ring[n] - samples.center >= 0.0) code |= 1u << n;
    }
    return code;
}

std::uint32_t clbp_m_code(const NeighborSamples& samples, double mu) {
    std::uint32_t code = 0;
    for (std::size_t n = 0; n < samples.ring.size(); ++n) {
        if (std::abs(samples.ring[n] - samples.center) >= mu) code |= 1u << n;
    }
    return code;
}

int riu2_map(std::uint32_t code, int points) {
    const std::uint32_t mask = points == 32 ? ~0u : (1u << points) - 1u;
    const std::uint32_t rotated = ((code << 1) | (code >> (points - 1))) & mask;
    const int transitions = std::popcount(code ^ rotated);
    return transitions <= 2 ? std::popcount(code) : points + 1;
}

namespace {

struct BinLayout {
    std::size_t s_size;
    std::size_t m_size;
    std::size_t total;
};

BinLayout bin_layout(const CLBPParams& params) {
    const std::size_t s_size = params.mapping == Mapping::riu2
                                   ? static_cast<std::size_t>(params.points) + 2
                                   : std::size_t{1} << params.points;
    const std::size_t m_size = s_size;
    const std::size_t total = params.scheme == Scheme::smc_joint ? s_size * m_size * 2
                                                                 : s_size + m_size + 2;
    return {s_size, m_size, total};
}

// Shared by the per-cell and frame-plane paths so both bin identically.
struct CellAccumulator {
    const CLBPParams& params;
    BinLayout layout;
    std::vector<double>& bins;
    long long count = 0;

    CellAccumulator(const CLBPParams& p, std::vector<double>& out)
        : params(p), layout(bin_layout(p)), bins(out) {
        bins.assign(layout.total, 0.0);
    }

    void add(std::uint32_t s_code, std::uint32_t m_code, int c_bit) {
        const std::size_t s_idx = params.mapping == Mapping::riu2
                                      ? static_cast<std::size_t>(riu2_map(s_code, params.points))
                                      : s_code;
        const std::size_t m_idx = params.mapping == Mapping::riu2
                                      ? static_cast<std::size_t>(riu2_map(m_code, params.points))
                                      : m_code;
        if (params.scheme == Scheme::smc_joint) {
            bins[(s_idx * layout.m_size + m_idx) * 2 + static_cast<std::size_t>(c_bit)] += 1.0;
        } else {
            bins[s_idx] += 1.0;
            bins[layout.s_size + m_idx] += 1.0;
            bins[layout.s_size + layout.m_size + static_cast<std::size_t>(c_bit)] += 1.0;
        }
        ++count;
    }
};

void normalize_l1(std::vector<double>& bins) {
    const double total = kernels::sum(bins.data(), bins.size());
    for (double& b : bins) b /= total;
}

// Raw (unnormalized) cell counts; valid centers are the cell pixels whose
// ring fits in the image, edge centers are skipped.
long long accumulate_cell(const GrayImage& image, const Rect& cell, double mu, double mean,
                          const CLBPParams& params, std::vector<double>& bins) {
    const int m = kernels::ring_margin(params.radius);
    const int x0 = std::max(cell.x, m);
    const int y0 = std::max(cell.y, m);
    const int x1 = std::min(cell.x + cell.w, image.width - m);
    const int y1 = std::min(cell.y + cell.h, image.height - m);
    CellAccumulator acc(params, bins);
    if (x0 >= x1 || y0 >= y1) return 0;

    const auto ring = kernels::ring_offsets(params.radius, params.points);
    const int row_count = x1 - x0;
    std::vector<std::uint32_t> s_codes(static_cast<std::size_t>(row_count));
    std::vector<std::uint32_t> m_codes(static_cast<std::size_t>(row_count));
    for (int y = y0; y < y1; ++y) {
        kernels::clbp_codes_row(image.pixels.data(), static_cast<std::size_t>(image.width), x0, y,
                                row_count, ring.data(), params.points, mu, s_codes.data(),
                                m_codes.data());
        const double* px = image.row(y) + x0;
        for (int i = 0; i < row_count; ++i) {
            acc.add(s_codes[static_cast<std::size_t>(i)], m_codes[static_cast<std::size_t>(i)],
                    clbp_c_bit(px[i], mean));
        }
    }
    return acc.count;
}

long long accumulate_cell_planes(const CodePlanes& planes, const Rect& cell,
                                 const CLBPParams& params, std::vector<double>& bins) {
    const int m = planes.margin;
    const int x0 = std::max(cell.x, m);
    const int y0 = std::max(cell.y, m);
    const int x1 = std::min(cell.x + cell.w, planes.width - m);
    const int y1 = std::min(cell.y + cell.h, planes.height - m);
    CellAccumulator acc(params, bins);
    if (x0 >= x1 || y0 >= y1) return 0;
    for (int y = y0; y < y1; ++y) {
        const std::size_t row = static_cast<std::size_t>(y) * planes.width;
        for (int x = x0; x < x1; ++x) {
            acc.add(planes.s[row + x], planes.m[row + x], planes.c[row + x]);
        }
    }
    return acc.count;
}

} // namespace

std::size_t histogram_bin_count(const CLBPParams& params) {
    params.validate();
    return bin_layout(params).total;
}

Histogram cell_histogram(const GrayImage& image, const Rect& cell, double mu, double image_mean,
                         const CLBPParams& params) {
    params.validate();
    Histogram h;
    const long long count = accumulate_cell(image, cell, mu, image_mean, params, h.bins);
    if (count == 0) {
        raise(Errc::empty_cell, "no valid ring center inside cell at (" + std::to_string(cell.x) +
                                    ", " + std::to_string(cell.y) + ")");
    }
    normalize_l1(h.bins);
    return h;
}

namespace {

template <typename AccumulateCell>
FeatureVector assemble_block_feature(const Rect& block, const CLBPParams& params, int cell_size,
                                     double overlap, CellNorm norm, AccumulateCell&& accumulate) {
    const auto cells = cells_of_block(block, cell_size, overlap);
    const std::size_t bin_count = bin_layout(params).total;
    FeatureVector fv;
    fv.block = block;
    fv.params = params;
    fv.cell_size = cell_size;
    fv.overlap = overlap;
    fv.values.reserve(cells.size() * bin_count);

    std::vector<double> bins;
    for (const Rect& cell : cells) {
        const long long count = accumulate(cell, bins);
        if (count == 0) {
            raise(Errc::empty_cell, "no valid ring center inside cell at (" +
                                        std::to_string(cell.x) + ", " + std::to_string(cell.y) + ")");
        }
        if (norm == CellNorm::per_cell) normalize_l1(bins);
        fv.values.insert(fv.values.end(), bins.begin(), bins.end());
    }
    if (norm == CellNorm::whole_vector) normalize_l1(fv.values);
    return fv;
}

} // namespace

FeatureVector block_feature(const GrayImage& image, const Rect& block, double mu, double image_mean,
                            const CLBPParams& params, int cell_size, double overlap, CellNorm norm) {
    params.validate();
    return assemble_block_feature(block, params, cell_size, overlap, norm,
                                  [&](const Rect& cell, std::vector<double>& bins) {
                                      return accumulate_cell(image, cell, mu, image_mean, params, bins);
                                  });
}

CodePlanes compute_code_planes(const GrayImage& image, const CLBPParams& params) {
    params.validate();
    CodePlanes planes;
    planes.width = image.width;
    planes.height = image.height;
    planes.margin = kernels::ring_margin(params.radius);
    planes.mean = image_mean(image);
    planes.mu = global_magnitude_mean(image, params);

    const std::size_t n = image.pixels.size();
    planes.s.assign(n, 0);
    planes.m.assign(n, 0);
    planes.c.assign(n, 0);

    const auto ring = kernels::ring_offsets(params.radius, params.points);
    const int m = planes.margin;
    const int iw = image.width - 2 * m;
    for (int y = m; y < image.height - m; ++y) {
        const std::size_t row = static_cast<std::size_t>(y) * image.width;
        kernels::clbp_codes_row(image.pixels.data(), static_cast<std::size_t>(image.width), m, y, iw,
                                ring.data(), params.points, planes.mu, planes.s.data() + row + m,
                                planes.m.data() + row + m);
        const double* px = image.row(y);
        for (int x = m; x < image.width - m; ++x) {
            planes.c[row + x] = static_cast<std::uint8_t>(clbp_c_bit(px[x], planes.mean));
        }
    }
    return planes;
}

FeatureVector block_feature_from_planes(const CodePlanes& planes, const Rect& block,
                                        const CLBPParams& params, int cell_size, double overlap,
                                        CellNorm norm) {
    params.validate();
    return assemble_block_feature(block, params, cell_size, overlap, norm,
                                  [&](const Rect& cell, std::vector<double>& bins) {
                                      return accumulate_cell_planes(planes, cell, params, bins);
                                  });
}

} // namespace crowdtex
