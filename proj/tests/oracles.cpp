#include "oracles.hpp"

#include <cmath>
#include <numbers>

namespace oracle {

using crowdtex::CLBPParams;
using crowdtex::GrayImage;
using crowdtex::Mapping;
using crowdtex::Rect;
using crowdtex::Scheme;

double bilinear_at(const GrayImage& img, double x, double y) {
    const double rx = std::round(x), ry = std::round(y);
    if (std::abs(x - rx) <= 1e-6) x = rx;
    if (std::abs(y - ry) <= 1e-6) y = ry;
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0, fy = y - y0;
    const double v00 = img.at(x0, y0);
    if (fx == 0.0 && fy == 0.0) return v00;
    if (fy == 0.0) {
        const double v10 = img.at(x0 + 1, y0);
        return v00 + fx * (v10 - v00);
    }
    if (fx == 0.0) {
        const double v01 = img.at(x0, y0 + 1);
        return v00 + fy * (v01 - v00);
    }
    const double v10 = img.at(x0 + 1, y0);
    const double v01 = img.at(x0, y0 + 1);
    const double v11 = img.at(x0 + 1, y0 + 1);
    const double top = v00 + fx * (v10 - v00);
    const double bot = v01 + fx * (v11 - v01);
    return top + fy * (bot - top);
}

int margin(double radius) { return static_cast<int>(std::ceil(radius - 1e-6)); }

double ring_sample(const GrayImage& img, int cx, int cy, double radius, int points, int n) {
    const double angle = 2.0 * std::numbers::pi * n / points;
    return bilinear_at(img, cx + radius * std::cos(angle), cy - radius * std::sin(angle));
}

double image_mean(const GrayImage& img) {
    double sum = 0.0;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) sum += img.at(x, y);
    }
    return sum / (static_cast<double>(img.width) * img.height);
}

double magnitude_mean(const GrayImage& img, double radius, int points) {
    const int m = margin(radius);
    double sum = 0.0;
    long long centers = 0;
    for (int y = m; y < img.height - m; ++y) {
        for (int x = m; x < img.width - m; ++x) {
            for (int n = 0; n < points; ++n) {
                sum += std::abs(ring_sample(img, x, y, radius, points, n) - img.at(x, y));
            }
            ++centers;
        }
    }
    return sum / (static_cast<double>(centers) * points);
}

std::uint32_t s_code(const GrayImage& img, int cx, int cy, double radius, int points) {
    std::uint32_t code = 0;
    for (int n = 0; n < points; ++n) {
        if (ring_sample(img, cx, cy, radius, points, n) - img.at(cx, cy) >= 0.0) code |= 1u << n;
    }
    return code;
}

std::uint32_t m_code(const GrayImage& img, int cx, int cy, double radius, int points, double mu) {
    std::uint32_t code = 0;
    for (int n = 0; n < points; ++n) {
        if (std::abs(ring_sample(img, cx, cy, radius, points, n) - img.at(cx, cy)) - mu >= 0.0) {
            code |= 1u << n;
        }
    }
    return code;
}

int c_bit(const GrayImage& img, int cx, int cy, double mean) {
    return img.at(cx, cy) - mean >= 0.0 ? 1 : 0;
}

int riu2(std::uint32_t code, int points) {
    // count circular transitions by walking the bits
    int transitions = 0;
    int ones = 0;
    for (int i = 0; i < points; ++i) {
        const int cur = (code >> i) & 1;
        const int next = (code >> ((i + 1) % points)) & 1;
        ones += cur;
        if (cur != next) ++transitions;
    }
    return transitions <= 2 ? ones : points + 1;
}

std::vector<double> cell_histogram(const GrayImage& img, const Rect& cell, double mu, double mean,
                                   const CLBPParams& params) {
    const int m = margin(params.radius);
    const std::size_t s_size = params.mapping == Mapping::riu2
                                   ? static_cast<std::size_t>(params.points) + 2
                                   : std::size_t{1} << params.points;
    const std::size_t total = params.scheme == Scheme::smc_joint ? s_size * s_size * 2
                                                                 : s_size + s_size + 2;
    std::vector<double> bins(total, 0.0);
    double samples = 0.0;
    for (int y = cell.y; y < cell.y + cell.h; ++y) {
        for (int x = cell.x; x < cell.x + cell.w; ++x) {
            if (x < m || y < m || x >= img.width - m || y >= img.height - m) continue;
            const std::uint32_t s = s_code(img, x, y, params.radius, params.points);
            const std::uint32_t mm = m_code(img, x, y, params.radius, params.points, mu);
            const int c = c_bit(img, x, y, mean);
            const std::size_t si =
                params.mapping == Mapping::riu2 ? static_cast<std::size_t>(riu2(s, params.points)) : s;
            const std::size_t mi =
                params.mapping == Mapping::riu2 ? static_cast<std::size_t>(riu2(mm, params.points))
                                                : mm;
            if (params.scheme == Scheme::smc_joint) {
                bins[(si * s_size + mi) * 2 + static_cast<std::size_t>(c)] += 1.0;
            } else {
                bins[si] += 1.0;
                bins[s_size + mi] += 1.0;
                bins[s_size + s_size + static_cast<std::size_t>(c)] += 1.0;
            }
            samples += 1.0;
        }
    }
    double total_mass = 0.0;
    for (double b : bins) total_mass += b;
    for (double& b : bins) b /= total_mass;
    return bins;
}

std::vector<double> lbp_histogram(const GrayImage& img, const Rect& cell,
                                  const CLBPParams& params) {
    const int m = margin(params.radius);
    const std::size_t s_size = params.mapping == Mapping::riu2
                                   ? static_cast<std::size_t>(params.points) + 2
                                   : std::size_t{1} << params.points;
    std::vector<double> bins(s_size, 0.0);
    double samples = 0.0;
    for (int y = cell.y; y < cell.y + cell.h; ++y) {
        for (int x = cell.x; x < cell.x + cell.w; ++x) {
            if (x < m || y < m || x >= img.width - m || y >= img.height - m) continue;
            const std::uint32_t s = s_code(img, x, y, params.radius, params.points);
            const std::size_t si =
                params.mapping == Mapping::riu2 ? static_cast<std::size_t>(riu2(s, params.points)) : s;
            bins[si] += 1.0;
            samples += 1.0;
        }
    }
    for (double& b : bins) b /= samples;
    return bins;
}

// ---------------------------------------------------------------------------
// Brute-force dual SVM
// ---------------------------------------------------------------------------

double kernel(const std::vector<double>& a, const std::vector<double>& b, bool rbf, double gamma) {
    if (!rbf) {
        double dot = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
        return dot;
    }
    double d2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        d2 += d * d;
    }
    return std::exp(-gamma * d2);
}

namespace {

double dual_objective(const std::vector<std::vector<double>>& k, const std::vector<int>& y,
                      const std::vector<double>& alpha) {
    double obj = 0.0;
    const std::size_t n = alpha.size();
    for (std::size_t i = 0; i < n; ++i) {
        obj += alpha[i];
        for (std::size_t j = 0; j < n; ++j) {
            obj -= 0.5 * alpha[i] * alpha[j] * y[i] * y[j] * k[i][j];
        }
    }
    return obj;
}

} // namespace

DualSolution brute_force_dual(const std::vector<std::vector<double>>& samples,
                              const std::vector<int>& labels, double c, bool rbf, double gamma) {
    const std::size_t n = samples.size();
    std::vector<std::vector<double>> k(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) k[i][j] = kernel(samples[i], samples[j], rbf, gamma);
    }

    const int steps = 100; // alpha step 0.01 * C
    DualSolution best;
    best.alpha.assign(n, 0.0);
    best.objective = -1e300;

    // Enumerate the first n-1 alphas on the grid and solve the last one from
    // the equality constraint (continuous, must land in [0, C]).
    std::vector<double> alpha(n, 0.0);
    std::vector<int> idx(n - 1, 0);
    for (;;) {
        for (std::size_t i = 0; i + 1 < n; ++i) alpha[i] = c * idx[i] / steps;
        double sum = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) sum += alpha[i] * labels[i];
        const double last = -sum * labels[n - 1];
        if (last >= -1e-12 && last <= c + 1e-12) {
            alpha[n - 1] = std::min(std::max(last, 0.0), c);
            const double obj = dual_objective(k, labels, alpha);
            if (obj > best.objective) {
                best.objective = obj;
                best.alpha = alpha;
            }
        }
        // odometer increment
        std::size_t pos = 0;
        for (; pos + 1 < n; ++pos) {
            if (++idx[pos] <= steps) break;
            idx[pos] = 0;
        }
        if (pos + 1 >= n) break;
    }

    // Bias from non-bound alphas, else the midpoint rule.
    const double eps = c * 1e-6;
    double b_sum = 0.0;
    int b_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (best.alpha[i] > eps && best.alpha[i] < c - eps) {
            double f0 = 0.0;
            for (std::size_t j = 0; j < n; ++j) f0 += best.alpha[j] * labels[j] * k[i][j];
            b_sum += labels[i] - f0;
            ++b_count;
        }
    }
    if (b_count > 0) {
        best.bias = b_sum / b_count;
    } else {
        double lo = -1e300, hi = 1e300; // max over y=-1 of f0, min over y=+1 of f0
        for (std::size_t i = 0; i < n; ++i) {
            double f0 = 0.0;
            for (std::size_t j = 0; j < n; ++j) f0 += best.alpha[j] * labels[j] * k[i][j];
            if (labels[i] == 1) hi = std::min(hi, f0);
            else lo = std::max(lo, f0);
        }
        best.bias = -(lo + hi) / 2.0;
    }
    return best;
}

double decision(const DualSolution& sol, const std::vector<std::vector<double>>& samples,
                const std::vector<int>& labels, const std::vector<double>& x, bool rbf,
                double gamma) {
    double f = sol.bias;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        f += sol.alpha[i] * labels[i] * kernel(samples[i], x, rbf, gamma);
    }
    return f;
}

} // namespace oracle
