#pragma once

// Independent naive reference implementations used only by tests. These are
// deliberately written as direct double loops over the definitions, separate
// from the library's kernel/dispatch code paths.

#include <cstdint>
#include <vector>

#include "crowdtex/clbp.hpp"
#include "crowdtex/image.hpp"

namespace oracle {

double bilinear_at(const crowdtex::GrayImage& img, double x, double y);

int margin(double radius);

/// Ring sample n of p at (cx, cy): angle 2*pi*n/p, counter-clockwise from
/// east, y down. Coordinates within 1e-6 of an integer snap.
double ring_sample(const crowdtex::GrayImage& img, int cx, int cy, double radius, int points,
                   int n);

double image_mean(const crowdtex::GrayImage& img);
double magnitude_mean(const crowdtex::GrayImage& img, double radius, int points);

std::uint32_t s_code(const crowdtex::GrayImage& img, int cx, int cy, double radius, int points);
std::uint32_t m_code(const crowdtex::GrayImage& img, int cx, int cy, double radius, int points,
                     double mu);
int c_bit(const crowdtex::GrayImage& img, int cx, int cy, double mean);

int riu2(std::uint32_t code, int points);

/// Normalized cell histogram recomputed per pixel with the naive sampler.
std::vector<double> cell_histogram(const crowdtex::GrayImage& img, const crowdtex::Rect& cell,
                                   double mu, double mean, const crowdtex::CLBPParams& params);

/// Normalized S-only (classic LBP) cell histogram.
std::vector<double> lbp_histogram(const crowdtex::GrayImage& img, const crowdtex::Rect& cell,
                                  const crowdtex::CLBPParams& params);

// ---------------------------------------------------------------------------
// Brute-force dual SVM: grid search over the dual variables at step 0.01*C
// under the equality constraint, for problems with <= 4 samples.
// ---------------------------------------------------------------------------

struct DualSolution {
    std::vector<double> alpha;
    double bias = 0.0;
    double objective = 0.0;
};

double kernel(const std::vector<double>& a, const std::vector<double>& b, bool rbf, double gamma);

DualSolution brute_force_dual(const std::vector<std::vector<double>>& samples,
                              const std::vector<int>& labels, double c, bool rbf, double gamma);

double decision(const DualSolution& sol, const std::vector<std::vector<double>>& samples,
                const std::vector<int>& labels, const std::vector<double>& x, bool rbf,
                double gamma);

} // namespace oracle
