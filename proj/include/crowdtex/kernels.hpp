#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

// Data-parallel inner loops used by the descriptor and the SVM. Each kernel
// has a scalar reference implementation and an AVX2 variant; the unqualified
// entry points dispatch at runtime (cpuid, overridable via CROWDTEX_SIMD=
// scalar|avx2|auto). The two lanes are equivalence-tested against each other.

namespace crowdtex::kernels {

// How one ring sample reads the image. Offsets within 1e-6 of an integer are
// snapped, so axis-aligned samples never touch the interpolation path (and
// never read the extra support row/column, which may not exist at the edge).
enum class SampleKind : std::uint8_t { exact, lerp_x, lerp_y, bilinear };

struct RingOffset {
    int ix, iy;      // integer base offset of the top-left support pixel
    double fx, fy;   // fractional parts in [0, 1)
    SampleKind kind;
};

/// Circular neighborhood geometry: sample n sits at angle 2*pi*n/points,
/// counter-clockwise from east, with image y pointing down.
std::vector<RingOffset> ring_offsets(double radius, int points);

/// Interior margin: a ring centered at (x, y) fits iff margin <= x < width - margin
/// (same for y). Equals ceil(radius).
int ring_margin(double radius);

bool cpu_has_avx2();
bool avx2_enabled();
const char* simd_level();

double sum(const double* x, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);

/// The p ring sample values for a single center (scalar path).
void ring_samples(const double* pixels, std::size_t stride, int cx, int cy,
                  const RingOffset* ring, int points, double* out);

/// Sum over `count` consecutive ring centers (cx0..cx0+count-1, row cy) of
/// sum_n |sample_n - center|. Callers guarantee the rings fit in the image.
double ring_abs_sum_row(const double* pixels, std::size_t stride,
                        int cx0, int cy, int count,
                        const RingOffset* ring, int points);

/// Sign and magnitude codes for `count` consecutive ring centers:
///   s_codes[i] = sum_n [sample_n >= center] << n
///   m_codes[i] = sum_n [|sample_n - center| >= mu] << n
void clbp_codes_row(const double* pixels, std::size_t stride,
                    int cx0, int cy, int count,
                    const RingOffset* ring, int points, double mu,
                    std::uint32_t* s_codes, std::uint32_t* m_codes);

namespace scalar {
double sum(const double* x, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
void ring_samples(const double* pixels, std::size_t stride, int cx, int cy,
                  const RingOffset* ring, int points, double* out);
double ring_abs_sum_row(const double* pixels, std::size_t stride,
                        int cx0, int cy, int count,
                        const RingOffset* ring, int points);
void clbp_codes_row(const double* pixels, std::size_t stride,
                    int cx0, int cy, int count,
                    const RingOffset* ring, int points, double mu,
                    std::uint32_t* s_codes, std::uint32_t* m_codes);
} // namespace scalar

// Defined only when the build enables AVX2 code generation; guard calls with
// avx2_enabled().
namespace avx2 {
double sum(const double* x, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
double ring_abs_sum_row(const double* pixels, std::size_t stride,
                        int cx0, int cy, int count,
                        const RingOffset* ring, int points);
void clbp_codes_row(const double* pixels, std::size_t stride,
                    int cx0, int cy, int count,
                    const RingOffset* ring, int points, double mu,
                    std::uint32_t* s_codes, std::uint32_t* m_codes);
} // namespace avx2

} // namespace crowdtex::kernels
