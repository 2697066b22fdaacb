#include "crowdtex/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <numbers>

#if defined(__GNUC__) || defined(__clang__)
#include <cpuid.h>
#endif

namespace crowdtex::kernels {

// ============================================================================
// Ring geometry
// ============================================================================

namespace {
constexpr double kSnapTolerance = 1e-6;

double snap(double v) {
    const double r = std::round(v);
    return std::abs(v - r) <= kSnapTolerance ? r : v;
}
} // namespace

std::vector<RingOffset> ring_offsets(double radius, int points) {
    std::vector<RingOffset> ring(static_cast<std::size_t>(points));
    for (int n = 0; n < points; ++n) {
        const double angle = 2.0 * std::numbers::pi * n / points;
        const double dx = snap(radius * std::cos(angle));
        const double dy = snap(-radius * std::sin(angle));
        RingOffset& o = ring[static_cast<std::size_t>(n)];
        o.ix = static_cast<int>(std::floor(dx));
        o.iy = static_cast<int>(std::floor(dy));
        o.fx = dx - o.ix;
        o.fy = dy - o.iy;
        const bool x_exact = o.fx == 0.0;
        const bool y_exact = o.fy == 0.0;
        o.kind = x_exact && y_exact ? SampleKind::exact
               : y_exact            ? SampleKind::lerp_x
               : x_exact            ? SampleKind::lerp_y
                                    : SampleKind::bilinear;
    }
    return ring;
}

int ring_margin(double radius) {
    return static_cast<int>(std::ceil(radius - kSnapTolerance));
}

// ============================================================================
// Runtime dispatch
// ============================================================================

bool cpu_has_avx2() {
#if defined(__GNUC__) || defined(__clang__)
    unsigned eax = 0, ebx = 0, ecx = 0, edx = 0;
    if (__get_cpuid_count(7, 0, &eax, &ebx, &ecx, &edx) == 0) return false;
    return (ebx & (1u << 5)) != 0;
#else
    return false;
#endif
}

bool avx2_enabled() {
    static const bool enabled = [] {
#ifndef CROWDTEX_COMPILE_AVX2
        return false;
#else
        const char* env = std::getenv("CROWDTEX_SIMD");
        if (env != nullptr && std::strcmp(env, "scalar") == 0) return false;
        return cpu_has_avx2();
#endif
    }();
    return enabled;
}

const char* simd_level() {
    return avx2_enabled() ? "avx2" : "scalar";
}

// ============================================================================
// Scalar reference kernels
// ============================================================================

namespace scalar {

double sum(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double squared_distance(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

namespace {

// Lerp form keeps constant regions exact: equal support values make every
// interpolated sample equal that value bit-for-bit, so threshold ties behave
// identically in all lanes and in the naive oracle.
inline double sample_one(const double* pixels, std::size_t stride,
                         int cx, int cy, const RingOffset& o) {
    const double* base = pixels + static_cast<std::size_t>(cy + o.iy) * stride + (cx + o.ix);
    switch (o.kind) {
        case SampleKind::exact:
            return base[0];
        case SampleKind::lerp_x:
            return base[0] + o.fx * (base[1] - base[0]);
        case SampleKind::lerp_y:
            return base[0] + o.fy * (base[stride] - base[0]);
        case SampleKind::bilinear: {
            const double top = base[0] + o.fx * (base[1] - base[0]);
            const double bot = base[stride] + o.fx * (base[stride + 1] - base[stride]);
            return top + o.fy * (bot - top);
        }
    }
    return base[0];
}

} // namespace

void ring_samples(const double* pixels, std::size_t stride, int cx, int cy,
                  const RingOffset* ring, int points, double* out) {
    for (int n = 0; n < points; ++n) out[n] = sample_one(pixels, stride, cx, cy, ring[n]);
}

double ring_abs_sum_row(const double* pixels, std::size_t stride,
                        int cx0, int cy, int count,
                        const RingOffset* ring, int points) {
    double acc = 0.0;
    for (int i = 0; i < count; ++i) {
        const int cx = cx0 + i;
        const double center = pixels[static_cast<std::size_t>(cy) * stride + cx];
        for (int n = 0; n < points; ++n) {
            acc += std::abs(sample_one(pixels, stride, cx, cy, ring[n]) - center);
        }
    }
    return acc;
}

void clbp_codes_row(const double* pixels, std::size_t stride,
                    int cx0, int cy, int count,
                    const RingOffset* ring, int points, double mu,
                    std::uint32_t* s_codes, std::uint32_t* m_codes) {
    for (int i = 0; i < count; ++i) {
        const int cx = cx0 + i;
        const double center = pixels[static_cast<std::size_t>(cy) * stride + cx];
        std::uint32_t s = 0, m = 0;
        for (int n = 0; n < points; ++n) {
            const double d = sample_one(pixels, stride, cx, cy, ring[n]) - center;
            if (d >= 0.0) s |= 1u << n;
            if (std::abs(d) >= mu) m |= 1u << n;
        }
        s_codes[i] = s;
        m_codes[i] = m;
    }
}

} // namespace scalar

// ============================================================================
// Dispatched entry points
// ============================================================================

void ring_samples(const double* pixels, std::size_t stride, int cx, int cy,
                  const RingOffset* ring, int points, double* out) {
    scalar::ring_samples(pixels, stride, cx, cy, ring, points, out);
}

double sum(const double* x, std::size_t n) {
#ifdef CROWDTEX_COMPILE_AVX2
    if (avx2_enabled()) return avx2::sum(x, n);
#endif
    return scalar::sum(x, n);
}

double dot(const double* a, const double* b, std::size_t n) {
#ifdef CROWDTEX_COMPILE_AVX2
    if (avx2_enabled()) return avx2::dot(a, b, n);
#endif
    return scalar::dot(a, b, n);
}

double squared_distance(const double* a, const double* b, std::size_t n) {
#ifdef CROWDTEX_COMPILE_AVX2
    if (avx2_enabled()) return avx2::squared_distance(a, b, n);
#endif
    return scalar::squared_distance(a, b, n);
}

double ring_abs_sum_row(const double* pixels, std::size_t stride,
                        int cx0, int cy, int count,
                        const RingOffset* ring, int points) {
#ifdef CROWDTEX_COMPILE_AVX2
    if (avx2_enabled()) return avx2::ring_abs_sum_row(pixels, stride, cx0, cy, count, ring, points);
#endif
    return scalar::ring_abs_sum_row(pixels, stride, cx0, cy, count, ring, points);
}

void clbp_codes_row(const double* pixels, std::size_t stride,
                    int cx0, int cy, int count,
                    const RingOffset* ring, int points, double mu,
                    std::uint32_t* s_codes, std::uint32_t* m_codes) {
#ifdef CROWDTEX_COMPILE_AVX2
    if (avx2_enabled()) {
        avx2::clbp_codes_row(pixels, stride, cx0, cy, count, ring, points, mu, s_codes, m_codes);
        return;
    }
#endif
    scalar::clbp_codes_row(pixels, stride, cx0, cy, count, ring, points, mu, s_codes, m_codes);
}

} // namespace crowdtex::kernels
