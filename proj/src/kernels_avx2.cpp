#include "crowdtex/kernels.hpp"

#include <cmath>
#include <immintrin.h>

// AVX2 lanes of the kernels in kernels.cpp. Four ring centers per iteration;
// consecutive centers share the same fractional offsets, so each ring sample
// is four unaligned loads plus FMA lerps. Remainder centers fall back to the
// scalar reference.

namespace crowdtex::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d shuf = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

inline __m256d abs_pd(__m256d v) {
    const __m256d mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffll));
    return _mm256_and_pd(v, mask);
}

// Four consecutive samples for one ring offset, centers cx..cx+3 at row cy.
inline __m256d sample4(const double* pixels, std::size_t stride,
                       int cx, int cy, const RingOffset& o) {
    const double* base = pixels + static_cast<std::size_t>(cy + o.iy) * stride + (cx + o.ix);
    switch (o.kind) {
        case SampleKind::exact:
            return _mm256_loadu_pd(base);
        case SampleKind::lerp_x: {
            const __m256d v0 = _mm256_loadu_pd(base);
            const __m256d v1 = _mm256_loadu_pd(base + 1);
            return _mm256_fmadd_pd(_mm256_set1_pd(o.fx), _mm256_sub_pd(v1, v0), v0);
        }
        case SampleKind::lerp_y: {
            const __m256d v0 = _mm256_loadu_pd(base);
            const __m256d v1 = _mm256_loadu_pd(base + stride);
            return _mm256_fmadd_pd(_mm256_set1_pd(o.fy), _mm256_sub_pd(v1, v0), v0);
        }
        case SampleKind::bilinear: {
            const __m256d fx = _mm256_set1_pd(o.fx);
            const __m256d v00 = _mm256_loadu_pd(base);
            const __m256d v10 = _mm256_loadu_pd(base + 1);
            const __m256d v01 = _mm256_loadu_pd(base + stride);
            const __m256d v11 = _mm256_loadu_pd(base + stride + 1);
            const __m256d top = _mm256_fmadd_pd(fx, _mm256_sub_pd(v10, v00), v00);
            const __m256d bot = _mm256_fmadd_pd(fx, _mm256_sub_pd(v11, v01), v01);
            return _mm256_fmadd_pd(_mm256_set1_pd(o.fy), _mm256_sub_pd(bot, top), top);
        }
    }
    return _mm256_loadu_pd(base);
}

} // namespace

double sum(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double result = hsum(acc);
    for (; i < n; ++i) result += x[i];
    return result;
}

double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    }
    double result = hsum(acc);
    for (; i < n; ++i) result += a[i] * b[i];
    return result;
}

double squared_distance(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_fmadd_pd(d, d, acc);
    }
    double result = hsum(acc);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        result += d * d;
    }
    return result;
}

double ring_abs_sum_row(const double* pixels, std::size_t stride,
                        int cx0, int cy, int count,
                        const RingOffset* ring, int points) {
    __m256d acc = _mm256_setzero_pd();
    int i = 0;
    for (; i + 4 <= count; i += 4) {
        const int cx = cx0 + i;
        const __m256d center = _mm256_loadu_pd(pixels + static_cast<std::size_t>(cy) * stride + cx);
        for (int n = 0; n < points; ++n) {
            const __m256d d = _mm256_sub_pd(sample4(pixels, stride, cx, cy, ring[n]), center);
            acc = _mm256_add_pd(acc, abs_pd(d));
        }
    }
    double result = hsum(acc);
    if (i < count) {
        result += scalar::ring_abs_sum_row(pixels, stride, cx0 + i, cy, count - i, ring, points);
    }
    return result;
}

void clbp_codes_row(const double* pixels, std::size_t stride,
                    int cx0, int cy, int count,
                    const RingOffset* ring, int points, double mu,
                    std::uint32_t* s_codes, std::uint32_t* m_codes) {
    const __m256d mu_v = _mm256_set1_pd(mu);
    int i = 0;
    for (; i + 4 <= count; i += 4) {
        const int cx = cx0 + i;
        const __m256d center = _mm256_loadu_pd(pixels + static_cast<std::size_t>(cy) * stride + cx);
        __m256i s_acc = _mm256_setzero_si256();
        __m256i m_acc = _mm256_setzero_si256();
        for (int n = 0; n < points; ++n) {
            const __m256d d = _mm256_sub_pd(sample4(pixels, stride, cx, cy, ring[n]), center);
            const __m256i bit = _mm256_set1_epi64x(1ll << n);
            const __m256i s_mask = _mm256_castpd_si256(_mm256_cmp_pd(d, _mm256_setzero_pd(), _CMP_GE_OQ));
            const __m256i m_mask = _mm256_castpd_si256(_mm256_cmp_pd(abs_pd(d), mu_v, _CMP_GE_OQ));
            s_acc = _mm256_or_si256(s_acc, _mm256_and_si256(s_mask, bit));
            m_acc = _mm256_or_si256(m_acc, _mm256_and_si256(m_mask, bit));
        }
        alignas(32) std::uint64_t s_lanes[4];
        alignas(32) std::uint64_t m_lanes[4];
        _mm256_store_si256(reinterpret_cast<__m256i*>(s_lanes), s_acc);
        _mm256_store_si256(reinterpret_cast<__m256i*>(m_lanes), m_acc);
        for (int lane = 0; lane < 4; ++lane) {
            s_codes[i + lane] = static_cast<std::uint32_t>(s_lanes[lane]);
            m_codes[i + lane] = static_cast<std::uint32_t>(m_lanes[lane]);
        }
    }
    if (i < count) {
        scalar::clbp_codes_row(pixels, stride, cx0 + i, cy, count - i, ring, points, mu,
                               s_codes + i, m_codes + i);
    }
}

} // namespace crowdtex::kernels::avx2
