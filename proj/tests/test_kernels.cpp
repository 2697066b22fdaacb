#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "crowdtex/image.hpp"
#include "crowdtex/kernels.hpp"
#include "crowdtex/rng.hpp"

using namespace crowdtex;
namespace k = crowdtex::kernels;

namespace {

GrayImage random_image(int w, int h, std::uint64_t seed, int max_gray = 255) {
    Rng rng(seed);
    GrayImage img(w, h);
    for (double& px : img.pixels) px = static_cast<double>(rng.range(0, max_gray));
    return img;
}

GrayImage random_real_image(int w, int h, std::uint64_t seed) {
    Rng rng(seed);
    GrayImage img(w, h);
    for (double& px : img.pixels) px = rng.uniform(0.0, 255.0);
    return img;
}

} // namespace

TEST_CASE("ring offsets snap axis-aligned samples to the grid") {
    const auto r1p4 = k::ring_offsets(1.0, 4);
    REQUIRE(r1p4.size() == 4);
    // east, north, west, south with y pointing down
    CHECK(r1p4[0].ix == 1);
    CHECK(r1p4[0].iy == 0);
    CHECK(r1p4[1].ix == 0);
    CHECK(r1p4[1].iy == -1);
    CHECK(r1p4[2].ix == -1);
    CHECK(r1p4[2].iy == 0);
    CHECK(r1p4[3].ix == 0);
    CHECK(r1p4[3].iy == 1);
    for (const auto& o : r1p4) CHECK(o.kind == k::SampleKind::exact);

    const auto r1p8 = k::ring_offsets(1.0, 8);
    CHECK(r1p8[0].kind == k::SampleKind::exact);
    CHECK(r1p8[1].kind == k::SampleKind::bilinear); // diagonal at (+cos45, -sin45)
    const double c = std::cos(std::numbers::pi / 4.0);
    CHECK(r1p8[1].ix + r1p8[1].fx == doctest::Approx(c).epsilon(1e-12));
    CHECK(r1p8[1].iy + r1p8[1].fy == doctest::Approx(-c).epsilon(1e-12));

    CHECK(k::ring_margin(1.0) == 1);
    CHECK(k::ring_margin(1.5) == 2);
    CHECK(k::ring_margin(2.0) == 2);
}

TEST_CASE("scalar reductions") {
    const std::vector<double> a{1.0, 2.0, 3.0, 4.0, 5.0};
    const std::vector<double> b{2.0, 2.0, 2.0, 2.0, 2.0};
    CHECK(k::scalar::sum(a.data(), a.size()) == 15.0);
    CHECK(k::scalar::dot(a.data(), b.data(), a.size()) == 30.0);
    CHECK(k::scalar::squared_distance(a.data(), b.data(), a.size()) == 1.0 + 0.0 + 1.0 + 4.0 + 9.0);
}

TEST_CASE("avx2 lane matches scalar reference") {
    if (!k::avx2_enabled()) {
        MESSAGE("AVX2 unavailable; dispatch stays scalar");
        return;
    }
    Rng rng(42);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + rng.below(300);
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = rng.uniform(-10.0, 10.0);
            b[i] = rng.uniform(-10.0, 10.0);
        }
        CHECK(k::avx2::sum(a.data(), n) ==
              doctest::Approx(k::scalar::sum(a.data(), n)).epsilon(1e-12));
        CHECK(k::avx2::dot(a.data(), b.data(), n) ==
              doctest::Approx(k::scalar::dot(a.data(), b.data(), n)).epsilon(1e-12));
        CHECK(k::avx2::squared_distance(a.data(), b.data(), n) ==
              doctest::Approx(k::scalar::squared_distance(a.data(), b.data(), n)).epsilon(1e-12));
    }
}

TEST_CASE("avx2 ring kernels match scalar on integer images") {
    if (!k::avx2_enabled()) return;
    for (const auto& [radius, points] : {std::pair{1.0, 4}, {1.0, 8}, {2.0, 8}, {2.0, 12}}) {
        const auto ring = k::ring_offsets(radius, points);
        const int m = k::ring_margin(radius);
        for (std::uint64_t seed = 0; seed < 8; ++seed) {
            const GrayImage img = random_image(23, 17, 900 + seed);
            for (int y = m; y < img.height - m; ++y) {
                const int count = img.width - 2 * m;
                const double s_scalar = k::scalar::ring_abs_sum_row(
                    img.pixels.data(), static_cast<std::size_t>(img.width), m, y, count,
                    ring.data(), points);
                const double s_avx = k::avx2::ring_abs_sum_row(
                    img.pixels.data(), static_cast<std::size_t>(img.width), m, y, count,
                    ring.data(), points);
                // integer gray levels at integer snaps are exact in both lanes
                if (radius == 1.0 && points == 4) {
                    CHECK(s_scalar == s_avx);
                } else {
                    CHECK(s_avx == doctest::Approx(s_scalar).epsilon(1e-12));
                }

                std::vector<std::uint32_t> s1(static_cast<std::size_t>(count)),
                    m1(static_cast<std::size_t>(count)), s2(static_cast<std::size_t>(count)),
                    m2(static_cast<std::size_t>(count));
                const double mu = 7.5;
                k::scalar::clbp_codes_row(img.pixels.data(), static_cast<std::size_t>(img.width),
                                          m, y, count, ring.data(), points, mu, s1.data(),
                                          m1.data());
                k::avx2::clbp_codes_row(img.pixels.data(), static_cast<std::size_t>(img.width), m,
                                        y, count, ring.data(), points, mu, s2.data(), m2.data());
                CHECK(s1 == s2);
                CHECK(m1 == m2);
            }
        }
    }
}

TEST_CASE("constant image samples stay exact through interpolation") {
    const GrayImage img(16, 16, 37.25);
    const auto ring = k::ring_offsets(1.7, 10);
    std::vector<double> out(10);
    k::ring_samples(img.pixels.data(), 16, 8, 8, ring.data(), 10, out.data());
    for (double v : out) CHECK(v == 37.25);

    // real-valued image: row kernels agree across lanes within tolerance
    if (k::avx2_enabled()) {
        const GrayImage noisy = random_real_image(32, 8, 7);
        const double a = k::scalar::ring_abs_sum_row(noisy.pixels.data(), 32, 2, 4, 28,
                                                     ring.data(), 10);
        const double b = k::avx2::ring_abs_sum_row(noisy.pixels.data(), 32, 2, 4, 28, ring.data(),
                                                   10);
        CHECK(b == doctest::Approx(a).epsilon(1e-12));
    }
}

TEST_CASE("dispatch reports a level") {
    const char* level = k::simd_level();
    CHECK((std::string(level) == "avx2" || std::string(level) == "scalar"));
}
