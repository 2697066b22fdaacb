#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include <png.h>

#include "crowdtex/errors.hpp"
#include "crowdtex/image.hpp"
#include "crowdtex/rng.hpp"

using namespace crowdtex;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    static const fs::path dir = [] {
        fs::path p = fs::temp_directory_path() / "crowdtex_test_image";
        fs::create_directories(p);
        return p;
    }();
    return dir;
}

void write_bytes(const fs::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

void write_rgb_png(const fs::path& path, int w, int h, const std::vector<std::uint8_t>& rgb) {
    std::FILE* f = std::fopen(path.string().c_str(), "wb");
    REQUIRE(f != nullptr);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    REQUIRE(setjmp(png_jmpbuf(png)) == 0);
    png_init_io(png, f);
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(static_cast<std::size_t>(h));
    for (int y = 0; y < h; ++y) {
        rows[static_cast<std::size_t>(y)] = const_cast<png_bytep>(rgb.data() + static_cast<std::size_t>(y) * w * 3);
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(f);
}

} // namespace

TEST_CASE("load_grayscale: 8-bit PGM is preserved bit-exactly") {
    const fs::path p = temp_dir() / "tiny.pgm";
    write_bytes(p, std::string("P5\n2 2\n255\n") + '\x00' + '\xff' + '\x80' + '\x40');
    const GrayImage img = load_grayscale(p);
    CHECK(img.width == 2);
    CHECK(img.height == 2);
    CHECK(img.pixels == std::vector<double>{0, 255, 128, 64});
    CHECK(probe_image_size(p) == std::pair{2, 2});
}

TEST_CASE("load_grayscale: error cases") {
    CHECK_THROWS_WITH_AS(load_grayscale(temp_dir() / "nope.pgm"), doctest::Contains("FileNotFound"),
                         Error);

    const fs::path empty = temp_dir() / "zero.pgm";
    write_bytes(empty, "");
    CHECK_THROWS_AS(load_grayscale(empty), Error);
    try {
        load_grayscale(empty);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::corrupt_image);
    }

    const fs::path bad = temp_dir() / "bad.bin";
    write_bytes(bad, "GIF89a....");
    try {
        load_grayscale(bad);
        FAIL("expected UnsupportedFormat");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::unsupported_format);
    }

    const fs::path deep = temp_dir() / "deep.pgm";
    write_bytes(deep, "P5\n2 2\n65535\n\0\0\0\0\0\0\0\0");
    try {
        load_grayscale(deep);
        FAIL("expected UnsupportedFormat");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::unsupported_format);
    }

    const fs::path truncated = temp_dir() / "trunc.pgm";
    write_bytes(truncated, "P5\n4 4\n255\nab");
    try {
        load_grayscale(truncated);
        FAIL("expected CorruptImage");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::corrupt_image);
    }
}

TEST_CASE("PGM round-trip is exact for 8-bit data") {
    Rng rng(11);
    GrayImage img(13, 9);
    for (double& px : img.pixels) px = static_cast<double>(rng.range(0, 255));
    const fs::path p = temp_dir() / "roundtrip.pgm";
    save_pgm(img, p);
    const GrayImage back = load_grayscale(p);
    CHECK(back.pixels == img.pixels);
}

TEST_CASE("PNG round-trip for gray data and luma conversion for RGB") {
    Rng rng(12);
    GrayImage img(21, 7);
    for (double& px : img.pixels) px = static_cast<double>(rng.range(0, 255));
    const fs::path p = temp_dir() / "roundtrip.png";
    save_png_gray(img, p);
    const GrayImage back = load_grayscale(p);
    CHECK(back.pixels == img.pixels);
    CHECK(probe_image_size(p) == std::pair{21, 7});
}

TEST_CASE("RGB PNG converts by BT.601 luma with rounding") {
    // pure red, pure green, pure blue, white
    const fs::path p = temp_dir() / "rgb.png";
    write_rgb_png(p, 2, 2,
                  {255, 0, 0, /**/ 0, 255, 0,
                   0, 0, 255, /**/ 255, 255, 255});
    const GrayImage img = load_grayscale(p);
    CHECK(img.at(0, 0) == 76.0);  // round(0.299 * 255) = round(76.245)
    CHECK(img.at(1, 0) == 150.0); // round(149.685)
    CHECK(img.at(0, 1) == 29.0);  // round(29.07)
    CHECK(img.at(1, 1) == 255.0);
}

TEST_CASE("image_mean") {
    CHECK(image_mean(GrayImage(5, 4, 42.0)) == 42.0);
    CHECK(image_mean(GrayImage(2, 2, std::vector<double>{0, 255, 128, 64})) == 111.75);
    CHECK(image_mean(GrayImage(1, 1, std::vector<double>{7})) == 7.0);
}

TEST_CASE("partition_blocks: exact tilings") {
    const BlockGrid g = partition_blocks(768, 576, 96);
    CHECK(g.blocks.size() == 48);
    CHECK(g.cols == 8);
    CHECK(g.rows == 6);
    for (const Rect& b : g.blocks) {
        CHECK(b.w == 96);
        CHECK(b.h == 96);
    }

    const BlockGrid one = partition_blocks(100, 100, 100);
    CHECK(one.blocks.size() == 1);
    CHECK(one.blocks[0] == Rect{0, 0, 100, 100});
}

TEST_CASE("partition_blocks: remainder merges into the last block") {
    // 100 = 1*64 + 36: the single block absorbs the remainder
    const BlockGrid g = partition_blocks(100, 100, 64);
    CHECK(g.blocks.size() == 1);
    CHECK(g.blocks[0] == Rect{0, 0, 100, 100});

    // 230 = 3*64 + 38: last block is 64+38 = 102 wide
    const BlockGrid g2 = partition_blocks(230, 128, 64);
    CHECK(g2.cols == 3);
    CHECK(g2.rows == 2);
    CHECK(g2.blocks.back().w == 102);
    CHECK(g2.blocks.back().h == 64);
    for (const Rect& b : g2.blocks) {
        CHECK(b.w >= 64);
        CHECK(b.h >= 64);
    }
}

TEST_CASE("partition_blocks: block too large") {
    try {
        partition_blocks(100, 100, 101);
        FAIL("expected BlockTooLarge");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::block_too_large);
    }
}

TEST_CASE("property: blocks tile the frame exactly once") {
    Rng rng(77);
    for (int trial = 0; trial < 25; ++trial) {
        const int w = static_cast<int>(rng.range(16, 200));
        const int h = static_cast<int>(rng.range(16, 200));
        const int bs = static_cast<int>(rng.range(4, std::min(w, h)));
        const BlockGrid g = partition_blocks(w, h, bs);
        std::vector<int> cover(static_cast<std::size_t>(w) * h, 0);
        for (const Rect& b : g.blocks) {
            for (int y = b.y; y < b.y + b.h; ++y) {
                for (int x = b.x; x < b.x + b.w; ++x) {
                    cover[static_cast<std::size_t>(y) * w + x]++;
                }
            }
        }
        CHECK(std::all_of(cover.begin(), cover.end(), [](int c) { return c == 1; }));

        // determinism
        const BlockGrid g2 = partition_blocks(w, h, bs);
        CHECK(g.blocks == g2.blocks);
    }
}

TEST_CASE("cells_of_block: strides and counts") {
    const Rect block{0, 0, 96, 96};
    CHECK(cells_of_block(block, 32, 0.5).size() == 25);
    CHECK(cells_of_block(block, 32, 0.0).size() == 9);
    CHECK(cells_of_block(Rect{10, 20, 32, 32}, 32, 0.7).size() == 1);

    try {
        cells_of_block(Rect{0, 0, 16, 16}, 32, 0.5);
        FAIL("expected CellTooLarge");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::cell_too_large);
    }
}

TEST_CASE("property: cells cover every block pixel and stay inside") {
    Rng rng(78);
    for (int trial = 0; trial < 25; ++trial) {
        const int bw = static_cast<int>(rng.range(8, 120));
        const int bh = static_cast<int>(rng.range(8, 120));
        const int cs = static_cast<int>(rng.range(2, std::min(bw, bh)));
        const double overlap = rng.uniform(0.0, 0.95);
        const Rect block{static_cast<int>(rng.range(0, 50)), static_cast<int>(rng.range(0, 50)),
                         bw, bh};
        const auto cells = cells_of_block(block, cs, overlap);
        std::vector<int> cover(static_cast<std::size_t>(bw) * bh, 0);
        for (const Rect& c : cells) {
            CHECK(c.x >= block.x);
            CHECK(c.y >= block.y);
            CHECK(c.x + c.w <= block.x + block.w);
            CHECK(c.y + c.h <= block.y + block.h);
            for (int y = c.y; y < c.y + c.h; ++y) {
                for (int x = c.x; x < c.x + c.w; ++x) {
                    cover[static_cast<std::size_t>(y - block.y) * bw + (x - block.x)]++;
                }
            }
        }
        CHECK(std::all_of(cover.begin(), cover.end(), [](int c) { return c >= 1; }));
    }
}
