#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <vector>

#include <png.h>

#include "crowdtex/errors.hpp"
#include "crowdtex/image.hpp"

namespace crowdtex {

namespace {

constexpr double kLumaR = 0.299;
constexpr double kLumaG = 0.587;
constexpr double kLumaB = 0.114;

std::uint8_t quantize(double v) {
    const double r = std::round(v);
    return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f != nullptr) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    std::error_code ec;
    if (mode[0] == 'r' && !std::filesystem::exists(path, ec)) {
        raise(Errc::file_not_found, path.string());
    }
    FilePtr f(std::fopen(path.string().c_str(), mode));
    if (!f) raise(Errc::io_error, "cannot open " + path.string());
    return f;
}

// ---------------------------------------------------------------------------
// PGM (P5, 8-bit)
// ---------------------------------------------------------------------------

int pgm_next_int(std::FILE* f, const std::filesystem::path& path) {
    int c = std::fgetc(f);
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = std::fgetc(f);
        } else if (!std::isspace(c)) {
            break;
        }
        c = std::fgetc(f);
    }
    if (c == EOF || !std::isdigit(c)) raise(Errc::corrupt_image, "bad PGM header in " + path.string());
    long value = 0;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        if (value > 1 << 30) raise(Errc::corrupt_image, "PGM header overflow in " + path.string());
        c = std::fgetc(f);
    }
    if (c != EOF) std::ungetc(c, f);
    return static_cast<int>(value);
}

GrayImage load_pgm(std::FILE* f, const std::filesystem::path& path) {
    const int width = pgm_next_int(f, path);
    const int height = pgm_next_int(f, path);
    const int maxval = pgm_next_int(f, path);
    if (width < 1 || height < 1) raise(Errc::corrupt_image, "bad PGM dimensions in " + path.string());
    if (maxval > 255 || maxval < 1) {
        raise(Errc::unsupported_format, "only 8-bit PGM supported: " + path.string());
    }
    std::fgetc(f); // single whitespace after maxval
    std::vector<std::uint8_t> raw(static_cast<std::size_t>(width) * height);
    if (std::fread(raw.data(), 1, raw.size(), f) != raw.size()) {
        raise(Errc::corrupt_image, "truncated PGM data in " + path.string());
    }
    GrayImage img(width, height);
    for (std::size_t i = 0; i < raw.size(); ++i) img.pixels[i] = raw[i];
    return img;
}

// ---------------------------------------------------------------------------
// PNG (8-bit gray or RGB, via libpng)
// ---------------------------------------------------------------------------

GrayImage load_png(std::FILE* f, const std::filesystem::path& path) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png == nullptr) raise(Errc::io_error, "libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (info == nullptr) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        raise(Errc::io_error, "libpng init failed");
    }

    std::vector<std::uint8_t> data;
    std::vector<png_bytep> row_ptrs;
    int width = 0, height = 0, color_type = 0, bit_depth = 0;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        raise(Errc::corrupt_image, "PNG decode failed for " + path.string());
    }

    png_init_io(png, f);
    png_read_info(png, info);
    width = static_cast<int>(png_get_image_width(png, info));
    height = static_cast<int>(png_get_image_height(png, info));
    color_type = png_get_color_type(png, info);
    bit_depth = png_get_bit_depth(png, info);

    if (bit_depth != 8 || (color_type != PNG_COLOR_TYPE_GRAY && color_type != PNG_COLOR_TYPE_RGB)) {
        png_destroy_read_struct(&png, &info, nullptr);
        raise(Errc::unsupported_format,
              "only 8-bit gray or RGB PNG supported: " + path.string());
    }

    const int channels = color_type == PNG_COLOR_TYPE_RGB ? 3 : 1;
    data.resize(static_cast<std::size_t>(width) * height * channels);
    row_ptrs.resize(static_cast<std::size_t>(height));
    for (int y = 0; y < height; ++y) {
        row_ptrs[static_cast<std::size_t>(y)] =
            data.data() + static_cast<std::size_t>(y) * width * channels;
    }
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    GrayImage img(width, height);
    if (channels == 1) {
        for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = data[i];
    } else {
        for (std::size_t i = 0; i < img.pixels.size(); ++i) {
            const std::uint8_t* px = data.data() + i * 3;
            img.pixels[i] = std::round(kLumaR * px[0] + kLumaG * px[1] + kLumaB * px[2]);
        }
    }
    return img;
}

const unsigned char kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

} // namespace

GrayImage load_grayscale(const std::filesystem::path& path) {
    FilePtr f = open_file(path, "rb");
    unsigned char magic[8] = {};
    const std::size_t got = std::fread(magic, 1, sizeof(magic), f.get());
    if (got < 2) raise(Errc::corrupt_image, "empty or unreadable file: " + path.string());
    std::rewind(f.get());
    if (magic[0] == 'P' && magic[1] == '5') {
        std::fseek(f.get(), 2, SEEK_SET);
        return load_pgm(f.get(), path);
    }
    if (got == 8 && std::memcmp(magic, kPngSig, 8) == 0) {
        return load_png(f.get(), path);
    }
    raise(Errc::unsupported_format, "not a PGM (P5) or PNG file: " + path.string());
}

void save_pgm(const GrayImage& image, const std::filesystem::path& path) {
    FilePtr f = open_file(path, "wb");
    std::fprintf(f.get(), "P5\n%d %d\n255\n", image.width, image.height);
    std::vector<std::uint8_t> raw(image.pixels.size());
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = quantize(image.pixels[i]);
    if (std::fwrite(raw.data(), 1, raw.size(), f.get()) != raw.size()) {
        raise(Errc::io_error, "short write to " + path.string());
    }
}

void save_png_gray(const GrayImage& image, const std::filesystem::path& path) {
    FilePtr f = open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png == nullptr) raise(Errc::io_error, "libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (info == nullptr) {
        png_destroy_write_struct(&png, nullptr);
        raise(Errc::io_error, "libpng init failed");
    }

    std::vector<std::uint8_t> raw(image.pixels.size());
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = quantize(image.pixels[i]);
    std::vector<png_bytep> row_ptrs(static_cast<std::size_t>(image.height));
    for (int y = 0; y < image.height; ++y) {
        row_ptrs[static_cast<std::size_t>(y)] = raw.data() + static_cast<std::size_t>(y) * image.width;
    }

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        raise(Errc::io_error, "PNG encode failed for " + path.string());
    }
    png_init_io(png, f.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
                 static_cast<png_uint_32>(image.height), 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, row_ptrs.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

std::pair<int, int> probe_image_size(const std::filesystem::path& path) {
    FilePtr f = open_file(path, "rb");
    unsigned char magic[24] = {};
    const std::size_t got = std::fread(magic, 1, sizeof(magic), f.get());
    if (got >= 2 && magic[0] == 'P' && magic[1] == '5') {
        std::fseek(f.get(), 2, SEEK_SET);
        const int w = pgm_next_int(f.get(), path);
        const int h = pgm_next_int(f.get(), path);
        return {w, h};
    }
    if (got >= 24 && std::memcmp(magic, kPngSig, 8) == 0) {
        auto be32 = [&](int off) {
            return (magic[off] << 24) | (magic[off + 1] << 16) | (magic[off + 2] << 8) | magic[off + 3];
        };
        return {be32(16), be32(20)}; // IHDR: width then height, big-endian
    }
    raise(Errc::unsupported_format, "not a PGM (P5) or PNG file: " + path.string());
}

} // namespace crowdtex
