#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace crowdtex {

/// Grayscale frame. Gray levels are stored as reals in [0, 255] so that
/// interpolated samples and luma conversion stay unquantized; rounding to
/// 8 bits happens only in the file codecs. Immutable in practice: all
/// pipeline operations take it by const reference.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<double> pixels; // row-major, width * height

    GrayImage() = default;
    GrayImage(int w, int h, double fill = 0.0);
    GrayImage(int w, int h, std::vector<double> data);

    double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
    double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    const double* row(int y) const { return pixels.data() + static_cast<std::size_t>(y) * width; }
};

struct Rect {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    bool operator==(const Rect&) const = default;
    long long area() const { return static_cast<long long>(w) * h; }
    bool contains(int px, int py) const {
        return px >= x && px < x + w && py >= y && py < y + h;
    }
};

/// Row-major tiling of a frame into classification blocks. Interior blocks
/// are block_size square; when block_size does not divide the frame, the last
/// block of each row/column absorbs the remainder, so no block is ever
/// smaller than block_size.
struct BlockGrid {
    int frame_width = 0;
    int frame_height = 0;
    int block_size = 0;
    int cols = 0;
    int rows = 0;
    std::vector<Rect> blocks;
};

GrayImage load_grayscale(const std::filesystem::path& path);
void save_pgm(const GrayImage& image, const std::filesystem::path& path);
void save_png_gray(const GrayImage& image, const std::filesystem::path& path);

/// Width/height from the file header only (no pixel decode).
std::pair<int, int> probe_image_size(const std::filesystem::path& path);

double image_mean(const GrayImage& image);

BlockGrid partition_blocks(const GrayImage& image, int block_size);
BlockGrid partition_blocks(int frame_width, int frame_height, int block_size);

/// Cell windows inside a block, strided by cell_size * (1 - overlap) (rounded
/// down, minimum 1). The trailing cell of each axis is clamped to the block
/// edge so every block pixel is covered.
std::vector<Rect> cells_of_block(const Rect& block, int cell_size, double overlap);

} // namespace crowdtex
