#include "crowdtex/image.hpp"

#include <algorithm>
#include <cmath>

#include "crowdtex/errors.hpp"
#include "crowdtex/kernels.hpp"

namespace crowdtex {

const char* errc_name(Errc c) {
    switch (c) {
        case Errc::file_not_found: return "FileNotFound";
        case Errc::unsupported_format: return "UnsupportedFormat";
        case Errc::corrupt_image: return "CorruptImage";
        case Errc::block_too_large: return "BlockTooLarge";
        case Errc::cell_too_large: return "CellTooLarge";
        case Errc::out_of_bounds: return "OutOfBounds";
        case Errc::image_too_small: return "ImageTooSmall";
        case Errc::empty_cell: return "EmptyCell";
        case Errc::region_too_small: return "RegionTooSmall";
        case Errc::dimension_mismatch: return "DimensionMismatch";
        case Errc::single_class: return "SingleClass";
        case Errc::insufficient_samples: return "InsufficientSamples";
        case Errc::insufficient_data: return "InsufficientData";
        case Errc::parse_error: return "ParseError";
        case Errc::inconsistent_label: return "InconsistentLabel";
        case Errc::missing_frame: return "MissingFrame";
        case Errc::io_error: return "IoError";
        case Errc::version_mismatch: return "VersionMismatch";
        case Errc::checksum_mismatch: return "ChecksumMismatch";
        case Errc::length_mismatch: return "LengthMismatch";
        case Errc::empty: return "Empty";
        case Errc::count_mismatch: return "CountMismatch";
        case Errc::invalid_config: return "InvalidConfig";
    }
    return "Unknown";
}

GrayImage::GrayImage(int w, int h, double fill)
    : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {
    if (w < 1 || h < 1) raise(Errc::invalid_config, "image dimensions must be >= 1");
}

GrayImage::GrayImage(int w, int h, std::vector<double> data)
    : width(w), height(h), pixels(std::move(data)) {
    if (w < 1 || h < 1) raise(Errc::invalid_config, "image dimensions must be >= 1");
    if (pixels.size() != static_cast<std::size_t>(w) * h) {
        raise(Errc::dimension_mismatch, "pixel buffer length != width * height");
    }
}

double image_mean(const GrayImage& image) {
    return kernels::sum(image.pixels.data(), image.pixels.size()) /
           static_cast<double>(image.pixels.size());
}

namespace {

// Per-axis offsets under the remainder policy: count = floor(dim / size)
// blocks, the last one stretched to the frame edge.
std::vector<std::pair<int, int>> axis_blocks(int dim, int size) {
    const int count = dim / size;
    std::vector<std::pair<int, int>> spans;
    spans.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const int offset = i * size;
        const int extent = (i == count - 1) ? dim - offset : size;
        spans.emplace_back(offset, extent);
    }
    return spans;
}

} // namespace

BlockGrid partition_blocks(int frame_width, int frame_height, int block_size) {
    if (block_size < 1) raise(Errc::invalid_config, "block_size must be >= 1");
    if (block_size > frame_width || block_size > frame_height) {
        raise(Errc::block_too_large,
              "block_size " + std::to_string(block_size) + " exceeds frame " +
                  std::to_string(frame_width) + "x" + std::to_string(frame_height));
    }
    BlockGrid grid;
    grid.frame_width = frame_width;
    grid.frame_height = frame_height;
    grid.block_size = block_size;
    const auto xs = axis_blocks(frame_width, block_size);
    const auto ys = axis_blocks(frame_height, block_size);
    grid.cols = static_cast<int>(xs.size());
    grid.rows = static_cast<int>(ys.size());
    grid.blocks.reserve(xs.size() * ys.size());
    for (const auto& [y, h] : ys) {
        for (const auto& [x, w] : xs) {
            grid.blocks.push_back(Rect{x, y, w, h});
        }
    }
    return grid;
}

BlockGrid partition_blocks(const GrayImage& image, int block_size) {
    return partition_blocks(image.width, image.height, block_size);
}

namespace {

// Cell start offsets along one axis: stride steps plus a clamped final start
// so coverage reaches the block edge.
std::vector<int> axis_cells(int extent, int cell, int stride) {
    std::vector<int> starts;
    for (int pos = 0; pos + cell <= extent; pos += stride) starts.push_back(pos);
    if (starts.empty() || starts.back() + cell < extent) starts.push_back(extent - cell);
    return starts;
}

} // namespace

std::vector<Rect> cells_of_block(const Rect& block, int cell_size, double overlap) {
    if (cell_size < 1) raise(Errc::invalid_config, "cell_size must be >= 1");
    if (overlap < 0.0 || overlap >= 1.0) raise(Errc::invalid_config, "overlap must be in [0, 1)");
    if (cell_size > block.w || cell_size > block.h) {
        raise(Errc::cell_too_large, "cell_size " + std::to_string(cell_size) + " exceeds block " +
                                        std::to_string(block.w) + "x" + std::to_string(block.h));
    }
    const int stride = std::max(1, static_cast<int>(std::floor(cell_size * (1.0 - overlap))));
    const auto xs = axis_cells(block.w, cell_size, stride);
    const auto ys = axis_cells(block.h, cell_size, stride);
    std::vector<Rect> cells;
    cells.reserve(xs.size() * ys.size());
    for (int y : ys) {
        for (int x : xs) {
            cells.push_back(Rect{block.x + x, block.y + y, cell_size, cell_size});
        }
    }
    return cells;
}

} // namespace crowdtex
