#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "crowdtex/image.hpp"

namespace crowdtex {

/// Four-level density target, ordered VeryLow < Low < Medium < High.
enum class DensityLabel : std::uint8_t { very_low = 0, low = 1, medium = 2, high = 3 };

inline constexpr int kLabelCount = 4;

const char* label_name(DensityLabel label);   // "VeryLow" etc.
const char* label_code(DensityLabel label);   // "VL", "L", "M", "H"
std::optional<DensityLabel> parse_label(const std::string& token);

/// Person-count to density level. The source table leaves counts 17-26
/// unassigned (Medium ends at 16, High starts above 26); they map to High so
/// the function is total and monotone.
DensityLabel label_from_count(long long count);

struct BlockAnnotation {
    std::string frame_id; // relative path from the manifest root
    Rect block;
    std::optional<long long> person_count;
    DensityLabel label = DensityLabel::very_low;

    bool operator==(const BlockAnnotation&) const = default;
};

struct FrameEntry {
    std::string frame_id;
    std::filesystem::path frame_path;
    int width = 0;
    int height = 0;
    std::vector<BlockAnnotation> annotations;
};

struct Manifest {
    std::filesystem::path root;
    std::string source;
    int block_size = 0;
    std::vector<FrameEntry> entries;

    std::size_t annotation_count() const;
};

/// Parses and eagerly validates a manifest: frames must exist and decode a
/// header, rects must lie inside their frame, counts must be consistent with
/// their labels, and (frame, rect) pairs must be unique.
Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

/// Frame-grouped stratified split: all blocks of one frame land on the same
/// side; frames are stratified by their dominant label. Both sides must end
/// up with every block-level label present.
std::pair<Manifest, Manifest> split(const Manifest& manifest, double test_fraction,
                                    std::uint64_t seed);

/// Inclusive blob-count range for a label over a w x h region; ranges are
/// disjoint and ascending across labels at any region size.
std::pair<int, int> synth_blob_count_range(DensityLabel label, int width, int height);

/// Renders one crowd-texture region: gray background, dark elliptical blobs
/// at head/shoulder scale, additive Gaussian noise (sigma 4). Deterministic
/// per seed.
GrayImage synth_crowd_region(DensityLabel label, int width, int height, std::uint64_t seed);
GrayImage synth_crowd_texture(DensityLabel label, int size, std::uint64_t seed);

struct SynthConfig {
    int per_class = 50;     // annotated blocks per class
    int frame_size = 384;
    int block_size = 96;
    std::uint64_t seed = 1;
};

/// Writes PGM frames plus manifest.txt under out_dir and returns the loaded
/// manifest. Every block region of every frame is rendered; only the first
/// per_class blocks of each class are annotated.
Manifest synth_corpus(const SynthConfig& config, const std::filesystem::path& out_dir);

} // namespace crowdtex
