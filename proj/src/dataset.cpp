#include "crowdtex/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "crowdtex/errors.hpp"
#include "crowdtex/rng.hpp"

namespace crowdtex {

const char* label_name(DensityLabel label) {
    switch (label) {
        case DensityLabel::very_low: return "VeryLow";
        case DensityLabel::low: return "Low";
        case DensityLabel::medium: return "Medium";
        case DensityLabel::high: return "High";
    }
    return "?";
}

const char* label_code(DensityLabel label) {
    switch (label) {
        case DensityLabel::very_low: return "VL";
        case DensityLabel::low: return "L";
        case DensityLabel::medium: return "M";
        case DensityLabel::high: return "H";
    }
    return "?";
}

std::optional<DensityLabel> parse_label(const std::string& token) {
    for (int i = 0; i < kLabelCount; ++i) {
        const auto label = static_cast<DensityLabel>(i);
        if (token == label_name(label)) return label;
    }
    return std::nullopt;
}

DensityLabel label_from_count(long long count) {
    if (count < 7) return DensityLabel::very_low;
    if (count <= 10) return DensityLabel::low;
    if (count <= 16) return DensityLabel::medium;
    return DensityLabel::high;
}

std::size_t Manifest::annotation_count() const {
    std::size_t n = 0;
    for (const auto& e : entries) n += e.annotations.size();
    return n;
}

// ---------------------------------------------------------------------------
// Manifest grammar: `#` comments, `@source <tag>` / `@block_size <n>`
// directives, then one annotation per line:
//   <frame_id> <x> <y> <w> <h> <count|-> <label>
// frame_id is a path relative to the manifest's directory.
// ---------------------------------------------------------------------------

Manifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::file_not_found, path.string());

    Manifest manifest;
    manifest.root = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");

    std::map<std::string, std::size_t> entry_index;
    std::set<std::pair<std::string, std::array<int, 4>>> seen;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto where = [&] { return path.string() + ":" + std::to_string(line_no); };
        std::string_view sv(line);
        if (const auto hash = sv.find('#'); hash != std::string_view::npos) sv = sv.substr(0, hash);
        std::istringstream ls{std::string(sv)};
        std::string first;
        if (!(ls >> first)) continue;

        if (first == "@source") {
            if (!(ls >> manifest.source)) raise(Errc::parse_error, where() + ": @source needs a tag");
            continue;
        }
        if (first == "@block_size") {
            if (!(ls >> manifest.block_size) || manifest.block_size < 1) {
                raise(Errc::parse_error, where() + ": @block_size needs a positive integer");
            }
            continue;
        }
        if (first.starts_with("@")) raise(Errc::parse_error, where() + ": unknown directive " + first);

        BlockAnnotation ann;
        ann.frame_id = first;
        std::string count_token, label_token;
        if (!(ls >> ann.block.x >> ann.block.y >> ann.block.w >> ann.block.h >> count_token >>
              label_token)) {
            raise(Errc::parse_error, where() + ": expected `frame x y w h count label`");
        }
        std::string extra;
        if (ls >> extra) raise(Errc::parse_error, where() + ": trailing token " + extra);
        if (ann.block.w < 1 || ann.block.h < 1) {
            raise(Errc::parse_error, where() + ": block extent must be >= 1");
        }

        const auto label = parse_label(label_token);
        if (!label) raise(Errc::parse_error, where() + ": unknown label " + label_token);
        ann.label = *label;

        if (count_token != "-") {
            long long count = 0;
            try {
                std::size_t pos = 0;
                count = std::stoll(count_token, &pos);
                if (pos != count_token.size()) throw std::invalid_argument(count_token);
            } catch (const std::exception&) {
                raise(Errc::parse_error, where() + ": bad count " + count_token);
            }
            if (count < 0) raise(Errc::parse_error, where() + ": count must be >= 0");
            ann.person_count = count;
            if (label_from_count(count) != ann.label) {
                raise(Errc::inconsistent_label,
                      where() + ": count " + count_token + " maps to " +
                          label_name(label_from_count(count)) + ", not " + label_token);
            }
        }

        if (!seen.insert({ann.frame_id, {ann.block.x, ann.block.y, ann.block.w, ann.block.h}}).second) {
            raise(Errc::parse_error, where() + ": duplicate (frame, block) annotation");
        }

        auto it = entry_index.find(ann.frame_id);
        if (it == entry_index.end()) {
            FrameEntry entry;
            entry.frame_id = ann.frame_id;
            entry.frame_path = manifest.root / ann.frame_id;
            if (!std::filesystem::exists(entry.frame_path)) {
                raise(Errc::missing_frame, entry.frame_path.string());
            }
            const auto [w, h] = probe_image_size(entry.frame_path);
            entry.width = w;
            entry.height = h;
            it = entry_index.emplace(ann.frame_id, manifest.entries.size()).first;
            manifest.entries.push_back(std::move(entry));
        }
        FrameEntry& entry = manifest.entries[it->second];
        if (ann.block.x < 0 || ann.block.y < 0 || ann.block.x + ann.block.w > entry.width ||
            ann.block.y + ann.block.h > entry.height) {
            raise(Errc::parse_error, where() + ": block exceeds frame " + std::to_string(entry.width) +
                                         "x" + std::to_string(entry.height));
        }
        entry.annotations.push_back(std::move(ann));
    }
    return manifest;
}

void save_manifest(const Manifest& manifest, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) raise(Errc::io_error, "cannot write " + path.string());
    if (!manifest.source.empty()) out << "@source " << manifest.source << "\n";
    if (manifest.block_size > 0) out << "@block_size " << manifest.block_size << "\n";
    for (const auto& entry : manifest.entries) {
        for (const auto& ann : entry.annotations) {
            out << ann.frame_id << ' ' << ann.block.x << ' ' << ann.block.y << ' ' << ann.block.w
                << ' ' << ann.block.h << ' ';
            if (ann.person_count) {
                out << *ann.person_count;
            } else {
                out << '-';
            }
            out << ' ' << label_name(ann.label) << "\n";
        }
    }
    if (!out) raise(Errc::io_error, "short write to " + path.string());
}

// ---------------------------------------------------------------------------
// Split
// ---------------------------------------------------------------------------

namespace {

DensityLabel dominant_label(const FrameEntry& entry) {
    std::array<std::size_t, kLabelCount> counts{};
    for (const auto& ann : entry.annotations) counts[static_cast<std::size_t>(ann.label)]++;
    std::size_t best = 0;
    for (std::size_t i = 1; i < counts.size(); ++i) {
        if (counts[i] > counts[best]) best = i;
    }
    return static_cast<DensityLabel>(best);
}

std::set<DensityLabel> block_labels(const Manifest& m) {
    std::set<DensityLabel> labels;
    for (const auto& e : m.entries) {
        for (const auto& a : e.annotations) labels.insert(a.label);
    }
    return labels;
}

} // namespace

std::pair<Manifest, Manifest> split(const Manifest& manifest, double test_fraction,
                                    std::uint64_t seed) {
    if (test_fraction <= 0.0 || test_fraction >= 1.0) {
        raise(Errc::invalid_config, "test_fraction must be in (0, 1)");
    }
    const auto labels_present = block_labels(manifest);
    if (manifest.entries.size() < 2) {
        raise(Errc::insufficient_data, "need at least 2 frames to split");
    }

    // Frames grouped by dominant label; per group a seeded shuffle picks the
    // test side, clamped so both sides keep at least one frame.
    std::array<std::vector<std::size_t>, kLabelCount> groups;
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
        groups[static_cast<std::size_t>(dominant_label(manifest.entries[i]))].push_back(i);
    }

    std::vector<bool> in_test(manifest.entries.size(), false);
    for (std::size_t g = 0; g < groups.size(); ++g) {
        auto& frames = groups[g];
        if (frames.empty()) continue;
        if (frames.size() < 2) {
            raise(Errc::insufficient_data, std::string("label ") +
                                               label_name(static_cast<DensityLabel>(g)) +
                                               " has a single frame; cannot appear on both sides");
        }
        Rng rng(derive_seed(seed, {0x5917u, g}));
        rng.shuffle(frames);
        const auto n = frames.size();
        std::size_t n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
        n_test = std::clamp<std::size_t>(n_test, 1, n - 1);
        for (std::size_t i = 0; i < n_test; ++i) in_test[frames[i]] = true;
    }

    Manifest train = manifest, test = manifest;
    train.entries.clear();
    test.entries.clear();
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
        (in_test[i] ? test : train).entries.push_back(manifest.entries[i]);
    }

    if (block_labels(train) != labels_present || block_labels(test) != labels_present) {
        raise(Errc::insufficient_data, "a label would be absent from one side of the split");
    }
    return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------
// Synthetic crowd texture
// ---------------------------------------------------------------------------

namespace {

// Reference person-count ranges per 96x96 block, from the density table made
// total (the 17-26 gap folds into High).
constexpr std::array<std::pair<int, int>, kLabelCount> kReferenceCounts{{
    {0, 6}, {7, 10}, {11, 16}, {17, 26},
}};
constexpr double kReferenceArea = 96.0 * 96.0;

} // namespace

std::pair<int, int> synth_blob_count_range(DensityLabel label, int width, int height) {
    const double scale = static_cast<double>(width) * height / kReferenceArea;
    std::array<std::pair<int, int>, kLabelCount> scaled;
    int prev_hi = -1;
    for (std::size_t i = 0; i < kLabelCount; ++i) {
        int lo = static_cast<int>(std::ceil(kReferenceCounts[i].first * scale));
        int hi = static_cast<int>(std::floor(kReferenceCounts[i].second * scale));
        lo = std::max(lo, prev_hi + 1); // keep ranges disjoint after scaling
        hi = std::max(hi, lo);
        scaled[i] = {lo, hi};
        prev_hi = hi;
    }
    return scaled[static_cast<std::size_t>(label)];
}

GrayImage synth_crowd_region(DensityLabel label, int width, int height, std::uint64_t seed) {
    if (width < 8 || height < 8) raise(Errc::invalid_config, "synthetic region must be >= 8 px");
    Rng rng(seed);

    const double background = 175.0 + rng.uniform(-10.0, 10.0);
    GrayImage img(width, height, background);

    const auto [lo, hi] = synth_blob_count_range(label, width, height);
    const int blobs = static_cast<int>(rng.range(lo, hi));
    for (int b = 0; b < blobs; ++b) {
        const double cx = rng.uniform(0.0, width);
        const double cy = rng.uniform(0.0, height);
        const double major = rng.uniform(3.0, 6.0); // head/shoulder half-axis, 6-12 px across
        const double minor = major * rng.uniform(0.6, 1.0);
        const double theta = rng.uniform(0.0, std::numbers::pi);
        const double gray = rng.uniform(40.0, 90.0);
        const double cos_t = std::cos(theta), sin_t = std::sin(theta);
        const int radius = static_cast<int>(std::ceil(major)) + 1;
        for (int y = std::max(0, static_cast<int>(cy) - radius);
             y <= std::min(height - 1, static_cast<int>(cy) + radius); ++y) {
            for (int x = std::max(0, static_cast<int>(cx) - radius);
                 x <= std::min(width - 1, static_cast<int>(cx) + radius); ++x) {
                const double dx = x - cx, dy = y - cy;
                const double u = (dx * cos_t + dy * sin_t) / major;
                const double v = (-dx * sin_t + dy * cos_t) / minor;
                if (u * u + v * v <= 1.0) img.at(x, y) = std::min(img.at(x, y), gray);
            }
        }
    }

    for (double& px : img.pixels) {
        px = std::clamp(px + 4.0 * rng.normal(), 0.0, 255.0);
    }
    return img;
}

GrayImage synth_crowd_texture(DensityLabel label, int size, std::uint64_t seed) {
    if (size < 64) raise(Errc::invalid_config, "synthetic block size must be >= 64");
    return synth_crowd_region(label, size, size, seed);
}

Manifest synth_corpus(const SynthConfig& config, const std::filesystem::path& out_dir) {
    if (config.per_class < 1) raise(Errc::invalid_config, "per_class must be >= 1");
    if (config.frame_size < config.block_size) {
        raise(Errc::invalid_config, "frame_size must be >= block_size");
    }
    std::filesystem::create_directories(out_dir);

    const BlockGrid grid = partition_blocks(config.frame_size, config.frame_size, config.block_size);
    const int blocks_per_frame = static_cast<int>(grid.blocks.size());
    const int frames_per_class =
        (config.per_class + blocks_per_frame - 1) / blocks_per_frame;

    Manifest manifest;
    manifest.root = out_dir;
    manifest.source = "synthetic";
    manifest.block_size = config.block_size;

    for (int c = 0; c < kLabelCount; ++c) {
        const auto label = static_cast<DensityLabel>(c);
        int annotated = 0;
        for (int f = 0; f < frames_per_class; ++f) {
            GrayImage frame(config.frame_size, config.frame_size);
            // Fill every block region at the class density so frames are
            // homogeneous; only the first per_class blocks become samples.
            for (int b = 0; b < blocks_per_frame; ++b) {
                const Rect& r = grid.blocks[static_cast<std::size_t>(b)];
                const GrayImage region = synth_crowd_region(
                    label, r.w, r.h,
                    derive_seed(config.seed, {static_cast<std::uint64_t>(c),
                                              static_cast<std::uint64_t>(f),
                                              static_cast<std::uint64_t>(b)}));
                for (int y = 0; y < r.h; ++y) {
                    for (int x = 0; x < r.w; ++x) frame.at(r.x + x, r.y + y) = region.at(x, y);
                }
            }

            std::ostringstream name;
            name << label_code(label) << "_" << std::setw(4) << std::setfill('0') << f << ".pgm";
            const std::string frame_id = name.str();
            save_pgm(frame, out_dir / frame_id);

            FrameEntry entry;
            entry.frame_id = frame_id;
            entry.frame_path = out_dir / frame_id;
            entry.width = config.frame_size;
            entry.height = config.frame_size;
            for (int b = 0; b < blocks_per_frame && annotated < config.per_class; ++b, ++annotated) {
                BlockAnnotation ann;
                ann.frame_id = frame_id;
                ann.block = grid.blocks[static_cast<std::size_t>(b)];
                ann.label = label;
                entry.annotations.push_back(std::move(ann));
            }
            manifest.entries.push_back(std::move(entry));
        }
    }

    save_manifest(manifest, out_dir / "manifest.txt");
    return manifest;
}

} // namespace crowdtex
