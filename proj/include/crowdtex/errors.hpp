#pragma once

#include <stdexcept>
#include <string>

namespace crowdtex {

enum class Errc {
    file_not_found,
    unsupported_format,
    corrupt_image,
    block_too_large,
    cell_too_large,
    out_of_bounds,
    image_too_small,
    empty_cell,
    region_too_small,
    dimension_mismatch,
    single_class,
    insufficient_samples,
    insufficient_data,
    parse_error,
    inconsistent_label,
    missing_frame,
    io_error,
    version_mismatch,
    checksum_mismatch,
    length_mismatch,
    empty,
    count_mismatch,
    invalid_config,
};

const char* errc_name(Errc c);

/// All recoverable failures carry a machine-readable code plus detail text.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& detail)
        : std::runtime_error(std::string(errc_name(code)) + ": " + detail), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& detail) {
    throw Error(code, detail);
}

} // namespace crowdtex
