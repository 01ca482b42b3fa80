#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tfk3d {

/// Decoded IDX image file: `count` row-major rows*cols images of unsigned
/// bytes, in file order.
struct IdxImages {
    std::int64_t count = 0;
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::vector<std::uint8_t> pixels;
};

struct IdxLabels {
    std::vector<std::uint8_t> labels;
};

/// Parses an IDX image file (big-endian magic 0x00000803, count, rows,
/// cols, then raw bytes). Rejects wrong magic, truncation, and size
/// mismatches with byte-offset diagnostics.
IdxImages read_idx_images(const std::string& path);

/// Parses an IDX label file (big-endian magic 0x00000801, count, bytes).
IdxLabels read_idx_labels(const std::string& path);

}  // namespace tfk3d
