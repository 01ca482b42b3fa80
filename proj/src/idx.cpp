#include "tfk3d/idx.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace tfk3d {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

[[noreturn]] void idx_fail(const std::string& path, std::size_t offset, const std::string& what) {
    throw std::runtime_error(path + ": " + what + " (byte offset " + std::to_string(offset) + ")");
}

std::uint32_t read_u32_be(std::ifstream& in, const std::string& path, std::size_t& offset,
                          const char* field) {
    unsigned char buf[4];
    if (!in.read(reinterpret_cast<char*>(buf), 4)) {
        idx_fail(path, offset, std::string("truncated header while reading ") + field);
    }
    offset += 4;
    return (static_cast<std::uint32_t>(buf[0]) << 24) | (static_cast<std::uint32_t>(buf[1]) << 16) |
           (static_cast<std::uint32_t>(buf[2]) << 8) | static_cast<std::uint32_t>(buf[3]);
}

std::ifstream open_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path + ": cannot open file");
    return in;
}

void read_payload(std::ifstream& in, const std::string& path, std::size_t offset,
                  std::vector<std::uint8_t>& out) {
    if (!out.empty() &&
        !in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size()))) {
        idx_fail(path, offset + static_cast<std::size_t>(in.gcount()),
                 "truncated payload, expected " + std::to_string(out.size()) + " bytes");
    }
    in.peek();
    if (!in.eof()) idx_fail(path, offset + out.size(), "trailing bytes after payload");
}

}  // namespace

IdxImages read_idx_images(const std::string& path) {
    std::ifstream in = open_file(path);
    std::size_t offset = 0;
    const std::uint32_t magic = read_u32_be(in, path, offset, "magic");
    if (magic != kImagesMagic) {
        idx_fail(path, 0,
                 "wrong magic for an image file: expected 0x00000803, got 0x" +
                     [&] {
                         char buf[16];
                         std::snprintf(buf, sizeof buf, "%08x", magic);
                         return std::string(buf);
                     }());
    }
    IdxImages images;
    images.count = read_u32_be(in, path, offset, "image count");
    images.rows = read_u32_be(in, path, offset, "row count");
    images.cols = read_u32_be(in, path, offset, "column count");
    images.pixels.resize(static_cast<std::size_t>(images.count * images.rows * images.cols));
    read_payload(in, path, offset, images.pixels);
    return images;
}

IdxLabels read_idx_labels(const std::string& path) {
    std::ifstream in = open_file(path);
    std::size_t offset = 0;
    const std::uint32_t magic = read_u32_be(in, path, offset, "magic");
    if (magic != kLabelsMagic) {
        idx_fail(path, 0,
                 "wrong magic for a label file: expected 0x00000801, got 0x" +
                     [&] {
                         char buf[16];
                         std::snprintf(buf, sizeof buf, "%08x", magic);
                         return std::string(buf);
                     }());
    }
    IdxLabels labels;
    const std::uint32_t count = read_u32_be(in, path, offset, "label count");
    labels.labels.resize(count);
    read_payload(in, path, offset, labels.labels);
    return labels;
}

}  // namespace tfk3d
