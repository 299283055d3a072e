#include "ifl/data/idx.hpp"

#include <cmath>
#include <fstream>

#include "ifl/errors.hpp"

namespace ifl::data {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
    return (std::uint32_t(bytes[offset]) << 24) | (std::uint32_t(bytes[offset + 1]) << 16) |
           (std::uint32_t(bytes[offset + 2]) << 8) | std::uint32_t(bytes[offset + 3]);
}

void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

}  // namespace

Tensor<float> parse_idx_images(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 16) throw DataError("IDX images: header truncated");
    const std::uint32_t magic = read_be32(bytes, 0);
    if (magic != kImagesMagic)
        throw DataError("IDX images: bad magic 0x" + [&] {
            char buf[16];
            std::snprintf(buf, sizeof(buf), "%08x", magic);
            return std::string(buf);
        }());
    const std::uint32_t n = read_be32(bytes, 4);
    const std::uint32_t rows = read_be32(bytes, 8);
    const std::uint32_t cols = read_be32(bytes, 12);
    const std::size_t expected = 16 + std::size_t(n) * rows * cols;
    if (bytes.size() < expected) throw DataError("IDX images: payload truncated");
    if (bytes.size() > expected) throw DataError("IDX images: trailing bytes");

    Tensor<float> images = Tensor<float>::zeros(
        {static_cast<Index>(n), 1, static_cast<Index>(rows), static_cast<Index>(cols)});
    const std::uint8_t* src = bytes.data() + 16;
    for (Index i = 0; i < images.numel(); ++i)
        images.data[i] = static_cast<float>(src[i]) / 255.0f;
    return images;
}

std::vector<int> parse_idx_labels(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8) throw DataError("IDX labels: header truncated");
    const std::uint32_t magic = read_be32(bytes, 0);
    if (magic != kLabelsMagic) throw DataError("IDX labels: bad magic");
    const std::uint32_t n = read_be32(bytes, 4);
    const std::size_t expected = 8 + std::size_t(n);
    if (bytes.size() < expected) throw DataError("IDX labels: payload truncated");
    if (bytes.size() > expected) throw DataError("IDX labels: trailing bytes");

    std::vector<int> labels(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        labels[i] = bytes[8 + i];
        if (labels[i] > 9)
            throw DataError("IDX labels: label " + std::to_string(labels[i]) +
                            " out of range for a 10-class set");
    }
    return labels;
}

std::vector<std::uint8_t> to_idx_images(const Tensor<float>& images) {
    if (images.rank() != 4 || images.dim(1) != 1)
        throw DataError("to_idx_images: tensor " + shape_str(images.shape) +
                        " is not [n,1,rows,cols]");
    std::vector<std::uint8_t> out;
    out.reserve(16 + static_cast<std::size_t>(images.numel()));
    write_be32(out, kImagesMagic);
    write_be32(out, static_cast<std::uint32_t>(images.dim(0)));
    write_be32(out, static_cast<std::uint32_t>(images.dim(2)));
    write_be32(out, static_cast<std::uint32_t>(images.dim(3)));
    for (Index i = 0; i < images.numel(); ++i)
        out.push_back(static_cast<std::uint8_t>(std::lround(images.data[i] * 255.0f)));
    return out;
}

std::vector<std::uint8_t> to_idx_labels(std::span<const int> labels) {
    std::vector<std::uint8_t> out;
    out.reserve(8 + labels.size());
    write_be32(out, kLabelsMagic);
    write_be32(out, static_cast<std::uint32_t>(labels.size()));
    for (int y : labels) out.push_back(static_cast<std::uint8_t>(y));
    return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary | std::ios::ate);
    if (!is) throw DataError("cannot open " + path.string());
    const std::streamsize size = is.tellg();
    is.seekg(0);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
    if (!is.read(reinterpret_cast<char*>(bytes.data()), size))
        throw DataError("short read from " + path.string());
    return bytes;
}

}  // namespace ifl::data
