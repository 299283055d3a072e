#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ifl/block.hpp"
#include "ifl/errors.hpp"

// Flat binary weight format "MFW1":
//   magic "MFW1", u32 layer count, then per layer:
//     u32 kind tag, and for parameterized kinds each tensor as
//     u32 rank, u32 dims..., raw float32 data.
// All integers and floats are little-endian.

namespace ifl {

static_assert(std::endian::native == std::endian::little,
              "MFW1 serialization assumes a little-endian host");

namespace detail {

inline constexpr char kMfwMagic[4] = {'M', 'F', 'W', '1'};

inline std::uint32_t kind_tag(LayerKind k) {
    switch (k) {
        case LayerKind::dense: return 1;
        case LayerKind::conv2d: return 2;
        case LayerKind::maxpool2d: return 3;
        case LayerKind::relu: return 4;
        case LayerKind::flatten: return 5;
    }
    throw std::invalid_argument("kind_tag: unknown layer kind");
}

inline LayerKind kind_from_tag(std::uint32_t tag) {
    switch (tag) {
        case 1: return LayerKind::dense;
        case 2: return LayerKind::conv2d;
        case 3: return LayerKind::maxpool2d;
        case 4: return LayerKind::relu;
        case 5: return LayerKind::flatten;
    }
    throw DataError("MFW1: unknown layer kind tag " + std::to_string(tag));
}

inline void write_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

inline std::uint32_t read_u32(std::istream& is) {
    std::uint32_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), sizeof(v))) throw DataError("MFW1: truncated file");
    return v;
}

inline void write_tensor(std::ostream& os, const Tensor<float>& t) {
    write_u32(os, static_cast<std::uint32_t>(t.rank()));
    for (Index d : t.shape) write_u32(os, static_cast<std::uint32_t>(d));
    os.write(reinterpret_cast<const char*>(t.data.data()),
             static_cast<std::streamsize>(t.numel()) * static_cast<std::streamsize>(sizeof(float)));
}

inline Tensor<float> read_tensor(std::istream& is) {
    const std::uint32_t rank = read_u32(is);
    if (rank > 8) throw DataError("MFW1: implausible tensor rank " + std::to_string(rank));
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<Index>(read_u32(is));
    Tensor<float> t = Tensor<float>::zeros(std::move(shape));
    if (!is.read(reinterpret_cast<char*>(t.data.data()),
                 static_cast<std::streamsize>(t.numel()) *
                     static_cast<std::streamsize>(sizeof(float))))
        throw DataError("MFW1: truncated tensor data");
    return t;
}

}  // namespace detail

inline void save_block(const Block<float>& block, std::ostream& os) {
    os.write(detail::kMfwMagic, 4);
    detail::write_u32(os, static_cast<std::uint32_t>(block.layers.size()));
    for (const auto& layer : block.layers) {
        detail::write_u32(os, detail::kind_tag(kind_of(layer)));
        for_each_param(layer, [&](const Tensor<float>& t) { detail::write_tensor(os, t); });
    }
    if (!os) throw DataError("MFW1: write failed");
}

inline Block<float> load_block(std::istream& is) {
    char magic[4] = {};
    if (!is.read(magic, 4) || std::memcmp(magic, detail::kMfwMagic, 4) != 0)
        throw DataError("MFW1: bad magic bytes");
    const std::uint32_t n_layers = detail::read_u32(is);
    Block<float> block;
    block.layers.reserve(n_layers);
    for (std::uint32_t i = 0; i < n_layers; ++i) {
        const LayerKind kind = detail::kind_from_tag(detail::read_u32(is));
        switch (kind) {
            case LayerKind::dense: {
                DenseLayer<float> l;
                l.weight = detail::read_tensor(is);
                l.bias = detail::read_tensor(is);
                if (l.weight.rank() != 2 || l.bias.rank() != 1 || l.bias.dim(0) != l.weight.dim(0))
                    throw DataError("MFW1: inconsistent dense parameter shapes");
                block.layers.push_back(std::move(l));
                break;
            }
            case LayerKind::conv2d: {
                Conv2dLayer<float> l;
                l.weight = detail::read_tensor(is);
                l.bias = detail::read_tensor(is);
                if (l.weight.rank() != 4 || l.bias.rank() != 1 || l.bias.dim(0) != l.weight.dim(0))
                    throw DataError("MFW1: inconsistent conv2d parameter shapes");
                block.layers.push_back(std::move(l));
                break;
            }
            case LayerKind::maxpool2d: block.layers.push_back(MaxPool2dLayer<float>{}); break;
            case LayerKind::relu: block.layers.push_back(ReluLayer<float>{}); break;
            case LayerKind::flatten: block.layers.push_back(FlattenLayer<float>{}); break;
        }
    }
    if (is.peek() != std::char_traits<char>::eof()) throw DataError("MFW1: trailing bytes");
    return block;
}

inline void save_block(const Block<float>& block, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot open " + path.string() + " for writing");
    save_block(block, os);
}

inline Block<float> load_block(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open " + path.string());
    return load_block(is);
}

inline std::string block_to_bytes(const Block<float>& block) {
    std::ostringstream os(std::ios::binary);
    save_block(block, os);
    return os.str();
}

}  // namespace ifl
