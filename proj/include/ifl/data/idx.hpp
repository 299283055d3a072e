#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ifl/tensor.hpp"

namespace ifl::data {

// IDX binary format: big-endian u32 magic (0x803 images / 0x801 labels),
// big-endian counts, then raw unsigned bytes. Pixels are scaled to [0,1].

Tensor<float> parse_idx_images(std::span<const std::uint8_t> bytes);
std::vector<int> parse_idx_labels(std::span<const std::uint8_t> bytes);

// Inverse of the parsers; round-trips the original byte stream exactly.
std::vector<std::uint8_t> to_idx_images(const Tensor<float>& images);
std::vector<std::uint8_t> to_idx_labels(std::span<const int> labels);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace ifl::data
