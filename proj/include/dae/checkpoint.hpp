#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dae/network.hpp"

namespace dae {

// Layout (all integers and floats little-endian):
//   magic "DAECKPT\0" | u32 version | u32 layer count
//   per layer: u32 kind, activation, kernel_h, kernel_w, in_channels, out_channels
//   u64 parameter count | per conv block: kernels then biases as f32
//   u32 CRC-32 of every preceding byte
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct ModelCheckpoint {
    Architecture arch;
    NetworkParams params;
};

std::vector<unsigned char> encode_checkpoint(const NetworkParams& params, const Architecture& arch);
/// Throws CheckpointError: checksum_mismatch (including truncation), bad_magic,
/// version_mismatch, or malformed.
ModelCheckpoint decode_checkpoint(std::span<const unsigned char> bytes);

void save_checkpoint(const NetworkParams& params, const Architecture& arch, const std::filesystem::path& path);
ModelCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dae
