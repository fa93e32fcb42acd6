#pragma once

#include <cstdint>
#include <filesystem>

#include "idcrn/encoder.hpp"

namespace idcrn {

// Checkpoint container (little-endian):
//   char[8]  magic "IDCRNCKP"
//   u32      format version (1)
//   u64      input_dim, u64 latent_dim, u32 hidden count, u64 hidden dims...
//   u8       graph branch enabled, u8 attribute branch enabled
//   u32      parameter block count
//   per block: u64 rows, u64 cols
//   per block: rows * cols f64, row-major, in EncoderState::parameters() order
// A sidecar "<path>.manifest" lists every block name with its shape and the
// FNV-1a 64 hash of the parameter payload.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const EncoderState& state, const std::filesystem::path& path);
EncoderState load_checkpoint(const std::filesystem::path& path);

/// FNV-1a 64-bit hash of the row-major f64 parameter payload.
std::uint64_t parameter_hash(const EncoderState& state);

}  // namespace idcrn
