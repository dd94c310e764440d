#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "dcmr/trainer.hpp"

namespace dcmr {

// Checkpoint file layout (little-endian):
//   "DCMR" | u32 version | u64 header bytes | header | tensor payload
// The header is canonical JSON (sorted keys, no timestamps) holding both
// configs, optimizer step, RNG states, loss history and a tensor directory of
// {name, dtype, shape, offset, bytes}. Offsets are relative to the payload.
inline constexpr char kCheckpointMagic[4] = {'D', 'C', 'M', 'R'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_checkpoint(const Checkpoint& ckpt);
/// Throws FormatError on corruption and IncompatibleError when `expected`
/// is given and differs (the message names the first differing field).
Checkpoint decode_checkpoint(const std::string& bytes, const std::string& source = "<memory>",
                             const std::optional<DenoiserConfig>& expected = std::nullopt);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const std::optional<DenoiserConfig>& expected = std::nullopt);

}  // namespace dcmr
