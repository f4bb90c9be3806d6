#pragma once

// Binary checkpoint container:
//   8 bytes  magic "TEPINNCK"
//   u32      format version (little-endian)
//   u64      header length in bytes
//   header   UTF-8 JSON: configs, progress counters and a tensor table
//            (name, shape, offset in doubles)
//   payload  row-major float64 values, little-endian
// Values are stored as raw IEEE-754 bits, so the round trip is bit-exact.

#include <cstdint>
#include <filesystem>

#include "tepinn/trainer.hpp"

namespace tepinn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    ModelParams model;
    TrainConfig train;
    LossWeights weights;
    OptimizerState optimizer;
    std::size_t epoch = 0;
    std::size_t step_in_epoch = 0;
    /// Seed used to initialize the encoder weights.
    std::uint64_t init_seed = 0;
};

/// Written atomically. Throws Io.
void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
/// Throws Io, Parse, or VersionMismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string encode_checkpoint(const Checkpoint& ck);
Checkpoint decode_checkpoint(std::string_view bytes);

}  // namespace tepinn
