#pragma once

// Run configuration file: UTF-8, one `key = value` per line, `#` starts a
// comment, optional `[encoder]`, `[train]`, `[loss]` section headers.
// Values are numbers or true/false. Unknown keys are errors.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "tepinn/losses.hpp"
#include "tepinn/trainer.hpp"
#include "tepinn/transformer.hpp"

namespace tepinn {

struct RunConfig {
    EncoderConfig encoder;
    TrainConfig train;
    LossWeights weights;
    /// Seed for the initial encoder weights.
    std::uint64_t init_seed = 0;

    void validate() const;
};

/// Throws Parse with the offending line number.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);
/// Canonical text form; parse_config(format_config(c)) reproduces c exactly.
std::string format_config(const RunConfig& c);

}  // namespace tepinn
