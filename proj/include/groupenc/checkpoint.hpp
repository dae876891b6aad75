#pragma once

#include <cstdint>
#include <string>

#include "groupenc/models.hpp"

namespace groupenc {

// Binary model checkpoint ("GENC" container): a key-value text block with
// the model config, optional training state (epoch counter and RNG stream
// states), then per network the layer dims followed by row-major 64-bit
// little-endian weights and biases in layer order, then the Adam moments.
// Round-trips are bit-exact.

struct TrainState {
    bool present = false;
    std::uint64_t epochs_done = 0;
    std::uint64_t shuffle_state = 0;
    std::uint64_t groups_state = 0;
    std::uint64_t noise_state = 0;
};

struct Checkpoint {
    ModelConfig config;
    ModelParams params;
    TrainState train_state;
};

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);

/// Throws FormatError on bad magic, version, or truncated content.
Checkpoint load_checkpoint(const std::string& path);

std::string serialize_model_config(const ModelConfig& config);
ModelConfig parse_model_config(const std::string& text);

} // namespace groupenc
