#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "groupenc/checkpoint.hpp"
#include "groupenc/models.hpp"
#include "groupenc/nn.hpp"

namespace groupenc {

struct TrainConfig {
    std::uint64_t epochs = 500;
    std::size_t batch_size = 512;
    AdamConfig adam;
    std::uint64_t seed = 1;
    std::uint64_t log_every = 0;  // epochs between progress lines, 0 = silent
    std::optional<std::string> checkpoint_path;
};

struct EpochRecord {
    std::uint64_t epoch = 0;
    LossBreakdown mean_loss;       // averaged over the epoch's batches
    double seconds = 0.0;          // cumulative wall clock since start
    std::size_t degenerate_groups = 0;
};

struct TrainLog {
    std::vector<EpochRecord> epochs;
    double total_seconds = 0.0;
};

/// Delimited text: header epoch,total,primary,kl,seconds.
void write_train_log(std::ostream& out, const TrainLog& log);

struct TrainedModel {
    ModelConfig config;
    ModelParams params;
    TrainLog log;
};

/// Full training loop: epoch-wise reshuffling from the "shuffle" stream,
/// Adam updates per batch, a final short batch kept when it still holds a
/// full group. Deterministic given (config, train config, data). Writes a
/// checkpoint at the end when checkpoint_path is set.
TrainedModel train(const ModelConfig& model_config, const TrainConfig& train_config,
                   const DenseMatrix& data, std::ostream* progress = nullptr);

/// Continues a checkpointed run up to train_config.epochs total epochs.
/// A checkpoint that already reached the target is returned unchanged.
/// Splitting a run across train/resume yields bit-identical parameters to
/// one straight run with the same seed schedule.
TrainedModel resume(const std::string& checkpoint_path, const TrainConfig& train_config,
                    const DenseMatrix& data, std::ostream* progress = nullptr);

} // namespace groupenc
