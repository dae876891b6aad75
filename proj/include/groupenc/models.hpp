#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "groupenc/group_loss.hpp"
#include "groupenc/matrix.hpp"
#include "groupenc/nn.hpp"
#include "groupenc/rng.hpp"

namespace groupenc {

// The two trainable systems. GroupEnc is a variational encoder plus
// sampler trained on group loss + KL; the baseline VAE adds a decoder and
// trains on MSE + KL. Both use the same encoder trunk with a linear head
// producing mu and logvar side by side.

enum class ModelKind : std::uint8_t { groupenc, vae };

const char* model_kind_name(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

struct ModelConfig {
    ModelKind kind = ModelKind::groupenc;
    Index input_dim = 0;
    Index latent_dim = 2;
    std::uint32_t gamma = 4;       // groupenc only
    double kl_weight = 1.0;
    GroupStrategy group_strategy = GroupStrategy::headed;
    std::vector<Index> encoder_hidden = {32, 64, 128, 32};
    std::vector<Index> decoder_hidden = {32, 128, 64, 32};

    void validate() const;
};

/// Encoder maps input_dim -> hidden -> 2*latent_dim (mu | logvar).
NetworkSpec encoder_spec(const ModelConfig& config);

/// Decoder maps latent_dim -> hidden -> input_dim.
NetworkSpec decoder_spec(const ModelConfig& config);

struct ModelParams {
    NetworkParams encoder;
    NetworkParams decoder;  // unused for groupenc
};

ModelParams init_model(const ModelConfig& config, SeededRng& init);

struct LossBreakdown {
    double total = 0.0;
    double primary_term = 0.0;  // group loss or MSE
    double kl_term = 0.0;
};

struct ModelGrads {
    NetworkGrads encoder;
    NetworkGrads decoder;
};

struct StepResult {
    LossBreakdown loss;
    ModelGrads grads;
    std::size_t degenerate_groups = 0;
};

/// One GroupEnc step: encoder -> sampler -> group loss + KL, with exact
/// gradients for the encoder parameters. Group assignment comes from the
/// "groups" stream and noise from the "noise" stream.
StepResult groupenc_training_step(const ModelConfig& config, const ModelParams& params,
                                  const DenseMatrix& hd_batch, SeededRng& groups_stream,
                                  SeededRng& noise_stream);

/// Deterministic variant with caller-supplied assignment and noise;
/// groupenc_training_step delegates here. Used directly by gradient checks.
StepResult groupenc_training_step_fixed(const ModelConfig& config, const ModelParams& params,
                                        const DenseMatrix& hd_batch,
                                        const GroupAssignment& assignment,
                                        DenseMatrix epsilon);

/// One VAE step: encoder -> sampler -> decoder -> MSE vs the input + KL.
StepResult vae_training_step(const ModelConfig& config, const ModelParams& params,
                             const DenseMatrix& hd_batch, SeededRng& noise_stream);

StepResult vae_training_step_fixed(const ModelConfig& config, const ModelParams& params,
                                   const DenseMatrix& hd_batch, DenseMatrix epsilon);

/// Deterministic inference: the posterior mean head, no sampling.
DenseMatrix embed(const ModelConfig& config, const ModelParams& params, const DenseMatrix& data);

} // namespace groupenc
