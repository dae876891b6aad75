#pragma once

#include <cstdint>
#include <vector>

#include "groupenc/matrix.hpp"
#include "groupenc/rng.hpp"

namespace groupenc {

// Feed-forward networks with explicit reverse-mode gradients. Hidden
// layers are relu, the output layer is linear.

struct NetworkSpec {
    Index input_dim = 0;
    std::vector<Index> hidden_sizes;
    Index output_dim = 0;

    std::size_t layer_count() const { return hidden_sizes.size() + 1; }
    Index layer_input_dim(std::size_t layer) const;
    Index layer_output_dim(std::size_t layer) const;
    std::size_t parameter_count() const;
};

/// One affine layer's weights and bias together with its Adam moments.
struct LayerParams {
    DenseMatrix weight;        // input_dim x output_dim
    std::vector<double> bias;  // output_dim
    DenseMatrix weight_m, weight_v;
    std::vector<double> bias_m, bias_v;
};

struct NetworkParams {
    std::vector<LayerParams> layers;
    std::uint64_t adam_step_count = 0;
};

struct NetworkGrads {
    std::vector<DenseMatrix> weight;
    std::vector<std::vector<double>> bias;
};

/// Activations cached by forward() for the exact reverse pass.
struct ForwardTape {
    std::vector<DenseMatrix> layer_inputs;     // input to each layer
    std::vector<DenseMatrix> pre_activations;  // affine output before relu
    bool valid = false;
};

struct AdamConfig {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// He fan-in weights for relu hidden layers, 1/fan_in for the linear
/// output layer, zero biases, zeroed Adam state.
NetworkParams init_params(const NetworkSpec& spec, SeededRng& rng);

DenseMatrix forward(const NetworkSpec& spec, const NetworkParams& params,
                    const DenseMatrix& batch, ForwardTape* tape = nullptr);

/// Reverse pass for the forward() call that produced `tape`. Returns the
/// gradients of the scalar loss whose output-gradient is supplied;
/// `input_grad`, when non-null, receives d(loss)/d(batch).
NetworkGrads backward(const NetworkSpec& spec, const NetworkParams& params,
                      const ForwardTape& tape, const DenseMatrix& output_grad,
                      DenseMatrix* input_grad = nullptr);

/// One Adam step with bias correction. Throws NumericError on non-finite
/// gradients. Applies nothing to layers whose gradients are all zero when
/// the moment state is also zero.
void adam_step(NetworkParams& params, const NetworkGrads& grads, const AdamConfig& config);

// --- variational head -----------------------------------------------------

constexpr double kLogVarClampMin = -15.0;
constexpr double kLogVarClampMax = 15.0;

/// z = mu + exp(0.5 * logvar) . epsilon, with logvar clamped to
/// [-15, 15] before exponentiation. All four tensors are stored so the
/// reverse pass is exact.
struct LatentSample {
    DenseMatrix mu;
    DenseMatrix logvar;  // clamped
    DenseMatrix epsilon;
    DenseMatrix z;
};

LatentSample sample_latent(const DenseMatrix& mu, const DenseMatrix& logvar, SeededRng& noise);

/// Same, with caller-supplied noise (frozen-noise gradient checks).
LatentSample sample_latent_with_epsilon(const DenseMatrix& mu, const DenseMatrix& logvar,
                                        DenseMatrix epsilon);

struct KlResult {
    double loss = 0.0;
    DenseMatrix mu_grad;
    DenseMatrix logvar_grad;
};

/// Batch-mean, dimension-summed KL divergence to the standard normal:
/// mean_rows( -0.5 * sum_dims(1 + logvar - mu^2 - exp(logvar)) ).
KlResult kl_to_standard_normal(const DenseMatrix& mu, const DenseMatrix& logvar);

struct MseResult {
    double loss = 0.0;
    DenseMatrix grad;  // w.r.t. reconstruction
};

/// Mean over all entries of (reconstruction - target)^2.
MseResult mse_loss(const DenseMatrix& reconstruction, const DenseMatrix& target);

} // namespace groupenc
