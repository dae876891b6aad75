#include "groupenc/nn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "groupenc/errors.hpp"
#include "groupenc/kernels.hpp"

namespace groupenc {

Index NetworkSpec::layer_input_dim(std::size_t layer) const {
    return layer == 0 ? input_dim : hidden_sizes[layer - 1];
}

Index NetworkSpec::layer_output_dim(std::size_t layer) const {
    return layer == hidden_sizes.size() ? output_dim : hidden_sizes[layer];
}

std::size_t NetworkSpec::parameter_count() const {
    std::size_t count = 0;
    for (std::size_t l = 0; l < layer_count(); ++l) {
        count += layer_input_dim(l) * layer_output_dim(l) + layer_output_dim(l);
    }
    return count;
}

NetworkParams init_params(const NetworkSpec& spec, SeededRng& rng) {
    if (spec.input_dim == 0 || spec.output_dim == 0) {
        throw ConfigError("init_params: zero input or output dimension");
    }
    NetworkParams params;
    params.layers.resize(spec.layer_count());
    for (std::size_t l = 0; l < spec.layer_count(); ++l) {
        const Index in = spec.layer_input_dim(l);
        const Index out = spec.layer_output_dim(l);
        const bool relu_layer = l + 1 < spec.layer_count();
        const double stddev = std::sqrt((relu_layer ? 2.0 : 1.0) / static_cast<double>(in));
        LayerParams& layer = params.layers[l];
        layer.weight = DenseMatrix(in, out);
        for (double& w : layer.weight.data()) {
            w = stddev * rng.next_normal();
        }
        layer.bias.assign(out, 0.0);
        layer.weight_m = DenseMatrix(in, out);
        layer.weight_v = DenseMatrix(in, out);
        layer.bias_m.assign(out, 0.0);
        layer.bias_v.assign(out, 0.0);
    }
    return params;
}

DenseMatrix forward(const NetworkSpec& spec, const NetworkParams& params,
                    const DenseMatrix& batch, ForwardTape* tape) {
    if (batch.cols() != spec.input_dim) {
        throw ShapeError("forward: batch has " + std::to_string(batch.cols()) +
                         " columns, spec expects " + std::to_string(spec.input_dim));
    }
    if (params.layers.size() != spec.layer_count()) {
        throw StateError("forward: params do not match spec layer count");
    }
    if (tape != nullptr) {
        tape->layer_inputs.clear();
        tape->pre_activations.clear();
        tape->valid = false;
    }

    DenseMatrix activation = batch;
    for (std::size_t l = 0; l < spec.layer_count(); ++l) {
        const LayerParams& layer = params.layers[l];
        if (tape != nullptr) {
            tape->layer_inputs.push_back(activation);
        }
        DenseMatrix pre = matmul(activation, layer.weight);
        for (Index i = 0; i < pre.rows(); ++i) {
            double* row = pre.row_ptr(i);
            for (Index j = 0; j < pre.cols(); ++j) {
                row[j] += layer.bias[j];
            }
        }
        const bool relu_layer = l + 1 < spec.layer_count();
        if (tape != nullptr) {
            tape->pre_activations.push_back(pre);
        }
        if (relu_layer) {
            for (double& v : pre.data()) {
                v = v > 0.0 ? v : 0.0;
            }
        }
        activation = std::move(pre);
    }
    if (tape != nullptr) {
        tape->valid = true;
    }
    return activation;
}

NetworkGrads backward(const NetworkSpec& spec, const NetworkParams& params,
                      const ForwardTape& tape, const DenseMatrix& output_grad,
                      DenseMatrix* input_grad) {
    if (!tape.valid || tape.layer_inputs.size() != spec.layer_count()) {
        throw StateError("backward: missing or stale forward tape");
    }
    if (output_grad.rows() != tape.pre_activations.back().rows() ||
        output_grad.cols() != spec.output_dim) {
        throw ShapeError("backward: output_grad shape mismatch");
    }

    NetworkGrads grads;
    grads.weight.resize(spec.layer_count());
    grads.bias.resize(spec.layer_count());

    DenseMatrix delta = output_grad;
    for (std::size_t l = spec.layer_count(); l-- > 0;) {
        const LayerParams& layer = params.layers[l];
        const bool relu_layer = l + 1 < spec.layer_count();
        if (relu_layer) {
            const DenseMatrix& pre = tape.pre_activations[l];
            for (Index i = 0; i < delta.size(); ++i) {
                if (pre.data()[i] <= 0.0) {
                    delta.data()[i] = 0.0;
                }
            }
        }
        grads.weight[l] = matmul_transpose_a(tape.layer_inputs[l], delta);
        std::vector<double> bias_grad(delta.cols(), 0.0);
        for (Index i = 0; i < delta.rows(); ++i) {
            kernels::axpy(bias_grad.data(), 1.0, delta.row_ptr(i), delta.cols());
        }
        grads.bias[l] = std::move(bias_grad);
        if (l > 0 || input_grad != nullptr) {
            DenseMatrix next = matmul_transpose_b(delta, layer.weight);
            if (l == 0 && input_grad != nullptr) {
                *input_grad = std::move(next);
            } else {
                delta = std::move(next);
            }
        }
    }
    return grads;
}

namespace {

bool all_finite(std::span<const double> values) {
    for (double v : values) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

} // namespace

void adam_step(NetworkParams& params, const NetworkGrads& grads, const AdamConfig& config) {
    if (grads.weight.size() != params.layers.size()) {
        throw ShapeError("adam_step: gradient layer count mismatch");
    }
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        if (!all_finite(grads.weight[l].data()) || !all_finite(grads.bias[l])) {
            throw NumericError("adam_step: non-finite gradient in layer " + std::to_string(l));
        }
    }
    params.adam_step_count += 1;
    const double t = static_cast<double>(params.adam_step_count);
    const double inv_bc1 = 1.0 / (1.0 - std::pow(config.beta1, t));
    const double inv_bc2 = 1.0 / (1.0 - std::pow(config.beta2, t));
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        LayerParams& layer = params.layers[l];
        kernels::adam_update(layer.weight.data().data(), layer.weight_m.data().data(),
                             layer.weight_v.data().data(), grads.weight[l].data().data(),
                             layer.weight.size(), config.learning_rate, config.beta1,
                             config.beta2, config.epsilon, inv_bc1, inv_bc2);
        kernels::adam_update(layer.bias.data(), layer.bias_m.data(), layer.bias_v.data(),
                             grads.bias[l].data(), layer.bias.size(), config.learning_rate,
                             config.beta1, config.beta2, config.epsilon, inv_bc1, inv_bc2);
    }
}

LatentSample sample_latent_with_epsilon(const DenseMatrix& mu, const DenseMatrix& logvar,
                                        DenseMatrix epsilon) {
    if (mu.rows() != logvar.rows() || mu.cols() != logvar.cols() ||
        mu.rows() != epsilon.rows() || mu.cols() != epsilon.cols()) {
        throw ShapeError("sample_latent: mu/logvar/epsilon shapes differ");
    }
    LatentSample sample;
    sample.mu = mu;
    sample.logvar = logvar;
    for (double& v : sample.logvar.data()) {
        v = std::clamp(v, kLogVarClampMin, kLogVarClampMax);
    }
    sample.epsilon = std::move(epsilon);
    sample.z = sample.mu;
    for (Index i = 0; i < sample.z.size(); ++i) {
        sample.z.data()[i] +=
            std::exp(0.5 * sample.logvar.data()[i]) * sample.epsilon.data()[i];
    }
    return sample;
}

LatentSample sample_latent(const DenseMatrix& mu, const DenseMatrix& logvar, SeededRng& noise) {
    DenseMatrix epsilon(mu.rows(), mu.cols());
    noise.fill_normal(epsilon.data());
    return sample_latent_with_epsilon(mu, logvar, std::move(epsilon));
}

KlResult kl_to_standard_normal(const DenseMatrix& mu, const DenseMatrix& logvar) {
    if (mu.rows() != logvar.rows() || mu.cols() != logvar.cols()) {
        throw ShapeError("kl_to_standard_normal: shape mismatch");
    }
    const double inv_batch = 1.0 / static_cast<double>(mu.rows());
    KlResult result;
    result.mu_grad = DenseMatrix(mu.rows(), mu.cols());
    result.logvar_grad = DenseMatrix(mu.rows(), mu.cols());
    double acc = 0.0;
    for (Index i = 0; i < mu.size(); ++i) {
        const double m = mu.data()[i];
        const double lv = logvar.data()[i];
        const double elv = std::exp(lv);
        acc += -0.5 * (1.0 + lv - m * m - elv);
        result.mu_grad.data()[i] = m * inv_batch;
        result.logvar_grad.data()[i] = 0.5 * (elv - 1.0) * inv_batch;
    }
    result.loss = acc * inv_batch;
    return result;
}

MseResult mse_loss(const DenseMatrix& reconstruction, const DenseMatrix& target) {
    if (reconstruction.rows() != target.rows() || reconstruction.cols() != target.cols()) {
        throw ShapeError("mse_loss: shape mismatch");
    }
    const double inv_count = 1.0 / static_cast<double>(reconstruction.size());
    MseResult result;
    result.grad = DenseMatrix(reconstruction.rows(), reconstruction.cols());
    double acc = 0.0;
    for (Index i = 0; i < reconstruction.size(); ++i) {
        const double diff = reconstruction.data()[i] - target.data()[i];
        acc += diff * diff;
        result.grad.data()[i] = 2.0 * diff * inv_count;
    }
    result.loss = acc * inv_count;
    return result;
}

} // namespace groupenc
