#include "groupenc/models.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "groupenc/errors.hpp"

namespace groupenc {

const char* model_kind_name(ModelKind kind) {
    return kind == ModelKind::groupenc ? "groupenc" : "vae";
}

ModelKind parse_model_kind(std::string_view name) {
    if (name == "groupenc") {
        return ModelKind::groupenc;
    }
    if (name == "vae") {
        return ModelKind::vae;
    }
    throw ConfigError("unknown model kind: " + std::string(name));
}

void ModelConfig::validate() const {
    if (input_dim == 0 || latent_dim == 0) {
        throw ConfigError("model config: zero dimension");
    }
    if (latent_dim >= input_dim) {
        throw ConfigError("model config: latent_dim must be smaller than input_dim");
    }
    if (kind == ModelKind::groupenc && gamma < 2) {
        throw ConfigError("model config: gamma must be at least 2");
    }
    if (kl_weight < 0.0) {
        throw ConfigError("model config: kl_weight must be non-negative");
    }
}

NetworkSpec encoder_spec(const ModelConfig& config) {
    return {config.input_dim, config.encoder_hidden, 2 * config.latent_dim};
}

NetworkSpec decoder_spec(const ModelConfig& config) {
    return {config.latent_dim, config.decoder_hidden, config.input_dim};
}

ModelParams init_model(const ModelConfig& config, SeededRng& init) {
    config.validate();
    ModelParams params;
    params.encoder = init_params(encoder_spec(config), init);
    if (config.kind == ModelKind::vae) {
        params.decoder = init_params(decoder_spec(config), init);
    }
    return params;
}

namespace {

struct HeadSplit {
    DenseMatrix mu;
    DenseMatrix logvar_raw;
};

HeadSplit split_heads(const DenseMatrix& encoder_out, Index latent_dim) {
    HeadSplit split;
    split.mu = DenseMatrix(encoder_out.rows(), latent_dim);
    split.logvar_raw = DenseMatrix(encoder_out.rows(), latent_dim);
    for (Index i = 0; i < encoder_out.rows(); ++i) {
        const double* src = encoder_out.row_ptr(i);
        double* mu = split.mu.row_ptr(i);
        double* lv = split.logvar_raw.row_ptr(i);
        for (Index j = 0; j < latent_dim; ++j) {
            mu[j] = src[j];
            lv[j] = src[latent_dim + j];
        }
    }
    return split;
}

// Joins head gradients back into the encoder-output gradient. The logvar
// clamp passes gradient through inside (min, max) and blocks it outside.
DenseMatrix join_head_grads(const DenseMatrix& mu_grad, const DenseMatrix& logvar_grad,
                            const DenseMatrix& logvar_raw) {
    const Index latent_dim = mu_grad.cols();
    DenseMatrix out(mu_grad.rows(), 2 * latent_dim);
    for (Index i = 0; i < mu_grad.rows(); ++i) {
        const double* mg = mu_grad.row_ptr(i);
        const double* lg = logvar_grad.row_ptr(i);
        const double* raw = logvar_raw.row_ptr(i);
        double* dst = out.row_ptr(i);
        for (Index j = 0; j < latent_dim; ++j) {
            dst[j] = mg[j];
            const bool inside = raw[j] > kLogVarClampMin && raw[j] < kLogVarClampMax;
            dst[latent_dim + j] = inside ? lg[j] : 0.0;
        }
    }
    return out;
}

// d(loss)/d(logvar) contribution of the sampler path:
// dz/dlogvar = 0.5 * exp(0.5 * logvar) * epsilon.
void add_sampler_logvar_grad(DenseMatrix& logvar_grad, const DenseMatrix& z_grad,
                             const LatentSample& sample) {
    for (Index i = 0; i < logvar_grad.size(); ++i) {
        logvar_grad.data()[i] += z_grad.data()[i] * 0.5 *
                                 std::exp(0.5 * sample.logvar.data()[i]) *
                                 sample.epsilon.data()[i];
    }
}

void scale_add(DenseMatrix& dst, const DenseMatrix& src, double scale) {
    for (Index i = 0; i < dst.size(); ++i) {
        dst.data()[i] += scale * src.data()[i];
    }
}

} // namespace

StepResult groupenc_training_step_fixed(const ModelConfig& config, const ModelParams& params,
                                        const DenseMatrix& hd_batch,
                                        const GroupAssignment& assignment,
                                        DenseMatrix epsilon) {
    config.validate();
    if (hd_batch.cols() != config.input_dim) {
        throw ShapeError("groupenc step: batch column count mismatch");
    }

    const NetworkSpec spec = encoder_spec(config);
    ForwardTape tape;
    const DenseMatrix encoder_out = forward(spec, params.encoder, hd_batch, &tape);
    HeadSplit heads = split_heads(encoder_out, config.latent_dim);
    const LatentSample sample =
        sample_latent_with_epsilon(heads.mu, heads.logvar_raw, std::move(epsilon));

    BatchGroupLossResult group = batch_group_loss(hd_batch, sample.z, assignment);
    const KlResult kl = kl_to_standard_normal(sample.mu, sample.logvar);

    StepResult result;
    result.loss.primary_term = group.loss;
    result.loss.kl_term = kl.loss;
    result.loss.total = group.loss + config.kl_weight * kl.loss;
    result.degenerate_groups = group.degenerate_groups;

    // Through the sampler: dz flows to mu with factor 1.
    DenseMatrix mu_grad = group.ld_grad;
    scale_add(mu_grad, kl.mu_grad, config.kl_weight);
    DenseMatrix logvar_grad(sample.logvar.rows(), sample.logvar.cols());
    add_sampler_logvar_grad(logvar_grad, group.ld_grad, sample);
    scale_add(logvar_grad, kl.logvar_grad, config.kl_weight);

    const DenseMatrix out_grad = join_head_grads(mu_grad, logvar_grad, heads.logvar_raw);
    result.grads.encoder = backward(spec, params.encoder, tape, out_grad);
    return result;
}

StepResult groupenc_training_step(const ModelConfig& config, const ModelParams& params,
                                  const DenseMatrix& hd_batch, SeededRng& groups_stream,
                                  SeededRng& noise_stream) {
    const GroupAssignment assignment =
        assign_groups(hd_batch.rows(), config.gamma, config.group_strategy, groups_stream);
    DenseMatrix epsilon(hd_batch.rows(), config.latent_dim);
    noise_stream.fill_normal(epsilon.data());
    return groupenc_training_step_fixed(config, params, hd_batch, assignment,
                                        std::move(epsilon));
}

StepResult vae_training_step_fixed(const ModelConfig& config, const ModelParams& params,
                                   const DenseMatrix& hd_batch, DenseMatrix epsilon) {
    config.validate();
    if (hd_batch.cols() != config.input_dim) {
        throw ShapeError("vae step: batch column count mismatch");
    }

    const NetworkSpec enc_spec = encoder_spec(config);
    const NetworkSpec dec_spec = decoder_spec(config);
    ForwardTape enc_tape;
    const DenseMatrix encoder_out = forward(enc_spec, params.encoder, hd_batch, &enc_tape);
    HeadSplit heads = split_heads(encoder_out, config.latent_dim);
    const LatentSample sample =
        sample_latent_with_epsilon(heads.mu, heads.logvar_raw, std::move(epsilon));

    ForwardTape dec_tape;
    const DenseMatrix reconstruction = forward(dec_spec, params.decoder, sample.z, &dec_tape);
    const MseResult mse = mse_loss(reconstruction, hd_batch);
    const KlResult kl = kl_to_standard_normal(sample.mu, sample.logvar);

    StepResult result;
    result.loss.primary_term = mse.loss;
    result.loss.kl_term = kl.loss;
    result.loss.total = mse.loss + config.kl_weight * kl.loss;

    DenseMatrix z_grad;
    result.grads.decoder = backward(dec_spec, params.decoder, dec_tape, mse.grad, &z_grad);

    DenseMatrix mu_grad = z_grad;
    scale_add(mu_grad, kl.mu_grad, config.kl_weight);
    DenseMatrix logvar_grad(sample.logvar.rows(), sample.logvar.cols());
    add_sampler_logvar_grad(logvar_grad, z_grad, sample);
    scale_add(logvar_grad, kl.logvar_grad, config.kl_weight);

    const DenseMatrix out_grad = join_head_grads(mu_grad, logvar_grad, heads.logvar_raw);
    result.grads.encoder = backward(enc_spec, params.encoder, enc_tape, out_grad);
    return result;
}

StepResult vae_training_step(const ModelConfig& config, const ModelParams& params,
                             const DenseMatrix& hd_batch, SeededRng& noise_stream) {
    DenseMatrix epsilon(hd_batch.rows(), config.latent_dim);
    noise_stream.fill_normal(epsilon.data());
    return vae_training_step_fixed(config, params, hd_batch, std::move(epsilon));
}

DenseMatrix embed(const ModelConfig& config, const ModelParams& params,
                  const DenseMatrix& data) {
    if (data.cols() != config.input_dim) {
        throw ShapeError("embed: data has " + std::to_string(data.cols()) +
                         " columns, model expects " + std::to_string(config.input_dim));
    }
    const DenseMatrix encoder_out = forward(encoder_spec(config), params.encoder, data);
    DenseMatrix mu(encoder_out.rows(), config.latent_dim);
    for (Index i = 0; i < encoder_out.rows(); ++i) {
        const double* src = encoder_out.row_ptr(i);
        double* dst = mu.row_ptr(i);
        for (Index j = 0; j < config.latent_dim; ++j) {
            dst[j] = src[j];
        }
    }
    return mu;
}

} // namespace groupenc
