#include "groupenc/trainer.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "groupenc/errors.hpp"
#include "groupenc/text_format.hpp"

namespace groupenc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void validate_train_config(const ModelConfig& model_config, const TrainConfig& train_config,
                           const DenseMatrix& data) {
    model_config.validate();
    if (train_config.epochs < 1) {
        throw ConfigError("train: epochs must be at least 1");
    }
    if (train_config.batch_size < 1) {
        throw ConfigError("train: batch size must be at least 1");
    }
    if (model_config.kind == ModelKind::groupenc &&
        train_config.batch_size < model_config.gamma) {
        throw ConfigError("train: batch size smaller than gamma");
    }
    if (data.cols() != model_config.input_dim) {
        throw ConfigError("train: data has " + std::to_string(data.cols()) +
                          " columns, model expects " + std::to_string(model_config.input_dim));
    }
    const std::size_t min_rows = model_config.kind == ModelKind::groupenc
                                     ? model_config.gamma
                                     : std::size_t{1};
    if (data.rows() < min_rows) {
        throw ConfigError("train: not enough rows for one batch");
    }
}

struct Streams {
    SeededRng shuffle;
    SeededRng groups;
    SeededRng noise;
};

TrainedModel run_epochs(const ModelConfig& model_config, const TrainConfig& train_config,
                        const DenseMatrix& data, ModelParams params, Streams streams,
                        std::uint64_t first_epoch, std::ostream* progress) {
    // A trailing short batch is kept while it still holds one full group
    // (a single row for the VAE); anything smaller is skipped.
    const std::size_t min_batch = model_config.kind == ModelKind::groupenc
                                      ? model_config.gamma
                                      : std::size_t{1};
    const std::size_t rows = data.rows();

    TrainedModel result;
    result.config = model_config;
    const Clock::time_point start = Clock::now();

    for (std::uint64_t epoch = first_epoch; epoch < train_config.epochs; ++epoch) {
        const std::vector<std::uint32_t> order = streams.shuffle.permutation(rows);
        LossBreakdown sum;
        std::size_t batches = 0;
        std::size_t degenerate = 0;

        for (std::size_t begin = 0; begin < rows; begin += train_config.batch_size) {
            const std::size_t size = std::min(train_config.batch_size, rows - begin);
            if (size < min_batch) {
                break;
            }
            const DenseMatrix batch =
                gather_rows(data, {order.data() + begin, size});
            try {
                StepResult step =
                    model_config.kind == ModelKind::groupenc
                        ? groupenc_training_step(model_config, params, batch,
                                                 streams.groups, streams.noise)
                        : vae_training_step(model_config, params, batch, streams.noise);
                if (!std::isfinite(step.loss.total)) {
                    throw NumericError("non-finite loss");
                }
                adam_step(params.encoder, step.grads.encoder, train_config.adam);
                if (model_config.kind == ModelKind::vae) {
                    adam_step(params.decoder, step.grads.decoder, train_config.adam);
                }
                sum.total += step.loss.total;
                sum.primary_term += step.loss.primary_term;
                sum.kl_term += step.loss.kl_term;
                degenerate += step.degenerate_groups;
                batches += 1;
            } catch (const NumericError& e) {
                throw NumericError("epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(batches) + ": " + e.what());
            }
        }

        EpochRecord record;
        record.epoch = epoch;
        const double inv = batches > 0 ? 1.0 / static_cast<double>(batches) : 0.0;
        record.mean_loss.total = sum.total * inv;
        record.mean_loss.primary_term = sum.primary_term * inv;
        record.mean_loss.kl_term = sum.kl_term * inv;
        record.seconds = seconds_since(start);
        record.degenerate_groups = degenerate;
        result.log.epochs.push_back(record);

        if (progress != nullptr && train_config.log_every > 0 &&
            (epoch + 1) % train_config.log_every == 0) {
            *progress << "epoch " << epoch << " total " << record.mean_loss.total
                      << " primary " << record.mean_loss.primary_term << " kl "
                      << record.mean_loss.kl_term;
            if (degenerate > 0) {
                *progress << " degenerate_groups " << degenerate;
            }
            *progress << "\n";
        }
    }

    result.log.total_seconds = seconds_since(start);
    result.params = std::move(params);

    if (train_config.checkpoint_path) {
        Checkpoint checkpoint;
        checkpoint.config = model_config;
        checkpoint.params = result.params;
        checkpoint.train_state.present = true;
        checkpoint.train_state.epochs_done = train_config.epochs;
        checkpoint.train_state.shuffle_state = streams.shuffle.state();
        checkpoint.train_state.groups_state = streams.groups.state();
        checkpoint.train_state.noise_state = streams.noise.state();
        save_checkpoint(*train_config.checkpoint_path, checkpoint);
    }
    return result;
}

} // namespace

void write_train_log(std::ostream& out, const TrainLog& log) {
    out << "epoch,total,primary,kl,seconds\n";
    for (const EpochRecord& record : log.epochs) {
        out << record.epoch << ',' << format_double(record.mean_loss.total) << ','
            << format_double(record.mean_loss.primary_term) << ','
            << format_double(record.mean_loss.kl_term) << ','
            << format_double(record.seconds) << '\n';
    }
}

TrainedModel train(const ModelConfig& model_config, const TrainConfig& train_config,
                   const DenseMatrix& data, std::ostream* progress) {
    validate_train_config(model_config, train_config, data);
    SeededRng init(train_config.seed, "init");
    Streams streams{
        SeededRng(train_config.seed, "shuffle"),
        SeededRng(train_config.seed, "groups"),
        SeededRng(train_config.seed, "noise"),
    };
    ModelParams params = init_model(model_config, init);
    return run_epochs(model_config, train_config, data, std::move(params),
                      std::move(streams), 0, progress);
}

TrainedModel resume(const std::string& checkpoint_path, const TrainConfig& train_config,
                    const DenseMatrix& data, std::ostream* progress) {
    Checkpoint checkpoint = load_checkpoint(checkpoint_path);
    if (!checkpoint.train_state.present) {
        throw FormatError("checkpoint has no training state to resume: " + checkpoint_path);
    }
    if (data.cols() != checkpoint.config.input_dim) {
        throw FormatError("resume: data has " + std::to_string(data.cols()) +
                          " columns, checkpoint expects " +
                          std::to_string(checkpoint.config.input_dim));
    }
    validate_train_config(checkpoint.config, train_config, data);

    if (checkpoint.train_state.epochs_done >= train_config.epochs) {
        TrainedModel result;
        result.config = checkpoint.config;
        result.params = std::move(checkpoint.params);
        return result;
    }

    Streams streams{
        SeededRng(train_config.seed, "shuffle"),
        SeededRng(train_config.seed, "groups"),
        SeededRng(train_config.seed, "noise"),
    };
    streams.shuffle.restore_state(checkpoint.train_state.shuffle_state);
    streams.groups.restore_state(checkpoint.train_state.groups_state);
    streams.noise.restore_state(checkpoint.train_state.noise_state);

    TrainConfig continued = train_config;
    if (!continued.checkpoint_path) {
        continued.checkpoint_path = checkpoint_path;
    }
    return run_epochs(checkpoint.config, continued, data, std::move(checkpoint.params),
                      std::move(streams), checkpoint.train_state.epochs_done, progress);
}

} // namespace groupenc
