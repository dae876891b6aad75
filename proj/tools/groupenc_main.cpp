// groupenc command line: preprocess, train, embed, eval, benchmark.
// Exit codes: 0 success, 1 runtime failure, 2 usage or format error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "groupenc/benchmark.hpp"
#include "groupenc/checkpoint.hpp"
#include "groupenc/errors.hpp"
#include "groupenc/models.hpp"
#include "groupenc/pipeline.hpp"
#include "groupenc/rnx.hpp"
#include "groupenc/trainer.hpp"

namespace {

using namespace groupenc;

DenseMatrix load_any_matrix(const std::string& path) {
    if (!std::filesystem::exists(path)) {
        throw FormatError("no such file: " + path);
    }
    return load_matrix(path, sniff_matrix_format(path)).data;
}

struct PreprocessArgs {
    std::string input;
    std::string output;
    std::string pca_model_path;
    Index pca_components = 50;
    double clip = 10.0;
    bool skip_norm_log = false;
    bool no_row_normalize = false;
    bool no_log1p = false;
    bool no_standardize = false;
    bool no_pca = false;
    bool text_output = false;
};

int cmd_preprocess(const PreprocessArgs& args) {
    PreprocessConfig config;
    config.row_normalize = !args.no_row_normalize;
    config.log1p = !args.no_log1p;
    config.standardize = !args.no_standardize;
    config.scale_clip = args.clip;
    config.pca = !args.no_pca;
    config.pca_components = args.pca_components;
    config.skip_row_normalize_and_log = args.skip_norm_log;

    const DenseMatrix input = load_any_matrix(args.input);
    PreprocessResult result = preprocess(input, config);
    for (std::size_t row : result.zero_rows) {
        std::cerr << "warning: all-zero row " << row << " left unnormalised\n";
    }
    if (args.text_output) {
        save_matrix_text(args.output, result.data);
    } else {
        save_matrix_binary(args.output, result.data);
    }
    if (!args.pca_model_path.empty()) {
        if (!result.pca) {
            throw ConfigError("--pca-model given but the PCA stage is disabled");
        }
        save_pca_model(args.pca_model_path, *result.pca);
    }
    std::cout << "wrote " << result.data.rows() << "x" << result.data.cols() << " matrix to "
              << args.output << "\n";
    return 0;
}

struct TrainArgs {
    std::string data_path;
    std::string model = "groupenc";
    Index dim = 2;
    std::uint32_t gamma = 4;
    bool gamma_given = false;
    double kl_weight = 1.0;
    std::string strategy = "headed";
    std::uint64_t seed = 1;
    std::uint64_t epochs = 500;
    std::size_t batch_size = 512;
    double learning_rate = 0.001;
    std::string output;
    std::string log_path;
    std::uint64_t log_every = 0;
    bool resume_run = false;
};

int cmd_train(const TrainArgs& args) {
    const ModelKind kind = parse_model_kind(args.model);
    if (kind == ModelKind::vae && args.gamma_given) {
        throw ConfigError("--gamma only applies to --model groupenc");
    }

    const DenseMatrix data = load_any_matrix(args.data_path);

    TrainConfig train_config;
    train_config.epochs = args.epochs;
    train_config.batch_size = args.batch_size;
    train_config.adam.learning_rate = args.learning_rate;
    train_config.seed = args.seed;
    train_config.log_every = args.log_every;
    train_config.checkpoint_path = args.output;

    TrainedModel trained;
    if (args.resume_run) {
        trained = resume(args.output, train_config, data, &std::cerr);
    } else {
        ModelConfig model_config;
        model_config.kind = kind;
        model_config.input_dim = data.cols();
        model_config.latent_dim = args.dim;
        model_config.gamma = args.gamma;
        model_config.kl_weight = args.kl_weight;
        model_config.group_strategy = parse_group_strategy(args.strategy);
        trained = train(model_config, train_config, data, &std::cerr);
    }

    if (!args.log_path.empty()) {
        std::ofstream log_out(args.log_path);
        if (!log_out) {
            throw FormatError("cannot open log file for writing: " + args.log_path);
        }
        write_train_log(log_out, trained.log);
    }
    if (!trained.log.epochs.empty()) {
        const EpochRecord& last = trained.log.epochs.back();
        std::cout << "trained " << model_kind_name(trained.config.kind) << " dim "
                  << trained.config.latent_dim << ": total " << last.mean_loss.total
                  << " primary " << last.mean_loss.primary_term << " kl "
                  << last.mean_loss.kl_term << " in " << trained.log.total_seconds
                  << " s\n";
    } else {
        std::cout << "checkpoint already at target epochs, nothing to do\n";
    }
    return 0;
}

int cmd_embed(const std::string& checkpoint_path, const std::string& data_path,
              const std::string& output) {
    const Checkpoint checkpoint = load_checkpoint(checkpoint_path);
    const DenseMatrix data = load_any_matrix(data_path);
    if (data.cols() != checkpoint.config.input_dim) {
        throw ConfigError("data has " + std::to_string(data.cols()) +
                          " columns but the model expects " +
                          std::to_string(checkpoint.config.input_dim));
    }
    const DenseMatrix embedding = embed(checkpoint.config, checkpoint.params, data);
    save_matrix_text(output, embedding);
    std::cout << "wrote " << embedding.rows() << "x" << embedding.cols()
              << " embedding to " << output << "\n";
    return 0;
}

struct EvalArgs {
    std::string hd_path;
    std::string ld_path;
    std::string out_prefix;
    std::uint64_t subsample = 0;
    std::uint64_t seed = 0;
    std::size_t workers = 0;
};

int cmd_eval(const EvalArgs& args) {
    const DenseMatrix hd = load_any_matrix(args.hd_path);
    const DenseMatrix ld = load_any_matrix(args.ld_path);
    if (hd.rows() != ld.rows()) {
        throw ConfigError("row counts differ: " + std::to_string(hd.rows()) + " vs " +
                          std::to_string(ld.rows()));
    }
    std::optional<std::size_t> subsample;
    if (args.subsample > 0) {
        subsample = args.subsample;
    }
    const RnxResult result = evaluate(hd, ld, subsample, args.seed, nullptr, args.workers);

    const std::string curve_path = args.out_prefix + "_curve.csv";
    const std::string scores_path = args.out_prefix + "_scores.txt";
    {
        std::ofstream out(curve_path);
        if (!out) {
            throw FormatError("cannot open file for writing: " + curve_path);
        }
        write_curve(out, result);
    }
    {
        std::ofstream out(scores_path);
        if (!out) {
            throw FormatError("cannot open file for writing: " + scores_path);
        }
        write_scores(out, result);
    }
    write_scores(std::cout, result);
    return 0;
}

struct BenchmarkArgs {
    std::string plan_path;
    std::string output_dir;
    std::uint64_t jobs = 0;
    std::uint64_t epochs = 0;
    bool synthetic = false;
    bool quiet = false;
};

int cmd_benchmark(const BenchmarkArgs& args) {
    BenchmarkPlan plan = parse_plan_file(args.plan_path);
    if (args.synthetic) {
        plan.synthetic = true;
    }
    if (!args.output_dir.empty()) {
        plan.output_dir = args.output_dir;
    }
    if (args.jobs > 0) {
        plan.jobs = args.jobs;
    }
    if (args.epochs > 0) {
        plan.epochs = args.epochs;
    }
    const BenchmarkResult result =
        run_benchmark(plan, args.quiet ? nullptr : &std::cerr);
    std::size_t failed = 0;
    for (const RunRecord& record : result.records) {
        if (record.status != "ok") {
            ++failed;
        }
    }
    std::cout << result.records.size() << " runs, " << failed << " failed; tables in "
              << plan.output_dir << "\n";
    return failed == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"GroupEnc: group-loss encoder, VAE baseline and R_NX evaluation"};
    app.require_subcommand(1);

    PreprocessArgs pre;
    CLI::App* preprocess_cmd =
        app.add_subcommand("preprocess", "normalise, log1p, scale and PCA-reduce a matrix");
    preprocess_cmd->add_option("input", pre.input, "input matrix (text or GMTX)")->required();
    preprocess_cmd->add_option("-o,--output", pre.output, "output path")->required();
    preprocess_cmd->add_option("--pca", pre.pca_components, "PCA component count");
    preprocess_cmd->add_option("--clip", pre.clip, "standardisation upper clip");
    preprocess_cmd->add_option("--pca-model", pre.pca_model_path, "also save the GPCA model");
    preprocess_cmd->add_flag("--skip-norm-log", pre.skip_norm_log,
                             "skip normalisation and log1p (pre-scaled data)");
    preprocess_cmd->add_flag("--no-row-normalize", pre.no_row_normalize, "");
    preprocess_cmd->add_flag("--no-log1p", pre.no_log1p, "");
    preprocess_cmd->add_flag("--no-standardize", pre.no_standardize, "");
    preprocess_cmd->add_flag("--no-pca", pre.no_pca, "");
    preprocess_cmd->add_flag("--text-output", pre.text_output, "write delimited text");

    TrainArgs train_args;
    CLI::App* train_cmd = app.add_subcommand("train", "train a model on a matrix");
    train_cmd->add_option("data", train_args.data_path, "training matrix")->required();
    train_cmd->add_option("--model", train_args.model, "vae or groupenc")
        ->check(CLI::IsMember({"vae", "groupenc"}));
    train_cmd->add_option("--dim", train_args.dim, "latent dimension")->required();
    CLI::Option* gamma_opt = train_cmd->add_option("--gamma", train_args.gamma, "group size");
    train_cmd->add_option("--kl-weight", train_args.kl_weight, "KL term weight");
    train_cmd->add_option("--strategy", train_args.strategy, "headed or disjoint")
        ->check(CLI::IsMember({"headed", "disjoint"}));
    train_cmd->add_option("--seed", train_args.seed, "random seed");
    train_cmd->add_option("--epochs", train_args.epochs, "training epochs");
    train_cmd->add_option("--batch-size", train_args.batch_size, "batch size");
    train_cmd->add_option("--lr", train_args.learning_rate, "Adam learning rate");
    train_cmd->add_option("-o,--output", train_args.output, "checkpoint path")->required();
    train_cmd->add_option("--log", train_args.log_path, "write the training log CSV here");
    train_cmd->add_option("--log-every", train_args.log_every,
                          "progress line every N epochs");
    train_cmd->add_flag("--resume", train_args.resume_run,
                        "continue from the checkpoint at the output path");

    std::string embed_checkpoint, embed_data, embed_output;
    CLI::App* embed_cmd = app.add_subcommand("embed", "embed a matrix with a trained model");
    embed_cmd->add_option("checkpoint", embed_checkpoint, "GENC checkpoint")->required();
    embed_cmd->add_option("data", embed_data, "input matrix")->required();
    embed_cmd->add_option("-o,--output", embed_output, "embedding CSV path")->required();

    EvalArgs eval_args;
    CLI::App* eval_cmd =
        app.add_subcommand("eval", "score an embedding against its source matrix");
    eval_cmd->add_option("hd", eval_args.hd_path, "high-dimensional matrix")->required();
    eval_cmd->add_option("ld", eval_args.ld_path, "embedding matrix")->required();
    eval_cmd->add_option("-o,--out-prefix", eval_args.out_prefix,
                         "prefix for _curve.csv and _scores.txt")
        ->required();
    eval_cmd->add_option("--subsample", eval_args.subsample,
                         "evaluate on a seeded row subset of this size");
    eval_cmd->add_option("--seed", eval_args.seed, "subsampling seed");
    eval_cmd->add_option("--workers", eval_args.workers, "evaluation worker count");

    BenchmarkArgs bench_args;
    CLI::App* bench_cmd = app.add_subcommand("benchmark", "run a benchmark plan");
    bench_cmd->add_option("plan", bench_args.plan_path, "plan file (key=value lines)")
        ->required();
    bench_cmd->add_option("--output-dir", bench_args.output_dir, "override output_dir");
    bench_cmd->add_option("--jobs", bench_args.jobs, "override parallel run count");
    bench_cmd->add_option("--epochs", bench_args.epochs, "override training epochs");
    bench_cmd->add_flag("--synthetic", bench_args.synthetic,
                        "enable the built-in synthetic dataset");
    bench_cmd->add_flag("--quiet", bench_args.quiet, "suppress per-run progress");

    try {
        app.parse(argc, argv);
        train_args.gamma_given = gamma_opt->count() > 0;
        if (preprocess_cmd->parsed()) {
            return cmd_preprocess(pre);
        }
        if (train_cmd->parsed()) {
            return cmd_train(train_args);
        }
        if (embed_cmd->parsed()) {
            return cmd_embed(embed_checkpoint, embed_data, embed_output);
        }
        if (eval_cmd->parsed()) {
            return cmd_eval(eval_args);
        }
        if (bench_cmd->parsed()) {
            return cmd_benchmark(bench_args);
        }
        return 2;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
