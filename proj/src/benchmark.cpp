#include "groupenc/benchmark.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "groupenc/errors.hpp"
#include "groupenc/pipeline.hpp"
#include "groupenc/rnx.hpp"
#include "groupenc/text_format.hpp"
#include "groupenc/trainer.hpp"

namespace groupenc {

namespace {

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> items;
    std::stringstream stream(text);
    std::string item;
    while (std::getline(stream, item, ',')) {
        if (!item.empty()) {
            items.push_back(item);
        }
    }
    return items;
}

bool parse_bool(const std::string& value, const std::string& key) {
    if (value == "true" || value == "1" || value == "yes") {
        return true;
    }
    if (value == "false" || value == "0" || value == "no") {
        return false;
    }
    throw FormatError("plan: boolean expected for " + key + ", got '" + value + "'");
}

std::string dataset_display_name(const std::string& path) {
    return std::filesystem::path(path).stem().string();
}

} // namespace

void BenchmarkPlan::validate() const {
    if (dims.empty() || seeds.empty() || models.empty()) {
        throw ConfigError("plan: dims, seeds and models must be non-empty");
    }
    if (!synthetic && datasets.empty()) {
        throw ConfigError("plan: no datasets and synthetic generation not enabled");
    }
    const bool has_groupenc =
        std::find(models.begin(), models.end(), ModelKind::groupenc) != models.end();
    if (has_groupenc && gammas.empty()) {
        throw ConfigError("plan: groupenc runs need at least one gamma");
    }
    if (epochs < 1 || batch_size < 1) {
        throw ConfigError("plan: epochs and batch_size must be positive");
    }
}

BenchmarkPlan parse_plan(std::istream& in) {
    BenchmarkPlan plan;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) {
            line.pop_back();
        }
        if (line.empty() || line[0] == '#') {
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw FormatError("plan line " + std::to_string(line_number) +
                              ": expected key=value, got '" + line + "'");
        }
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        try {
            if (key == "dataset" || key == "datasets") {
                plan.datasets = split_list(value);
            } else if (key == "synthetic") {
                plan.synthetic = parse_bool(value, key);
            } else if (key == "synthetic_points") {
                plan.synth.points = parse_u64(value);
            } else if (key == "synthetic_features") {
                plan.synth.features = parse_u64(value);
            } else if (key == "synthetic_clusters") {
                plan.synth.clusters = parse_u64(value);
            } else if (key == "synthetic_seed") {
                plan.synth.seed = parse_u64(value);
            } else if (key == "synthetic_center_scale") {
                plan.synth.center_scale = parse_double(value);
            } else if (key == "dims") {
                plan.dims.clear();
                for (const std::string& item : split_list(value)) {
                    plan.dims.push_back(parse_u64(item));
                }
            } else if (key == "gammas") {
                plan.gammas.clear();
                for (const std::string& item : split_list(value)) {
                    plan.gammas.push_back(static_cast<std::uint32_t>(parse_u64(item)));
                }
            } else if (key == "models") {
                plan.models.clear();
                for (const std::string& item : split_list(value)) {
                    plan.models.push_back(parse_model_kind(item));
                }
            } else if (key == "seeds") {
                plan.seeds.clear();
                for (const std::string& item : split_list(value)) {
                    plan.seeds.push_back(parse_u64(item));
                }
            } else if (key == "epochs") {
                plan.epochs = parse_u64(value);
            } else if (key == "batch_size") {
                plan.batch_size = parse_u64(value);
            } else if (key == "kl_weight") {
                plan.kl_weight = parse_double(value);
            } else if (key == "learning_rate") {
                plan.learning_rate = parse_double(value);
            } else if (key == "strategy") {
                plan.strategy = parse_group_strategy(value);
            } else if (key == "eval_subsample") {
                const std::uint64_t v = parse_u64(value);
                if (v > 0) {
                    plan.eval_subsample = v;
                }
            } else if (key == "jobs") {
                plan.jobs = std::max<std::uint64_t>(1, parse_u64(value));
            } else if (key == "output_dir") {
                plan.output_dir = value;
            } else {
                throw FormatError("unknown key '" + key + "'");
            }
        } catch (const FormatError& e) {
            throw FormatError("plan line " + std::to_string(line_number) + ": " + e.what());
        } catch (const ConfigError& e) {
            throw FormatError("plan line " + std::to_string(line_number) + ": " + e.what());
        }
    }
    return plan;
}

BenchmarkPlan parse_plan_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open plan file: " + path);
    }
    return parse_plan(in);
}

std::string RunRecord::run_id() const {
    std::string id = dataset + "_" + model_kind_name(model);
    if (gamma) {
        id += "_g" + std::to_string(*gamma);
    }
    id += "_d" + std::to_string(dim) + "_s" + std::to_string(seed);
    return id;
}

namespace {

struct NamedDataset {
    std::string name;
    DenseMatrix data;
};

void execute_run(const BenchmarkPlan& plan, const NamedDataset& dataset, RunRecord& record,
                 const std::filesystem::path& run_dir) {
    ModelConfig model_config;
    model_config.kind = record.model;
    model_config.input_dim = dataset.data.cols();
    model_config.latent_dim = record.dim;
    model_config.kl_weight = plan.kl_weight;
    model_config.group_strategy = plan.strategy;
    if (record.gamma) {
        model_config.gamma = *record.gamma;
    }

    TrainConfig train_config;
    train_config.epochs = plan.epochs;
    train_config.batch_size = plan.batch_size;
    train_config.adam.learning_rate = plan.learning_rate;
    train_config.seed = record.seed;
    train_config.checkpoint_path = (run_dir / "model.genc").string();

    const TrainedModel trained = train(model_config, train_config, dataset.data);
    record.train_seconds = trained.log.total_seconds;

    {
        std::ofstream log_out(run_dir / "train_log.csv");
        write_train_log(log_out, trained.log);
    }

    const DenseMatrix embedding = embed(model_config, trained.params, dataset.data);
    save_matrix_binary((run_dir / "embedding.gmtx").string(), embedding);

    const RnxResult scores =
        evaluate(dataset.data, embedding, plan.eval_subsample, record.seed);
    record.local_sp = scores.local_sp;
    record.global_sp = scores.global_sp;

    {
        std::ofstream curve_out(run_dir / "curve.csv");
        write_curve(curve_out, scores);
    }
    {
        std::ofstream scores_out(run_dir / "scores.txt");
        write_scores(scores_out, scores);
    }
}

std::string sanitize_status(std::string status) {
    for (char& c : status) {
        if (c == ',' || c == '\n' || c == '\r') {
            c = ';';
        }
    }
    return status;
}

} // namespace

BenchmarkResult run_benchmark(const BenchmarkPlan& plan, std::ostream* progress) {
    plan.validate();

    std::vector<NamedDataset> datasets;
    if (plan.synthetic) {
        datasets.push_back({"synthetic", synthetic_mixture(plan.synth)});
    }
    for (const std::string& path : plan.datasets) {
        datasets.push_back(
            {dataset_display_name(path), load_matrix(path, sniff_matrix_format(path)).data});
    }

    const std::filesystem::path out_dir(plan.output_dir);
    std::filesystem::create_directories(out_dir / "runs");

    BenchmarkResult result;
    std::vector<std::size_t> dataset_index;
    for (std::size_t d = 0; d < datasets.size(); ++d) {
        for (Index dim : plan.dims) {
            for (ModelKind model : plan.models) {
                const std::vector<std::optional<std::uint32_t>> gamma_choices =
                    model == ModelKind::groupenc
                        ? [&] {
                              std::vector<std::optional<std::uint32_t>> v;
                              for (std::uint32_t g : plan.gammas) {
                                  v.emplace_back(g);
                              }
                              return v;
                          }()
                        : std::vector<std::optional<std::uint32_t>>{std::nullopt};
                for (const auto& gamma : gamma_choices) {
                    for (std::uint64_t seed : plan.seeds) {
                        RunRecord record;
                        record.dataset = datasets[d].name;
                        record.model = model;
                        record.dim = dim;
                        record.gamma = gamma;
                        record.seed = seed;
                        result.records.push_back(std::move(record));
                        dataset_index.push_back(d);
                    }
                }
            }
        }
    }

    std::size_t jobs = std::max<std::size_t>(1, plan.jobs);
    jobs = std::min(jobs, default_worker_count());
    jobs = std::min(jobs, result.records.size());

    std::mutex progress_mutex;
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= result.records.size()) {
                return;
            }
            RunRecord& record = result.records[i];
            const std::filesystem::path run_dir = out_dir / "runs" / record.run_id();
            std::filesystem::create_directories(run_dir);
            try {
                execute_run(plan, datasets[dataset_index[i]], record, run_dir);
            } catch (const std::exception& e) {
                record.status = sanitize_status(e.what());
            }
            if (progress != nullptr) {
                const std::lock_guard<std::mutex> lock(progress_mutex);
                *progress << record.run_id() << ": " << record.status;
                if (record.status == "ok") {
                    *progress << " local_sp=" << format_double(record.local_sp)
                              << " global_sp=" << format_double(record.global_sp)
                              << " seconds=" << format_double(record.train_seconds);
                }
                *progress << "\n";
            }
        }
    };

    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(jobs);
        for (std::size_t j = 0; j < jobs; ++j) {
            pool.emplace_back(worker);
        }
        for (std::thread& t : pool) {
            t.join();
        }
    }

    {
        std::ofstream runs_out(out_dir / "runs.csv");
        write_run_table(runs_out, result.records);
    }
    {
        std::ofstream timings_out(out_dir / "timings.csv");
        write_timings(timings_out, result.records);
    }
    {
        std::ofstream local_out(out_dir / "summary_local.csv");
        write_summary(local_out, plan, result.records, false);
    }
    {
        std::ofstream global_out(out_dir / "summary_global.csv");
        write_summary(global_out, plan, result.records, true);
    }
    return result;
}

void write_run_table(std::ostream& out, const std::vector<RunRecord>& records) {
    out << "dataset,model,dim,gamma,seed,status,local_sp,global_sp\n";
    for (const RunRecord& record : records) {
        out << record.dataset << ',' << model_kind_name(record.model) << ',' << record.dim
            << ',';
        if (record.gamma) {
            out << *record.gamma;
        }
        out << ',' << record.seed << ',' << record.status << ',';
        if (record.status == "ok") {
            out << format_double(record.local_sp) << ',' << format_double(record.global_sp);
        } else {
            out << ',';
        }
        out << '\n';
    }
}

void write_timings(std::ostream& out, const std::vector<RunRecord>& records) {
    out << "dataset,model,dim,gamma,seed,train_seconds\n";
    for (const RunRecord& record : records) {
        out << record.dataset << ',' << model_kind_name(record.model) << ',' << record.dim
            << ',';
        if (record.gamma) {
            out << *record.gamma;
        }
        out << ',' << record.seed << ',' << format_double(record.train_seconds) << '\n';
    }
}

namespace {

struct GroupStats {
    double mean = 0.0;
    double stdev = 0.0;
    std::size_t count = 0;
};

GroupStats stats_over_seeds(const std::vector<double>& values) {
    GroupStats stats;
    stats.count = values.size();
    if (values.empty()) {
        return stats;
    }
    double sum = 0.0;
    for (double v : values) {
        sum += v;
    }
    stats.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double sq = 0.0;
        for (double v : values) {
            const double d = v - stats.mean;
            sq += d * d;
        }
        stats.stdev = std::sqrt(sq / static_cast<double>(values.size() - 1));
    }
    return stats;
}

std::string format_cell(const GroupStats& stats) {
    if (stats.count == 0) {
        return "n/a";
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f±%.3f", stats.mean, stats.stdev);
    return buf;
}

std::string model_row_label(ModelKind model, std::optional<std::uint32_t> gamma) {
    if (model == ModelKind::vae) {
        return "vae";
    }
    return "groupenc(gamma=" + std::to_string(*gamma) + ")";
}

} // namespace

void write_summary(std::ostream& out, const BenchmarkPlan& plan,
                   const std::vector<RunRecord>& records, bool global_scores) {
    std::vector<std::string> dataset_names;
    for (const RunRecord& record : records) {
        if (std::find(dataset_names.begin(), dataset_names.end(), record.dataset) ==
            dataset_names.end()) {
            dataset_names.push_back(record.dataset);
        }
    }

    std::vector<Index> dims_desc = plan.dims;
    std::sort(dims_desc.begin(), dims_desc.end(), std::greater<>());
    dims_desc.erase(std::unique(dims_desc.begin(), dims_desc.end()), dims_desc.end());

    struct RowKey {
        ModelKind model;
        std::optional<std::uint32_t> gamma;
    };
    std::vector<RowKey> row_keys;
    if (std::find(plan.models.begin(), plan.models.end(), ModelKind::vae) !=
        plan.models.end()) {
        row_keys.push_back({ModelKind::vae, std::nullopt});
    }
    if (std::find(plan.models.begin(), plan.models.end(), ModelKind::groupenc) !=
        plan.models.end()) {
        std::vector<std::uint32_t> gammas = plan.gammas;
        std::sort(gammas.begin(), gammas.end());
        gammas.erase(std::unique(gammas.begin(), gammas.end()), gammas.end());
        for (std::uint32_t g : gammas) {
            row_keys.push_back({ModelKind::groupenc, g});
        }
    }

    out << "dim,model";
    for (const std::string& name : dataset_names) {
        out << ',' << name;
    }
    out << '\n';
    for (Index dim : dims_desc) {
        for (const RowKey& key : row_keys) {
            out << dim << ',' << model_row_label(key.model, key.gamma);
            for (const std::string& dataset : dataset_names) {
                std::vector<double> values;
                for (const RunRecord& record : records) {
                    if (record.status == "ok" && record.dataset == dataset &&
                        record.dim == dim && record.model == key.model &&
                        record.gamma == key.gamma) {
                        values.push_back(global_scores ? record.global_sp
                                                       : record.local_sp);
                    }
                }
                out << ',' << format_cell(stats_over_seeds(values));
            }
            out << '\n';
        }
    }
}

} // namespace groupenc
