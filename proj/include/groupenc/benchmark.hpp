#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "groupenc/models.hpp"
#include "groupenc/synthetic.hpp"

namespace groupenc {

// Benchmark protocol: models x dims x gammas x seeds per dataset, each
// run trained, embedded and scored, results grouped into per-run rows and
// mean +/- stdev summary tables.

struct BenchmarkPlan {
    std::vector<std::string> datasets;  // paths; may be empty when synthetic
    bool synthetic = false;
    SyntheticConfig synth;
    std::vector<Index> dims = {2, 5, 10};
    std::vector<std::uint32_t> gammas = {4, 5, 6};
    std::vector<ModelKind> models = {ModelKind::vae, ModelKind::groupenc};
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    std::uint64_t epochs = 500;
    std::size_t batch_size = 512;
    double kl_weight = 1.0;
    double learning_rate = 0.001;
    GroupStrategy strategy = GroupStrategy::headed;
    std::optional<std::size_t> eval_subsample;
    std::size_t jobs = 1;
    std::string output_dir = "benchmark_out";

    void validate() const;
};

/// Flat key-value plan format: one `key=value` per line, lists
/// comma-separated, '#' starts a comment.
BenchmarkPlan parse_plan(std::istream& in);
BenchmarkPlan parse_plan_file(const std::string& path);

struct RunRecord {
    std::string dataset;
    ModelKind model = ModelKind::vae;
    Index dim = 0;
    std::optional<std::uint32_t> gamma;  // absent for vae
    std::uint64_t seed = 0;
    std::string status = "ok";
    double local_sp = 0.0;
    double global_sp = 0.0;
    double train_seconds = 0.0;

    std::string run_id() const;
};

struct BenchmarkResult {
    std::vector<RunRecord> records;
};

/// Executes the plan. Failed runs are recorded with their error text and
/// the benchmark continues. Writes runs.csv, timings.csv, summary_local.csv
/// and summary_global.csv plus per-run artifacts under output_dir. The
/// scores in runs.csv and the summaries are deterministic for a fixed
/// plan; wall-clock timings live in timings.csv.
BenchmarkResult run_benchmark(const BenchmarkPlan& plan, std::ostream* progress = nullptr);

void write_run_table(std::ostream& out, const std::vector<RunRecord>& records);
void write_timings(std::ostream& out, const std::vector<RunRecord>& records);

/// Rows are dim x model (dims descending, VAE first, then gammas
/// ascending), columns are datasets, cells mean+-stdev over seeds.
void write_summary(std::ostream& out, const BenchmarkPlan& plan,
                   const std::vector<RunRecord>& records, bool global_scores);

} // namespace groupenc
