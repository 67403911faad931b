#pragma once

// Experiment front end: dataset/engine assembly from a config, centralized
// baseline measurement, rounds-to-target evaluation, learning-rate grid
// search, the tau stability sweep, and metrics export (CSV rows, a JSONL
// mirror, a query log, and a summary document).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fdaopt/config.hpp"
#include "fdaopt/fl_engine.hpp"

namespace fdaopt {

struct MetricsRow {
    std::string experiment_id;
    std::uint64_t seed = 0;
    int round = 0;
    std::int64_t s_t = 0;
    double exact_var = 0.0;
    double theta = 0.0;
    double train_loss = 0.0;
    double eval_accuracy = 0.0;
    std::int64_t bytes_up = 0;
    std::int64_t bytes_down = 0;
    std::int64_t wall_steps = 0;
    std::vector<int> cohort;
};

struct QueryRow {
    int round = 0;
    std::int64_t step = 0;
    double nu = 0.0;
    double theta = 0.0;
};

struct RunResult {
    ExperimentConfig config;  // as executed
    TrainingResult training;
    std::vector<MetricsRow> rows;
    std::vector<QueryRow> queries;
    double baseline_accuracy = 0.0;  // supplied or measured
    std::int64_t tau = 0;
    std::int64_t tau_tilde = 0;
    double e_steps = 0.0;
};

// Config to runnable pieces. Model dims come from the dataset; tau in steps
// comes from tau_steps if set, else tau_epochs * ceil(e).
Dataset build_dataset(const ExperimentConfig& config);
FederatedDataset build_federation(const ExperimentConfig& config, Dataset dataset);
ModelSpec resolve_model(const ExperimentConfig& config, const Dataset& dataset);
EngineConfig resolve_engine(const ExperimentConfig& config, const FederatedDataset& fd);

// Derives the replicate's seeds (run, partition, cohort, model init, sketch)
// from one replicate index; the dataset itself stays fixed.
ExperimentConfig with_replicate_seed(const ExperimentConfig& config, std::uint64_t replicate);

RunResult run_experiment(const ExperimentConfig& config);

// Best accuracy on the pooled dataset across training epochs (the initial
// model counts, so 0 epochs reports its accuracy).
double centralized_baseline(const ModelSpec& model, const Dataset& dataset, int epochs,
                            const OptimizerSpec& opt, int batch_size = 8);

// 1-based index of the first round whose accuracy reaches fraction * baseline;
// nullopt = never (non-convergence, the x marker in summaries).
std::optional<int> rounds_to_target(const std::vector<RoundRecord>& history, double baseline,
                                    double fraction);

double speedup(int rounds_fedopt, int rounds_fdaopt);

struct GridCell {
    double client_lr = 0.0;
    double server_lr = 0.0;
    double best_accuracy = 0.0;
};

struct GridResult {
    std::vector<GridCell> cells;  // client-major, then server, both as given
    GridCell best;                // ties: smaller server lr, then smaller client lr
};

GridResult grid_search(const ExperimentConfig& base, const std::vector<double>& client_lrs,
                       const std::vector<double>& server_lrs);

// Stability sweep: for each tau (in epochs) and replicate, runs the config's
// algorithm pair (fdaopt and fedopt with shared seeds) and reports median
// rounds-to-target per fraction, non-convergence as "x".
nlohmann::ordered_json sweep_tau(const ExperimentConfig& base, const std::vector<int>& tau_epochs_list,
                         int num_replicates);

// Lower median; nullopt entries dominate (non-convergence is worst).
std::optional<double> median_rounds(std::vector<std::optional<int>> values);

void emit_metrics(const std::vector<MetricsRow>& rows, const std::string& path);
void emit_jsonl(const std::vector<MetricsRow>& rows, const std::string& path);
void emit_queries(const std::vector<QueryRow>& rows, const std::string& path);

nlohmann::ordered_json summarize(const RunResult& run);

// Writes rows/jsonl/queries/summary under dir with the config's prefix and
// experiment id; returns the file paths written.
std::vector<std::string> write_run_outputs(const RunResult& run, const std::string& dir);

}  // namespace fdaopt
