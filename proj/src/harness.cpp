#include "fdaopt/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "fdaopt/rng.hpp"

namespace fdaopt {

namespace {

constexpr const char* kNoConvergenceMarker = "×";

std::string fmt_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

nlohmann::json rounds_or_marker(const std::optional<double>& rounds) {
    if (!rounds) return kNoConvergenceMarker;
    return *rounds;
}

}  // namespace

Dataset build_dataset(const ExperimentConfig& config) {
    if (config.data.source == "csv") return load_csv(config.data.csv_path);
    return synth_generate(config.data.input_dim, config.data.num_classes,
                          config.data.samples_per_class, config.data.separation,
                          config.data.seed);
}

FederatedDataset build_federation(const ExperimentConfig& config, Dataset dataset) {
    return dirichlet_partition(dataset, config.partition);
}

ModelSpec resolve_model(const ExperimentConfig& config, const Dataset& dataset) {
    ModelSpec spec;
    spec.kind = config.model.kind;
    spec.input_dim = dataset.input_dim;
    spec.num_classes = dataset.num_classes;
    spec.hidden_dim = config.model.kind == ModelKind::MLP ? config.model.hidden_dim : 0;
    spec.init_seed = config.model.init_seed;
    return spec;
}

EngineConfig resolve_engine(const ExperimentConfig& config, const FederatedDataset& fd) {
    EngineConfig engine;
    engine.algorithm = config.algorithm;
    engine.client_opt = config.client_opt;
    engine.server_opt = config.server_opt;
    if (config.tau_steps > 0) {
        engine.tau = config.tau_steps;
    } else {
        const auto e_ceil =
            static_cast<std::int64_t>(std::ceil(mean_shard_size(fd, config.batch_size)));
        engine.tau = static_cast<std::int64_t>(config.tau_epochs) * e_ceil;
    }
    engine.total_rounds = config.rounds;
    engine.sketch = config.sketch;
    engine.cohort = config.cohort;
    engine.batch_size = config.batch_size;
    engine.seed = config.seed;
    engine.weighted_average = config.weighted_average;
    engine.theta_mode = config.fda.theta_mode;
    engine.theta_fixed = config.fda.theta_fixed;
    engine.theta_min = config.fda.theta_min;
    engine.tau_tilde_override = config.fda.tau_tilde_override;
    return engine;
}

ExperimentConfig with_replicate_seed(const ExperimentConfig& config, std::uint64_t replicate) {
    ExperimentConfig out = config;
    out.seed = derive_seed(replicate, "replicate-run");
    out.partition.seed = derive_seed(replicate, "replicate-partition");
    out.cohort.seed = derive_seed(replicate, "replicate-cohort");
    out.model.init_seed = derive_seed(replicate, "replicate-model");
    out.sketch.seed = derive_seed(replicate, "replicate-sketch");
    return out;
}

double centralized_baseline(const ModelSpec& model, const Dataset& dataset, int epochs,
                            const OptimizerSpec& opt, int batch_size) {
    if (epochs < 0) throw std::invalid_argument("baseline: epochs must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("baseline: batch_size must be >= 1");
    validate(model);
    validate(opt);

    std::vector<int> shard(dataset.size());
    std::iota(shard.begin(), shard.end(), 0);
    const auto steps_per_epoch = static_cast<std::int64_t>(
        (shard.size() + static_cast<std::size_t>(batch_size) - 1) / batch_size);
    const std::uint64_t epoch_seed = derive_seed(model.init_seed, "baseline-batch");

    ParamVector w = init_params(model);
    OptimizerState state = init_state(opt, w.size());
    double best = evaluate(model, w, dataset).accuracy;
    std::int64_t step_index = 0;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        for (std::int64_t i = 0; i < steps_per_epoch; ++i, ++step_index) {
            const Batch batch = next_batch(dataset, shard, epoch_seed, step_index, batch_size);
            auto [loss, grad] = loss_and_grad(model, w, batch);
            (void)loss;
            w = step(opt, state, w, grad);
        }
        best = std::max(best, evaluate(model, w, dataset).accuracy);
    }
    return best;
}

RunResult run_experiment(const ExperimentConfig& config) {
    RunResult result;
    result.config = config;

    Dataset dataset = build_dataset(config);
    const ModelSpec model = resolve_model(config, dataset);
    FederatedDataset fd = build_federation(config, std::move(dataset));
    const EngineConfig engine_config = resolve_engine(config, fd);

    if (config.targets.baseline_accuracy > 0.0) {
        result.baseline_accuracy = config.targets.baseline_accuracy;
    } else {
        OptimizerSpec baseline_opt;
        baseline_opt.kind = OptimizerKind::Adam;
        baseline_opt.learning_rate = 0.01;
        result.baseline_accuracy = centralized_baseline(model, fd.dataset,
                                                        config.targets.baseline_epochs,
                                                        baseline_opt, config.batch_size);
    }

    Engine engine(engine_config, fd, model);
    result.training = engine.run_training();
    result.tau = engine.tau();
    result.tau_tilde = engine.tau_tilde();
    result.e_steps = engine.e_steps();

    result.rows.reserve(result.training.history.size());
    for (const RoundRecord& rec : result.training.history) {
        MetricsRow row;
        row.experiment_id = config.experiment_id;
        row.seed = config.seed;
        row.round = rec.round;
        row.s_t = rec.s_t;
        row.exact_var = rec.exact_var;
        row.theta = rec.theta;
        row.train_loss = rec.train_loss;
        row.eval_accuracy = rec.eval_accuracy;
        row.bytes_up = rec.bytes_up;
        row.bytes_down = rec.bytes_down;
        row.wall_steps = rec.wall_steps;
        row.cohort = rec.cohort;
        result.rows.push_back(std::move(row));
        for (const QueryRecord& q : rec.queries)
            result.queries.push_back({rec.round, q.step, q.nu, rec.theta});
    }
    return result;
}

std::optional<int> rounds_to_target(const std::vector<RoundRecord>& history, double baseline,
                                    double fraction) {
    if (!(fraction > 0.0) || fraction > 1.0)
        throw std::invalid_argument("rounds_to_target: fraction must lie in (0, 1]");
    const double threshold = fraction * baseline;
    for (std::size_t i = 0; i < history.size(); ++i) {
        if (history[i].eval_accuracy >= threshold) return static_cast<int>(i) + 1;
    }
    return std::nullopt;
}

double speedup(int rounds_fedopt, int rounds_fdaopt) {
    if (rounds_fedopt <= 0 || rounds_fdaopt <= 0)
        throw std::invalid_argument("speedup: round counts must be positive");
    return static_cast<double>(rounds_fedopt) / static_cast<double>(rounds_fdaopt);
}

GridResult grid_search(const ExperimentConfig& base, const std::vector<double>& client_lrs,
                       const std::vector<double>& server_lrs) {
    if (client_lrs.empty() || server_lrs.empty())
        throw std::invalid_argument("grid_search: grids must be nonempty");

    Dataset dataset = build_dataset(base);
    const ModelSpec model = resolve_model(base, dataset);
    FederatedDataset fd = build_federation(base, std::move(dataset));

    GridResult result;
    result.cells.reserve(client_lrs.size() * server_lrs.size());
    bool have_best = false;
    for (double client_lr : client_lrs) {
        for (double server_lr : server_lrs) {
            ExperimentConfig config = base;
            config.client_opt.learning_rate = client_lr;
            config.server_opt.learning_rate = server_lr;
            const EngineConfig engine_config = resolve_engine(config, fd);
            Engine engine(engine_config, fd, model);
            const TrainingResult training = engine.run_training();
            double best_acc = 0.0;
            for (const RoundRecord& rec : training.history)
                best_acc = std::max(best_acc, rec.eval_accuracy);
            result.cells.push_back({client_lr, server_lr, best_acc});

            const GridCell& cell = result.cells.back();
            const bool better =
                !have_best || cell.best_accuracy > result.best.best_accuracy ||
                (cell.best_accuracy == result.best.best_accuracy &&
                 (cell.server_lr < result.best.server_lr ||
                  (cell.server_lr == result.best.server_lr && cell.client_lr < result.best.client_lr)));
            if (better) {
                result.best = cell;
                have_best = true;
            }
        }
    }
    return result;
}

std::optional<double> median_rounds(std::vector<std::optional<int>> values) {
    if (values.empty()) return std::nullopt;
    std::vector<double> mapped;
    mapped.reserve(values.size());
    for (const auto& v : values)
        mapped.push_back(v ? static_cast<double>(*v) : std::numeric_limits<double>::infinity());
    std::sort(mapped.begin(), mapped.end());
    const double median = mapped[(mapped.size() - 1) / 2];
    if (std::isinf(median)) return std::nullopt;
    return median;
}

nlohmann::ordered_json sweep_tau(const ExperimentConfig& base, const std::vector<int>& tau_epochs_list,
                         int num_replicates) {
    if (tau_epochs_list.empty()) throw std::invalid_argument("sweep_tau: tau list must be nonempty");
    if (num_replicates < 1) throw std::invalid_argument("sweep_tau: num_replicates must be >= 1");

    nlohmann::ordered_json summary;
    summary["experiment_id"] = base.experiment_id;
    summary["tau_epochs"] = tau_epochs_list;
    summary["replicates"] = num_replicates;
    summary["fractions"] = base.targets.fractions;
    nlohmann::ordered_json cells = nlohmann::json::array();

    for (int tau_epochs : tau_epochs_list) {
        if (tau_epochs < 1) throw std::invalid_argument("sweep_tau: tau values must be >= 1");
        std::vector<std::vector<std::optional<int>>> fda_rounds(base.targets.fractions.size());
        std::vector<std::vector<std::optional<int>>> fed_rounds(base.targets.fractions.size());
        for (int r = 0; r < num_replicates; ++r) {
            ExperimentConfig config = with_replicate_seed(base, static_cast<std::uint64_t>(r));
            config.tau_epochs = tau_epochs;
            config.tau_steps = 0;

            config.algorithm = Algorithm::FDAOpt;
            const RunResult fda = run_experiment(config);
            config.algorithm = Algorithm::FedOpt;
            const RunResult fed = run_experiment(config);

            for (std::size_t fi = 0; fi < base.targets.fractions.size(); ++fi) {
                const double fraction = base.targets.fractions[fi];
                fda_rounds[fi].push_back(
                    rounds_to_target(fda.training.history, fda.baseline_accuracy, fraction));
                fed_rounds[fi].push_back(
                    rounds_to_target(fed.training.history, fed.baseline_accuracy, fraction));
            }
        }
        for (std::size_t fi = 0; fi < base.targets.fractions.size(); ++fi) {
            const std::optional<double> fda_median = median_rounds(fda_rounds[fi]);
            const std::optional<double> fed_median = median_rounds(fed_rounds[fi]);
            nlohmann::ordered_json cell;
            cell["tau_epochs"] = tau_epochs;
            cell["fraction"] = base.targets.fractions[fi];
            cell["fdaopt_rounds"] = rounds_or_marker(fda_median);
            cell["fedopt_rounds"] = rounds_or_marker(fed_median);
            if (fda_median && fed_median) {
                cell["speedup"] = *fed_median / *fda_median;
            } else {
                cell["speedup"] = kNoConvergenceMarker;
            }
            cells.push_back(std::move(cell));
        }
    }
    summary["cells"] = std::move(cells);
    return summary;
}

namespace {

std::string cohort_field(const std::vector<int>& cohort) {
    std::string out;
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        if (i > 0) out += ';';
        out += std::to_string(cohort[i]);
    }
    return out;
}

std::ofstream open_for_write(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    return out;
}

}  // namespace

void emit_metrics(const std::vector<MetricsRow>& rows, const std::string& path) {
    std::ofstream out = open_for_write(path);
    out << "experiment_id,seed,round,s_t,exact_var,theta,train_loss,eval_accuracy,"
           "bytes_up,bytes_down,wall_steps,cohort\n";
    for (const MetricsRow& row : rows) {
        out << row.experiment_id << ',' << row.seed << ',' << row.round << ',' << row.s_t << ','
            << fmt_double(row.exact_var) << ',' << fmt_double(row.theta) << ','
            << fmt_double(row.train_loss) << ',' << fmt_double(row.eval_accuracy) << ','
            << row.bytes_up << ',' << row.bytes_down << ',' << row.wall_steps << ','
            << cohort_field(row.cohort) << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

void emit_jsonl(const std::vector<MetricsRow>& rows, const std::string& path) {
    std::ofstream out = open_for_write(path);
    for (const MetricsRow& row : rows) {
        nlohmann::ordered_json line;
        line["experiment_id"] = row.experiment_id;
        line["seed"] = row.seed;
        line["round"] = row.round;
        line["s_t"] = row.s_t;
        line["exact_var"] = row.exact_var;
        line["theta"] = row.theta;
        line["train_loss"] = row.train_loss;
        line["eval_accuracy"] = row.eval_accuracy;
        line["bytes_up"] = row.bytes_up;
        line["bytes_down"] = row.bytes_down;
        line["wall_steps"] = row.wall_steps;
        line["cohort"] = row.cohort;
        out << line.dump() << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

void emit_queries(const std::vector<QueryRow>& rows, const std::string& path) {
    std::ofstream out = open_for_write(path);
    out << "round,step,nu,theta\n";
    for (const QueryRow& row : rows) {
        out << row.round << ',' << row.step << ',' << fmt_double(row.nu) << ','
            << fmt_double(row.theta) << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

nlohmann::ordered_json summarize(const RunResult& run) {
    nlohmann::ordered_json summary;
    summary["experiment_id"] = run.config.experiment_id;
    summary["algorithm"] = to_string(run.config.algorithm);
    summary["seed"] = run.config.seed;
    summary["rounds"] = static_cast<std::int64_t>(run.training.history.size());
    summary["tau"] = run.tau;
    summary["tau_tilde"] = run.tau_tilde;
    summary["e_steps"] = run.e_steps;
    summary["baseline_accuracy"] = run.baseline_accuracy;

    nlohmann::ordered_json targets = nlohmann::json::array();
    for (double fraction : run.config.targets.fractions) {
        const std::optional<int> rounds =
            rounds_to_target(run.training.history, run.baseline_accuracy, fraction);
        nlohmann::ordered_json entry;
        entry["fraction"] = fraction;
        entry["rounds"] = rounds ? nlohmann::json(*rounds) : nlohmann::json(kNoConvergenceMarker);
        targets.push_back(std::move(entry));
    }
    summary["targets"] = std::move(targets);

    std::int64_t bytes_up = 0;
    std::int64_t bytes_down = 0;
    std::int64_t queries = 0;
    for (const RoundRecord& rec : run.training.history) {
        bytes_up += rec.bytes_up;
        bytes_down += rec.bytes_down;
        queries += static_cast<std::int64_t>(rec.queries.size());
    }
    nlohmann::ordered_json totals;
    totals["bytes_up"] = bytes_up;
    totals["bytes_down"] = bytes_down;
    totals["wall_steps"] = run.training.history.empty() ? 0 : run.training.history.back().wall_steps;
    totals["queries"] = queries;
    summary["totals"] = std::move(totals);

    nlohmann::ordered_json final_state;
    final_state["train_loss"] =
        run.training.history.empty() ? 0.0 : run.training.history.back().train_loss;
    final_state["eval_accuracy"] =
        run.training.history.empty() ? 0.0 : run.training.history.back().eval_accuracy;
    summary["final"] = std::move(final_state);
    return summary;
}

std::vector<std::string> write_run_outputs(const RunResult& run, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const std::string base = dir + "/" + run.config.output.prefix + run.config.experiment_id + "_" +
                             to_string(run.config.algorithm) + "_seed" +
                             std::to_string(run.config.seed);
    const std::string rows_csv = base + "_rows.csv";
    const std::string rows_jsonl = base + "_rows.jsonl";
    const std::string queries_csv = base + "_queries.csv";
    const std::string summary_json = base + "_summary.json";

    emit_metrics(run.rows, rows_csv);
    emit_jsonl(run.rows, rows_jsonl);
    emit_queries(run.queries, queries_csv);
    std::ofstream out = open_for_write(summary_json);
    out << summarize(run).dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed: " + summary_json);

    return {rows_csv, rows_jsonl, queries_csv, summary_json};
}

}  // namespace fdaopt
