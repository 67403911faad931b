#include <cstdint>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fdaopt/config.hpp"
#include "fdaopt/harness.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

fdaopt::ExperimentConfig load_config(const std::string& path,
                                     const std::vector<std::string>& overrides) {
    fdaopt::ExperimentConfig config =
        path.empty() ? fdaopt::ExperimentConfig{} : fdaopt::parse_config(read_file(path));
    for (const std::string& assignment : overrides)
        config = fdaopt::apply_override(config, assignment);
    return config;
}

std::string output_dir(const fdaopt::ExperimentConfig& config) {
    if (const char* env = std::getenv("FDAOPT_OUT_DIR"); env && *env) return env;
    return config.output.dir;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic federated-learning simulator with fixed-length and "
                 "variance-adaptive rounds"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    app.add_option("-c,--config", config_path, "Config file (JSON)");
    app.add_option("-s,--set", overrides, "Override config key: dotted.key=value");

    auto* run_cmd = app.add_subcommand("run", "Run one experiment and write metrics files");
    bool print_config = false;
    run_cmd->add_flag("--print-config", print_config, "Echo the resolved config and exit");

    auto* grid_cmd = app.add_subcommand("grid", "Learning-rate grid search");
    std::vector<double> client_lrs{1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
    std::vector<double> server_lrs{1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
    grid_cmd->add_option("--client-lrs", client_lrs, "Client learning-rate grid")
        ->delimiter(',');
    grid_cmd->add_option("--server-lrs", server_lrs, "Server learning-rate grid")
        ->delimiter(',');

    auto* sweep_cmd = app.add_subcommand("sweep-tau", "Stability sweep over local epochs");
    std::vector<int> taus{1, 2, 4, 8};
    int replicates = 3;
    sweep_cmd->add_option("--taus", taus, "Local-epoch counts to sweep")->delimiter(',');
    sweep_cmd->add_option("--replicates", replicates, "Seed replicates per cell");

    auto* baseline_cmd = app.add_subcommand("baseline", "Measure the centralized ceiling");
    int baseline_epochs = -1;
    baseline_cmd->add_option("--epochs", baseline_epochs,
                             "Training epochs (default: targets.baseline_epochs)");

    CLI11_PARSE(app, argc, argv);

    try {
        const fdaopt::ExperimentConfig config = load_config(config_path, overrides);

        if (run_cmd->parsed()) {
            if (print_config) {
                std::cout << fdaopt::serialize(config);
                return 0;
            }
            const fdaopt::RunResult result = fdaopt::run_experiment(config);
            const auto paths = fdaopt::write_run_outputs(result, output_dir(config));
            std::cout << fdaopt::summarize(result).dump(2) << '\n';
            for (const std::string& path : paths) std::cerr << "wrote " << path << '\n';
            return 0;
        }

        if (grid_cmd->parsed()) {
            const fdaopt::GridResult result = fdaopt::grid_search(config, client_lrs, server_lrs);
            nlohmann::ordered_json doc;
            doc["experiment_id"] = config.experiment_id;
            nlohmann::ordered_json cells = nlohmann::json::array();
            for (const fdaopt::GridCell& cell : result.cells) {
                nlohmann::ordered_json entry;
                entry["client_lr"] = cell.client_lr;
                entry["server_lr"] = cell.server_lr;
                entry["best_accuracy"] = cell.best_accuracy;
                cells.push_back(std::move(entry));
            }
            doc["cells"] = std::move(cells);
            nlohmann::ordered_json best;
            best["client_lr"] = result.best.client_lr;
            best["server_lr"] = result.best.server_lr;
            best["best_accuracy"] = result.best.best_accuracy;
            doc["best"] = std::move(best);
            std::cout << doc.dump(2) << '\n';
            return 0;
        }

        if (sweep_cmd->parsed()) {
            const nlohmann::ordered_json summary = fdaopt::sweep_tau(config, taus, replicates);
            std::cout << summary.dump(2) << '\n';
            return 0;
        }

        if (baseline_cmd->parsed()) {
            const fdaopt::Dataset dataset = fdaopt::build_dataset(config);
            const fdaopt::ModelSpec model = fdaopt::resolve_model(config, dataset);
            fdaopt::OptimizerSpec opt;
            opt.kind = fdaopt::OptimizerKind::Adam;
            opt.learning_rate = 0.01;
            const int epochs = baseline_epochs >= 0 ? baseline_epochs : config.targets.baseline_epochs;
            const double accuracy =
                fdaopt::centralized_baseline(model, dataset, epochs, opt, config.batch_size);
            nlohmann::ordered_json doc;
            doc["experiment_id"] = config.experiment_id;
            doc["epochs"] = epochs;
            doc["baseline_accuracy"] = accuracy;
            std::cout << doc.dump(2) << '\n';
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
