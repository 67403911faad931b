#pragma once

// The round loop. FedOpt rounds run a fixed number of local steps; dynamic
// rounds extend local training up to tau_tilde and terminate early when the
// estimated model variance crosses the current threshold. Clients advance in
// lockstep, aggregation happens at deterministic barriers in ascending client
// id, and the whole trajectory is a pure function of the config seeds.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fdaopt/ams_sketch.hpp"
#include "fdaopt/data_federation.hpp"
#include "fdaopt/model_zoo.hpp"
#include "fdaopt/optimizers.hpp"
#include "fdaopt/variance_monitor.hpp"

namespace fdaopt {

enum class Algorithm { FedOpt, FDAOpt };

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& name);

// How the variance threshold evolves: adaptive follows the linear-growth
// adjustment rule; fixed pins it (e.g. +inf turns monitoring off entirely).
enum class ThetaMode { Adaptive, Fixed };

struct EngineConfig {
    Algorithm algorithm = Algorithm::FDAOpt;
    OptimizerSpec client_opt;
    OptimizerSpec server_opt;
    std::int64_t tau = 0;           // local steps per FedOpt round; 0 = one epoch
    std::int64_t total_rounds = 1;
    SketchConfig sketch;
    CohortSpec cohort;
    int batch_size = 8;
    std::uint64_t seed = 0;         // root of the batch-stream derivations
    bool weighted_average = false;  // weight drifts by |D_k|

    ThetaMode theta_mode = ThetaMode::Adaptive;
    double theta_fixed = 0.0;
    double theta_min = 1e-12;
    std::int64_t tau_tilde_override = 0;  // 0 = extend_tau(tau, e)
};

struct QueryRecord {
    std::int64_t step = 0;
    double nu = 0.0;
};

struct RoundRecord {
    int round = 0;
    std::vector<int> cohort;
    std::int64_t s_t = 0;
    double exact_var = 0.0;
    double theta = 0.0;  // threshold in force during this round
    double train_loss = 0.0;
    double eval_accuracy = 0.0;
    std::int64_t bytes_up = 0;
    std::int64_t bytes_down = 0;
    std::int64_t wall_steps = 0;  // cumulative lockstep steps through this round
    std::vector<QueryRecord> queries;
};

struct TrainingResult {
    std::vector<RoundRecord> history;
    ParamVector final_params;
};

class Engine {
public:
    Engine(EngineConfig config, const FederatedDataset& fd, const ModelSpec& model);

    // Resolved schedule parameters.
    std::int64_t tau() const { return tau_; }
    std::int64_t tau_tilde() const { return tau_tilde_; }
    double e_steps() const { return e_steps_; }
    const std::vector<std::int64_t>& queries() const { return query_schedule_; }

    // Test seam: replaces the sketch-based estimator at query time. Receives
    // (round, step, aggregated state) and returns the nu to compare with the
    // threshold.
    void set_variance_estimator(
        std::function<double(int, std::int64_t, const GlobalState&)> fn) {
        variance_estimator_ = std::move(fn);
    }

    RoundRecord run_round_fedopt(ParamVector& w, int round);
    RoundRecord run_round_fdaopt(ParamVector& w, double& theta, int round);

    TrainingResult run_training();

private:
    struct ClientRun {
        int client_id = 0;
        ParamVector w;
        OptimizerState opt_state;
        std::int64_t steps_done = 0;
        double loss_sum = 0.0;
    };

    ClientRun start_client(int client_id, const ParamVector& w0) const;
    void client_step(ClientRun& run, int round) const;
    RoundRecord finish_round(ParamVector& w, int round, const std::vector<int>& cohort,
                             std::vector<ClientRun>& runs, std::int64_t s_t);

    EngineConfig config_;
    const FederatedDataset& fd_;
    ModelSpec model_;
    std::size_t d_;
    std::int64_t tau_ = 0;
    std::int64_t tau_tilde_ = 0;
    double e_steps_ = 0.0;
    std::vector<std::int64_t> query_schedule_;
    OptimizerState server_state_;
    std::int64_t wall_steps_total_ = 0;
    std::function<double(int, std::int64_t, const GlobalState&)> variance_estimator_;
};

// Communication ledger per round. FedOpt: one model broadcast down and one
// drift upload up per cohort member. Dynamic rounds add, per executed query,
// a local state upload (norm + sketch) and a nu broadcast down.
struct CommBytes {
    std::int64_t up = 0;
    std::int64_t down = 0;
};

CommBytes communication_bytes(Algorithm algorithm, std::size_t d, int cohort_size,
                              int queries_executed, const SketchConfig& sketch);

}  // namespace fdaopt
