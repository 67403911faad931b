#include "fdaopt/fl_engine.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "fdaopt/rng.hpp"

namespace fdaopt {

std::string to_string(Algorithm a) {
    return a == Algorithm::FedOpt ? "fedopt" : "fdaopt";
}

Algorithm algorithm_from_string(const std::string& name) {
    if (name == "fedopt") return Algorithm::FedOpt;
    if (name == "fdaopt") return Algorithm::FDAOpt;
    throw std::invalid_argument("unknown algorithm: " + name);
}

CommBytes communication_bytes(Algorithm algorithm, std::size_t d, int cohort_size,
                              int queries_executed, const SketchConfig& sketch) {
    const std::int64_t model = static_cast<std::int64_t>(d) * 8;
    CommBytes bytes;
    bytes.down = static_cast<std::int64_t>(cohort_size) * model;
    bytes.up = static_cast<std::int64_t>(cohort_size) * model;
    if (algorithm == Algorithm::FDAOpt) {
        const std::int64_t state = 8 + sketch_bytes(sketch);
        bytes.up += static_cast<std::int64_t>(queries_executed) * cohort_size * state;
        bytes.down += static_cast<std::int64_t>(queries_executed) * cohort_size * 8;
    }
    return bytes;
}

Engine::Engine(EngineConfig config, const FederatedDataset& fd, const ModelSpec& model)
    : config_(std::move(config)), fd_(fd), model_(model) {
    validate(model_);
    validate(config_.client_opt);
    validate(config_.server_opt);
    if (config_.total_rounds < 1) throw std::invalid_argument("engine: total_rounds must be >= 1");
    if (config_.batch_size < 1) throw std::invalid_argument("engine: batch_size must be >= 1");
    if (model_.input_dim != fd_.dataset.input_dim || model_.num_classes != fd_.dataset.num_classes)
        throw std::invalid_argument("engine: model dims do not match dataset");

    d_ = param_count(model_);
    e_steps_ = mean_shard_size(fd_, config_.batch_size);
    const std::int64_t e_ceil = static_cast<std::int64_t>(std::ceil(e_steps_));
    tau_ = config_.tau > 0 ? config_.tau : e_ceil;  // default: one epoch
    if (config_.algorithm == Algorithm::FDAOpt) {
        tau_tilde_ = config_.tau_tilde_override > 0 ? config_.tau_tilde_override
                                                    : extend_tau(tau_, e_steps_);
        query_schedule_ = query_indices(e_ceil, tau_tilde_);
    } else {
        tau_tilde_ = tau_;
    }
    server_state_ = init_state(config_.server_opt, d_);
}

Engine::ClientRun Engine::start_client(int client_id, const ParamVector& w0) const {
    ClientRun run;
    run.client_id = client_id;
    run.w = w0;
    run.opt_state = init_state(config_.client_opt, d_);  // clients are stateless across rounds
    return run;
}

void Engine::client_step(ClientRun& run, int round) const {
    const std::uint64_t batch_seed = derive_seed(config_.seed, "batch",
                                                 static_cast<std::uint64_t>(round),
                                                 static_cast<std::uint64_t>(run.client_id));
    const Batch batch = next_batch(fd_.dataset, fd_.shards[run.client_id], batch_seed,
                                   run.steps_done, config_.batch_size);
    auto [loss, grad] = loss_and_grad(model_, run.w, batch);
    run.w = step(config_.client_opt, run.opt_state, run.w, grad);
    run.loss_sum += loss;
    run.steps_done += 1;
}

RoundRecord Engine::finish_round(ParamVector& w, int round, const std::vector<int>& cohort,
                                 std::vector<ClientRun>& runs, std::int64_t s_t) {
    std::vector<ParamVector> deltas;
    deltas.reserve(runs.size());
    for (const auto& run : runs) deltas.push_back(axpy(-1.0, w, run.w));  // w_end - w_start

    ParamVector mean_delta;
    if (config_.weighted_average) {
        std::vector<double> weights;
        weights.reserve(runs.size());
        for (const auto& run : runs)
            weights.push_back(static_cast<double>(fd_.shards[run.client_id].size()));
        mean_delta = weighted_mean(deltas, weights);
    } else {
        mean_delta = mean(deltas);
    }
    const ParamVector pseudo_grad = scaled(-1.0, mean_delta);
    w = step(config_.server_opt, server_state_, w, pseudo_grad);

    RoundRecord rec;
    rec.round = round;
    rec.cohort = cohort;
    rec.s_t = s_t;
    rec.exact_var = exact_variance(deltas);
    const EvalResult eval = evaluate(model_, w, fd_.dataset);
    rec.train_loss = eval.loss;
    rec.eval_accuracy = eval.accuracy;
    wall_steps_total_ += s_t;
    rec.wall_steps = wall_steps_total_;
    return rec;
}

RoundRecord Engine::run_round_fedopt(ParamVector& w, int round) {
    const std::vector<int> cohort = sample_cohort(fd_.num_clients(), config_.cohort, round);
    std::vector<ClientRun> runs;
    runs.reserve(cohort.size());
    for (int id : cohort) runs.push_back(start_client(id, w));

    for (std::int64_t i = 1; i <= tau_; ++i) {
        for (auto& run : runs) client_step(run, round);
    }
    RoundRecord rec = finish_round(w, round, cohort, runs, tau_);
    const CommBytes bytes = communication_bytes(Algorithm::FedOpt, d_,
                                                static_cast<int>(cohort.size()), 0, config_.sketch);
    rec.bytes_up = bytes.up;
    rec.bytes_down = bytes.down;
    rec.theta = std::numeric_limits<double>::quiet_NaN();  // no threshold in force
    return rec;
}

RoundRecord Engine::run_round_fdaopt(ParamVector& w, double& theta, int round) {
    const std::vector<int> cohort = sample_cohort(fd_.num_clients(), config_.cohort, round);
    std::vector<ClientRun> runs;
    runs.reserve(cohort.size());
    for (int id : cohort) runs.push_back(start_client(id, w));

    std::vector<QueryRecord> queries;
    std::size_t next_query = 0;
    std::int64_t s_t = tau_tilde_;
    for (std::int64_t i = 1; i <= tau_tilde_; ++i) {
        for (auto& run : runs) client_step(run, round);  // lockstep
        if (next_query < query_schedule_.size() && query_schedule_[next_query] == i) {
            ++next_query;
            std::vector<LocalState> states;
            states.reserve(runs.size());
            for (const auto& run : runs)
                states.push_back(local_state(config_.sketch, axpy(-1.0, w, run.w)));
            const GlobalState global = aggregate(states);
            const double nu = variance_estimator_ ? variance_estimator_(round, i, global)
                                                  : estimate_variance(global);
            queries.push_back({i, nu});
            if (nu > theta) {
                s_t = i;  // round terminates for all clients simultaneously
                break;
            }
        }
    }

    RoundRecord rec = finish_round(w, round, cohort, runs, s_t);
    rec.theta = theta;
    rec.queries = std::move(queries);
    if (config_.theta_mode == ThetaMode::Adaptive) {
        theta = threshold_adjust(rec.exact_var, s_t, tau_tilde_, config_.theta_min);
    }
    const CommBytes bytes = communication_bytes(Algorithm::FDAOpt, d_,
                                                static_cast<int>(cohort.size()),
                                                static_cast<int>(rec.queries.size()), config_.sketch);
    rec.bytes_up = bytes.up;
    rec.bytes_down = bytes.down;
    return rec;
}

TrainingResult Engine::run_training() {
    wall_steps_total_ = 0;
    server_state_ = init_state(config_.server_opt, d_);
    ParamVector w = init_params(model_);
    double theta = config_.theta_mode == ThetaMode::Fixed
                       ? config_.theta_fixed
                       : -std::numeric_limits<double>::infinity();

    TrainingResult result;
    result.history.reserve(config_.total_rounds);
    for (int t = 0; t < config_.total_rounds; ++t) {
        RoundRecord rec = config_.algorithm == Algorithm::FedOpt
                              ? run_round_fedopt(w, t)
                              : run_round_fdaopt(w, theta, t);
        result.history.push_back(std::move(rec));
    }
    result.final_params = std::move(w);
    return result;
}

}  // namespace fdaopt
