#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "fdaopt/fl_engine.hpp"
#include "fdaopt/rng.hpp"

using namespace fdaopt;

namespace {

// Interleaved shards: row i goes to client i mod k, so every shard sees both
// classes of the class-sorted synthetic data.
FederatedDataset make_federation(int num_clients, std::uint64_t seed, int samples_per_class = 24) {
    FederatedDataset fd;
    fd.dataset = synth_generate(2, 2, samples_per_class, 3.0, seed);
    fd.shards.assign(num_clients, {});
    for (std::size_t i = 0; i < fd.dataset.size(); ++i)
        fd.shards[i % num_clients].push_back(static_cast<int>(i));
    return fd;
}

ModelSpec small_logreg() {
    ModelSpec model;
    model.kind = ModelKind::LogReg;
    model.input_dim = 2;
    model.num_classes = 2;
    return model;
}

ModelSpec small_mlp(std::uint64_t init_seed) {
    ModelSpec model;
    model.kind = ModelKind::MLP;
    model.input_dim = 2;
    model.num_classes = 2;
    model.hidden_dim = 4;
    model.init_seed = init_seed;
    return model;
}

EngineConfig base_config(Algorithm algorithm, int cohort_size) {
    EngineConfig config;
    config.algorithm = algorithm;
    config.client_opt.kind = OptimizerKind::SGD;
    config.client_opt.learning_rate = 0.05;
    config.server_opt = fedavg_server_spec();
    config.total_rounds = 1;
    config.cohort.size = cohort_size;
    config.cohort.seed = 3;
    config.batch_size = 8;
    config.seed = 42;
    return config;
}

// Mirrors Engine::client_step exactly: same seed derivation, same batch
// stream, same op order, so results must agree bitwise.
ParamVector run_client_oracle(const FederatedDataset& fd, const ModelSpec& model,
                              const OptimizerSpec& client_opt, std::uint64_t seed, int round,
                              int client_id, const ParamVector& w0, std::int64_t steps,
                              int batch_size) {
    ParamVector w = w0;
    OptimizerState st = init_state(client_opt, w.size());
    const std::uint64_t batch_seed = derive_seed(seed, "batch", static_cast<std::uint64_t>(round),
                                                 static_cast<std::uint64_t>(client_id));
    for (std::int64_t i = 0; i < steps; ++i) {
        const Batch batch = next_batch(fd.dataset, fd.shards[client_id], batch_seed, i, batch_size);
        const auto [loss, grad] = loss_and_grad(model, w, batch);
        w = step(client_opt, st, w, grad);
    }
    return w;
}

}  // namespace

TEST_CASE("algorithm names round-trip") {
    CHECK(algorithm_from_string(to_string(Algorithm::FedOpt)) == Algorithm::FedOpt);
    CHECK(algorithm_from_string(to_string(Algorithm::FDAOpt)) == Algorithm::FDAOpt);
    CHECK_THROWS_AS(algorithm_from_string("fedprox"), std::invalid_argument);
}

TEST_CASE("constructor validates its inputs") {
    const FederatedDataset fd = make_federation(2, 1);
    EngineConfig config = base_config(Algorithm::FedOpt, 2);
    config.total_rounds = 0;
    CHECK_THROWS_AS(Engine(config, fd, small_logreg()), std::invalid_argument);
    config = base_config(Algorithm::FedOpt, 2);
    config.batch_size = 0;
    CHECK_THROWS_AS(Engine(config, fd, small_logreg()), std::invalid_argument);

    ModelSpec wrong = small_logreg();
    wrong.input_dim = 5;
    CHECK_THROWS_AS(Engine(base_config(Algorithm::FedOpt, 2), fd, wrong),
                    std::invalid_argument);
}

TEST_CASE("schedule resolution from shard sizes") {
    // Shards of 8 and 16 rows at batch 8: e = (1 + 2) / 2 = 1.5.
    FederatedDataset fd;
    fd.dataset = synth_generate(2, 2, 12, 3.0, 2);
    fd.shards.assign(2, {});
    for (int i = 0; i < 8; ++i) fd.shards[0].push_back(i);
    for (int i = 8; i < 24; ++i) fd.shards[1].push_back(i);

    EngineConfig config = base_config(Algorithm::FDAOpt, 2);
    config.tau = 0;  // one local epoch
    const Engine engine(config, fd, small_logreg());
    CHECK(engine.e_steps() == 1.5);
    CHECK(engine.tau() == 2);
    CHECK(engine.tau_tilde() == extend_tau(2, 1.5));
    CHECK(engine.tau_tilde() == 20);
    CHECK(engine.queries() == query_indices(2, 20));
    REQUIRE_FALSE(engine.queries().empty());
    CHECK(engine.queries().front() == 2);
    CHECK(engine.queries().back() == 20);
}

TEST_CASE("explicit tau overrides the epoch default") {
    const FederatedDataset fd = make_federation(3, 4);
    EngineConfig config = base_config(Algorithm::FedOpt, 3);
    config.tau = 11;
    const Engine engine(config, fd, small_logreg());
    CHECK(engine.tau() == 11);
    CHECK(engine.tau_tilde() == 11);  // fixed-length rounds have no horizon
}

TEST_CASE("a single-client federation reduces to sequential training") {
    FederatedDataset fd;
    fd.dataset = synth_generate(2, 2, 20, 3.0, 5);
    fd.shards.assign(1, {});
    for (std::size_t i = 0; i < fd.dataset.size(); ++i)
        fd.shards[0].push_back(static_cast<int>(i));

    EngineConfig config = base_config(Algorithm::FedOpt, 1);
    config.tau = 7;
    const ModelSpec model = small_mlp(6);
    Engine engine(config, fd, model);
    ParamVector w = init_params(model);
    engine.run_round_fedopt(w, 0);

    // With one client and unit-rate server SGD, the new global model is the
    // client's local endpoint, bit for bit.
    const ParamVector oracle = run_client_oracle(fd, model, config.client_opt, config.seed, 0,
                                                 0, init_params(model), 7, config.batch_size);
    CHECK(w == oracle);
}

TEST_CASE("plain averaging reproduces the hand-rolled round, bitwise") {
    const FederatedDataset fd = make_federation(2, 7);
    EngineConfig config = base_config(Algorithm::FedOpt, 2);
    config.tau = 5;
    const ModelSpec model = small_mlp(9);
    Engine engine(config, fd, model);
    const ParamVector w0 = init_params(model);
    ParamVector w = w0;
    const RoundRecord rec = engine.run_round_fedopt(w, 0);

    std::vector<ParamVector> deltas;
    for (int id = 0; id < 2; ++id) {
        const ParamVector end = run_client_oracle(fd, model, config.client_opt, config.seed, 0,
                                                  id, w0, 5, config.batch_size);
        deltas.push_back(axpy(-1.0, w0, end));
    }
    const ParamVector expected = axpy(1.0, mean(deltas), w0);
    CHECK(w == expected);
    CHECK(rec.exact_var == exact_variance(deltas));
    CHECK(rec.s_t == 5);
    CHECK(std::isnan(rec.theta));
}

TEST_CASE("size-weighted averaging uses shard masses") {
    FederatedDataset fd;
    fd.dataset = synth_generate(2, 2, 12, 3.0, 8);
    fd.shards.assign(2, {});
    for (int i = 0; i < 8; ++i) fd.shards[0].push_back(i);
    for (int i = 8; i < 24; ++i) fd.shards[1].push_back(i);

    EngineConfig config = base_config(Algorithm::FedOpt, 2);
    config.tau = 3;
    config.weighted_average = true;
    const ModelSpec model = small_logreg();
    Engine engine(config, fd, model);
    ParamVector w = init_params(model);
    engine.run_round_fedopt(w, 0);

    std::vector<ParamVector> deltas;
    for (int id = 0; id < 2; ++id) {
        const ParamVector end = run_client_oracle(fd, model, config.client_opt, config.seed, 0,
                                                  id, init_params(model), 3, config.batch_size);
        deltas.push_back(axpy(-1.0, init_params(model), end));
    }
    const ParamVector expected = axpy(1.0, weighted_mean(deltas, {8.0, 16.0}), init_params(model));
    CHECK(w == expected);

    EngineConfig plain = config;
    plain.weighted_average = false;
    Engine plain_engine(plain, fd, model);
    ParamVector w_plain = init_params(model);
    plain_engine.run_round_fedopt(w_plain, 0);
    CHECK(w != w_plain);
}

TEST_CASE("an adaptive server optimizer persists state across rounds") {
    const FederatedDataset fd = make_federation(2, 10);
    EngineConfig config = base_config(Algorithm::FedOpt, 2);
    config.tau = 2;
    config.total_rounds = 2;
    config.server_opt.kind = OptimizerKind::Adam;
    config.server_opt.learning_rate = 0.01;
    const ModelSpec model = small_logreg();
    Engine engine(config, fd, model);
    const TrainingResult result = engine.run_training();
    REQUIRE(result.history.size() == 2);

    // Replay round by round with an external Adam state. Round 2 only
    // matches if the engine carried the moments forward.
    OptimizerState server = init_state(config.server_opt, param_count(model));
    ParamVector w = init_params(model);
    for (int round = 0; round < 2; ++round) {
        std::vector<ParamVector> deltas;
        for (int id = 0; id < 2; ++id) {
            const ParamVector end = run_client_oracle(fd, model, config.client_opt, config.seed,
                                                      round, id, w, 2, config.batch_size);
            deltas.push_back(axpy(-1.0, w, end));
        }
        w = step(config.server_opt, server, w, scaled(-1.0, mean(deltas)));
    }
    CHECK(result.final_params == w);
}

TEST_CASE("fixed-length rounds account constant communication") {
    const FederatedDataset fd = make_federation(4, 11);
    EngineConfig config = base_config(Algorithm::FedOpt, 3);
    config.tau = 2;
    config.total_rounds = 3;
    const ModelSpec model = small_logreg();
    Engine engine(config, fd, model);
    const TrainingResult result = engine.run_training();
    REQUIRE(result.history.size() == 3);
    const std::int64_t model_bytes = static_cast<std::int64_t>(param_count(model)) * 8;
    for (int t = 0; t < 3; ++t) {
        const RoundRecord& rec = result.history[t];
        CHECK(rec.round == t);
        CHECK(rec.cohort.size() == 3);
        CHECK(rec.bytes_up == 3 * model_bytes);
        CHECK(rec.bytes_down == 3 * model_bytes);
        CHECK(rec.wall_steps == 2 * (t + 1));
        CHECK(rec.queries.empty());
    }
}

TEST_CASE("cohort sampling respects the configured size") {
    const FederatedDataset fd = make_federation(10, 12, 40);
    EngineConfig config = base_config(Algorithm::FedOpt, 4);
    config.tau = 1;
    Engine engine(config, fd, small_logreg());
    ParamVector w = init_params(small_logreg());
    const RoundRecord rec = engine.run_round_fedopt(w, 0);
    REQUIRE(rec.cohort.size() == 4);
    for (std::size_t i = 1; i < rec.cohort.size(); ++i)
        CHECK(rec.cohort[i - 1] < rec.cohort[i]);
    for (int id : rec.cohort) {
        CHECK(id >= 0);
        CHECK(id < 10);
    }
    CHECK(rec.cohort == sample_cohort(10, config.cohort, 0));
}

TEST_CASE("the bootstrap round terminates at the first query") {
    const FederatedDataset fd = make_federation(2, 13);
    EngineConfig config = base_config(Algorithm::FDAOpt, 2);
    config.tau = 3;
    config.total_rounds = 2;
    const ModelSpec model = small_logreg();
    Engine engine(config, fd, model);
    const TrainingResult result = engine.run_training();
    REQUIRE(result.history.size() == 2);

    const RoundRecord& r0 = result.history[0];
    CHECK(r0.theta == -std::numeric_limits<double>::infinity());
    REQUIRE_FALSE(engine.queries().empty());
    CHECK(r0.s_t == engine.queries().front());
    REQUIRE(r0.queries.size() == 1);
    CHECK(r0.queries[0].step == r0.s_t);

    const RoundRecord& r1 = result.history[1];
    CHECK(r1.theta ==
          threshold_adjust(r0.exact_var, r0.s_t, engine.tau_tilde(), config.theta_min));
}

TEST_CASE("a scripted estimator controls when rounds terminate") {
    const FederatedDataset fd = make_federation(2, 14, 32);
    EngineConfig config = base_config(Algorithm::FDAOpt, 2);
    config.tau = 4;
    config.theta_mode = ThetaMode::Fixed;
    config.theta_fixed = 10.0;
    const ModelSpec model = small_logreg();
    Engine engine(config, fd, model);
    REQUIRE(engine.queries().size() >= 3);

    engine.set_variance_estimator([&engine](int, std::int64_t step, const GlobalState&) {
        return step == engine.queries()[2] ? 99.0 : 1.0;
    });
    ParamVector w = init_params(model);
    double theta = config.theta_fixed;
    const RoundRecord rec = engine.run_round_fdaopt(w, theta, 0);

    CHECK(rec.s_t == engine.queries()[2]);
    REQUIRE(rec.queries.size() == 3);
    CHECK(rec.queries[0].nu == 1.0);
    CHECK(rec.queries[1].nu == 1.0);
    CHECK(rec.queries[2].nu == 99.0);
    CHECK(rec.theta == 10.0);
    CHECK(theta == 10.0);  // fixed mode never adjusts

    const std::int64_t model_bytes = static_cast<std::int64_t>(param_count(model)) * 8;
    const std::int64_t state_bytes = 8 + sketch_bytes(config.sketch);
    CHECK(rec.bytes_up == 2 * model_bytes + 3 * 2 * state_bytes);
    CHECK(rec.bytes_down == 2 * model_bytes + 3 * 2 * 8);
}

TEST_CASE("a silent monitor lets the round run to the horizon") {
    const FederatedDataset fd = make_federation(2, 15);
    EngineConfig config = base_config(Algorithm::FDAOpt, 2);
    config.tau = 2;
    config.theta_mode = ThetaMode::Fixed;
    config.theta_fixed = 10.0;
    Engine engine(config, fd, small_logreg());
    engine.set_variance_estimator([](int, std::int64_t, const GlobalState&) { return -1.0; });
    ParamVector w = init_params(small_logreg());
    double theta = config.theta_fixed;
    const RoundRecord rec = engine.run_round_fdaopt(w, theta, 0);
    CHECK(rec.s_t == engine.tau_tilde());
    CHECK(rec.queries.size() == engine.queries().size());
}

TEST_CASE("monitoring disabled reproduces the fixed-length trajectory") {
    const FederatedDataset fd = make_federation(3, 16);
    const ModelSpec model = small_mlp(2);

    EngineConfig fixed = base_config(Algorithm::FedOpt, 3);
    fixed.tau = 4;
    fixed.total_rounds = 5;
    Engine fixed_engine(fixed, fd, model);
    const TrainingResult fed = fixed_engine.run_training();

    EngineConfig dynamic = fixed;
    dynamic.algorithm = Algorithm::FDAOpt;
    dynamic.theta_mode = ThetaMode::Fixed;
    dynamic.theta_fixed = std::numeric_limits<double>::infinity();
    dynamic.tau_tilde_override = 4;
    Engine dynamic_engine(dynamic, fd, model);
    const TrainingResult fda = dynamic_engine.run_training();

    CHECK(fed.final_params == fda.final_params);
    REQUIRE(fed.history.size() == fda.history.size());
    for (std::size_t t = 0; t < fed.history.size(); ++t) {
        CHECK(fda.history[t].s_t == 4);
        CHECK(fed.history[t].exact_var == fda.history[t].exact_var);
        CHECK(fed.history[t].eval_accuracy == fda.history[t].eval_accuracy);
        CHECK(fed.history[t].train_loss == fda.history[t].train_loss);
    }
}

TEST_CASE("the default estimator is the sketch-based one") {
    const FederatedDataset fd = make_federation(2, 17);
    EngineConfig config = base_config(Algorithm::FDAOpt, 2);
    config.tau = 3;
    config.total_rounds = 3;
    const ModelSpec model = small_logreg();

    Engine plain(config, fd, model);
    Engine seamed(config, fd, model);
    seamed.set_variance_estimator(
        [](int, std::int64_t, const GlobalState& g) { return estimate_variance(g); });
    const TrainingResult a = plain.run_training();
    const TrainingResult b = seamed.run_training();
    CHECK(a.final_params == b.final_params);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t t = 0; t < a.history.size(); ++t) {
        CHECK(a.history[t].s_t == b.history[t].s_t);
        REQUIRE(a.history[t].queries.size() == b.history[t].queries.size());
        for (std::size_t q = 0; q < a.history[t].queries.size(); ++q)
            CHECK(a.history[t].queries[q].nu == b.history[t].queries[q].nu);
    }
}

TEST_CASE("dynamic rounds accumulate their actual lockstep lengths") {
    const FederatedDataset fd = make_federation(2, 18);
    EngineConfig config = base_config(Algorithm::FDAOpt, 2);
    config.tau = 2;
    config.total_rounds = 4;
    Engine engine(config, fd, small_logreg());
    const TrainingResult result = engine.run_training();
    std::int64_t cumulative = 0;
    for (const RoundRecord& rec : result.history) {
        cumulative += rec.s_t;
        CHECK(rec.wall_steps == cumulative);
        CHECK(rec.s_t >= 1);
        CHECK(rec.s_t <= engine.tau_tilde());
        // Termination always lands on a query index or the horizon.
        bool on_schedule = rec.s_t == engine.tau_tilde();
        for (std::int64_t q : engine.queries()) on_schedule = on_schedule || rec.s_t == q;
        CHECK(on_schedule);
    }
}

TEST_CASE("repeat trainings are byte-identical") {
    const FederatedDataset fd = make_federation(3, 19);
    EngineConfig config = base_config(Algorithm::FDAOpt, 2);
    config.tau = 2;
    config.total_rounds = 4;
    config.server_opt.kind = OptimizerKind::Adam;
    config.server_opt.learning_rate = 0.02;
    const ModelSpec model = small_mlp(5);

    Engine first(config, fd, model);
    Engine second(config, fd, model);
    const TrainingResult a = first.run_training();
    const TrainingResult b = second.run_training();
    CHECK(a.final_params == b.final_params);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t t = 0; t < a.history.size(); ++t) {
        CHECK(a.history[t].s_t == b.history[t].s_t);
        CHECK(a.history[t].exact_var == b.history[t].exact_var);
        CHECK(a.history[t].train_loss == b.history[t].train_loss);
        CHECK(a.history[t].eval_accuracy == b.history[t].eval_accuracy);
        CHECK(a.history[t].bytes_up == b.history[t].bytes_up);
    }

    // And a second run_training on the same engine resets all carried state.
    const TrainingResult c = first.run_training();
    CHECK(c.final_params == a.final_params);
}

TEST_CASE("communication ledger matches the documented arithmetic") {
    SketchConfig sketch;
    sketch.depth = 7;
    sketch.width = 1024;

    const CommBytes fed = communication_bytes(Algorithm::FedOpt, 10000, 10, 0, sketch);
    CHECK(fed.up == 800000);
    CHECK(fed.down == 800000);

    const CommBytes fda = communication_bytes(Algorithm::FDAOpt, 10000, 10, 3, sketch);
    CHECK(fda.up == 800000 + 3 * 10 * (8 + 57344));
    CHECK(fda.down == 800000 + 3 * 10 * 8);

    // At a million parameters the whole monitoring payload stays under one
    // percent of the model exchange per query.
    const CommBytes big = communication_bytes(Algorithm::FDAOpt, 1000000, 10, 1, sketch);
    const double per_query_up = static_cast<double>(big.up - 8000000 * 10) / 10.0;
    CHECK(per_query_up / (1000000.0 * 8.0) < 0.01);
}
