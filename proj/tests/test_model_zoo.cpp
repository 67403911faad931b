#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "fdaopt/model_zoo.hpp"
#include "fdaopt/rng.hpp"

using namespace fdaopt;

namespace {

Batch random_batch(std::uint64_t seed, int input_dim, int num_classes, std::size_t n) {
    Rng gen = derive_rng(seed, "test-batch");
    Batch batch;
    batch.input_dim = input_dim;
    batch.features.resize(n * static_cast<std::size_t>(input_dim));
    batch.labels.resize(n);
    for (auto& x : batch.features) x = gen.normal();
    for (auto& y : batch.labels) y = gen.uniform_int(num_classes);
    return batch;
}

Dataset dataset_from(const Batch& batch, int num_classes) {
    Dataset ds;
    ds.input_dim = batch.input_dim;
    ds.num_classes = num_classes;
    ds.features = batch.features;
    ds.labels = batch.labels;
    return ds;
}

// Central finite differences against the analytic gradient. Returns the
// worst per-coordinate relative error.
double fd_check(const ModelSpec& spec, const ParamVector& w, const Batch& batch, double h) {
    const ParamVector g = loss_and_grad(spec, w, batch).second;
    double worst = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        ParamVector wp = w, wm = w;
        wp[i] += h;
        wm[i] -= h;
        const double fd =
            (loss_and_grad(spec, wp, batch).first - loss_and_grad(spec, wm, batch).first) /
            (2.0 * h);
        const double err = std::abs(fd - g[i]) / std::max(1.0, std::abs(fd) + std::abs(g[i]));
        worst = std::max(worst, err);
    }
    return worst;
}

}  // namespace

TEST_CASE("model kind names round-trip") {
    CHECK(model_kind_from_string(to_string(ModelKind::LogReg)) == ModelKind::LogReg);
    CHECK(model_kind_from_string(to_string(ModelKind::MLP)) == ModelKind::MLP);
    CHECK_THROWS_AS(model_kind_from_string("resnet"), std::invalid_argument);
}

TEST_CASE("param_count matches the flat layouts") {
    ModelSpec logreg;
    logreg.kind = ModelKind::LogReg;
    logreg.input_dim = 4;
    logreg.num_classes = 3;
    CHECK(param_count(logreg) == 15);

    ModelSpec mlp;
    mlp.kind = ModelKind::MLP;
    mlp.input_dim = 2;
    mlp.hidden_dim = 3;
    mlp.num_classes = 2;
    CHECK(param_count(mlp) == 17);
}

TEST_CASE("validate rejects bad shapes") {
    ModelSpec spec;
    spec.kind = ModelKind::LogReg;
    spec.input_dim = 0;
    spec.num_classes = 3;
    CHECK_THROWS_AS(validate(spec), std::invalid_argument);
    spec.input_dim = 4;
    spec.num_classes = 0;
    CHECK_THROWS_AS(validate(spec), std::invalid_argument);
    spec.num_classes = 3;
    CHECK_NOTHROW(validate(spec));

    spec.kind = ModelKind::MLP;
    spec.hidden_dim = 0;
    CHECK_THROWS_AS(validate(spec), std::invalid_argument);
    spec.hidden_dim = 8;
    CHECK_NOTHROW(validate(spec));
}

TEST_CASE("logistic regression initializes to zeros") {
    ModelSpec spec;
    spec.kind = ModelKind::LogReg;
    spec.input_dim = 4;
    spec.num_classes = 3;
    const ParamVector w = init_params(spec);
    CHECK(w.size() == 15);
    for (double x : w) CHECK(x == 0.0);
}

TEST_CASE("MLP init stays within the per-layer uniform bounds") {
    ModelSpec spec;
    spec.kind = ModelKind::MLP;
    spec.input_dim = 6;
    spec.hidden_dim = 5;
    spec.num_classes = 3;
    spec.init_seed = 9;
    const ParamVector w = init_params(spec);
    CHECK(w.size() == param_count(spec));

    const std::size_t hidden_end = static_cast<std::size_t>((6 + 1) * 5);
    const double a1 = std::sqrt(6.0 / (6 + 5));
    const double a2 = std::sqrt(6.0 / (5 + 3));
    for (std::size_t i = 0; i < hidden_end; ++i) CHECK(std::abs(w[i]) <= a1);
    for (std::size_t i = hidden_end; i < w.size(); ++i) CHECK(std::abs(w[i]) <= a2);
}

TEST_CASE("MLP init is a pure function of the seed") {
    ModelSpec spec;
    spec.kind = ModelKind::MLP;
    spec.input_dim = 4;
    spec.hidden_dim = 4;
    spec.num_classes = 2;
    spec.init_seed = 11;
    const ParamVector a = init_params(spec);
    const ParamVector b = init_params(spec);
    CHECK(a == b);
    spec.init_seed = 12;
    CHECK(init_params(spec) != a);
}

TEST_CASE("zero-weight logistic regression scores ln(C)") {
    ModelSpec spec;
    spec.kind = ModelKind::LogReg;
    spec.input_dim = 3;
    spec.num_classes = 4;
    const Batch batch = random_batch(2, 3, 4, 20);
    const auto [loss, grad] = loss_and_grad(spec, init_params(spec), batch);
    CHECK(loss == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    CHECK(grad.size() == param_count(spec));

    const Dataset ds = dataset_from(batch, 4);
    const EvalResult ev = evaluate(spec, init_params(spec), ds);
    CHECK(ev.loss == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("logistic regression gradient at zero matches the closed form") {
    // At w = 0 probabilities are uniform, so for each sample the gradient of
    // class c's weight j is (1/C - [c == y]) * x_j / n and the bias gradient
    // is (1/C - [c == y]) / n.
    ModelSpec spec;
    spec.kind = ModelKind::LogReg;
    spec.input_dim = 2;
    spec.num_classes = 3;
    Batch batch;
    batch.input_dim = 2;
    batch.features = {0.5, -1.0, 2.0, 0.25};
    batch.labels = {1, 0};
    const ParamVector g = loss_and_grad(spec, init_params(spec), batch).second;

    ParamVector oracle(9, 0.0);
    const double inv_c = 1.0 / 3.0;
    for (std::size_t s = 0; s < 2; ++s) {
        for (int c = 0; c < 3; ++c) {
            const double coef = (inv_c - (c == batch.labels[s] ? 1.0 : 0.0)) / 2.0;
            oracle[static_cast<std::size_t>(c) * 3 + 0] += coef * batch.row(s)[0];
            oracle[static_cast<std::size_t>(c) * 3 + 1] += coef * batch.row(s)[1];
            oracle[static_cast<std::size_t>(c) * 3 + 2] += coef;
        }
    }
    REQUIRE(g.size() == oracle.size());
    for (std::size_t i = 0; i < g.size(); ++i)
        CHECK(g[i] == doctest::Approx(oracle[i]).epsilon(1e-12));
}

TEST_CASE("batch loss is the mean of per-sample losses") {
    ModelSpec spec;
    spec.kind = ModelKind::MLP;
    spec.input_dim = 3;
    spec.hidden_dim = 4;
    spec.num_classes = 3;
    spec.init_seed = 4;
    const ParamVector w = init_params(spec);
    const Batch batch = random_batch(14, 3, 3, 6);

    double total = 0.0;
    for (std::size_t s = 0; s < batch.size(); ++s) {
        Batch single;
        single.input_dim = 3;
        single.features.assign(batch.row(s), batch.row(s) + 3);
        single.labels = {batch.labels[s]};
        total += loss_and_grad(spec, w, single).first;
    }
    const double batched = loss_and_grad(spec, w, batch).first;
    CHECK(batched == doctest::Approx(total / 6.0).epsilon(1e-12));
}

TEST_CASE("finite differences confirm the logistic regression gradient") {
    ModelSpec spec;
    spec.kind = ModelKind::LogReg;
    spec.input_dim = 4;
    spec.num_classes = 3;
    Rng gen = derive_rng(7, "logreg-fd-point");
    ParamVector w(param_count(spec));
    for (auto& x : w) x = 0.5 * gen.normal();
    const Batch batch = random_batch(8, 4, 3, 12);
    CHECK(fd_check(spec, w, batch, 1e-5) <= 1e-6);
}

TEST_CASE("finite differences confirm the MLP gradient") {
    ModelSpec spec;
    spec.kind = ModelKind::MLP;
    spec.input_dim = 3;
    spec.hidden_dim = 5;
    spec.num_classes = 4;
    spec.init_seed = 3;
    const ParamVector w = init_params(spec);
    const Batch batch = random_batch(3, 3, 4, 10);
    CHECK(fd_check(spec, w, batch, 1e-5) <= 1e-6);
}

TEST_CASE("softmax max-subtraction keeps huge logits finite") {
    ModelSpec spec;
    spec.kind = ModelKind::LogReg;
    spec.input_dim = 1;
    spec.num_classes = 2;
    // Logit gap of 500 in favor of the true class: p_y ~ 1, loss ~ 0.
    const ParamVector w{500.0, 0.0, 0.0, 0.0};
    Batch batch;
    batch.input_dim = 1;
    batch.features = {1.0};
    batch.labels = {0};
    const auto [loss, grad] = loss_and_grad(spec, w, batch);
    CHECK(std::isfinite(loss));
    CHECK(loss == doctest::Approx(0.0).epsilon(1e-12));
    for (double x : grad) CHECK(std::isfinite(x));
}

TEST_CASE("an underflowed true-class probability clamps to a finite loss") {
    ModelSpec spec;
    spec.kind = ModelKind::LogReg;
    spec.input_dim = 1;
    spec.num_classes = 2;
    const ParamVector w{1000.0, 0.0, 0.0, 0.0};
    Batch batch;
    batch.input_dim = 1;
    batch.features = {1.0};
    batch.labels = {1};
    const double loss = loss_and_grad(spec, w, batch).first;
    CHECK(std::isfinite(loss));
    CHECK(loss == doctest::Approx(-std::log(1e-300)).epsilon(1e-12));
}

TEST_CASE("non-finite inputs raise instead of propagating") {
    ModelSpec spec;
    spec.kind = ModelKind::LogReg;
    spec.input_dim = 1;
    spec.num_classes = 2;
    const ParamVector w{1.0, 0.0, 0.0, 0.0};
    Batch batch;
    batch.input_dim = 1;
    batch.features = {std::nan("")};
    batch.labels = {0};
    CHECK_THROWS_AS(loss_and_grad(spec, w, batch), std::domain_error);
}

TEST_CASE("argmax ties break toward the lowest class") {
    ModelSpec spec;
    spec.kind = ModelKind::LogReg;
    spec.input_dim = 2;
    spec.num_classes = 3;
    Dataset ds;
    ds.input_dim = 2;
    ds.num_classes = 3;
    ds.features = {1.0, 1.0, -1.0, 0.5, 0.0, 2.0};
    ds.labels = {0, 1, 2};
    // Zero weights tie every class, so every prediction is class 0.
    const EvalResult ev = evaluate(spec, init_params(spec), ds);
    CHECK(ev.accuracy == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("accuracy is an exact ratio of counts") {
    ModelSpec spec;
    spec.kind = ModelKind::LogReg;
    spec.input_dim = 1;
    spec.num_classes = 2;
    // Class 0 for positive x. One of the two samples is labeled wrong.
    const ParamVector w{1.0, 0.0, -1.0, 0.0};
    Dataset ds;
    ds.input_dim = 1;
    ds.num_classes = 2;
    ds.features = {1.0, 1.0};
    ds.labels = {0, 1};
    CHECK(evaluate(spec, w, ds).accuracy == 0.5);
}

TEST_CASE("a confident separable mapping evaluates near-perfect") {
    ModelSpec spec;
    spec.kind = ModelKind::LogReg;
    spec.input_dim = 1;
    spec.num_classes = 2;
    const ParamVector w{10.0, 0.0, -10.0, 0.0};
    Dataset ds;
    ds.input_dim = 1;
    ds.num_classes = 2;
    ds.features = {2.0, -2.0, 3.0, -1.0};
    ds.labels = {0, 1, 0, 1};
    const EvalResult ev = evaluate(spec, w, ds);
    CHECK(ev.accuracy == 1.0);
    CHECK(ev.loss < 1e-8);
}
