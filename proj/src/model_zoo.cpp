#include "fdaopt/model_zoo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fdaopt/rng.hpp"

namespace fdaopt {

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::LogReg: return "logreg";
        case ModelKind::MLP: return "mlp";
    }
    throw std::logic_error("unknown model kind");
}

ModelKind model_kind_from_string(const std::string& name) {
    if (name == "logreg") return ModelKind::LogReg;
    if (name == "mlp") return ModelKind::MLP;
    throw std::invalid_argument("unknown model kind: " + name);
}

void validate(const ModelSpec& spec) {
    if (spec.input_dim <= 0) throw std::invalid_argument("model.input_dim: must be > 0");
    if (spec.num_classes <= 0) throw std::invalid_argument("model.num_classes: must be > 0");
    if (spec.kind == ModelKind::MLP && spec.hidden_dim <= 0)
        throw std::invalid_argument("model.hidden_dim: must be > 0");
}

std::size_t param_count(const ModelSpec& spec) {
    validate(spec);
    const std::size_t in = spec.input_dim;
    const std::size_t c = spec.num_classes;
    if (spec.kind == ModelKind::LogReg) return (in + 1) * c;
    const std::size_t h = spec.hidden_dim;
    return (in + 1) * h + (h + 1) * c;
}

ParamVector init_params(const ModelSpec& spec) {
    const std::size_t d = param_count(spec);
    ParamVector w(d, 0.0);
    if (spec.kind == ModelKind::LogReg) return w;

    Rng gen = derive_rng(spec.init_seed, "model-init");
    const double a1 = std::sqrt(6.0 / (spec.input_dim + spec.hidden_dim));
    const double a2 = std::sqrt(6.0 / (spec.hidden_dim + spec.num_classes));
    const std::size_t layer1 = static_cast<std::size_t>(spec.input_dim + 1) * spec.hidden_dim;
    for (std::size_t i = 0; i < layer1; ++i) w[i] = gen.uniform_range(-a1, a1);
    for (std::size_t i = layer1; i < d; ++i) w[i] = gen.uniform_range(-a2, a2);
    return w;
}

namespace {

// Stable softmax in place; logits -> probabilities.
void softmax(std::vector<double>& z) {
    double zmax = z[0];
    for (double x : z) zmax = std::max(zmax, x);
    double sum = 0.0;
    for (double& x : z) {
        x = std::exp(x - zmax);
        sum += x;
    }
    for (double& x : z) x /= sum;
}

struct Forward {
    std::vector<double> probs;   // C
    std::vector<double> hidden;  // H (MLP only), post-tanh
};

// Logits for one sample. hidden is filled for MLP.
void forward_one(const ModelSpec& spec, const ParamVector& w, const double* x, Forward& f) {
    const int in = spec.input_dim;
    const int c = spec.num_classes;
    f.probs.assign(c, 0.0);
    if (spec.kind == ModelKind::LogReg) {
        for (int k = 0; k < c; ++k) {
            const double* wk = w.data() + static_cast<std::size_t>(k) * (in + 1);
            double z = wk[in];  // bias
            for (int j = 0; j < in; ++j) z += wk[j] * x[j];
            f.probs[k] = z;
        }
    } else {
        const int h = spec.hidden_dim;
        f.hidden.assign(h, 0.0);
        for (int u = 0; u < h; ++u) {
            const double* wu = w.data() + static_cast<std::size_t>(u) * (in + 1);
            double z = wu[in];
            for (int j = 0; j < in; ++j) z += wu[j] * x[j];
            f.hidden[u] = std::tanh(z);
        }
        const std::size_t layer1 = static_cast<std::size_t>(in + 1) * h;
        for (int k = 0; k < c; ++k) {
            const double* wk = w.data() + layer1 + static_cast<std::size_t>(k) * (h + 1);
            double z = wk[h];
            for (int u = 0; u < h; ++u) z += wk[u] * f.hidden[u];
            f.probs[k] = z;
        }
    }
    softmax(f.probs);
}

}  // namespace

std::pair<double, ParamVector> loss_and_grad(const ModelSpec& spec, const ParamVector& w,
                                             const Batch& batch) {
    if (w.size() != param_count(spec)) throw std::invalid_argument("loss_and_grad: parameter shape mismatch");
    if (batch.input_dim != spec.input_dim) throw std::invalid_argument("loss_and_grad: batch input_dim mismatch");
    if (batch.size() == 0) throw std::invalid_argument("loss_and_grad: empty batch");

    const int in = spec.input_dim;
    const int c = spec.num_classes;
    const int h = spec.hidden_dim;
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    const std::size_t layer1 = spec.kind == ModelKind::MLP
                                   ? static_cast<std::size_t>(in + 1) * h
                                   : 0;

    double loss = 0.0;
    ParamVector grad(w.size(), 0.0);
    Forward f;
    std::vector<double> dz1;  // MLP hidden-layer error

    for (std::size_t i = 0; i < batch.size(); ++i) {
        const double* x = batch.row(i);
        const int y = batch.labels[i];
        if (y < 0 || y >= c) throw std::invalid_argument("loss_and_grad: label out of range");
        forward_one(spec, w, x, f);
        loss -= std::log(std::max(f.probs[y], 1e-300)) * inv_b;

        // dL/dlogit_k = (p_k - [k == y]) / B
        if (spec.kind == ModelKind::LogReg) {
            for (int k = 0; k < c; ++k) {
                const double dz = (f.probs[k] - (k == y ? 1.0 : 0.0)) * inv_b;
                double* gk = grad.data() + static_cast<std::size_t>(k) * (in + 1);
                for (int j = 0; j < in; ++j) gk[j] += dz * x[j];
                gk[in] += dz;
            }
        } else {
            dz1.assign(h, 0.0);
            for (int k = 0; k < c; ++k) {
                const double dz = (f.probs[k] - (k == y ? 1.0 : 0.0)) * inv_b;
                const double* wk = w.data() + layer1 + static_cast<std::size_t>(k) * (h + 1);
                double* gk = grad.data() + layer1 + static_cast<std::size_t>(k) * (h + 1);
                for (int u = 0; u < h; ++u) {
                    gk[u] += dz * f.hidden[u];
                    dz1[u] += dz * wk[u];
                }
                gk[h] += dz;
            }
            for (int u = 0; u < h; ++u) {
                const double du = dz1[u] * (1.0 - f.hidden[u] * f.hidden[u]);  // tanh'
                double* gu = grad.data() + static_cast<std::size_t>(u) * (in + 1);
                for (int j = 0; j < in; ++j) gu[j] += du * x[j];
                gu[in] += du;
            }
        }
    }
    if (!std::isfinite(loss)) throw std::domain_error("loss_and_grad: non-finite loss");
    return {loss, std::move(grad)};
}

EvalResult evaluate(const ModelSpec& spec, const ParamVector& w, const Dataset& dataset) {
    if (dataset.size() == 0) throw std::invalid_argument("evaluate: empty dataset");
    if (w.size() != param_count(spec)) throw std::invalid_argument("evaluate: parameter shape mismatch");
    if (dataset.input_dim != spec.input_dim) throw std::invalid_argument("evaluate: input_dim mismatch");

    const double inv_n = 1.0 / static_cast<double>(dataset.size());
    double loss = 0.0;
    std::size_t correct = 0;
    Forward f;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        forward_one(spec, w, dataset.row(i), f);
        const int y = dataset.labels[i];
        loss -= std::log(std::max(f.probs[y], 1e-300)) * inv_n;
        int argmax = 0;
        for (int k = 1; k < spec.num_classes; ++k) {
            if (f.probs[k] > f.probs[argmax]) argmax = k;  // ties keep the lower index
        }
        if (argmax == y) ++correct;
    }
    return {loss, static_cast<double>(correct) / static_cast<double>(dataset.size())};
}

}  // namespace fdaopt
