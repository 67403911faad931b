#pragma once

// Desk-scale differentiable models: multinomial logistic regression and a
// one-hidden-layer tanh MLP, both with exact manual gradients over a flat
// parameter vector.
//
// Flat layouts (biases folded in):
//   LogReg: for class c in [0,C): input_dim weights, then 1 bias
//           -> d = (input_dim + 1) * C
//   MLP:    hidden layer first (for unit h: input_dim weights, then 1 bias),
//           then output layer (for class c: hidden_dim weights, then 1 bias)
//           -> d = (input_dim + 1) * hidden_dim + (hidden_dim + 1) * C

#include <cstdint>
#include <string>
#include <vector>

#include "fdaopt/param_math.hpp"

namespace fdaopt {

enum class ModelKind { LogReg, MLP };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

struct ModelSpec {
    ModelKind kind = ModelKind::LogReg;
    int input_dim = 0;
    int num_classes = 0;
    int hidden_dim = 0;  // MLP only
    std::uint64_t init_seed = 0;

    bool operator==(const ModelSpec&) const = default;
};

void validate(const ModelSpec& spec);
std::size_t param_count(const ModelSpec& spec);

// Row-major feature matrix with integer class labels.
struct Dataset {
    int input_dim = 0;
    int num_classes = 0;
    std::vector<double> features;  // size() == labels.size() * input_dim
    std::vector<int> labels;

    std::size_t size() const { return labels.size(); }
    const double* row(std::size_t i) const { return features.data() + i * input_dim; }
};

struct Batch {
    int input_dim = 0;
    std::vector<double> features;
    std::vector<int> labels;

    std::size_t size() const { return labels.size(); }
    const double* row(std::size_t i) const { return features.data() + i * input_dim; }
};

// LogReg starts at zero; MLP layers are uniform(-a, a) with
// a = sqrt(6 / (fan_in + fan_out)), drawn in layout order from init_seed.
ParamVector init_params(const ModelSpec& spec);

// Mean cross-entropy over the batch and its exact gradient w.r.t. w.
// Softmax uses max-subtraction; throws on a non-finite loss.
std::pair<double, ParamVector> loss_and_grad(const ModelSpec& spec, const ParamVector& w,
                                             const Batch& batch);

struct EvalResult {
    double loss = 0.0;
    double accuracy = 0.0;
};

// Full-dataset mean loss and top-1 accuracy. Argmax ties break toward the
// lowest class index.
EvalResult evaluate(const ModelSpec& spec, const ParamVector& w, const Dataset& dataset);

}  // namespace fdaopt
