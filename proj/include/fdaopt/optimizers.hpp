#pragma once

// First-order optimizers used on both sides of the protocol: plain SGD on
// clients, and SGD/SGDM/Adam/AdamW/AdaGrad as the server-side update applied
// to the pseudo-gradient. State is held externally so distinct clients can
// advance independent copies and the server can persist its own across
// rounds.

#include <cstdint>
#include <string>

#include "fdaopt/param_math.hpp"

namespace fdaopt {

enum class OptimizerKind { SGD, SGDM, Adam, AdamW, AdaGrad };

std::string to_string(OptimizerKind kind);
OptimizerKind optimizer_kind_from_string(const std::string& name);

struct OptimizerSpec {
    OptimizerKind kind = OptimizerKind::SGD;
    double learning_rate = 0.01;
    double momentum = 0.9;       // SGDM
    double beta1 = 0.9;          // Adam/AdamW
    double beta2 = 0.999;        // Adam/AdamW
    double epsilon = 1e-8;       // Adam/AdamW/AdaGrad
    double weight_decay = 0.01;  // AdamW

    bool operator==(const OptimizerSpec&) const = default;
};

// Throws std::invalid_argument naming the offending field.
void validate(const OptimizerSpec& spec);

// The FedAvg server pairing: plain averaging is SGD with lr = 1.0.
OptimizerSpec fedavg_server_spec();

struct OptimizerState {
    OptimizerKind kind = OptimizerKind::SGD;
    std::int64_t step_count = 0;
    ParamVector m;    // momentum buffer (SGDM) / first moment (Adam, AdamW)
    ParamVector v;    // second moment (Adam, AdamW)
    ParamVector acc;  // squared-gradient accumulator (AdaGrad)
};

OptimizerState init_state(const OptimizerSpec& spec, std::size_t d);

// One update: mutates state, returns new parameters. Throws on shape or kind
// mismatch and on a non-finite result.
ParamVector step(const OptimizerSpec& spec, OptimizerState& state,
                 const ParamVector& w, const ParamVector& g);

}  // namespace fdaopt
