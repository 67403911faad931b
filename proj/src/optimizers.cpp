#include "fdaopt/optimizers.hpp"

#include <cmath>
#include <stdexcept>

namespace fdaopt {

std::string to_string(OptimizerKind kind) {
    switch (kind) {
        case OptimizerKind::SGD: return "sgd";
        case OptimizerKind::SGDM: return "sgdm";
        case OptimizerKind::Adam: return "adam";
        case OptimizerKind::AdamW: return "adamw";
        case OptimizerKind::AdaGrad: return "adagrad";
    }
    throw std::logic_error("unknown optimizer kind");
}

OptimizerKind optimizer_kind_from_string(const std::string& name) {
    if (name == "sgd") return OptimizerKind::SGD;
    if (name == "sgdm") return OptimizerKind::SGDM;
    if (name == "adam") return OptimizerKind::Adam;
    if (name == "adamw") return OptimizerKind::AdamW;
    if (name == "adagrad") return OptimizerKind::AdaGrad;
    throw std::invalid_argument("unknown optimizer kind: " + name);
}

void validate(const OptimizerSpec& spec) {
    if (!(spec.learning_rate > 0.0)) throw std::invalid_argument("optimizer.lr: must be > 0");
    if (spec.kind == OptimizerKind::SGDM && !(spec.momentum >= 0.0 && spec.momentum < 1.0))
        throw std::invalid_argument("optimizer.momentum: must be in [0,1)");
    if (spec.kind == OptimizerKind::Adam || spec.kind == OptimizerKind::AdamW) {
        if (!(spec.beta1 >= 0.0 && spec.beta1 < 1.0)) throw std::invalid_argument("optimizer.beta1: must be in [0,1)");
        if (!(spec.beta2 >= 0.0 && spec.beta2 < 1.0)) throw std::invalid_argument("optimizer.beta2: must be in [0,1)");
    }
    if (!(spec.epsilon >= 0.0)) throw std::invalid_argument("optimizer.epsilon: must be >= 0");
    if (spec.kind == OptimizerKind::AdamW && !(spec.weight_decay >= 0.0))
        throw std::invalid_argument("optimizer.weight_decay: must be >= 0");
}

OptimizerSpec fedavg_server_spec() {
    OptimizerSpec spec;
    spec.kind = OptimizerKind::SGD;
    spec.learning_rate = 1.0;
    return spec;
}

OptimizerState init_state(const OptimizerSpec& spec, std::size_t d) {
    if (d == 0) throw std::invalid_argument("init_state: d must be > 0");
    OptimizerState state;
    state.kind = spec.kind;
    state.step_count = 0;
    switch (spec.kind) {
        case OptimizerKind::SGD:
            break;
        case OptimizerKind::SGDM:
            state.m.assign(d, 0.0);
            break;
        case OptimizerKind::Adam:
        case OptimizerKind::AdamW:
            state.m.assign(d, 0.0);
            state.v.assign(d, 0.0);
            break;
        case OptimizerKind::AdaGrad:
            state.acc.assign(d, 0.0);
            break;
    }
    return state;
}

ParamVector step(const OptimizerSpec& spec, OptimizerState& state,
                 const ParamVector& w, const ParamVector& g) {
    if (state.kind != spec.kind) throw std::invalid_argument("optimizer step: state/spec kind mismatch");
    if (w.size() != g.size()) throw std::invalid_argument("optimizer step: shape mismatch");
    const std::size_t d = w.size();
    const double lr = spec.learning_rate;
    ParamVector out(d);
    state.step_count += 1;

    switch (spec.kind) {
        case OptimizerKind::SGD:
            for (std::size_t i = 0; i < d; ++i) out[i] = w[i] - lr * g[i];
            break;
        case OptimizerKind::SGDM: {
            if (state.m.size() != d) throw std::invalid_argument("optimizer step: state shape mismatch");
            for (std::size_t i = 0; i < d; ++i) {
                state.m[i] = spec.momentum * state.m[i] + g[i];
                out[i] = w[i] - lr * state.m[i];
            }
            break;
        }
        case OptimizerKind::Adam:
        case OptimizerKind::AdamW: {
            if (state.m.size() != d || state.v.size() != d)
                throw std::invalid_argument("optimizer step: state shape mismatch");
            const double bc1 = 1.0 - std::pow(spec.beta1, static_cast<double>(state.step_count));
            const double bc2 = 1.0 - std::pow(spec.beta2, static_cast<double>(state.step_count));
            const bool decoupled = spec.kind == OptimizerKind::AdamW;
            for (std::size_t i = 0; i < d; ++i) {
                state.m[i] = spec.beta1 * state.m[i] + (1.0 - spec.beta1) * g[i];
                state.v[i] = spec.beta2 * state.v[i] + (1.0 - spec.beta2) * g[i] * g[i];
                const double m_hat = state.m[i] / bc1;
                const double v_hat = state.v[i] / bc2;
                double upd = m_hat / (std::sqrt(v_hat) + spec.epsilon);
                if (decoupled) upd += spec.weight_decay * w[i];
                out[i] = w[i] - lr * upd;
            }
            break;
        }
        case OptimizerKind::AdaGrad: {
            if (state.acc.size() != d) throw std::invalid_argument("optimizer step: state shape mismatch");
            for (std::size_t i = 0; i < d; ++i) {
                state.acc[i] += g[i] * g[i];
                out[i] = w[i] - lr * g[i] / (std::sqrt(state.acc[i]) + spec.epsilon);
            }
            break;
        }
    }
    check_finite(out, "optimizer step result");
    return out;
}

}  // namespace fdaopt
