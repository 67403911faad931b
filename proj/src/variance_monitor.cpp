#include "fdaopt/variance_monitor.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace fdaopt {

LocalState local_state(const SketchConfig& config, const ParamVector& delta) {
    check_finite(delta, "local_state drift");
    return {norm_sq(delta), sketch(config, delta)};
}

GlobalState aggregate(const std::vector<LocalState>& states) {
    if (states.empty()) throw std::invalid_argument("aggregate: empty sequence");
    const int n = static_cast<int>(states.size());
    std::vector<SketchMatrix> sketches;
    sketches.reserve(n);
    double norm_acc = 0.0;
    for (const auto& s : states) {
        norm_acc += s.drift_norm_sq;
        sketches.push_back(s.drift_sketch);
    }
    GlobalState g;
    g.cohort_size = n;
    g.mean_norm_sq = norm_acc / n;
    g.mean_sketch = combine(sketches, std::vector<double>(n, 1.0 / n));
    return g;
}

double estimate_variance(const GlobalState& g) {
    return g.mean_norm_sq - estimate_f2(g.mean_sketch);
}

double exact_variance(const std::vector<ParamVector>& deltas) {
    if (deltas.empty()) throw std::invalid_argument("exact_variance: empty sequence");
    double first_term = 0.0;
    for (const auto& d : deltas) first_term += norm_sq(d);
    first_term /= static_cast<double>(deltas.size());
    const double second_term = norm_sq(mean(deltas));
    const double var = first_term - second_term;
    return var < 0.0 ? 0.0 : var;
}

std::vector<std::int64_t> query_indices(std::int64_t e_steps, std::int64_t tau_tilde) {
    if (e_steps < 1) throw std::invalid_argument("query_indices: e_steps must be >= 1");
    if (tau_tilde < 1) throw std::invalid_argument("query_indices: tau_tilde must be >= 1");
    std::vector<std::int64_t> out;
    for (std::int64_t q = e_steps; q <= tau_tilde; q += e_steps) out.push_back(q);
    return out;
}

double threshold_adjust(double var_t, std::int64_t s_t, std::int64_t tau_tilde,
                        double theta_min) {
    if (s_t < 1) throw std::invalid_argument("threshold_adjust: s_t must be >= 1");
    if (!(var_t >= 0.0)) throw std::invalid_argument("threshold_adjust: var_t must be >= 0");
    if (var_t == 0.0) return theta_min;
    return (static_cast<double>(tau_tilde) / 2.0) / static_cast<double>(s_t) * var_t;
}

std::int64_t extend_tau(std::int64_t tau, double e_steps) {
    if (tau < 1) throw std::invalid_argument("extend_tau: tau must be >= 1");
    if (!(e_steps >= 1.0)) throw std::invalid_argument("extend_tau: e_steps must be >= 1");
    return 2 * tau + 8 * static_cast<std::int64_t>(std::ceil(e_steps));
}

}  // namespace fdaopt
