#pragma once

// Variance-monitoring math for dynamic round termination: compact per-client
// local states, their aggregate, the sketch-based variance estimator, the
// exact end-of-round model variance, the per-epoch query schedule, and the
// linear-growth threshold adjustment rule.

#include <cstdint>
#include <limits>
#include <vector>

#include "fdaopt/ams_sketch.hpp"
#include "fdaopt/param_math.hpp"

namespace fdaopt {

// What a client ships at a query index: [ ||drift||^2, sketch(drift) ].
struct LocalState {
    double drift_norm_sq = 0.0;
    SketchMatrix drift_sketch;
};

struct GlobalState {
    double mean_norm_sq = 0.0;
    SketchMatrix mean_sketch;
    int cohort_size = 0;
};

struct ThresholdState {
    double theta = -std::numeric_limits<double>::infinity();  // round 0 bootstrap
    std::int64_t tau_tilde = 1;
    std::int64_t last_s = 0;
    double last_var = 0.0;
};

LocalState local_state(const SketchConfig& config, const ParamVector& delta);

// Arithmetic mean of both components, in input (ascending client id) order.
GlobalState aggregate(const std::vector<LocalState>& states);

// nu = mean ||drift||^2 - F2(mean sketch). May come out slightly negative
// from estimator noise; returned raw, the threshold comparison handles it.
double estimate_variance(const GlobalState& g);

// Mean of squared drift norms minus squared norm of the mean drift. Tiny
// negative rounding residue is clamped to zero.
double exact_variance(const std::vector<ParamVector>& deltas);

// {e, 2e, ..., floor(tau_tilde / e) * e}; empty when e > tau_tilde.
std::vector<std::int64_t> query_indices(std::int64_t e_steps, std::int64_t tau_tilde);

// Linear-growth prediction of the variance at the midpoint of the next
// round's local training: (tau_tilde / 2) / s_t * var_t. A zero variance
// returns theta_min instead of locking the threshold at zero.
double threshold_adjust(double var_t, std::int64_t s_t, std::int64_t tau_tilde,
                        double theta_min = 1e-12);

// tau_tilde = 2 * tau + 8 * ceil(e).
std::int64_t extend_tau(std::int64_t tau, double e_steps);

}  // namespace fdaopt
