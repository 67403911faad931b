#pragma once

// Linear AMS sketches of drift vectors plus the second-moment (F2) estimator.
// A sketch is a depth x width counter grid; each row folds the input through
// a 2-universal bucket hash and a 4-wise independent sign hash. Linearity is
// exact: sketch(a*x + b*y) = a*sketch(x) + b*sketch(y) under a shared config,
// which is what lets per-client sketches be averaged into the sketch of the
// average drift.
//
// Hash scheme (pinned for cross-platform reproducibility): degree-3
// polynomials over GF(p) with p = 2^61 - 1, coefficients drawn from a seeded
// counter generator. Row r buckets coordinate j at poly_r(j) mod width and
// signs it by the parity bit of a second polynomial.

#include <cstdint>
#include <vector>

#include "fdaopt/param_math.hpp"

namespace fdaopt {

struct SketchConfig {
    int depth = 7;
    int width = 1024;
    std::uint64_t seed = 0;

    bool operator==(const SketchConfig&) const = default;
};

struct SketchMatrix {
    SketchConfig config;
    std::vector<double> counters;  // depth * width, row-major

    double& at(int row, int col) { return counters[static_cast<std::size_t>(row) * config.width + col]; }
    double at(int row, int col) const { return counters[static_cast<std::size_t>(row) * config.width + col]; }
};

// Per-row hash functions, derived deterministically from (seed, row).
// Exposed so tests can probe bucket/sign behaviour directly.
struct RowHash {
    std::uint64_t bucket_coeff[4];
    std::uint64_t sign_coeff[4];

    std::uint64_t poly_mod_p(const std::uint64_t* coeff, std::uint64_t x) const;
    int bucket(std::uint64_t j, int width) const;
    double sign(std::uint64_t j) const;  // +1.0 or -1.0
};

RowHash make_row_hash(std::uint64_t seed, int row);

SketchMatrix sketch(const SketchConfig& config, const ParamVector& v);

// Median over rows of the per-row sum of squared counters; even depth takes
// the lower median.
double estimate_f2(const SketchMatrix& s);

// Weighted elementwise sum of counter grids. All inputs must share a config.
SketchMatrix combine(const std::vector<SketchMatrix>& sketches, const std::vector<double>& weights);

// Payload size of one sketch in bytes.
std::int64_t sketch_bytes(const SketchConfig& config);

}  // namespace fdaopt
