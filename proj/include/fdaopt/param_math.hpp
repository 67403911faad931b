#pragma once

// Flat dense vector arithmetic over model parameters. Every model, drift and
// optimizer buffer lives in the same fixed coordinate order, so all protocol
// math reduces to operations on ParamVector.

#include <cstddef>
#include <vector>

namespace fdaopt {

using ParamVector = std::vector<double>;

// Throws std::domain_error if v contains NaN or Inf.
void check_finite(const ParamVector& v, const char* what);

bool all_finite(const ParamVector& v);

// Sum of squares. Fixed ascending-index summation order.
double norm_sq(const ParamVector& v);

double dot(const ParamVector& x, const ParamVector& y);

// a*x + y elementwise. Lengths must match.
ParamVector axpy(double a, const ParamVector& x, const ParamVector& y);

// In-place y += a*x.
void axpy_inplace(double a, const ParamVector& x, ParamVector& y);

// Elementwise arithmetic mean, accumulated in input order (callers pass
// vectors in ascending client id so runs are bit-reproducible).
ParamVector mean(const std::vector<ParamVector>& vs);

// Weighted mean with the same fixed accumulation order.
ParamVector weighted_mean(const std::vector<ParamVector>& vs, const std::vector<double>& weights);

ParamVector scaled(double a, const ParamVector& x);

}  // namespace fdaopt
