#include "fdaopt/param_math.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fdaopt {

bool all_finite(const ParamVector& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

void check_finite(const ParamVector& v, const char* what) {
    if (!all_finite(v)) {
        throw std::domain_error(std::string(what) + ": non-finite entry");
    }
}

double norm_sq(const ParamVector& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

double dot(const ParamVector& x, const ParamVector& y) {
    if (x.size() != y.size()) throw std::invalid_argument("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

ParamVector axpy(double a, const ParamVector& x, const ParamVector& y) {
    if (x.size() != y.size()) throw std::invalid_argument("axpy: length mismatch");
    ParamVector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i] + y[i];
    return out;
}

void axpy_inplace(double a, const ParamVector& x, ParamVector& y) {
    if (x.size() != y.size()) throw std::invalid_argument("axpy_inplace: length mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

ParamVector mean(const std::vector<ParamVector>& vs) {
    if (vs.empty()) throw std::invalid_argument("mean: empty sequence");
    const std::size_t d = vs.front().size();
    ParamVector acc(d, 0.0);
    for (const auto& v : vs) {
        if (v.size() != d) throw std::invalid_argument("mean: length mismatch");
        for (std::size_t i = 0; i < d; ++i) acc[i] += v[i];
    }
    const double inv = 1.0 / static_cast<double>(vs.size());
    for (double& x : acc) x *= inv;
    return acc;
}

ParamVector weighted_mean(const std::vector<ParamVector>& vs, const std::vector<double>& weights) {
    if (vs.empty()) throw std::invalid_argument("weighted_mean: empty sequence");
    if (vs.size() != weights.size()) throw std::invalid_argument("weighted_mean: weight count mismatch");
    const std::size_t d = vs.front().size();
    ParamVector acc(d, 0.0);
    double wsum = 0.0;
    for (std::size_t k = 0; k < vs.size(); ++k) {
        if (vs[k].size() != d) throw std::invalid_argument("weighted_mean: length mismatch");
        for (std::size_t i = 0; i < d; ++i) acc[i] += weights[k] * vs[k][i];
        wsum += weights[k];
    }
    if (wsum <= 0.0) throw std::invalid_argument("weighted_mean: non-positive weight sum");
    for (double& x : acc) x /= wsum;
    return acc;
}

ParamVector scaled(double a, const ParamVector& x) {
    ParamVector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i];
    return out;
}

}  // namespace fdaopt
