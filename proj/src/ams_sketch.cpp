#include "fdaopt/ams_sketch.hpp"

#include <algorithm>
#include <stdexcept>

#include "fdaopt/rng.hpp"

namespace fdaopt {

namespace {

constexpr std::uint64_t kMersenne61 = (1ULL << 61) - 1;

inline std::uint64_t mod_p(std::uint64_t x) {
    std::uint64_t r = (x & kMersenne61) + (x >> 61);
    return r >= kMersenne61 ? r - kMersenne61 : r;
}

inline std::uint64_t mulmod_p(std::uint64_t a, std::uint64_t b) {
    unsigned __int128 prod = static_cast<unsigned __int128>(a) * b;
    std::uint64_t lo = static_cast<std::uint64_t>(prod & kMersenne61);
    std::uint64_t hi = static_cast<std::uint64_t>(prod >> 61);
    std::uint64_t r = lo + hi;
    return r >= kMersenne61 ? r - kMersenne61 : r;
}

}  // namespace

RowHash make_row_hash(std::uint64_t seed, int row) {
    Rng gen = derive_rng(seed, "ams-row", static_cast<std::uint64_t>(row));
    RowHash h;
    for (int i = 0; i < 4; ++i) h.bucket_coeff[i] = gen.next_u64() % kMersenne61;
    for (int i = 0; i < 4; ++i) h.sign_coeff[i] = gen.next_u64() % kMersenne61;
    return h;
}

std::uint64_t RowHash::poly_mod_p(const std::uint64_t* coeff, std::uint64_t x) const {
    // Horner over GF(2^61 - 1): degree 3 gives 4-wise independence.
    std::uint64_t xm = mod_p(x);
    std::uint64_t acc = coeff[3];
    for (int i = 2; i >= 0; --i) acc = mod_p(mulmod_p(acc, xm) + coeff[i]);
    return acc;
}

int RowHash::bucket(std::uint64_t j, int width) const {
    return static_cast<int>(poly_mod_p(bucket_coeff, j) % static_cast<std::uint64_t>(width));
}

double RowHash::sign(std::uint64_t j) const {
    return (poly_mod_p(sign_coeff, j) & 1ULL) ? -1.0 : 1.0;
}

SketchMatrix sketch(const SketchConfig& config, const ParamVector& v) {
    if (config.depth < 1 || config.width < 1) throw std::invalid_argument("sketch: bad config");
    check_finite(v, "sketch input");
    SketchMatrix s;
    s.config = config;
    s.counters.assign(static_cast<std::size_t>(config.depth) * config.width, 0.0);
    for (int r = 0; r < config.depth; ++r) {
        const RowHash h = make_row_hash(config.seed, r);
        double* row = s.counters.data() + static_cast<std::size_t>(r) * config.width;
        for (std::size_t j = 0; j < v.size(); ++j) {
            row[h.bucket(j, config.width)] += h.sign(j) * v[j];
        }
    }
    return s;
}

double estimate_f2(const SketchMatrix& s) {
    std::vector<double> row_est(s.config.depth);
    for (int r = 0; r < s.config.depth; ++r) {
        double sum = 0.0;
        const double* row = s.counters.data() + static_cast<std::size_t>(r) * s.config.width;
        for (int c = 0; c < s.config.width; ++c) sum += row[c] * row[c];
        row_est[r] = sum;
    }
    std::sort(row_est.begin(), row_est.end());
    return row_est[(s.config.depth - 1) / 2];
}

SketchMatrix combine(const std::vector<SketchMatrix>& sketches, const std::vector<double>& weights) {
    if (sketches.empty()) throw std::invalid_argument("combine: empty sequence");
    if (sketches.size() != weights.size()) throw std::invalid_argument("combine: weight count mismatch");
    const SketchConfig& config = sketches.front().config;
    SketchMatrix out;
    out.config = config;
    out.counters.assign(sketches.front().counters.size(), 0.0);
    for (std::size_t k = 0; k < sketches.size(); ++k) {
        if (!(sketches[k].config == config)) throw std::invalid_argument("combine: config mismatch");
        const auto& c = sketches[k].counters;
        for (std::size_t i = 0; i < c.size(); ++i) out.counters[i] += weights[k] * c[i];
    }
    return out;
}

std::int64_t sketch_bytes(const SketchConfig& config) {
    return static_cast<std::int64_t>(config.depth) * config.width * 8;
}

}  // namespace fdaopt
