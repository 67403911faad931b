#include "fdaopt/data_federation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "fdaopt/rng.hpp"

namespace fdaopt {

Dataset synth_generate(int input_dim, int num_classes, int samples_per_class,
                       double separation, std::uint64_t seed) {
    if (input_dim <= 0 || num_classes <= 0 || samples_per_class <= 0)
        throw std::invalid_argument("synth_generate: counts must be > 0");

    // Class means. Scaled basis vectors give exact pairwise distance
    // `separation`; with more classes than dimensions, fall back to random
    // directions of the matching radius.
    std::vector<std::vector<double>> means(num_classes, std::vector<double>(input_dim, 0.0));
    const double radius = separation / std::sqrt(2.0);
    if (num_classes <= input_dim) {
        for (int c = 0; c < num_classes; ++c) means[c][c] = radius;
    } else {
        Rng dir = derive_rng(seed, "synth-means");
        for (int c = 0; c < num_classes; ++c) {
            double nrm = 0.0;
            for (int j = 0; j < input_dim; ++j) {
                means[c][j] = dir.normal();
                nrm += means[c][j] * means[c][j];
            }
            nrm = std::sqrt(nrm);
            for (int j = 0; j < input_dim; ++j) means[c][j] *= radius / nrm;
        }
    }

    Dataset ds;
    ds.input_dim = input_dim;
    ds.num_classes = num_classes;
    ds.features.reserve(static_cast<std::size_t>(num_classes) * samples_per_class * input_dim);
    ds.labels.reserve(static_cast<std::size_t>(num_classes) * samples_per_class);
    Rng gen = derive_rng(seed, "synth-samples");
    for (int c = 0; c < num_classes; ++c) {
        for (int s = 0; s < samples_per_class; ++s) {
            for (int j = 0; j < input_dim; ++j) ds.features.push_back(means[c][j] + gen.normal());
            ds.labels.push_back(c);
        }
    }
    return ds;
}

Dataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_csv: empty file " + path);

    Dataset ds;
    int expected_cols = -1;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(std::stod(cell));
        if (cells.size() < 2)
            throw std::runtime_error("load_csv: line " + std::to_string(line_no) + ": need features and a label");
        if (expected_cols < 0) {
            expected_cols = static_cast<int>(cells.size());
            ds.input_dim = expected_cols - 1;
        } else if (static_cast<int>(cells.size()) != expected_cols) {
            throw std::runtime_error("load_csv: line " + std::to_string(line_no) + ": column count mismatch");
        }
        const double label_raw = cells.back();
        const int label = static_cast<int>(std::llround(label_raw));
        if (std::abs(label_raw - label) > 1e-9 || label < 0)
            throw std::runtime_error("load_csv: line " + std::to_string(line_no) + ": label must be a nonnegative integer");
        for (int j = 0; j < ds.input_dim; ++j) ds.features.push_back(cells[j]);
        ds.labels.push_back(label);
    }
    if (ds.labels.empty()) throw std::runtime_error("load_csv: no data rows in " + path);
    ds.num_classes = *std::max_element(ds.labels.begin(), ds.labels.end()) + 1;
    return ds;
}

FederatedDataset dirichlet_partition(const Dataset& dataset, const PartitionSpec& spec) {
    const int k = spec.num_clients;
    if (k < 2) throw std::invalid_argument("partition.num_clients: must be >= 2");
    if (!(spec.alpha > 0.0)) throw std::invalid_argument("partition.alpha: must be > 0");
    if (dataset.size() < static_cast<std::size_t>(k))
        throw std::invalid_argument("dirichlet_partition: dataset smaller than num_clients");

    FederatedDataset fd;
    fd.dataset = dataset;
    fd.shards.assign(k, {});

    Rng gen = derive_rng(spec.seed, "dirichlet");
    for (int c = 0; c < dataset.num_classes; ++c) {
        std::vector<int> rows;
        for (std::size_t row = 0; row < dataset.size(); ++row) {
            if (dataset.labels[row] == c) rows.push_back(static_cast<int>(row));
        }
        if (rows.empty()) continue;
        const auto n_c = static_cast<std::int64_t>(rows.size());

        // p_c ~ Dirichlet(alpha * 1_K) via normalized gamma draws.
        std::vector<double> p(k);
        double total = 0.0;
        for (int i = 0; i < k; ++i) {
            p[i] = gen.gamma(spec.alpha);
            total += p[i];
        }

        // Largest-remainder quotas: client i gets round(p_i * n_c) rows up to
        // an exact total, so alpha -> infinity really is uniform rather than
        // uniform-in-expectation.
        std::vector<std::int64_t> quota(k);
        std::vector<std::pair<double, int>> remainder(k);
        std::int64_t assigned = 0;
        for (int i = 0; i < k; ++i) {
            const double target = p[i] / total * static_cast<double>(n_c);
            quota[i] = static_cast<std::int64_t>(std::floor(target));
            assigned += quota[i];
            remainder[i] = {target - std::floor(target), i};
        }
        std::sort(remainder.begin(), remainder.end(), [](const auto& a, const auto& b) {
            return a.first != b.first ? a.first > b.first : a.second < b.second;
        });
        for (std::int64_t left = n_c - assigned, j = 0; left > 0; --left, ++j)
            quota[remainder[j].second] += 1;

        for (std::size_t i = rows.size(); i > 1; --i) {
            const std::size_t j = gen.uniform_int(i);
            std::swap(rows[i - 1], rows[j]);
        }
        std::size_t next = 0;
        for (int i = 0; i < k; ++i) {
            for (std::int64_t taken = 0; taken < quota[i]; ++taken)
                fd.shards[i].push_back(rows[next++]);
        }
    }

    // Rebalance: every shard must be nonempty.
    Rng rebalance = derive_rng(spec.seed, "rebalance");
    for (int i = 0; i < k; ++i) {
        if (!fd.shards[i].empty()) continue;
        int largest = 0;
        for (int j = 1; j < k; ++j) {
            if (fd.shards[j].size() > fd.shards[largest].size()) largest = j;
        }
        if (fd.shards[largest].size() < 2)
            throw std::runtime_error("dirichlet_partition: cannot rebalance, not enough rows");
        const std::size_t pick = rebalance.uniform_int(fd.shards[largest].size());
        fd.shards[i].push_back(fd.shards[largest][pick]);
        fd.shards[largest].erase(fd.shards[largest].begin() + pick);
    }
    return fd;
}

std::vector<int> sample_cohort(int num_clients, const CohortSpec& spec, int round) {
    if (spec.size < 1 || spec.size > num_clients)
        throw std::invalid_argument("cohort.size: must be in [1, num_clients]");
    std::vector<int> ids(num_clients);
    std::iota(ids.begin(), ids.end(), 0);
    if (spec.size == num_clients) return ids;  // full participation, cross-silo case

    Rng gen = derive_rng(spec.seed, "cohort", static_cast<std::uint64_t>(round));
    for (int i = 0; i < spec.size; ++i) {
        const std::size_t j = i + gen.uniform_int(num_clients - i);
        std::swap(ids[i], ids[j]);
    }
    ids.resize(spec.size);
    std::sort(ids.begin(), ids.end());
    return ids;
}

Batch next_batch(const Dataset& dataset, const std::vector<int>& shard,
                 std::uint64_t epoch_seed, std::int64_t step_index, int batch_size) {
    if (shard.empty()) throw std::invalid_argument("next_batch: empty shard");
    if (batch_size < 1) throw std::invalid_argument("next_batch: batch_size must be >= 1");
    const std::int64_t n = static_cast<std::int64_t>(shard.size());
    const std::int64_t steps_per_epoch = (n + batch_size - 1) / batch_size;
    const std::int64_t epoch = step_index / steps_per_epoch;
    const std::int64_t pos = step_index % steps_per_epoch;

    std::vector<int> perm(shard);
    Rng gen = derive_rng(epoch_seed, "epoch-shuffle", static_cast<std::uint64_t>(epoch));
    for (std::int64_t i = n - 1; i > 0; --i) {
        const std::size_t j = gen.uniform_int(static_cast<std::uint64_t>(i + 1));
        std::swap(perm[i], perm[j]);
    }

    const std::int64_t begin = pos * batch_size;
    const std::int64_t end = std::min(begin + batch_size, n);
    Batch batch;
    batch.input_dim = dataset.input_dim;
    batch.features.reserve(static_cast<std::size_t>(end - begin) * dataset.input_dim);
    batch.labels.reserve(end - begin);
    for (std::int64_t i = begin; i < end; ++i) {
        const double* row = dataset.row(perm[i]);
        batch.features.insert(batch.features.end(), row, row + dataset.input_dim);
        batch.labels.push_back(dataset.labels[perm[i]]);
    }
    return batch;
}

double mean_shard_size(const FederatedDataset& fd, int batch_size) {
    if (fd.shards.empty()) throw std::invalid_argument("mean_shard_size: no shards");
    if (batch_size < 1) throw std::invalid_argument("mean_shard_size: batch_size must be >= 1");
    double total = 0.0;
    for (const auto& shard : fd.shards) {
        total += static_cast<double>((shard.size() + batch_size - 1) / batch_size);
    }
    return total / static_cast<double>(fd.shards.size());
}

std::string partition_summary_json(const FederatedDataset& fd) {
    nlohmann::json out;
    out["num_clients"] = fd.num_clients();
    out["num_classes"] = fd.dataset.num_classes;
    out["total_rows"] = fd.dataset.size();
    nlohmann::json clients = nlohmann::json::array();
    for (int k = 0; k < fd.num_clients(); ++k) {
        std::vector<int> hist(fd.dataset.num_classes, 0);
        for (int row : fd.shards[k]) hist[fd.dataset.labels[row]] += 1;
        nlohmann::json c;
        c["client"] = k;
        c["rows"] = fd.shards[k].size();
        c["class_histogram"] = hist;
        clients.push_back(c);
    }
    out["clients"] = clients;
    return out.dump(2);
}

}  // namespace fdaopt
