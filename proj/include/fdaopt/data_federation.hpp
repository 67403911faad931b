#pragma once

// Federated dataset construction: synthetic Gaussian-cluster generation or
// CSV ingestion, Dirichlet(alpha) label-skew partitioning across K clients,
// per-round cohort sampling, and epoch-shuffled batching.

#include <cstdint>
#include <string>
#include <vector>

#include "fdaopt/model_zoo.hpp"

namespace fdaopt {

struct PartitionSpec {
    int num_clients = 10;
    double alpha = 1.0;
    std::uint64_t seed = 0;

    bool operator==(const PartitionSpec&) const = default;
};

struct CohortSpec {
    int size = 10;
    std::uint64_t seed = 0;

    bool operator==(const CohortSpec&) const = default;
};

// Shards hold row indices into the shared source dataset; the index multisets
// are disjoint and union-complete, and every shard is nonempty.
struct FederatedDataset {
    Dataset dataset;
    std::vector<std::vector<int>> shards;

    int num_clients() const { return static_cast<int>(shards.size()); }
};

// Gaussian class clusters with unit covariance and means `separation` apart
// (scaled standard-basis vectors when num_classes <= input_dim, seeded random
// directions otherwise).
Dataset synth_generate(int input_dim, int num_classes, int samples_per_class,
                       double separation, std::uint64_t seed);

// Header row, float feature columns, final integer label column.
Dataset load_csv(const std::string& path);

// Per class c: draw p_c ~ Dirichlet(alpha * 1_K) and deal the class's rows
// (seeded shuffle) into largest-remainder quotas proportional to p_c;
// afterwards move one random row from the largest shard to each empty shard
// so every client holds data.
FederatedDataset dirichlet_partition(const Dataset& dataset, const PartitionSpec& spec);

// Uniform sample without replacement of `spec.size` client ids, deterministic
// per (seed, round), returned in ascending order.
std::vector<int> sample_cohort(int num_clients, const CohortSpec& spec, int round);

// Epoch-shuffled sequential batches over one shard. step_index counts local
// optimizer steps from round start; each epoch reshuffles with a seed derived
// from (epoch_seed, epoch). The last batch of an epoch may be short.
Batch next_batch(const Dataset& dataset, const std::vector<int>& shard,
                 std::uint64_t epoch_seed, std::int64_t step_index, int batch_size);

// Mean local epoch length in optimizer steps: mean_k ceil(|D_k| / batch_size).
double mean_shard_size(const FederatedDataset& fd, int batch_size);

// Per-client class histograms as a JSON document (inspection aid).
std::string partition_summary_json(const FederatedDataset& fd);

}  // namespace fdaopt
