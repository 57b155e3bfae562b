// batch.hpp - bucketed batching over (graph size, target length).

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "g2s/graph.hpp"
#include "g2s/rng.hpp"
#include "g2s/schedule.hpp"

namespace g2s {

struct Instance {
    LeviGraph graph;
    std::vector<int> target_ids;  // without <s>/</s>
};

struct BatchPlan {
    std::vector<std::vector<std::size_t>> batches;  // instance indices
    std::vector<int> target_bounds;                 // bucket target bound per batch
    std::size_t dropped = 0;                        // overlong instances (warned upstream)
};

// Instances are bucketed by ceiling node count and target length to multiples
// of bucket_size, shuffled within buckets by the epoch stream, cut into
// batches of at most batch_size, and the batch order shuffled. Instances
// whose target exceeds max_target_len are dropped (never truncated silently).
// shuffle=false keeps a stable order for evaluation passes.
BatchPlan make_batches(const std::vector<Instance>& instances, const TrainConfig& cfg,
                       std::uint64_t seed, int epoch, bool shuffle = true);

}  // namespace g2s
