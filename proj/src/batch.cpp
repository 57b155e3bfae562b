#include "g2s/batch.hpp"

#include <algorithm>
#include <map>

namespace g2s {

BatchPlan make_batches(const std::vector<Instance>& instances, const TrainConfig& cfg,
                       std::uint64_t seed, int epoch, bool shuffle) {
    BatchPlan plan;
    auto ceil_to = [&](int n) {
        return ((n + cfg.bucket_size - 1) / cfg.bucket_size) * cfg.bucket_size;
    };
    std::map<std::pair<int, int>, std::vector<std::size_t>> buckets;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        int len = static_cast<int>(instances[i].target_ids.size());
        if (len > cfg.max_target_len) {
            ++plan.dropped;
            continue;
        }
        int nodes = static_cast<int>(instances[i].graph.nodes.size());
        buckets[{ceil_to(nodes), ceil_to(std::max(len, 1))}].push_back(i);
    }
    Rng rng = Rng(cfg.seed ^ seed).fork(0x6b75 + static_cast<std::uint64_t>(epoch));
    for (auto& [key, members] : buckets) {
        if (shuffle) rng.shuffle(members);
        for (std::size_t start = 0; start < members.size(); start += cfg.batch_size) {
            std::size_t end = std::min(members.size(), start + cfg.batch_size);
            plan.batches.emplace_back(members.begin() + start, members.begin() + end);
            plan.target_bounds.push_back(key.second);
        }
    }
    if (shuffle) {
        std::vector<std::size_t> order(plan.batches.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        rng.shuffle(order);
        std::vector<std::vector<std::size_t>> batches;
        std::vector<int> bounds;
        for (std::size_t i : order) {
            batches.push_back(std::move(plan.batches[i]));
            bounds.push_back(plan.target_bounds[i]);
        }
        plan.batches = std::move(batches);
        plan.target_bounds = std::move(bounds);
    }
    return plan;
}

}  // namespace g2s
