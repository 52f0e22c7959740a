#pragma once

#include <cstdint>
#include <queue>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "omega/dataset.hpp"

namespace omega {

struct GraphConfig {
    uint32_t m = 16;                // max neighbors per node on upper layers
    uint32_t ef_construction = 200; // build beam width
    uint64_t seed = 42;             // level-assignment seed
    double level_mult = 0.0;        // 0 -> 1/ln(m)

    void validate() const;
};

using Candidate = std::pair<float, uint32_t>;  // (distance, id), ties by lower id

// Best-so-far candidates plus frontier and bookkeeping for one stepwise search.
// The search_set is unbounded; the stop decision replaces the ef bound.
struct SearchState {
    std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>> frontier;
    std::set<Candidate> search_set;
    std::vector<uint8_t> visited;
    std::unordered_set<uint32_t> masked;
    std::vector<float> trajectory;  // one entry per distance evaluation
    uint64_t steps_taken = 0;       // node expansions
    uint64_t hops = 0;
    uint64_t cmps = 0;              // == trajectory.size() at all times
    float dist_start = 0.f;         // layer-0 entry distance
    bool exhausted = false;
};

class GraphIndex {
   public:
    GraphIndex() = default;

    static GraphIndex build(const Dataset& dataset, const GraphConfig& config);

    SearchState init_search(const Dataset& dataset, std::span<const float> query) const;

    // One node expansion: pops the closest frontier candidate and evaluates all
    // its unvisited layer-0 neighbors. A no-op on an exhausted state.
    void search_one_step(const Dataset& dataset, std::span<const float> query,
                         SearchState& state) const;

    void search_multiple_steps(const Dataset& dataset, std::span<const float> query,
                               SearchState& state, uint64_t steps) const;

    // Classic ef-bounded HNSW search (the Fixed baseline). cmps_out, when given,
    // receives the number of distance evaluations.
    std::vector<uint32_t> fixed_search(const Dataset& dataset,
                                       std::span<const float> query, size_t k,
                                       size_t ef, uint64_t* cmps_out = nullptr) const;

    size_t size() const { return levels_.size(); }
    uint32_t entry_point() const { return entry_; }
    int max_level() const { return max_level_; }
    const GraphConfig& config() const { return config_; }
    const std::vector<uint32_t>& neighbors(uint32_t id, int level) const;

    void save(const std::string& path) const;
    static GraphIndex load(const std::string& path);

   private:
    GraphConfig config_;
    uint32_t entry_ = 0;
    int max_level_ = 0;
    std::vector<int> levels_;  // per node max level
    // adjacency_[level][id] is the neighbor list of `id` on `level`
    std::vector<std::vector<std::vector<uint32_t>>> adjacency_;

    uint32_t greedy_descend(const Dataset& dataset, std::span<const float> query,
                            int to_level) const;
    std::vector<Candidate> search_layer(const Dataset& dataset,
                                        std::span<const float> query, uint32_t entry,
                                        size_t ef, int level,
                                        uint64_t* cmps = nullptr) const;
};

// K best unmasked entries of the search_set by ascending distance, ties by
// lower id; fewer if unavailable.
std::vector<uint32_t> current_topk(const SearchState& state, size_t k,
                                   const std::unordered_set<uint32_t>& masked);

inline std::vector<uint32_t> current_topk(const SearchState& state, size_t k) {
    return current_topk(state, k, state.masked);
}

// Best unmasked (distance, id) entry; falls back to (dist_start, entry) when
// everything is masked.
Candidate best_unmasked(const SearchState& state);

}  // namespace omega
