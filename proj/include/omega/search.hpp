#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "omega/features.hpp"
#include "omega/gbdt.hpp"
#include "omega/graph.hpp"
#include "omega/prob_table.hpp"

namespace omega {

struct OmegaParams {
    double r_t = 0.95;            // recall target
    double alpha = 0.95;          // forecast regularization
    size_t w = 100;               // trajectory window
    uint64_t base_interval = 50;  // steps between model calls
    bool adaptive_frequency = true;
    bool forecast = true;
    uint64_t step_cap = std::numeric_limits<uint64_t>::max();  // exhaustion bound

    void validate() const;
};

struct SearchMetrics {
    uint64_t steps = 0;
    uint64_t cmps = 0;
    uint64_t model_invocations = 0;
    int forecast_stop = 0;      // 1 when the table stopped the search
    uint64_t stop_rank = 0;     // loop N at termination
    double wall_time_us = 0.0;
};

struct SearchOutcome {
    std::vector<uint32_t> ids;
    SearchMetrics metrics;
};

// Probability that the (masked-instance) top-1 is the current best unmasked
// candidate. GbdtStopModel wraps the trained ensemble; the oracle variant in
// the tests answers from ground truth instead.
using StopModel = std::function<double(const FeatureVector&, const SearchState&)>;

StopModel make_gbdt_stop_model(const GbdtModel& model);

// Exact stop oracle for a single query: 1 iff the ground-truth top-1 of the
// masked instance is the current best unmasked candidate.
StopModel make_oracle_stop_model(std::vector<uint32_t> gt_ids);

// Alg. 2 line 5: (N(r_t + alpha(1 - r_t)) + sum_{r=N+1..K} T_prob(N, r)) / K.
// Ranks beyond the table come from the row's decay fit; N clamps to n_max.
double forecast_recall(const ProbTable& table, const DecayFitCache& fits, size_t n,
                       size_t k, double r_t, double alpha);

// Linear schedule: far-from-target predictions take long strides, near-target
// ones re-check after a single step.
uint64_t adaptive_interval(double predicted, double r_t, uint64_t base_interval);

// Masking-based top-K refinement with the learned stop model (Alg. 1 with the
// adaptive invocation interval).
SearchOutcome basic_search(const GraphIndex& index, const Dataset& dataset,
                           const StopModel& model, std::span<const float> query,
                           size_t k, const OmegaParams& params);

// Alg. 2: basic refinement plus the statistical-forecast stop. With the
// forecast flag off this is bit-identical to basic_search.
SearchOutcome optimized_search(const GraphIndex& index, const Dataset& dataset,
                               const StopModel& model, const ProbTable& table,
                               const DecayFitCache& fits,
                               std::span<const float> query, size_t k,
                               const OmegaParams& params);

}  // namespace omega
