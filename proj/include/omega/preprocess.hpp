#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "omega/dataset.hpp"
#include "omega/gbdt.hpp"
#include "omega/graph.hpp"
#include "omega/prob_table.hpp"

namespace omega {

struct PipelineConfig {
    size_t num_training_queries = 4000;
    uint64_t checkpoint_interval = 50;  // steps between record snapshots
    size_t window = 100;
    size_t table_n_max = 200;
    size_t table_r_max = 200;
    size_t profile_queries = 1000;      // replays used for the table
    uint64_t profile_step_cap = 4000;   // per-replay cap during profiling
    double replay_cap_factor = 4.0;     // records: cap at factor x steps-to-top-1
    uint64_t seed = 99;
    TrainConfig train;
    unsigned threads = 0;               // 0 -> hardware concurrency

    void validate() const;
};

struct PipelineReport {
    size_t num_records = 0;
    size_t num_positive_records = 0;
    uint32_t stopping_round = 0;
    double validation_logloss = 0.0;
    double isotonic_deviation = 0.0;
    double ground_truth_seconds = 0.0;
    double record_gen_seconds = 0.0;
    double train_seconds = 0.0;
    double table_seconds = 0.0;
    double total_seconds = 0.0;

    std::string to_text() const;
    void save(const std::string& path) const;
};

struct PipelineArtifacts {
    GbdtModel model;
    ProbTable table;
    PipelineReport report;
};

// Replays top-1 searches; one record per checkpoint, label = 1 iff the best
// unmasked candidate is the ground-truth top-1. Each replay runs to
// replay_cap_factor x the steps needed to find the top-1 (graph exhaustion is
// the hard cap) so both labels appear.
std::vector<TrainingRecord> generate_training_records(
    const GraphIndex& index, const Dataset& dataset, const Dataset& queries,
    const GroundTruth& ground_truth, const PipelineConfig& config);

// Profiles Pr[rank-r ground truth in search_set | top-N prefix found] over
// capped stepwise replays. Ground truth depth must cover table_r_max.
ProbTable build_prob_table(const GraphIndex& index, const Dataset& dataset,
                           const Dataset& queries, const GroundTruth& ground_truth,
                           const PipelineConfig& config,
                           double* isotonic_deviation = nullptr);

// Offline phase: ground truth -> records -> train -> table. The caller owns
// the (already built) index.
PipelineArtifacts run_pipeline(const GraphIndex& index, const Dataset& dataset,
                               const Dataset& queries, const PipelineConfig& config);

}  // namespace omega
