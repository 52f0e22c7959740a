#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "omega/dataset.hpp"
#include "omega/graph.hpp"
#include "omega/prob_table.hpp"
#include "omega/search.hpp"

namespace omega {

struct TraceEntry {
    uint32_t query_id = 0;
    uint32_t k = 1;
};

// Textual trace, one `query_id,K` record per line, optional header.
struct QueryTrace {
    std::vector<TraceEntry> entries;

    static QueryTrace load(const std::string& path);
    void save(const std::string& path) const;

    // Deterministic synthetic trace over explicit K weights.
    static QueryTrace synth(size_t num_queries,
                            const std::vector<std::pair<uint32_t, double>>& k_weights,
                            uint64_t seed);
};

enum class RunMethod { Fixed, OmegaBasic, OmegaOpt };

RunMethod parse_run_method(const std::string& name);

struct RunParams {
    OmegaParams omega;
    double fixed_c = 4.0;  // Fixed baseline: ef(K) = ceil(c * K)
    unsigned threads = 1;
};

struct QueryRow {
    uint32_t query_id = 0;
    uint32_t k = 1;
    double recall = 0.0;
    uint64_t steps = 0;
    uint64_t cmps = 0;
    uint64_t model_invocations = 0;
    int forecast_stop = 0;
    uint64_t stop_rank = 0;
    uint64_t prefix_rank = 0;  // GT prefix length of the returned list
    double wall_time_us = 0.0;
};

struct RunReport {
    std::vector<QueryRow> rows;

    std::map<std::string, double> aggregates(double recall_target = 0.95) const;

    void save_csv(const std::string& path) const;
    static RunReport load_csv(const std::string& path);
    void save_aggregates_csv(const std::string& path,
                             double recall_target = 0.95) const;
};

// Replays a trace with recall scored against the ground truth (depth must
// cover the largest K in the trace). For omega methods `model` must be set;
// for OmegaOpt `table`/`fits` as well.
RunReport run_trace(const GraphIndex& index, const Dataset& dataset,
                    const Dataset& queries, const GroundTruth& ground_truth,
                    const QueryTrace& trace, RunMethod method,
                    const RunParams& params, const StopModel* model = nullptr,
                    const ProbTable* table = nullptr,
                    const DecayFitCache* fits = nullptr);

struct CompareRow {
    uint32_t query_id = 0;
    uint32_t k = 1;
    double recall_a = 0.0, recall_b = 0.0, recall_delta = 0.0;
    uint64_t cmps_a = 0, cmps_b = 0;
    double cmps_ratio = 0.0;
    uint64_t invocations_a = 0, invocations_b = 0;
};

struct CompareReport {
    std::vector<CompareRow> rows;
    double mean_recall_delta = 0.0;
    double mean_cmps_ratio = 0.0;
    double invocation_reduction_pct = 0.0;

    void save_csv(const std::string& path) const;
};

// Paired statistics joined on query_id; the query sets must match.
CompareReport compare_reports(const RunReport& a, const RunReport& b);

}  // namespace omega
