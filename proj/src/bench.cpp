#include "omega/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace omega {

namespace {

double percentile_of(std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    double idx = q * double(v.size() - 1);
    size_t lo = static_cast<size_t>(idx);
    size_t hi = std::min(lo + 1, v.size() - 1);
    double frac = idx - double(lo);
    return v[lo] + frac * (v[hi] - v[lo]);
}

}  // namespace

QueryTrace QueryTrace::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trace file: " + path);
    QueryTrace trace;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (first && line.rfind("query_id", 0) == 0) {
            first = false;
            continue;  // header
        }
        first = false;
        std::istringstream ls(line);
        std::string a, b;
        if (!std::getline(ls, a, ',') || !std::getline(ls, b))
            throw std::runtime_error("malformed trace line: " + line);
        TraceEntry e;
        e.query_id = static_cast<uint32_t>(std::stoul(a));
        e.k = static_cast<uint32_t>(std::stoul(b));
        if (e.k < 1) throw std::runtime_error("trace K must be >= 1");
        trace.entries.push_back(e);
    }
    return trace;
}

void QueryTrace::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write trace file: " + path);
    out << "query_id,K\n";
    for (const auto& e : entries) out << e.query_id << "," << e.k << "\n";
}

QueryTrace QueryTrace::synth(
    size_t num_queries, const std::vector<std::pair<uint32_t, double>>& k_weights,
    uint64_t seed) {
    if (k_weights.empty())
        throw std::invalid_argument("synth trace: no K weights given");
    std::vector<double> weights;
    for (const auto& [k, w] : k_weights) {
        if (k < 1 || w < 0)
            throw std::invalid_argument("synth trace: invalid K weight");
        weights.push_back(w);
    }
    std::mt19937_64 rng(seed);
    std::discrete_distribution<size_t> pick(weights.begin(), weights.end());
    QueryTrace trace;
    for (size_t q = 0; q < num_queries; ++q)
        trace.entries.push_back({static_cast<uint32_t>(q),
                                 k_weights[pick(rng)].first});
    return trace;
}

RunMethod parse_run_method(const std::string& name) {
    if (name == "fixed") return RunMethod::Fixed;
    if (name == "omega-basic") return RunMethod::OmegaBasic;
    if (name == "omega-opt") return RunMethod::OmegaOpt;
    throw std::invalid_argument("unknown method: " + name);
}

RunReport run_trace(const GraphIndex& index, const Dataset& dataset,
                    const Dataset& queries, const GroundTruth& ground_truth,
                    const QueryTrace& trace, RunMethod method,
                    const RunParams& params, const StopModel* model,
                    const ProbTable* table, const DecayFitCache* fits) {
    if (method != RunMethod::Fixed && model == nullptr)
        throw std::invalid_argument("run_trace: omega methods need a model");
    if (method == RunMethod::OmegaOpt && (table == nullptr || fits == nullptr))
        throw std::invalid_argument("run_trace: omega-opt needs table artifacts");
    for (const auto& e : trace.entries) {
        if (e.query_id >= queries.size() || e.query_id >= ground_truth.size())
            throw std::invalid_argument("run_trace: trace references unknown query");
        if (ground_truth[e.query_id].ids.size() < e.k)
            throw std::invalid_argument("run_trace: ground truth shallower than K");
    }

    RunReport report;
    report.rows.resize(trace.entries.size());
    unsigned threads = params.threads
                           ? params.threads
                           : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(
        threads, static_cast<unsigned>(std::max<size_t>(1, trace.entries.size())));

    auto run_one = [&](size_t i) {
        const TraceEntry& e = trace.entries[i];
        auto query = queries.vec(e.query_id);
        const auto& gt = ground_truth[e.query_id].ids;
        QueryRow row;
        row.query_id = e.query_id;
        row.k = e.k;
        std::vector<uint32_t> ids;
        if (method == RunMethod::Fixed) {
            const size_t ef = static_cast<size_t>(
                std::ceil(params.fixed_c * double(e.k)));
            uint64_t cmps = 0;
            const auto t0 = std::chrono::steady_clock::now();
            ids = index.fixed_search(dataset, query, e.k, std::max<size_t>(ef, e.k),
                                     &cmps);
            row.wall_time_us = std::chrono::duration<double, std::micro>(
                                   std::chrono::steady_clock::now() - t0)
                                   .count();
            row.cmps = cmps;
        } else {
            OmegaParams op = params.omega;
            SearchOutcome outcome;
            if (method == RunMethod::OmegaBasic) {
                op.forecast = false;
                outcome = basic_search(index, dataset, *model, query, e.k, op);
            } else {
                op.forecast = true;
                outcome = optimized_search(index, dataset, *model, *table, *fits,
                                           query, e.k, op);
            }
            ids = std::move(outcome.ids);
            row.steps = outcome.metrics.steps;
            row.cmps = outcome.metrics.cmps;
            row.model_invocations = outcome.metrics.model_invocations;
            row.forecast_stop = outcome.metrics.forecast_stop;
            row.stop_rank = outcome.metrics.stop_rank;
            row.wall_time_us = outcome.metrics.wall_time_us;
        }
        row.recall = recall_at_k(gt, ids, e.k);
        while (row.prefix_rank < ids.size() && row.prefix_rank < gt.size() &&
               ids[row.prefix_rank] == gt[row.prefix_rank])
            ++row.prefix_rank;
        report.rows[i] = row;
    };

    if (threads <= 1) {
        for (size_t i = 0; i < trace.entries.size(); ++i) run_one(i);
    } else {
        std::atomic<size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (size_t i = next.fetch_add(1); i < trace.entries.size();
                     i = next.fetch_add(1))
                    run_one(i);
            });
        for (auto& th : pool) th.join();
    }
    return report;
}

std::map<std::string, double> RunReport::aggregates(double recall_target) const {
    std::map<std::string, double> agg;
    if (rows.empty()) return agg;
    std::vector<double> recalls, cmps, walls;
    double inv = 0, fstops = 0, at_target = 0;
    for (const auto& r : rows) {
        recalls.push_back(r.recall);
        cmps.push_back(double(r.cmps));
        walls.push_back(r.wall_time_us);
        inv += double(r.model_invocations);
        fstops += r.forecast_stop;
        at_target += r.recall >= recall_target ? 1 : 0;
    }
    const double n = double(rows.size());
    auto mean = [n](const std::vector<double>& v) {
        double s = 0;
        for (double x : v) s += x;
        return s / n;
    };
    agg["mean_recall"] = mean(recalls);
    agg["p50_recall"] = percentile_of(recalls, 0.50);
    agg["p90_recall"] = percentile_of(recalls, 0.90);
    agg["p99_recall"] = percentile_of(recalls, 0.99);
    agg["frac_recall_at_target"] = at_target / n;
    agg["mean_cmps"] = mean(cmps);
    agg["p50_cmps"] = percentile_of(cmps, 0.50);
    agg["p90_cmps"] = percentile_of(cmps, 0.90);
    agg["p99_cmps"] = percentile_of(cmps, 0.99);
    agg["mean_model_invocations"] = inv / n;
    agg["forecast_stop_rate"] = fstops / n;
    agg["num_queries"] = n;
    agg["mean_wall_time_us"] = mean(walls);
    agg["p99_wall_time_us"] = percentile_of(walls, 0.99);
    return agg;
}

void RunReport::save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report file: " + path);
    out << "query_id,K,recall,steps,cmps,model_invocations,forecast_stop,"
           "stop_rank,prefix_rank,wall_time_us\n";
    for (const auto& r : rows)
        out << r.query_id << "," << r.k << "," << r.recall << "," << r.steps << ","
            << r.cmps << "," << r.model_invocations << "," << r.forecast_stop
            << "," << r.stop_rank << "," << r.prefix_rank << "," << r.wall_time_us
            << "\n";
}

RunReport RunReport::load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open report file: " + path);
    RunReport report;
    std::string line;
    if (!std::getline(in, line) || line.rfind("query_id", 0) != 0)
        throw std::runtime_error("not a run report: " + path);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string tok;
        std::vector<std::string> toks;
        while (std::getline(ls, tok, ',')) toks.push_back(tok);
        if (toks.size() != 10)
            throw std::runtime_error("malformed report line: " + line);
        QueryRow r;
        r.query_id = static_cast<uint32_t>(std::stoul(toks[0]));
        r.k = static_cast<uint32_t>(std::stoul(toks[1]));
        r.recall = std::stod(toks[2]);
        r.steps = std::stoull(toks[3]);
        r.cmps = std::stoull(toks[4]);
        r.model_invocations = std::stoull(toks[5]);
        r.forecast_stop = std::stoi(toks[6]);
        r.stop_rank = std::stoull(toks[7]);
        r.prefix_rank = std::stoull(toks[8]);
        r.wall_time_us = std::stod(toks[9]);
        report.rows.push_back(r);
    }
    return report;
}

void RunReport::save_aggregates_csv(const std::string& path,
                                    double recall_target) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write aggregates file: " + path);
    out << "metric,value\n";
    for (const auto& [k, v] : aggregates(recall_target))
        out << k << "," << v << "\n";
}

CompareReport compare_reports(const RunReport& a, const RunReport& b) {
    if (a.rows.size() != b.rows.size())
        throw std::invalid_argument("compare: mismatched query sets");
    std::map<std::pair<uint32_t, uint32_t>, const QueryRow*> index_b;
    for (const auto& r : b.rows) index_b[{r.query_id, r.k}] = &r;

    CompareReport cmp;
    double inv_a = 0, inv_b = 0;
    for (const auto& ra : a.rows) {
        auto it = index_b.find({ra.query_id, ra.k});
        if (it == index_b.end())
            throw std::invalid_argument("compare: mismatched query sets");
        const QueryRow& rb = *it->second;
        CompareRow row;
        row.query_id = ra.query_id;
        row.k = ra.k;
        row.recall_a = ra.recall;
        row.recall_b = rb.recall;
        row.recall_delta = rb.recall - ra.recall;
        row.cmps_a = ra.cmps;
        row.cmps_b = rb.cmps;
        row.cmps_ratio = ra.cmps ? double(rb.cmps) / double(ra.cmps) : 0.0;
        row.invocations_a = ra.model_invocations;
        row.invocations_b = rb.model_invocations;
        cmp.rows.push_back(row);
        cmp.mean_recall_delta += row.recall_delta;
        cmp.mean_cmps_ratio += row.cmps_ratio;
        inv_a += double(ra.model_invocations);
        inv_b += double(rb.model_invocations);
    }
    const double n = double(cmp.rows.size());
    if (n > 0) {
        cmp.mean_recall_delta /= n;
        cmp.mean_cmps_ratio /= n;
        cmp.invocation_reduction_pct =
            inv_a > 0 ? 100.0 * (inv_a - inv_b) / inv_a : 0.0;
    }
    return cmp;
}

void CompareReport::save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write compare file: " + path);
    out << "query_id,K,recall_a,recall_b,recall_delta,cmps_a,cmps_b,cmps_ratio,"
           "invocations_a,invocations_b\n";
    for (const auto& r : rows)
        out << r.query_id << "," << r.k << "," << r.recall_a << "," << r.recall_b
            << "," << r.recall_delta << "," << r.cmps_a << "," << r.cmps_b << ","
            << r.cmps_ratio << "," << r.invocations_a << "," << r.invocations_b
            << "\n";
    out << "# mean_recall_delta," << mean_recall_delta << "\n";
    out << "# mean_cmps_ratio," << mean_cmps_ratio << "\n";
    out << "# invocation_reduction_pct," << invocation_reduction_pct << "\n";
}

}  // namespace omega
