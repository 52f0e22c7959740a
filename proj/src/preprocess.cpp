#include "omega/preprocess.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "omega/features.hpp"

namespace omega {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

unsigned worker_count(unsigned requested, size_t jobs) {
    unsigned t = requested ? requested
                           : std::max(1u, std::thread::hardware_concurrency());
    return std::min<unsigned>(t, static_cast<unsigned>(std::max<size_t>(1, jobs)));
}

template <typename Fn>
void parallel_for(unsigned threads, size_t jobs, Fn&& fn) {
    if (threads <= 1) {
        for (size_t i = 0; i < jobs; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (size_t i = next.fetch_add(1); i < jobs; i = next.fetch_add(1))
                fn(i);
        });
    for (auto& th : pool) th.join();
}

}  // namespace

void PipelineConfig::validate() const {
    if (num_training_queries < 1)
        throw std::invalid_argument("PipelineConfig: num_training_queries >= 1");
    if (checkpoint_interval < 1)
        throw std::invalid_argument("PipelineConfig: checkpoint_interval >= 1");
    if (replay_cap_factor < 1.0)
        throw std::invalid_argument("PipelineConfig: replay_cap_factor >= 1");
    train.validate();
}

std::vector<TrainingRecord> generate_training_records(
    const GraphIndex& index, const Dataset& dataset, const Dataset& queries,
    const GroundTruth& ground_truth, const PipelineConfig& config) {
    config.validate();
    const size_t nq = std::min(config.num_training_queries, queries.size());
    if (ground_truth.size() < nq)
        throw std::invalid_argument("generate_training_records: missing ground truth");
    for (size_t q = 0; q < nq; ++q)
        if (ground_truth[q].ids.empty())
            throw std::invalid_argument(
                "generate_training_records: empty ground-truth row");

    std::vector<std::vector<TrainingRecord>> per_query(nq);
    const unsigned threads = worker_count(config.threads, nq);
    parallel_for(threads, nq, [&](size_t q) {
        const uint32_t gt1 = ground_truth[q].ids[0];
        auto query = queries.vec(q);
        SearchState st = index.init_search(dataset, query);
        auto& out = per_query[q];

        auto emit = [&] {
            TrainingRecord rec;
            rec.features = extract_features(st, config.window);
            rec.label = best_unmasked(st).second == gt1 ? 1 : 0;
            out.push_back(rec);
        };

        emit();  // post-init checkpoint
        uint64_t cap = std::numeric_limits<uint64_t>::max();
        uint64_t found_step = 0;
        bool found = st.search_set.begin()->second == gt1;
        uint64_t last_emit = 0;
        while (!st.exhausted && st.steps_taken < cap) {
            index.search_one_step(dataset, query, st);
            if (!found && st.search_set.begin()->second == gt1) {
                found = true;
                found_step = std::max<uint64_t>(1, st.steps_taken);
                cap = std::max<uint64_t>(
                    static_cast<uint64_t>(
                        std::ceil(config.replay_cap_factor * double(found_step))),
                    st.steps_taken + config.checkpoint_interval);
            }
            if (st.steps_taken % config.checkpoint_interval == 0) {
                emit();
                last_emit = st.steps_taken;
            }
        }
        if (st.steps_taken != last_emit) emit();  // closing snapshot
    });

    std::vector<TrainingRecord> records;
    for (auto& v : per_query)
        records.insert(records.end(), v.begin(), v.end());
    return records;
}

ProbTable build_prob_table(const GraphIndex& index, const Dataset& dataset,
                           const Dataset& queries, const GroundTruth& ground_truth,
                           const PipelineConfig& config,
                           double* isotonic_deviation) {
    config.validate();
    const size_t r_max = config.table_r_max;
    const size_t nq = std::min(config.profile_queries, queries.size());
    if (ground_truth.size() < nq)
        throw std::invalid_argument("build_prob_table: missing ground truth");
    for (size_t q = 0; q < nq; ++q)
        if (ground_truth[q].ids.size() < r_max)
            throw std::invalid_argument("build_prob_table: ground truth too shallow");

    const unsigned threads = worker_count(config.threads, nq);
    std::vector<ProbTable> partials(threads,
                                    ProbTable(config.table_n_max, r_max));
    std::atomic<size_t> next{0};
    auto worker = [&](unsigned tid) {
        ProbTable& table = partials[tid];
        std::vector<uint8_t> found(r_max);
        for (size_t q = next.fetch_add(1); q < nq; q = next.fetch_add(1)) {
            const auto& gt = ground_truth[q].ids;
            auto query = queries.vec(q);
            SearchState st = index.init_search(dataset, query);
            std::fill(found.begin(), found.end(), 0);
            size_t prefix = 0;

            auto refresh = [&] {
                for (size_t r = 0; r < r_max; ++r)
                    if (!found[r] && st.visited[gt[r]]) found[r] = 1;
                while (prefix < r_max && found[prefix]) ++prefix;
            };

            refresh();
            table.observe(prefix, found);
            while (!st.exhausted && prefix < r_max &&
                   st.steps_taken < config.profile_step_cap) {
                index.search_one_step(dataset, query, st);
                refresh();
                table.observe(prefix, found);
            }
        }
    };
    if (threads <= 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back(worker, t);
        for (auto& th : pool) th.join();
    }
    ProbTable table = std::move(partials[0]);
    for (unsigned t = 1; t < threads; ++t) table.merge(partials[t]);
    const double deviation = table.finalize();
    if (isotonic_deviation) *isotonic_deviation = deviation;
    return table;
}

PipelineArtifacts run_pipeline(const GraphIndex& index, const Dataset& dataset,
                               const Dataset& queries,
                               const PipelineConfig& config) {
    config.validate();
    const auto t_start = std::chrono::steady_clock::now();
    PipelineArtifacts art;

    const size_t n_train = std::min(config.num_training_queries, queries.size());
    const size_t n_profile = std::min(config.profile_queries, n_train);
    const size_t deep_k = std::min(config.table_r_max, dataset.size());

    // Ground truth: profiling prefix needs depth r_max, the rest only top-1.
    const auto t_gt = std::chrono::steady_clock::now();
    GroundTruth gt(n_train);
    {
        const unsigned threads = worker_count(config.threads, n_train);
        parallel_for(threads, n_train, [&](size_t q) {
            gt[q] = brute_force_topk(dataset, queries.vec(q),
                                     q < n_profile ? deep_k : 1);
        });
    }
    art.report.ground_truth_seconds = seconds_since(t_gt);

    const auto t_rec = std::chrono::steady_clock::now();
    auto records = generate_training_records(index, dataset, queries, gt, config);
    art.report.record_gen_seconds = seconds_since(t_rec);
    art.report.num_records = records.size();
    for (const auto& r : records)
        art.report.num_positive_records += r.label ? 1 : 0;

    const auto t_train = std::chrono::steady_clock::now();
    TrainReport train_report;
    art.model = GbdtModel::train(records, config.train, &train_report);
    art.report.train_seconds = seconds_since(t_train);
    art.report.stopping_round = train_report.stopping_round;
    art.report.validation_logloss = train_report.validation_logloss;

    const auto t_table = std::chrono::steady_clock::now();
    PipelineConfig profile_cfg = config;
    profile_cfg.table_r_max = deep_k;
    art.table = build_prob_table(index, dataset, queries, gt, profile_cfg,
                                 &art.report.isotonic_deviation);
    art.report.table_seconds = seconds_since(t_table);

    art.report.total_seconds = seconds_since(t_start);
    return art;
}

std::string PipelineReport::to_text() const {
    std::ostringstream os;
    os << "num_records: " << num_records << "\n"
       << "num_positive_records: " << num_positive_records << "\n"
       << "stopping_round: " << stopping_round << "\n"
       << "validation_logloss: " << validation_logloss << "\n"
       << "isotonic_deviation: " << isotonic_deviation << "\n"
       << "ground_truth_seconds: " << ground_truth_seconds << "\n"
       << "record_gen_seconds: " << record_gen_seconds << "\n"
       << "train_seconds: " << train_seconds << "\n"
       << "table_seconds: " << table_seconds << "\n"
       << "total_seconds: " << total_seconds << "\n";
    return os.str();
}

void PipelineReport::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report file: " + path);
    out << to_text();
}

}  // namespace omega
