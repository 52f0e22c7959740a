// Command-line harness: index building, the offline pipeline, multi-K trace
// replay against the Fixed baseline and both learned search variants, and CSV
// metric emission.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "omega/bench.hpp"
#include "omega/preprocess.hpp"

namespace fs = std::filesystem;
using namespace omega;

namespace {

VecsFormat parse_format(const std::string& name) {
    if (name == "fvecs") return VecsFormat::Fvecs;
    if (name == "bvecs") return VecsFormat::Bvecs;
    if (name == "ivecs") return VecsFormat::Ivecs;
    if (name == "raw-f32") return VecsFormat::RawF32;
    throw CLI::ValidationError("unknown format: " + name);
}

Metric parse_metric(const std::string& name) {
    if (name == "l2") return Metric::SquaredEuclidean;
    if (name == "ip") return Metric::InnerProduct;
    if (name == "cosine") return Metric::Cosine;
    throw CLI::ValidationError("unknown metric: " + name);
}

struct DatasetArgs {
    std::string path;
    std::string format = "fvecs";
    std::string metric = "l2";
    size_t raw_dim = 0;
    // synthetic alternative
    size_t synth_n = 0;
    size_t synth_d = 16;
    uint64_t synth_seed = 1;
    std::string synth_dist = "gaussian-clusters";

    void attach(CLI::App* app, const std::string& prefix) {
        app->add_option("--" + prefix, path, "path to a vecs file");
        app->add_option("--" + prefix + "-format", format,
                        "fvecs|bvecs|ivecs|raw-f32");
        app->add_option("--" + prefix + "-dim", raw_dim, "dimension for raw-f32");
        if (prefix == "dataset")
            app->add_option("--metric", metric, "l2|ip|cosine");
        app->add_option("--" + prefix + "-synth-n", synth_n,
                        "generate a synthetic dataset of this size instead");
        app->add_option("--" + prefix + "-synth-d", synth_d, "synthetic dimension");
        app->add_option("--" + prefix + "-synth-seed", synth_seed,
                        "synthetic seed");
        app->add_option("--" + prefix + "-synth-dist", synth_dist,
                        "uniform|gaussian-clusters");
    }

    Dataset load() const {
        if (synth_n > 0) {
            auto dist = synth_dist == "uniform" ? SynthDistribution::Uniform
                                                : SynthDistribution::GaussianClusters;
            return synth_dataset(synth_n, synth_d, synth_seed, dist,
                                 parse_metric(metric));
        }
        if (path.empty())
            throw CLI::ValidationError("either a path or a synth spec is required");
        return load_dataset(path, parse_format(format), parse_metric(metric),
                            raw_dim);
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-K learned early-stop search over proximity-graph indexes"};
    app.require_subcommand(1);

    // ---- build ----
    auto* build = app.add_subcommand("build", "build and persist a graph index");
    DatasetArgs build_data;
    build_data.attach(build, "dataset");
    GraphConfig gcfg;
    std::string index_out;
    build->add_option("--m", gcfg.m, "max neighbors per node");
    build->add_option("--ef-construction", gcfg.ef_construction, "build beam width");
    build->add_option("--seed", gcfg.seed, "build seed");
    build->add_option("--out", index_out, "output index path")->required();

    // ---- ground-truth ----
    auto* gtc = app.add_subcommand("ground-truth",
                                   "brute-force ground truth for a query set");
    DatasetArgs gt_data, gt_queries;
    gt_data.attach(gtc, "dataset");
    gt_queries.attach(gtc, "queries");
    size_t gt_k = 100;
    std::string gt_out;
    gtc->add_option("--k", gt_k, "ground truth depth");
    gtc->add_option("--out", gt_out, "output prefix (<out>.ivecs/.fvecs)")
        ->required();

    // ---- preprocess ----
    auto* prep = app.add_subcommand(
        "preprocess", "train the stop model and profile the probability table");
    DatasetArgs prep_data, prep_queries;
    prep_data.attach(prep, "dataset");
    prep_queries.attach(prep, "queries");
    std::string prep_index, prep_out;
    PipelineConfig pcfg;
    prep->add_option("--index", prep_index, "index path")->required();
    prep->add_option("--out-dir", prep_out, "output directory")->required();
    prep->add_option("--training-queries", pcfg.num_training_queries,
                     "number of training queries");
    prep->add_option("--checkpoint-interval", pcfg.checkpoint_interval,
                     "steps between record snapshots");
    prep->add_option("--window", pcfg.window, "trajectory window size");
    prep->add_option("--table-n-max", pcfg.table_n_max, "table N dimension");
    prep->add_option("--table-r-max", pcfg.table_r_max, "table r dimension");
    prep->add_option("--profile-queries", pcfg.profile_queries,
                     "queries replayed for the table");
    prep->add_option("--max-rounds", pcfg.train.max_rounds, "boosting rounds");
    prep->add_option("--learning-rate", pcfg.train.learning_rate, "learning rate");
    prep->add_option("--max-leaves", pcfg.train.max_leaves, "leaves per tree");
    prep->add_option("--seed", pcfg.seed, "pipeline seed");
    prep->add_option("--threads", pcfg.threads, "worker threads (0 = all)");

    // ---- synth-trace ----
    auto* st = app.add_subcommand("synth-trace", "generate a multi-K trace");
    size_t st_queries = 1000;
    uint64_t st_seed = 5;
    std::vector<std::string> st_weights;
    std::string st_out;
    st->add_option("--queries", st_queries, "number of trace entries");
    st->add_option("--k-weights", st_weights,
                   "K:weight pairs, e.g. 1:0.25 10:0.25 100:0.5")
        ->required();
    st->add_option("--seed", st_seed, "trace seed");
    st->add_option("--out", st_out, "output trace path")->required();

    // ---- run ----
    auto* run = app.add_subcommand("run", "replay a trace and emit CSV metrics");
    DatasetArgs run_data, run_queries;
    run_data.attach(run, "dataset");
    run_queries.attach(run, "queries");
    std::string run_index, run_trace_path, run_gt_prefix, run_method = "omega-opt";
    std::string run_artifacts, run_out;
    RunParams rp;
    run->add_option("--index", run_index, "index path")->required();
    run->add_option("--trace", run_trace_path, "trace csv path")->required();
    run->add_option("--ground-truth", run_gt_prefix,
                    "ground truth prefix (<prefix>.ivecs/.fvecs)")
        ->required();
    run->add_option("--method", run_method, "fixed|omega-basic|omega-opt");
    run->add_option("--artifacts", run_artifacts,
                    "preprocess output dir (omega methods)");
    run->add_option("--out", run_out, "output csv path (aggregates at <out>.agg.csv)")
        ->required();
    run->add_option("--recall-target", rp.omega.r_t, "recall target");
    run->add_option("--alpha", rp.omega.alpha, "forecast regularization");
    run->add_option("--window", rp.omega.w, "trajectory window size");
    run->add_option("--base-interval", rp.omega.base_interval,
                    "steps between model calls");
    run->add_flag("!--no-adaptive", rp.omega.adaptive_frequency,
                  "disable the adaptive invocation schedule");
    run->add_option("--fixed-c", rp.fixed_c, "Fixed baseline ef = ceil(c*K)");
    run->add_option("--threads", rp.threads, "replay threads (0 = all)");

    // ---- compare ----
    auto* cmp = app.add_subcommand("compare", "paired statistics of two reports");
    std::string cmp_a, cmp_b, cmp_out;
    cmp->add_option("--a", cmp_a, "baseline report csv")->required();
    cmp->add_option("--b", cmp_b, "candidate report csv")->required();
    cmp->add_option("--out", cmp_out, "output csv path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (build->parsed()) {
            Dataset data = build_data.load();
            GraphIndex index = GraphIndex::build(data, gcfg);
            index.save(index_out);
            std::cout << "built index: n=" << index.size()
                      << " max_level=" << index.max_level()
                      << " entry=" << index.entry_point() << " -> " << index_out
                      << "\n";
        } else if (gtc->parsed()) {
            Dataset data = gt_data.load();
            gt_queries.metric = gt_data.metric;
            Dataset queries = gt_queries.load();
            GroundTruth gt = brute_force_ground_truth(data, queries, gt_k);
            save_ground_truth(gt_out + ".ivecs", gt_out + ".fvecs", gt);
            std::cout << "ground truth for " << gt.size() << " queries, depth "
                      << gt_k << " -> " << gt_out << ".{ivecs,fvecs}\n";
        } else if (prep->parsed()) {
            Dataset data = prep_data.load();
            prep_queries.metric = prep_data.metric;
            Dataset queries = prep_queries.load();
            GraphIndex index = GraphIndex::load(prep_index);
            PipelineArtifacts art = run_pipeline(index, data, queries, pcfg);
            fs::create_directories(prep_out);
            art.model.save((fs::path(prep_out) / "model.bin").string());
            art.table.save((fs::path(prep_out) / "table.bin").string());
            DecayFitCache fits(art.table);
            fits.save((fs::path(prep_out) / "fits.bin").string());
            art.report.save((fs::path(prep_out) / "report.txt").string());
            std::cout << art.report.to_text();
        } else if (st->parsed()) {
            std::vector<std::pair<uint32_t, double>> weights;
            for (const auto& s : st_weights) {
                auto pos = s.find(':');
                if (pos == std::string::npos)
                    throw std::runtime_error("bad K:weight pair: " + s);
                weights.emplace_back(std::stoul(s.substr(0, pos)),
                                     std::stod(s.substr(pos + 1)));
            }
            QueryTrace::synth(st_queries, weights, st_seed).save(st_out);
            std::cout << "trace with " << st_queries << " entries -> " << st_out
                      << "\n";
        } else if (run->parsed()) {
            Dataset data = run_data.load();
            run_queries.metric = run_data.metric;
            Dataset queries = run_queries.load();
            GraphIndex index = GraphIndex::load(run_index);
            QueryTrace trace = QueryTrace::load(run_trace_path);
            GroundTruth gt = load_ground_truth(run_gt_prefix + ".ivecs",
                                               run_gt_prefix + ".fvecs");
            RunMethod method = parse_run_method(run_method);

            GbdtModel model;
            ProbTable table;
            std::optional<StopModel> stop;
            std::optional<DecayFitCache> fits;
            if (method != RunMethod::Fixed) {
                if (run_artifacts.empty())
                    throw std::runtime_error("omega methods need --artifacts");
                model = GbdtModel::load(
                    (fs::path(run_artifacts) / "model.bin").string());
                stop = make_gbdt_stop_model(model);
                if (method == RunMethod::OmegaOpt) {
                    table = ProbTable::load(
                        (fs::path(run_artifacts) / "table.bin").string());
                    fits.emplace(table);
                }
            }
            RunReport report = run_trace(
                index, data, queries, gt, trace, method, rp,
                stop ? &*stop : nullptr,
                method == RunMethod::OmegaOpt ? &table : nullptr,
                fits ? &*fits : nullptr);
            report.save_csv(run_out);
            report.save_aggregates_csv(run_out + ".agg.csv", rp.omega.r_t);
            for (const auto& [k, v] : report.aggregates(rp.omega.r_t))
                std::cout << k << "," << v << "\n";
        } else if (cmp->parsed()) {
            RunReport a = RunReport::load_csv(cmp_a);
            RunReport b = RunReport::load_csv(cmp_b);
            CompareReport report = compare_reports(a, b);
            report.save_csv(cmp_out);
            std::cout << "mean_recall_delta," << report.mean_recall_delta << "\n"
                      << "mean_cmps_ratio," << report.mean_cmps_ratio << "\n"
                      << "invocation_reduction_pct,"
                      << report.invocation_reduction_pct << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
