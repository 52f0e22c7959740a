#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "omega/bench.hpp"
#include "omega/preprocess.hpp"

using namespace omega;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("bench_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const {
        return (path / name).string();
    }
};

RunReport tiny_report() {
    RunReport r;
    r.rows = {{0, 10, 0.9, 5, 100, 3, 0, 9, 8, 1.0},
              {1, 10, 1.0, 7, 140, 2, 1, 10, 10, 2.0},
              {2, 50, 0.96, 9, 300, 4, 0, 49, 40, 3.0}};
    return r;
}

}  // namespace

TEST_CASE("trace round-trip and header") {
    TempDir tmp;
    QueryTrace t;
    t.entries = {{0, 1}, {3, 100}, {7, 10}};
    t.save(tmp.file("trace.csv"));
    QueryTrace back = QueryTrace::load(tmp.file("trace.csv"));
    REQUIRE(back.entries.size() == 3);
    CHECK(back.entries[1].query_id == 3);
    CHECK(back.entries[1].k == 100);

    std::ifstream in(tmp.file("trace.csv"));
    std::string header;
    std::getline(in, header);
    CHECK(header == "query_id,K");
}

TEST_CASE("empty trace keeps a valid header") {
    TempDir tmp;
    QueryTrace{}.save(tmp.file("empty.csv"));
    QueryTrace back = QueryTrace::load(tmp.file("empty.csv"));
    CHECK(back.entries.empty());
}

TEST_CASE("synthetic trace determinism and K support") {
    std::vector<std::pair<uint32_t, double>> weights{{1, 0.25}, {10, 0.25},
                                                     {100, 0.5}};
    QueryTrace a = QueryTrace::synth(500, weights, 11);
    QueryTrace b = QueryTrace::synth(500, weights, 11);
    REQUIRE(a.entries.size() == 500);
    for (size_t i = 0; i < a.entries.size(); ++i) {
        CHECK(a.entries[i].query_id == b.entries[i].query_id);
        CHECK(a.entries[i].k == b.entries[i].k);
        const uint32_t k = a.entries[i].k;
        CHECK((k == 1 || k == 10 || k == 100));
    }
}

TEST_CASE("parse_run_method") {
    CHECK(parse_run_method("fixed") == RunMethod::Fixed);
    CHECK(parse_run_method("omega-basic") == RunMethod::OmegaBasic);
    CHECK(parse_run_method("omega-opt") == RunMethod::OmegaOpt);
    CHECK_THROWS(parse_run_method("bogus"));
}

TEST_CASE("aggregates equal recomputation from rows") {
    RunReport r = tiny_report();
    auto agg = r.aggregates(0.95);
    CHECK(agg.at("mean_recall") ==
          doctest::Approx((0.9 + 1.0 + 0.96) / 3.0));
    CHECK(agg.at("mean_cmps") == doctest::Approx((100 + 140 + 300) / 3.0));
    CHECK(agg.at("frac_recall_at_target") == doctest::Approx(2.0 / 3.0));
    CHECK(agg.at("mean_model_invocations") == doctest::Approx(3.0));
    CHECK(agg.at("num_queries") == doctest::Approx(3.0));
}

TEST_CASE("report CSV round-trip") {
    TempDir tmp;
    RunReport r = tiny_report();
    r.save_csv(tmp.file("report.csv"));
    RunReport back = RunReport::load_csv(tmp.file("report.csv"));
    REQUIRE(back.rows.size() == r.rows.size());
    for (size_t i = 0; i < r.rows.size(); ++i) {
        CHECK(back.rows[i].query_id == r.rows[i].query_id);
        CHECK(back.rows[i].k == r.rows[i].k);
        CHECK(back.rows[i].recall == doctest::Approx(r.rows[i].recall));
        CHECK(back.rows[i].cmps == r.rows[i].cmps);
        CHECK(back.rows[i].model_invocations == r.rows[i].model_invocations);
    }
}

TEST_CASE("report compared with itself has zero deltas") {
    RunReport r = tiny_report();
    CompareReport c = compare_reports(r, r);
    CHECK(c.mean_recall_delta == doctest::Approx(0.0));
    CHECK(c.mean_cmps_ratio == doctest::Approx(1.0));
    CHECK(c.invocation_reduction_pct == doctest::Approx(0.0));
    for (const auto& row : c.rows) CHECK(row.recall_delta == doctest::Approx(0.0));
}

TEST_CASE("mismatched query sets error") {
    RunReport a = tiny_report();
    RunReport b = tiny_report();
    b.rows[1].query_id = 99;
    CHECK_THROWS(compare_reports(a, b));
    RunReport c = tiny_report();
    c.rows.pop_back();
    CHECK_THROWS(compare_reports(a, c));
}

TEST_CASE("fixed replay on a small index") {
    Dataset d = synth_dataset(2000, 8, 95, SynthDistribution::GaussianClusters);
    Dataset q = synth_dataset(30, 8, 96, SynthDistribution::GaussianClusters);
    GraphConfig gcfg;
    GraphIndex g = GraphIndex::build(d, gcfg);
    auto gt = brute_force_ground_truth(d, q, 20);
    QueryTrace trace;
    for (uint32_t i = 0; i < 30; ++i) trace.entries.push_back({i, 10});
    RunParams rp;
    rp.fixed_c = 8.0;
    RunReport report = run_trace(g, d, q, gt, trace, RunMethod::Fixed, rp);
    REQUIRE(report.rows.size() == 30);
    double mean = report.aggregates().at("mean_recall");
    CHECK(mean >= 0.9);
    for (const auto& row : report.rows) {
        CHECK(row.cmps > 0);
        CHECK(row.model_invocations == 0);
    }
}

TEST_CASE("omega replay deterministic across thread counts") {
    Dataset d = synth_dataset(2000, 8, 97, SynthDistribution::GaussianClusters);
    Dataset q = synth_dataset(20, 8, 98, SynthDistribution::GaussianClusters);
    GraphIndex g = GraphIndex::build(d, GraphConfig{});
    auto gt = brute_force_ground_truth(d, q, 10);

    PipelineConfig pcfg;
    pcfg.num_training_queries = 20;
    pcfg.checkpoint_interval = 10;
    pcfg.window = 50;
    pcfg.table_n_max = 10;
    pcfg.table_r_max = 10;
    pcfg.profile_queries = 20;
    pcfg.profile_step_cap = 300;
    pcfg.train.max_rounds = 10;
    PipelineArtifacts art = run_pipeline(g, d, q, pcfg);
    StopModel stop = make_gbdt_stop_model(art.model);
    DecayFitCache fits(art.table);

    QueryTrace trace;
    for (uint32_t i = 0; i < 20; ++i) trace.entries.push_back({i, 5});
    RunParams rp;
    rp.omega.w = 50;
    rp.omega.base_interval = 10;
    rp.threads = 1;
    RunReport serial = run_trace(g, d, q, gt, trace, RunMethod::OmegaOpt, rp,
                                 &stop, &art.table, &fits);
    rp.threads = 4;
    RunReport parallel = run_trace(g, d, q, gt, trace, RunMethod::OmegaOpt, rp,
                                   &stop, &art.table, &fits);
    REQUIRE(serial.rows.size() == parallel.rows.size());
    for (size_t i = 0; i < serial.rows.size(); ++i) {
        CHECK(serial.rows[i].recall == parallel.rows[i].recall);
        CHECK(serial.rows[i].cmps == parallel.rows[i].cmps);
        CHECK(serial.rows[i].model_invocations ==
              parallel.rows[i].model_invocations);
    }
}

TEST_CASE("run_trace validates inputs") {
    Dataset d = synth_dataset(100, 4, 99);
    Dataset q = synth_dataset(5, 4, 100);
    GraphIndex g = GraphIndex::build(d, GraphConfig{});
    auto gt = brute_force_ground_truth(d, q, 3);
    QueryTrace bad_id;
    bad_id.entries = {{50, 3}};  // no such query
    CHECK_THROWS(run_trace(g, d, q, gt, bad_id, RunMethod::Fixed, RunParams{}));
    QueryTrace deep_k;
    deep_k.entries = {{0, 10}};  // ground truth too shallow
    CHECK_THROWS(run_trace(g, d, q, gt, deep_k, RunMethod::Fixed, RunParams{}));
    QueryTrace ok;
    ok.entries = {{0, 3}};
    CHECK_THROWS(
        run_trace(g, d, q, gt, ok, RunMethod::OmegaBasic, RunParams{}));  // no model
}

TEST_CASE("compare CSV is written with summary lines") {
    TempDir tmp;
    RunReport r = tiny_report();
    CompareReport c = compare_reports(r, r);
    c.save_csv(tmp.file("cmp.csv"));
    std::ifstream in(tmp.file("cmp.csv"));
    std::string text((std::istreambuf_iterator<char>(in)), {});
    CHECK(text.find("mean_cmps_ratio") != std::string::npos);
}
