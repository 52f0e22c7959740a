#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "omega/dataset.hpp"

using namespace omega;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("dataset_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const {
        return (path / name).string();
    }
};

void write_fvecs(const std::string& path,
                 const std::vector<std::vector<float>>& rows) {
    std::ofstream out(path, std::ios::binary);
    for (const auto& row : rows) {
        const int32_t d = static_cast<int32_t>(row.size());
        out.write(reinterpret_cast<const char*>(&d), 4);
        out.write(reinterpret_cast<const char*>(row.data()), d * 4);
    }
}

void write_bvecs(const std::string& path,
                 const std::vector<std::vector<uint8_t>>& rows) {
    std::ofstream out(path, std::ios::binary);
    for (const auto& row : rows) {
        const int32_t d = static_cast<int32_t>(row.size());
        out.write(reinterpret_cast<const char*>(&d), 4);
        out.write(reinterpret_cast<const char*>(row.data()), d);
    }
}

// Independent full-sort top-K reference.
std::vector<uint32_t> full_sort_topk(const Dataset& data,
                                     std::span<const float> query, size_t k) {
    std::vector<std::pair<float, uint32_t>> all;
    for (size_t i = 0; i < data.size(); ++i)
        all.emplace_back(distance(query, data.vec(i), data.metric()),
                         static_cast<uint32_t>(i));
    std::sort(all.begin(), all.end());
    std::vector<uint32_t> ids;
    for (size_t i = 0; i < std::min(k, all.size()); ++i)
        ids.push_back(all[i].second);
    return ids;
}

}  // namespace

TEST_CASE("fvecs single record round-trip") {
    TempDir tmp;
    write_fvecs(tmp.file("a.fvecs"), {{3.0f, 4.0f}});
    Dataset d = load_dataset(tmp.file("a.fvecs"), VecsFormat::Fvecs);
    CHECK(d.size() == 1);
    CHECK(d.dim() == 2);
    CHECK(d.vec(0)[0] == 3.0f);
    CHECK(d.vec(0)[1] == 4.0f);
}

TEST_CASE("bvecs byte identity") {
    TempDir tmp;
    write_bvecs(tmp.file("a.bvecs"), {{1, 2, 3, 4}});
    Dataset d = load_dataset(tmp.file("a.bvecs"), VecsFormat::Bvecs);
    REQUIRE(d.dim() == 4);
    CHECK(d.vec(0)[0] == 1.0f);
    CHECK(d.vec(0)[1] == 2.0f);
    CHECK(d.vec(0)[2] == 3.0f);
    CHECK(d.vec(0)[3] == 4.0f);
}

TEST_CASE("dimension mismatch between records is an error") {
    TempDir tmp;
    write_fvecs(tmp.file("bad.fvecs"), {{1.0f, 2.0f}, {1.0f, 2.0f, 3.0f}});
    CHECK_THROWS(load_dataset(tmp.file("bad.fvecs"), VecsFormat::Fvecs));
}

TEST_CASE("distance basics") {
    std::vector<float> a{0.f, 0.f}, b{3.f, 4.f};
    CHECK(distance(a, a, Metric::SquaredEuclidean) == doctest::Approx(0.0));
    CHECK(distance(a, b, Metric::SquaredEuclidean) == doctest::Approx(25.0));
    std::vector<float> e1{1.f, 0.f}, e2{0.f, 1.f};
    CHECK(distance(e1, e2, Metric::Cosine) == doctest::Approx(0.0));
    CHECK(distance(e1, e1, Metric::Cosine) == doctest::Approx(-1.0));
    CHECK(distance(e1, e2, Metric::InnerProduct) == doctest::Approx(0.0));
}

TEST_CASE("brute_force_topk tiny cases") {
    Dataset d({0.f, 0.f, 3.f, 4.f, 1.f, 1.f}, 2, Metric::SquaredEuclidean);
    std::vector<float> q{0.f, 0.f};
    auto top2 = brute_force_topk(d, q, 2);
    REQUIRE(top2.ids.size() == 2);
    CHECK(top2.ids[0] == 0);
    CHECK(top2.ids[1] == 2);

    auto all = brute_force_topk(d, q, d.size());
    CHECK(all.ids == std::vector<uint32_t>{0, 2, 1});
    CHECK(std::is_sorted(all.distances.begin(), all.distances.end()));
}

TEST_CASE("brute_force_topk matches a full-sort reference") {
    Dataset d = synth_dataset(1000, 8, 123);
    Dataset q = synth_dataset(20, 8, 321);
    for (size_t i = 0; i < q.size(); ++i) {
        auto got = brute_force_topk(d, q.vec(i), 10);
        auto want = full_sort_topk(d, q.vec(i), 10);
        CHECK(got.ids == want);
    }
}

TEST_CASE("parallel ground truth independent of thread count") {
    Dataset d = synth_dataset(500, 8, 7);
    Dataset q = synth_dataset(32, 8, 8);
    auto serial = brute_force_ground_truth(d, q, 5, 1);
    auto parallel = brute_force_ground_truth(d, q, 5, 4);
    REQUIRE(serial.size() == parallel.size());
    for (size_t i = 0; i < serial.size(); ++i)
        CHECK(serial[i].ids == parallel[i].ids);
}

TEST_CASE("synth_dataset determinism and shape") {
    Dataset a = synth_dataset(64, 4, 9);
    Dataset b = synth_dataset(64, 4, 9);
    REQUIRE(a.size() == 64);
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = 0; j < a.dim(); ++j)
            CHECK(a.vec(i)[j] == b.vec(i)[j]);

    Dataset one = synth_dataset(1, 3, 11);
    CHECK(one.size() == 1);
    CHECK(one.dim() == 3);
}

TEST_CASE("uniform synth component mean near 0.5") {
    Dataset d = synth_dataset(12500, 8, 13, SynthDistribution::Uniform);
    double sum = 0.0;
    for (size_t i = 0; i < d.size(); ++i)
        for (size_t j = 0; j < d.dim(); ++j) sum += d.vec(i)[j];
    const double mean = sum / double(d.size() * d.dim());
    CHECK(mean == doctest::Approx(0.5).epsilon(0.04));
    CHECK(std::abs(mean - 0.5) <= 0.02);
}

TEST_CASE("ground truth file round-trip") {
    TempDir tmp;
    Dataset d = synth_dataset(200, 4, 3);
    Dataset q = synth_dataset(10, 4, 4);
    auto gt = brute_force_ground_truth(d, q, 7);
    save_ground_truth(tmp.file("gt.ivecs"), tmp.file("gt.fvecs"), gt);
    auto back = load_ground_truth(tmp.file("gt.ivecs"), tmp.file("gt.fvecs"));
    REQUIRE(back.size() == gt.size());
    for (size_t i = 0; i < gt.size(); ++i) {
        CHECK(back[i].ids == gt[i].ids);
        CHECK(back[i].distances == gt[i].distances);
    }
}

TEST_CASE("fvecs save/load round-trip") {
    TempDir tmp;
    Dataset d = synth_dataset(50, 6, 17);
    save_fvecs(tmp.file("d.fvecs"), d);
    Dataset back = load_dataset(tmp.file("d.fvecs"), VecsFormat::Fvecs);
    REQUIRE(back.size() == d.size());
    for (size_t i = 0; i < d.size(); ++i)
        for (size_t j = 0; j < d.dim(); ++j)
            CHECK(back.vec(i)[j] == d.vec(i)[j]);
}

TEST_CASE("recall_at_k") {
    std::vector<uint32_t> truth{1, 2, 3, 4};
    std::vector<uint32_t> res{2, 9, 4, 7};
    CHECK(recall_at_k(truth, res, 4) == doctest::Approx(0.5));
    CHECK(recall_at_k(truth, truth, 4) == doctest::Approx(1.0));
}

TEST_CASE("missing file is an error") {
    CHECK_THROWS(load_dataset("/nonexistent/path.fvecs", VecsFormat::Fvecs));
}
