#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace omega {

enum class Metric { SquaredEuclidean, InnerProduct, Cosine };

enum class ElementKind { Float32, Uint8 };

enum class VecsFormat { Fvecs, Bvecs, Ivecs, RawF32 };

// Immutable after load/generation; safe for concurrent readers.
class Dataset {
   public:
    Dataset() = default;
    Dataset(std::vector<float> data, size_t dim, Metric metric,
            ElementKind kind = ElementKind::Float32);

    size_t size() const { return dim_ == 0 ? 0 : data_.size() / dim_; }
    size_t dim() const { return dim_; }
    Metric metric() const { return metric_; }
    ElementKind element_kind() const { return kind_; }

    std::span<const float> vec(size_t id) const {
        return {data_.data() + id * dim_, dim_};
    }

    void set_metric(Metric m) { metric_ = m; }

   private:
    std::vector<float> data_;
    size_t dim_ = 0;
    Metric metric_ = Metric::SquaredEuclidean;
    ElementKind kind_ = ElementKind::Float32;
};

// All metrics are minimized surrogates: inner product and cosine are negated.
float distance(std::span<const float> a, std::span<const float> b, Metric metric);

struct GroundTruthRow {
    std::vector<uint32_t> ids;     // distances nondecreasing, ids distinct
    std::vector<float> distances;
};

using GroundTruth = std::vector<GroundTruthRow>;

// Exact top-K by metric, ties broken by lower id.
GroundTruthRow brute_force_topk(const Dataset& dataset, std::span<const float> query,
                                size_t k);

// Parallelizes over queries; results independent of thread count.
GroundTruth brute_force_ground_truth(const Dataset& dataset, const Dataset& queries,
                                     size_t k, unsigned threads = 0);

Dataset load_dataset(const std::string& path, VecsFormat format,
                     Metric metric = Metric::SquaredEuclidean, size_t raw_dim = 0);

void save_fvecs(const std::string& path, const Dataset& dataset);

// GroundTruth persisted as an ivecs (ids) + fvecs (distances) pair.
void save_ground_truth(const std::string& ids_path, const std::string& dists_path,
                       const GroundTruth& gt);
GroundTruth load_ground_truth(const std::string& ids_path,
                              const std::string& dists_path);

enum class SynthDistribution { Uniform, GaussianClusters };

// Deterministic for a fixed seed. GaussianClusters places n points around
// ceil(sqrt(n)) centers.
Dataset synth_dataset(size_t n, size_t d, uint64_t seed,
                      SynthDistribution dist = SynthDistribution::Uniform,
                      Metric metric = Metric::SquaredEuclidean);

// |G ∩ R| / K with K = |expected top-K|.
double recall_at_k(std::span<const uint32_t> truth, std::span<const uint32_t> result,
                   size_t k);

}  // namespace omega
