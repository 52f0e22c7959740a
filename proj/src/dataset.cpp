#include "omega/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

namespace omega {

Dataset::Dataset(std::vector<float> data, size_t dim, Metric metric, ElementKind kind)
    : data_(std::move(data)), dim_(dim), metric_(metric), kind_(kind) {
    if (dim_ == 0) throw std::invalid_argument("dataset dimension must be >= 1");
    if (data_.empty() || data_.size() % dim_ != 0)
        throw std::invalid_argument("dataset size not a multiple of dimension");
}

float distance(std::span<const float> a, std::span<const float> b, Metric metric) {
    if (a.size() != b.size())
        throw std::invalid_argument("distance: dimension mismatch");
    switch (metric) {
        case Metric::SquaredEuclidean: {
            float acc = 0.f;
            for (size_t i = 0; i < a.size(); ++i) {
                float d = a[i] - b[i];
                acc += d * d;
            }
            return acc;
        }
        case Metric::InnerProduct: {
            float acc = 0.f;
            for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
            return -acc;
        }
        case Metric::Cosine: {
            float dot = 0.f, na = 0.f, nb = 0.f;
            for (size_t i = 0; i < a.size(); ++i) {
                dot += a[i] * b[i];
                na += a[i] * a[i];
                nb += b[i] * b[i];
            }
            if (na == 0.f || nb == 0.f)
                throw std::invalid_argument("cosine distance on zero-norm vector");
            return -dot / (std::sqrt(na) * std::sqrt(nb));
        }
    }
    throw std::invalid_argument("unknown metric");
}

GroundTruthRow brute_force_topk(const Dataset& dataset, std::span<const float> query,
                                size_t k) {
    const size_t n = dataset.size();
    if (k == 0 || k > n)
        throw std::invalid_argument("brute_force_topk: K must be in [1, N]");
    std::vector<std::pair<float, uint32_t>> all(n);
    for (size_t i = 0; i < n; ++i)
        all[i] = {distance(query, dataset.vec(i), dataset.metric()),
                  static_cast<uint32_t>(i)};
    std::partial_sort(all.begin(), all.begin() + k, all.end());
    GroundTruthRow row;
    row.ids.reserve(k);
    row.distances.reserve(k);
    for (size_t i = 0; i < k; ++i) {
        row.distances.push_back(all[i].first);
        row.ids.push_back(all[i].second);
    }
    return row;
}

GroundTruth brute_force_ground_truth(const Dataset& dataset, const Dataset& queries,
                                     size_t k, unsigned threads) {
    if (queries.dim() != dataset.dim())
        throw std::invalid_argument("ground truth: query dimension mismatch");
    const size_t nq = queries.size();
    GroundTruth gt(nq);
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(nq));
    if (threads <= 1) {
        for (size_t q = 0; q < nq; ++q)
            gt[q] = brute_force_topk(dataset, queries.vec(q), k);
        return gt;
    }
    std::vector<std::thread> pool;
    std::atomic<size_t> next{0};
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (size_t q = next.fetch_add(1); q < nq; q = next.fetch_add(1))
                gt[q] = brute_force_topk(dataset, queries.vec(q), k);
        });
    }
    for (auto& th : pool) th.join();
    return gt;
}

namespace {

template <typename T>
std::vector<float> read_vecs(const std::string& path, size_t& dim_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::vector<float> out;
    size_t dim = 0;
    while (true) {
        int32_t d = 0;
        in.read(reinterpret_cast<char*>(&d), sizeof(d));
        if (in.gcount() == 0) break;  // clean EOF between records
        if (in.gcount() != sizeof(d) || d <= 0)
            throw std::runtime_error("malformed record header in " + path);
        if (dim == 0)
            dim = static_cast<size_t>(d);
        else if (dim != static_cast<size_t>(d))
            throw std::runtime_error("dimension mismatch between records in " + path);
        std::vector<T> buf(dim);
        in.read(reinterpret_cast<char*>(buf.data()), dim * sizeof(T));
        if (static_cast<size_t>(in.gcount()) != dim * sizeof(T))
            throw std::runtime_error("truncated record in " + path);
        for (T v : buf) out.push_back(static_cast<float>(v));
    }
    if (dim == 0) throw std::runtime_error("empty vecs file: " + path);
    dim_out = dim;
    return out;
}

}  // namespace

Dataset load_dataset(const std::string& path, VecsFormat format, Metric metric,
                     size_t raw_dim) {
    size_t dim = 0;
    std::vector<float> data;
    ElementKind kind = ElementKind::Float32;
    switch (format) {
        case VecsFormat::Fvecs:
            data = read_vecs<float>(path, dim);
            break;
        case VecsFormat::Ivecs:
            data = read_vecs<int32_t>(path, dim);
            break;
        case VecsFormat::Bvecs:
            data = read_vecs<uint8_t>(path, dim);
            kind = ElementKind::Uint8;
            break;
        case VecsFormat::RawF32: {
            if (raw_dim == 0)
                throw std::invalid_argument("raw-f32 format requires a dimension");
            std::ifstream in(path, std::ios::binary);
            if (!in) throw std::runtime_error("cannot open file: " + path);
            in.seekg(0, std::ios::end);
            size_t bytes = static_cast<size_t>(in.tellg());
            in.seekg(0);
            if (bytes == 0 || bytes % (raw_dim * sizeof(float)) != 0)
                throw std::runtime_error("raw-f32 file size not a multiple of record");
            data.resize(bytes / sizeof(float));
            in.read(reinterpret_cast<char*>(data.data()), bytes);
            dim = raw_dim;
            break;
        }
        default:
            throw std::invalid_argument("unknown dataset format");
    }
    return Dataset(std::move(data), dim, metric, kind);
}

void save_fvecs(const std::string& path, const Dataset& dataset) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    const int32_t d = static_cast<int32_t>(dataset.dim());
    for (size_t i = 0; i < dataset.size(); ++i) {
        out.write(reinterpret_cast<const char*>(&d), sizeof(d));
        auto v = dataset.vec(i);
        out.write(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(float));
    }
}

void save_ground_truth(const std::string& ids_path, const std::string& dists_path,
                       const GroundTruth& gt) {
    std::ofstream ids(ids_path, std::ios::binary);
    std::ofstream dst(dists_path, std::ios::binary);
    if (!ids || !dst) throw std::runtime_error("cannot write ground truth files");
    for (const auto& row : gt) {
        const int32_t d = static_cast<int32_t>(row.ids.size());
        ids.write(reinterpret_cast<const char*>(&d), sizeof(d));
        for (uint32_t id : row.ids) {
            int32_t v = static_cast<int32_t>(id);
            ids.write(reinterpret_cast<const char*>(&v), sizeof(v));
        }
        dst.write(reinterpret_cast<const char*>(&d), sizeof(d));
        dst.write(reinterpret_cast<const char*>(row.distances.data()),
                  row.distances.size() * sizeof(float));
    }
}

GroundTruth load_ground_truth(const std::string& ids_path,
                              const std::string& dists_path) {
    Dataset ids = load_dataset(ids_path, VecsFormat::Ivecs);
    Dataset dists = load_dataset(dists_path, VecsFormat::Fvecs);
    if (ids.size() != dists.size() || ids.dim() != dists.dim())
        throw std::runtime_error("ground truth id/distance files disagree");
    GroundTruth gt(ids.size());
    for (size_t q = 0; q < ids.size(); ++q) {
        auto iv = ids.vec(q);
        auto dv = dists.vec(q);
        gt[q].ids.assign(iv.size(), 0);
        for (size_t i = 0; i < iv.size(); ++i)
            gt[q].ids[i] = static_cast<uint32_t>(iv[i]);
        gt[q].distances.assign(dv.begin(), dv.end());
    }
    return gt;
}

Dataset synth_dataset(size_t n, size_t d, uint64_t seed, SynthDistribution dist,
                      Metric metric) {
    if (n < 1 || d < 1)
        throw std::invalid_argument("synth_dataset: n and d must be >= 1");
    std::mt19937_64 rng(seed);
    std::vector<float> data;
    data.reserve(n * d);
    if (dist == SynthDistribution::Uniform) {
        std::uniform_real_distribution<float> u(0.f, 1.f);
        for (size_t i = 0; i < n * d; ++i) data.push_back(u(rng));
    } else {
        const size_t nc = static_cast<size_t>(std::ceil(std::sqrt(double(n))));
        std::uniform_real_distribution<float> u(0.f, 10.f);
        std::vector<float> centers(nc * d);
        for (auto& c : centers) c = u(rng);
        std::normal_distribution<float> g(0.f, 0.3f);
        std::uniform_int_distribution<size_t> pick(0, nc - 1);
        for (size_t i = 0; i < n; ++i) {
            size_t c = pick(rng);
            for (size_t j = 0; j < d; ++j)
                data.push_back(centers[c * d + j] + g(rng));
        }
    }
    return Dataset(std::move(data), d, metric);
}

double recall_at_k(std::span<const uint32_t> truth, std::span<const uint32_t> result,
                   size_t k) {
    if (k == 0) throw std::invalid_argument("recall_at_k: K must be >= 1");
    size_t hits = 0;
    for (size_t i = 0; i < std::min(k, truth.size()); ++i) {
        uint32_t t = truth[i];
        for (size_t j = 0; j < std::min(k, result.size()); ++j)
            if (result[j] == t) {
                ++hits;
                break;
            }
    }
    return static_cast<double>(hits) / static_cast<double>(k);
}

}  // namespace omega
