#include "omega/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <stdexcept>

namespace omega {

namespace {
constexpr char kMagic[4] = {'O', 'M', 'G', 'I'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw std::runtime_error("truncated index file");
    return v;
}
}  // namespace

void GraphConfig::validate() const {
    if (m < 2) throw std::invalid_argument("GraphConfig: m must be >= 2");
    if (ef_construction < m)
        throw std::invalid_argument("GraphConfig: ef_construction must be >= m");
}

const std::vector<uint32_t>& GraphIndex::neighbors(uint32_t id, int level) const {
    return adjacency_[level][id];
}

uint32_t GraphIndex::greedy_descend(const Dataset& dataset,
                                    std::span<const float> query,
                                    int to_level) const {
    uint32_t curr = entry_;
    float curr_dist = distance(query, dataset.vec(curr), dataset.metric());
    for (int level = max_level_; level > to_level; --level) {
        bool improved = true;
        while (improved) {
            improved = false;
            for (uint32_t nb : adjacency_[level][curr]) {
                float d = distance(query, dataset.vec(nb), dataset.metric());
                if (d < curr_dist || (d == curr_dist && nb < curr)) {
                    curr_dist = d;
                    curr = nb;
                    improved = true;
                }
            }
        }
    }
    return curr;
}

std::vector<Candidate> GraphIndex::search_layer(const Dataset& dataset,
                                                std::span<const float> query,
                                                uint32_t entry, size_t ef, int level,
                                                uint64_t* cmps) const {
    std::vector<uint8_t> visited(size(), 0);
    std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>> frontier;
    std::priority_queue<Candidate> result;  // max-heap, bounded by ef
    float d0 = distance(query, dataset.vec(entry), dataset.metric());
    if (cmps) ++*cmps;
    frontier.emplace(d0, entry);
    result.emplace(d0, entry);
    visited[entry] = 1;
    while (!frontier.empty()) {
        auto [dist, id] = frontier.top();
        if (result.size() >= ef && dist > result.top().first) break;
        frontier.pop();
        for (uint32_t nb : adjacency_[level][id]) {
            if (visited[nb]) continue;
            visited[nb] = 1;
            float d = distance(query, dataset.vec(nb), dataset.metric());
            if (cmps) ++*cmps;
            if (result.size() < ef || d < result.top().first) {
                frontier.emplace(d, nb);
                result.emplace(d, nb);
                if (result.size() > ef) result.pop();
            }
        }
    }
    std::vector<Candidate> out(result.size());
    for (size_t i = result.size(); i-- > 0;) {
        out[i] = result.top();
        result.pop();
    }
    std::sort(out.begin(), out.end());
    return out;
}

GraphIndex GraphIndex::build(const Dataset& dataset, const GraphConfig& config) {
    config.validate();
    if (dataset.size() == 0) throw std::invalid_argument("build: empty dataset");

    GraphIndex g;
    g.config_ = config;
    const size_t n = dataset.size();
    const double mult =
        config.level_mult > 0 ? config.level_mult : 1.0 / std::log(double(config.m));
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    g.levels_.resize(n);
    for (size_t i = 0; i < n; ++i) {
        double r = u(rng);
        g.levels_[i] = static_cast<int>(-std::log(std::max(r, 1e-12)) * mult);
    }
    g.max_level_ = g.levels_[0];
    g.entry_ = 0;
    g.adjacency_.assign(g.max_level_ + 1, std::vector<std::vector<uint32_t>>(n));

    auto cap_for = [&](int level) -> size_t {
        return level == 0 ? 2 * config.m : config.m;
    };
    auto ensure_level = [&](int level) {
        while (static_cast<int>(g.adjacency_.size()) <= level)
            g.adjacency_.emplace_back(n);
    };

    // Relative-neighborhood pruning: keep a candidate only when it is closer
    // to the base vector than to every neighbor kept so far, then backfill the
    // remaining slots with the nearest pruned candidates. Keeps long-range
    // edges alive on clustered data.
    auto select_neighbors = [&](std::vector<Candidate> cands,
                                size_t cap) -> std::vector<uint32_t> {
        std::sort(cands.begin(), cands.end());
        std::vector<uint32_t> kept;
        std::vector<uint32_t> pruned;
        for (const auto& [d, id] : cands) {
            if (kept.size() >= cap) break;
            bool diverse = true;
            for (uint32_t kb : kept)
                if (distance(dataset.vec(id), dataset.vec(kb), dataset.metric()) <
                    d) {
                    diverse = false;
                    break;
                }
            if (diverse)
                kept.push_back(id);
            else
                pruned.push_back(id);
        }
        for (uint32_t id : pruned) {
            if (kept.size() >= cap) break;
            kept.push_back(id);
        }
        return kept;
    };

    auto shrink = [&](uint32_t id, int level) {
        auto& lst = g.adjacency_[level][id];
        const size_t cap = cap_for(level);
        if (lst.size() <= cap) return;
        std::vector<Candidate> cands;
        cands.reserve(lst.size());
        for (uint32_t nb : lst)
            cands.emplace_back(
                distance(dataset.vec(id), dataset.vec(nb), dataset.metric()), nb);
        lst = select_neighbors(std::move(cands), cap);
    };

    for (uint32_t id = 1; id < n; ++id) {
        const int level = g.levels_[id];
        ensure_level(level);
        uint32_t curr = g.greedy_descend(dataset, dataset.vec(id),
                                         std::min(level, g.max_level_));
        for (int l = std::min(level, g.max_level_); l >= 0; --l) {
            auto cands = g.search_layer(dataset, dataset.vec(id), curr,
                                        config.ef_construction, l);
            if (!cands.empty()) curr = cands.front().second;
            for (uint32_t nb : select_neighbors(cands, config.m)) {
                g.adjacency_[l][id].push_back(nb);
                g.adjacency_[l][nb].push_back(id);
                shrink(nb, l);
            }
        }
        if (level > g.max_level_) {
            g.max_level_ = level;
            g.entry_ = id;
        }
    }
    return g;
}

SearchState GraphIndex::init_search(const Dataset& dataset,
                                    std::span<const float> query) const {
    if (query.size() != dataset.dim())
        throw std::invalid_argument("init_search: query dimension mismatch");
    SearchState st;
    st.visited.assign(size(), 0);
    uint32_t start = greedy_descend(dataset, query, 0);
    float d0 = distance(query, dataset.vec(start), dataset.metric());
    st.dist_start = d0;
    st.trajectory.push_back(d0);
    st.cmps = 1;
    st.visited[start] = 1;
    st.frontier.emplace(d0, start);
    st.search_set.emplace(d0, start);
    return st;
}

void GraphIndex::search_one_step(const Dataset& dataset, std::span<const float> query,
                                 SearchState& state) const {
    if (state.exhausted) return;
    if (state.frontier.empty()) {
        state.exhausted = true;
        return;
    }
    auto [dist, id] = state.frontier.top();
    state.frontier.pop();
    for (uint32_t nb : adjacency_[0][id]) {
        if (state.visited[nb]) continue;
        state.visited[nb] = 1;
        float d = distance(query, dataset.vec(nb), dataset.metric());
        state.trajectory.push_back(d);
        ++state.cmps;
        state.frontier.emplace(d, nb);
        state.search_set.emplace(d, nb);
    }
    ++state.steps_taken;
    ++state.hops;
    if (state.frontier.empty()) state.exhausted = true;
}

void GraphIndex::search_multiple_steps(const Dataset& dataset,
                                       std::span<const float> query,
                                       SearchState& state, uint64_t steps) const {
    for (uint64_t i = 0; i < steps && !state.exhausted; ++i)
        search_one_step(dataset, query, state);
}

std::vector<uint32_t> GraphIndex::fixed_search(const Dataset& dataset,
                                               std::span<const float> query, size_t k,
                                               size_t ef, uint64_t* cmps_out) const {
    if (ef < k) throw std::invalid_argument("fixed_search: ef must be >= K");
    if (query.size() != dataset.dim())
        throw std::invalid_argument("fixed_search: query dimension mismatch");
    uint64_t cmps = 0;
    uint32_t start = greedy_descend(dataset, query, 0);
    auto cands = search_layer(dataset, query, start, ef, 0, &cmps);
    std::vector<uint32_t> out;
    out.reserve(std::min(k, cands.size()));
    for (size_t i = 0; i < std::min(k, cands.size()); ++i)
        out.push_back(cands[i].second);
    if (cmps_out) *cmps_out = cmps;
    return out;
}

std::vector<uint32_t> current_topk(const SearchState& state, size_t k,
                                   const std::unordered_set<uint32_t>& masked) {
    std::vector<uint32_t> out;
    for (const auto& [dist, id] : state.search_set) {
        if (masked.count(id)) continue;
        out.push_back(id);
        if (out.size() == k) break;
    }
    return out;
}

Candidate best_unmasked(const SearchState& state) {
    for (const auto& cand : state.search_set)
        if (!state.masked.count(cand.second)) return cand;
    return {state.dist_start, std::numeric_limits<uint32_t>::max()};
}

void GraphIndex::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write index file: " + path);
    out.write(kMagic, 4);
    write_pod(out, kVersion);
    write_pod(out, config_.m);
    write_pod(out, config_.ef_construction);
    write_pod(out, config_.seed);
    write_pod(out, config_.level_mult);
    write_pod(out, entry_);
    write_pod(out, static_cast<int32_t>(max_level_));
    write_pod(out, static_cast<uint64_t>(levels_.size()));
    for (int l : levels_) write_pod(out, static_cast<int32_t>(l));
    write_pod(out, static_cast<uint32_t>(adjacency_.size()));
    for (const auto& layer : adjacency_) {
        for (const auto& lst : layer) {
            write_pod(out, static_cast<uint32_t>(lst.size()));
            out.write(reinterpret_cast<const char*>(lst.data()),
                      lst.size() * sizeof(uint32_t));
        }
    }
}

GraphIndex GraphIndex::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open index file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("not an index file: " + path);
    if (read_pod<uint32_t>(in) != kVersion)
        throw std::runtime_error("unsupported index version");
    GraphIndex g;
    g.config_.m = read_pod<uint32_t>(in);
    g.config_.ef_construction = read_pod<uint32_t>(in);
    g.config_.seed = read_pod<uint64_t>(in);
    g.config_.level_mult = read_pod<double>(in);
    g.entry_ = read_pod<uint32_t>(in);
    g.max_level_ = read_pod<int32_t>(in);
    const uint64_t n = read_pod<uint64_t>(in);
    g.levels_.resize(n);
    for (auto& l : g.levels_) l = read_pod<int32_t>(in);
    const uint32_t nlayers = read_pod<uint32_t>(in);
    g.adjacency_.assign(nlayers, std::vector<std::vector<uint32_t>>(n));
    for (auto& layer : g.adjacency_) {
        for (auto& lst : layer) {
            const uint32_t len = read_pod<uint32_t>(in);
            lst.resize(len);
            in.read(reinterpret_cast<char*>(lst.data()), len * sizeof(uint32_t));
            if (!in) throw std::runtime_error("truncated index file");
        }
    }
    return g;
}

}  // namespace omega
