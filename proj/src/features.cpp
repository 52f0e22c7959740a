#include "omega/features.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace omega {

namespace {

double percentile(const std::vector<double>& sorted, double q) {
    const size_t n = sorted.size();
    if (n == 1) return sorted[0];
    double idx = q * static_cast<double>(n - 1);
    size_t lo = static_cast<size_t>(idx);
    size_t hi = std::min(lo + 1, n - 1);
    double frac = idx - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

FeatureVector extract_features(const SearchState& state, size_t w) {
    if (state.trajectory.empty())
        throw std::invalid_argument("extract_features: empty trajectory");
    if (w < 1) throw std::invalid_argument("extract_features: w must be >= 1");

    const size_t len = state.trajectory.size();
    const size_t count = std::min(w, len);
    std::vector<double> window(state.trajectory.end() - count,
                               state.trajectory.end());

    double mean = 0.0;
    for (double v : window) mean += v;
    mean /= static_cast<double>(count);
    double var = 0.0;
    for (double v : window) var += (v - mean) * (v - mean);
    var /= static_cast<double>(count);

    std::sort(window.begin(), window.end());

    FeatureVector f;
    f[0] = mean;
    f[1] = var;
    f[2] = window.front();
    f[3] = window.back();
    f[4] = percentile(window, 0.50);
    f[5] = percentile(window, 0.25);
    f[6] = percentile(window, 0.75);
    f[7] = static_cast<double>(state.hops);
    f[8] = static_cast<double>(state.cmps);
    f[9] = best_unmasked(state).first;
    f[10] = state.dist_start;
    return f;
}

void mask_top_ranks(SearchState& state, size_t n) {
    if (n > state.search_set.size())
        throw std::invalid_argument("mask_top_ranks: fewer entries than ranks");
    size_t taken = 0;
    for (const auto& [dist, id] : state.search_set) {
        if (taken == n) break;
        state.masked.insert(id);
        ++taken;
    }
}

void mask_id(SearchState& state, uint32_t id) {
    bool present = false;
    for (const auto& [d, sid] : state.search_set)
        if (sid == id) {
            present = true;
            break;
        }
    if (!present)
        throw std::invalid_argument("mask_id: id not in search_set");
    state.masked.insert(id);
}

}  // namespace omega
