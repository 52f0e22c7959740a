#pragma once

#include <array>
#include <cstddef>
#include <string_view>

#include "omega/graph.hpp"

namespace omega {

// Frozen model input contract: 11 features, in this order. Model files depend
// on both the arity and the order.
constexpr size_t kFeatureArity = 11;

constexpr std::array<std::string_view, kFeatureArity> kFeatureNames = {
    "window_mean", "window_variance", "window_min",  "window_max",
    "window_median", "window_p25",    "window_p75",  "curr_hops",
    "curr_cmps",   "dist_1st",        "dist_start"};

using FeatureVector = std::array<double, kFeatureArity>;

struct WindowConfig {
    size_t w = 100;
};

// Statistics over the last min(w, len) trajectory entries plus the progress
// scalars. Percentiles use linear interpolation at index q*(n-1); variance is
// population variance. dist_1st excludes masked ids and falls back to
// dist_start when everything in the search_set is masked.
FeatureVector extract_features(const SearchState& state, size_t w);

// Marks the top `n` search_set entries (by distance, ties by lower id) as
// masked. Masked ids stay in the window statistics; only dist_1st is refreshed.
void mask_top_ranks(SearchState& state, size_t n);

// Masks a single id; it must be present in the search_set.
void mask_id(SearchState& state, uint32_t id);

}  // namespace omega
