#include "omega/search.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace omega {

void OmegaParams::validate() const {
    if (r_t < 0.0 || r_t > 1.0)
        throw std::invalid_argument("OmegaParams: r_t must be in [0,1]");
    if (alpha < 0.0 || alpha > 1.0)
        throw std::invalid_argument("OmegaParams: alpha must be in [0,1]");
    if (w < 1) throw std::invalid_argument("OmegaParams: w must be >= 1");
    if (base_interval < 1)
        throw std::invalid_argument("OmegaParams: base_interval must be >= 1");
}

StopModel make_gbdt_stop_model(const GbdtModel& model) {
    return [&model](const FeatureVector& f, const SearchState&) {
        return model.predict(f);
    };
}

StopModel make_oracle_stop_model(std::vector<uint32_t> gt_ids) {
    return [gt = std::move(gt_ids)](const FeatureVector&, const SearchState& st) {
        uint32_t target = std::numeric_limits<uint32_t>::max();
        for (uint32_t id : gt)
            if (!st.masked.count(id)) {
                target = id;
                break;
            }
        if (target == std::numeric_limits<uint32_t>::max()) return 1.0;
        return best_unmasked(st).second == target ? 1.0 : 0.0;
    };
}

double forecast_recall(const ProbTable& table, const DecayFitCache& fits, size_t n,
                       size_t k, double r_t, double alpha) {
    if (k < 1) throw std::invalid_argument("forecast_recall: K must be >= 1");
    if (n > k) throw std::invalid_argument("forecast_recall: N must be <= K");
    double residual = 0.0;
    for (size_t r = n + 1; r <= k; ++r) {
        residual += r <= table.r_max() ? table.prob(n, r) : fits.extrapolate(n, r);
    }
    return (double(n) * (r_t + alpha * (1.0 - r_t)) + residual) / double(k);
}

uint64_t adaptive_interval(double predicted, double r_t, uint64_t base_interval) {
    if (r_t <= 0.0 || predicted >= r_t) return 1;
    const double frac = (r_t - predicted) / r_t;
    const auto steps =
        static_cast<uint64_t>(std::ceil(double(base_interval) * frac));
    return std::clamp<uint64_t>(steps, 1, base_interval);
}

namespace {

SearchOutcome run_search(const GraphIndex& index, const Dataset& dataset,
                         const StopModel& model, const ProbTable* table,
                         const DecayFitCache* fits, std::span<const float> query,
                         size_t k, const OmegaParams& params) {
    if (k < 1) throw std::invalid_argument("omega search: K must be >= 1");
    params.validate();
    const auto t0 = std::chrono::steady_clock::now();

    SearchState state = index.init_search(dataset, query);
    SearchOutcome out;
    size_t n = 0;
    while (n < k) {
        if (table) {
            const double predicted =
                forecast_recall(*table, *fits, n, k, params.r_t, params.alpha);
            if (predicted >= params.r_t) {
                out.metrics.forecast_stop = 1;
                break;
            }
        }
        mask_top_ranks(state, std::min(n, state.search_set.size()));
        while (!state.exhausted && state.steps_taken < params.step_cap) {
            const double p = model(extract_features(state, params.w), state);
            ++out.metrics.model_invocations;
            if (p >= params.r_t) break;
            const uint64_t interval =
                params.adaptive_frequency
                    ? adaptive_interval(p, params.r_t, params.base_interval)
                    : params.base_interval;
            const uint64_t budget =
                std::min<uint64_t>(interval, params.step_cap - state.steps_taken);
            index.search_multiple_steps(dataset, query, state, budget);
        }
        ++n;
    }

    out.metrics.stop_rank = n;
    state.masked.clear();  // masking is feature-level; the answer is unmasked
    out.ids = current_topk(state, k);
    out.metrics.steps = state.steps_taken;
    out.metrics.cmps = state.cmps;
    out.metrics.wall_time_us =
        std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() -
                                                  t0)
            .count();
    return out;
}

}  // namespace

SearchOutcome basic_search(const GraphIndex& index, const Dataset& dataset,
                           const StopModel& model, std::span<const float> query,
                           size_t k, const OmegaParams& params) {
    return run_search(index, dataset, model, nullptr, nullptr, query, k, params);
}

SearchOutcome optimized_search(const GraphIndex& index, const Dataset& dataset,
                               const StopModel& model, const ProbTable& table,
                               const DecayFitCache& fits,
                               std::span<const float> query, size_t k,
                               const OmegaParams& params) {
    if (params.forecast && !table.finalized())
        throw std::invalid_argument("optimized_search: table not finalized");
    return run_search(index, dataset, model, params.forecast ? &table : nullptr,
                      params.forecast ? &fits : nullptr, query, k, params);
}

}  // namespace omega
