#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace omega {

// Parameters of p(r) = clamp(a - b*ln r, 0, 1), with b >= 0.
struct DecayFit {
    double a = 0.0;
    double b = 0.0;

    double evaluate(size_t r) const;
};

// 2D conditional-probability table P[N][r] = Pr[rank-r ground truth in the
// search_set | top-N prefix found], N in 0..n_max, r in 1..r_max.
class ProbTable {
   public:
    ProbTable() = default;
    ProbTable(size_t n_max, size_t r_max);

    size_t n_max() const { return n_max_; }
    size_t r_max() const { return r_max_; }
    bool finalized() const { return finalized_; }

    // Profiling accumulators; N is clamped to n_max by callers.
    void observe(size_t n, const std::vector<uint8_t>& rank_found);
    void merge(const ProbTable& other);  // sums accumulators, pre-finalize only
    uint64_t row_observations(size_t n) const { return row_obs_[n]; }
    uint64_t cell_count(size_t n, size_t r) const { return counts_[cell(n, r)]; }

    double prob(size_t n, size_t r) const;  // r in 1..r_max, n clamped to n_max

    // Empirical means, backfill of unobserved cells from the nearest populated
    // smaller-r cell, forced P[N][r] = 1 for r <= N, then a pool-adjacent-
    // violators pass per column so P is nondecreasing in N. Returns the total
    // absolute pre-adjustment deviation introduced by the isotonic pass.
    double finalize();

    // Least-squares fit of P[N][r] ~ a - b*ln r over observed cells with r > N.
    // Throws when fewer than two such cells exist.
    DecayFit fit_decay(size_t n) const;
    std::optional<DecayFit> try_fit_decay(size_t n) const;

    void save(const std::string& path) const;
    static ProbTable load(const std::string& path);

    // Test hook: a finalized table with explicit probabilities.
    static ProbTable from_probs(size_t n_max, size_t r_max,
                                const std::vector<double>& probs);

   private:
    size_t cell(size_t n, size_t r) const { return n * r_max_ + (r - 1); }

    size_t n_max_ = 0;
    size_t r_max_ = 0;
    std::vector<double> probs_;     // (n_max+1) x r_max, row-major
    std::vector<uint64_t> counts_;  // per-cell hit counts
    std::vector<uint64_t> row_obs_; // per-row observation totals
    bool finalized_ = false;
};

// Closed-form least squares of p = a - b*ln r over (r, p) points; b clamped
// to >= 0.
DecayFit fit_log_decay(const std::vector<std::pair<size_t, double>>& points);

// Cached per-row decay fits for r > r_max extrapolation.
class DecayFitCache {
   public:
    explicit DecayFitCache(const ProbTable& table) : table_(&table) {}

    // Extrapolated probability for r > r_max; falls back to the row's last
    // column when the row has too few observed points to fit.
    double extrapolate(size_t n, size_t r) const;

    void save(const std::string& path) const;
    static std::vector<std::pair<uint32_t, DecayFit>> load_fits(
        const std::string& path);

   private:
    const ProbTable* table_;
    mutable std::vector<std::optional<std::optional<DecayFit>>> cache_;
};

}  // namespace omega
