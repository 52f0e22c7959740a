#include "omega/prob_table.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace omega {

namespace {
constexpr char kMagic[4] = {'O', 'M', 'G', 'T'};
constexpr uint32_t kVersion = 1;
constexpr double kPinWeight = 1e6;   // forced r <= N cells
constexpr double kFillWeight = 1e-6; // backfilled cells
}  // namespace

double DecayFit::evaluate(size_t r) const {
    return std::clamp(a - b * std::log(double(r)), 0.0, 1.0);
}

DecayFit fit_log_decay(const std::vector<std::pair<size_t, double>>& points) {
    if (points.size() < 2)
        throw std::invalid_argument("fit_log_decay: need at least two points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = double(points.size());
    for (const auto& [r, p] : points) {
        const double x = std::log(double(r));
        sx += x;
        sy += p;
        sxx += x * x;
        sxy += x * p;
    }
    const double denom = n * sxx - sx * sx;
    DecayFit fit;
    if (denom <= 0) {
        fit.b = 0.0;
        fit.a = sy / n;
        return fit;
    }
    const double slope = (n * sxy - sx * sy) / denom;
    fit.b = std::max(0.0, -slope);
    fit.a = (sy + fit.b * sx) / n;
    return fit;
}

ProbTable::ProbTable(size_t n_max, size_t r_max) : n_max_(n_max), r_max_(r_max) {
    if (r_max_ < 1) throw std::invalid_argument("ProbTable: r_max must be >= 1");
    probs_.assign((n_max_ + 1) * r_max_, 0.0);
    counts_.assign((n_max_ + 1) * r_max_, 0);
    row_obs_.assign(n_max_ + 1, 0);
}

void ProbTable::observe(size_t n, const std::vector<uint8_t>& rank_found) {
    if (finalized_) throw std::logic_error("ProbTable: observe after finalize");
    if (rank_found.size() != r_max_)
        throw std::invalid_argument("ProbTable: indicator arity mismatch");
    n = std::min(n, n_max_);
    ++row_obs_[n];
    uint64_t* row = counts_.data() + n * r_max_;
    for (size_t r = 0; r < r_max_; ++r) row[r] += rank_found[r];
}

void ProbTable::merge(const ProbTable& other) {
    if (finalized_ || other.finalized_)
        throw std::logic_error("ProbTable: merge after finalize");
    if (other.n_max_ != n_max_ || other.r_max_ != r_max_)
        throw std::invalid_argument("ProbTable: merge dimension mismatch");
    for (size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    for (size_t i = 0; i < row_obs_.size(); ++i) row_obs_[i] += other.row_obs_[i];
}

double ProbTable::prob(size_t n, size_t r) const {
    if (r < 1 || r > r_max_)
        throw std::out_of_range("ProbTable: rank out of range");
    n = std::min(n, n_max_);
    return probs_[cell(n, r)];
}

double ProbTable::finalize() {
    for (size_t n = 0; n <= n_max_; ++n) {
        const uint64_t obs = row_obs_[n];
        double last = 0.0;
        bool seen = false;
        for (size_t r = 1; r <= r_max_; ++r) {
            auto& p = probs_[cell(n, r)];
            if (r <= n) {
                p = 1.0;
            } else if (obs > 0) {
                p = double(counts_[cell(n, r)]) / double(obs);
                last = p;
                seen = true;
            } else {
                // nearest populated smaller-r cell; empty rows stay at 0 with
                // negligible isotonic weight and get pulled to their neighbors
                p = seen ? last : 0.0;
            }
        }
    }
    // Isotonic (pool-adjacent-violators) pass per column: nondecreasing in N.
    double deviation = 0.0;
    std::vector<double> vals(n_max_ + 1), weights(n_max_ + 1);
    for (size_t r = 1; r <= r_max_; ++r) {
        for (size_t n = 0; n <= n_max_; ++n) {
            vals[n] = probs_[cell(n, r)];
            if (r <= n)
                weights[n] = kPinWeight;
            else if (row_obs_[n] > 0)
                weights[n] = double(row_obs_[n]);
            else
                weights[n] = kFillWeight;
        }
        // PAV over n = 0..n_max
        std::vector<double> v, w;
        std::vector<size_t> len;
        for (size_t n = 0; n <= n_max_; ++n) {
            v.push_back(vals[n]);
            w.push_back(weights[n]);
            len.push_back(1);
            while (v.size() > 1 && v[v.size() - 2] > v.back()) {
                const double merged =
                    (v[v.size() - 2] * w[w.size() - 2] + v.back() * w.back()) /
                    (w[w.size() - 2] + w.back());
                w[w.size() - 2] += w.back();
                len[len.size() - 2] += len.back();
                v[v.size() - 2] = merged;
                v.pop_back();
                w.pop_back();
                len.pop_back();
            }
        }
        size_t n = 0;
        for (size_t blk = 0; blk < v.size(); ++blk) {
            for (size_t i = 0; i < len[blk]; ++i, ++n) {
                const double adj = std::clamp(v[blk], 0.0, 1.0);
                deviation += std::abs(adj - probs_[cell(n, r)]);
                probs_[cell(n, r)] = adj;
            }
        }
    }
    finalized_ = true;
    return deviation;
}

DecayFit ProbTable::fit_decay(size_t n) const {
    auto fit = try_fit_decay(n);
    if (!fit)
        throw std::invalid_argument("fit_decay: fewer than two observed cells");
    return *fit;
}

std::optional<DecayFit> ProbTable::try_fit_decay(size_t n) const {
    n = std::min(n, n_max_);
    if (row_obs_[n] == 0) return std::nullopt;
    std::vector<std::pair<size_t, double>> points;
    for (size_t r = std::max<size_t>(1, n + 1); r <= r_max_; ++r)
        points.emplace_back(r, finalized_
                                   ? probs_[cell(n, r)]
                                   : double(counts_[cell(n, r)]) /
                                         double(row_obs_[n]));
    if (points.size() < 2) return std::nullopt;
    return fit_log_decay(points);
}

ProbTable ProbTable::from_probs(size_t n_max, size_t r_max,
                                const std::vector<double>& probs) {
    ProbTable t(n_max, r_max);
    if (probs.size() != t.probs_.size())
        throw std::invalid_argument("from_probs: size mismatch");
    t.probs_ = probs;
    std::fill(t.row_obs_.begin(), t.row_obs_.end(), 1);
    t.finalized_ = true;
    return t;
}

void ProbTable::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write table file: " + path);
    out.write(kMagic, 4);
    out.write(reinterpret_cast<const char*>(&kVersion), sizeof(kVersion));
    const uint64_t nm = n_max_, rm = r_max_;
    const uint8_t fin = finalized_ ? 1 : 0;
    out.write(reinterpret_cast<const char*>(&nm), sizeof(nm));
    out.write(reinterpret_cast<const char*>(&rm), sizeof(rm));
    out.write(reinterpret_cast<const char*>(&fin), sizeof(fin));
    out.write(reinterpret_cast<const char*>(probs_.data()),
              probs_.size() * sizeof(double));
    out.write(reinterpret_cast<const char*>(counts_.data()),
              counts_.size() * sizeof(uint64_t));
    out.write(reinterpret_cast<const char*>(row_obs_.data()),
              row_obs_.size() * sizeof(uint64_t));
}

ProbTable ProbTable::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open table file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("not a table file: " + path);
    uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (!in || version != kVersion)
        throw std::runtime_error("unsupported table version");
    uint64_t nm = 0, rm = 0;
    uint8_t fin = 0;
    in.read(reinterpret_cast<char*>(&nm), sizeof(nm));
    in.read(reinterpret_cast<char*>(&rm), sizeof(rm));
    in.read(reinterpret_cast<char*>(&fin), sizeof(fin));
    if (!in) throw std::runtime_error("truncated table file: " + path);
    ProbTable t(nm, rm);
    in.read(reinterpret_cast<char*>(t.probs_.data()),
            t.probs_.size() * sizeof(double));
    in.read(reinterpret_cast<char*>(t.counts_.data()),
            t.counts_.size() * sizeof(uint64_t));
    in.read(reinterpret_cast<char*>(t.row_obs_.data()),
            t.row_obs_.size() * sizeof(uint64_t));
    if (!in) throw std::runtime_error("truncated table file: " + path);
    t.finalized_ = fin != 0;
    return t;
}

double DecayFitCache::extrapolate(size_t n, size_t r) const {
    n = std::min(n, table_->n_max());
    if (r <= table_->r_max()) return table_->prob(n, r);
    if (cache_.empty()) cache_.resize(table_->n_max() + 1);
    if (!cache_[n]) cache_[n] = table_->try_fit_decay(n);
    const auto& fit = *cache_[n];
    if (fit) return fit->evaluate(r);
    return table_->prob(n, table_->r_max());
}

void DecayFitCache::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write fits file: " + path);
    const char magic[4] = {'O', 'M', 'G', 'F'};
    out.write(magic, 4);
    std::vector<std::pair<uint32_t, DecayFit>> fits;
    for (size_t n = 0; n <= table_->n_max(); ++n) {
        auto fit = table_->try_fit_decay(n);
        if (fit) fits.emplace_back(static_cast<uint32_t>(n), *fit);
    }
    const uint64_t cnt = fits.size();
    out.write(reinterpret_cast<const char*>(&cnt), sizeof(cnt));
    for (const auto& [n, fit] : fits) {
        out.write(reinterpret_cast<const char*>(&n), sizeof(n));
        out.write(reinterpret_cast<const char*>(&fit.a), sizeof(fit.a));
        out.write(reinterpret_cast<const char*>(&fit.b), sizeof(fit.b));
    }
}

std::vector<std::pair<uint32_t, DecayFit>> DecayFitCache::load_fits(
    const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open fits file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "OMGF", 4) != 0)
        throw std::runtime_error("not a fits file: " + path);
    uint64_t cnt = 0;
    in.read(reinterpret_cast<char*>(&cnt), sizeof(cnt));
    std::vector<std::pair<uint32_t, DecayFit>> fits(cnt);
    for (auto& [n, fit] : fits) {
        in.read(reinterpret_cast<char*>(&n), sizeof(n));
        in.read(reinterpret_cast<char*>(&fit.a), sizeof(fit.a));
        in.read(reinterpret_cast<char*>(&fit.b), sizeof(fit.b));
    }
    if (!in) throw std::runtime_error("truncated fits file: " + path);
    return fits;
}

}  // namespace omega
