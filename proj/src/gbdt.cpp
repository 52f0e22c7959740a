#include "omega/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <deque>
#include <fstream>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <stdexcept>

namespace omega {

namespace {

constexpr char kMagic[4] = {'O', 'M', 'G', 'M'};
constexpr uint32_t kVersion = 1;
constexpr double kLambda = 1e-3;  // leaf-value regularizer

double clamp_prob(double p) { return std::clamp(p, 1e-7, 1.0 - 1e-7); }

double logloss(const std::vector<double>& scores, const std::vector<int>& labels) {
    double acc = 0.0;
    for (size_t i = 0; i < scores.size(); ++i) {
        double p = clamp_prob(sigmoid(scores[i]));
        acc += labels[i] ? -std::log(p) : -std::log(1.0 - p);
    }
    return acc / static_cast<double>(scores.size());
}

// Per-feature bin edges: bin(x) = #(edges < x), splits land on edge values.
struct Binner {
    std::vector<std::vector<double>> edges;  // size kFeatureArity

    void fit(const std::vector<TrainingRecord>& records,
             const std::vector<uint32_t>& idx, uint32_t max_bins) {
        edges.assign(kFeatureArity, {});
        std::vector<double> vals(idx.size());
        for (size_t f = 0; f < kFeatureArity; ++f) {
            for (size_t i = 0; i < idx.size(); ++i)
                vals[i] = records[idx[i]].features[f];
            std::sort(vals.begin(), vals.end());
            vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
            auto& e = edges[f];
            if (vals.size() <= max_bins) {
                for (size_t i = 0; i + 1 < vals.size(); ++i)
                    e.push_back(0.5 * (vals[i] + vals[i + 1]));
            } else {
                for (uint32_t b = 1; b < max_bins; ++b) {
                    size_t pos = b * vals.size() / max_bins;
                    e.push_back(vals[pos]);
                }
                e.erase(std::unique(e.begin(), e.end()), e.end());
            }
        }
    }

    uint16_t code(size_t f, double x) const {
        const auto& e = edges[f];
        return static_cast<uint16_t>(
            std::upper_bound(e.begin(), e.end(), x,
                             [](double v, double edge) { return v < edge; }) -
            e.begin());
    }

    size_t bins(size_t f) const { return edges[f].size() + 1; }
};

struct SplitInfo {
    double gain = 0.0;
    int feature = -1;
    uint16_t bin = 0;       // left: code <= bin
    double threshold = 0.0;
    double gl = 0, hl = 0, gr = 0, hr = 0;
    size_t nl = 0, nr = 0;
};

struct BuildNode {
    size_t begin = 0, end = 0;
    double g = 0, h = 0;
    int32_t tree_node = -1;
    SplitInfo split;
};

class TreeBuilder {
   public:
    TreeBuilder(const std::vector<TrainingRecord>& records, const Binner& binner,
                const std::vector<std::vector<uint16_t>>& codes,
                const TrainConfig& cfg)
        : records_(records), binner_(binner), codes_(codes), cfg_(cfg) {}

    RegressionTree build(std::vector<uint32_t>& idx, const std::vector<double>& grad,
                         const std::vector<double>& hess) {
        grad_ = &grad;
        hess_ = &hess;
        idx_ = &idx;
        RegressionTree tree;
        BuildNode root;
        root.begin = 0;
        root.end = idx.size();
        for (uint32_t i : idx) {
            root.g += grad[i];
            root.h += hess[i];
        }
        root.tree_node = 0;
        tree.nodes.push_back(leaf_node(root));
        root.split = best_split(root);

        auto cmp = [](const BuildNode& a, const BuildNode& b) {
            return a.split.gain < b.split.gain;
        };
        std::priority_queue<BuildNode, std::vector<BuildNode>, decltype(cmp)> best(cmp);
        std::deque<BuildNode> fifo;
        if (cfg_.leaf_wise)
            best.push(root);
        else
            fifo.push_back(root);

        size_t leaves = 1;
        while (leaves < cfg_.max_leaves) {
            BuildNode node;
            if (cfg_.leaf_wise) {
                if (best.empty()) break;
                node = best.top();
                best.pop();
            } else {
                if (fifo.empty()) break;
                node = fifo.front();
                fifo.pop_front();
            }
            if (node.split.feature < 0 || node.split.gain <= 0.0) continue;

            size_t mid = partition(node);
            BuildNode left{node.begin, mid, node.split.gl, node.split.hl, -1, {}};
            BuildNode right{mid, node.end, node.split.gr, node.split.hr, -1, {}};
            left.tree_node = static_cast<int32_t>(tree.nodes.size());
            tree.nodes.push_back(leaf_node(left));
            right.tree_node = static_cast<int32_t>(tree.nodes.size());
            tree.nodes.push_back(leaf_node(right));

            auto& parent = tree.nodes[node.tree_node];
            parent.feature = node.split.feature;
            parent.threshold = node.split.threshold;
            parent.left = left.tree_node;
            parent.right = right.tree_node;
            parent.value = 0.0;
            ++leaves;

            left.split = best_split(left);
            right.split = best_split(right);
            if (cfg_.leaf_wise) {
                best.push(left);
                best.push(right);
            } else {
                fifo.push_back(left);
                fifo.push_back(right);
            }
        }
        return tree;
    }

   private:
    TreeNode leaf_node(const BuildNode& n) const {
        TreeNode t;
        t.value = -n.g / (n.h + kLambda);
        return t;
    }

    SplitInfo best_split(const BuildNode& node) const {
        SplitInfo out;
        const size_t n = node.end - node.begin;
        if (n < 2 * cfg_.min_samples_per_leaf) return out;
        const double parent_score = node.g * node.g / (node.h + kLambda);
        std::vector<double> hg, hh;
        std::vector<size_t> hc;
        for (size_t f = 0; f < kFeatureArity; ++f) {
            const size_t nb = binner_.bins(f);
            if (nb < 2) continue;
            hg.assign(nb, 0.0);
            hh.assign(nb, 0.0);
            hc.assign(nb, 0);
            for (size_t i = node.begin; i < node.end; ++i) {
                uint32_t s = (*idx_)[i];
                uint16_t c = codes_[f][s];
                hg[c] += (*grad_)[s];
                hh[c] += (*hess_)[s];
                hc[c] += 1;
            }
            double gl = 0, hl = 0;
            size_t nl = 0;
            for (size_t b = 0; b + 1 < nb; ++b) {
                gl += hg[b];
                hl += hh[b];
                nl += hc[b];
                const size_t nr = n - nl;
                if (nl < cfg_.min_samples_per_leaf || nr < cfg_.min_samples_per_leaf)
                    continue;
                const double gr = node.g - gl;
                const double hr = node.h - hl;
                const double gain = gl * gl / (hl + kLambda) +
                                    gr * gr / (hr + kLambda) - parent_score;
                if (gain > out.gain) {
                    out.gain = gain;
                    out.feature = static_cast<int>(f);
                    out.bin = static_cast<uint16_t>(b);
                    out.threshold = binner_.edges[f][b];
                    out.gl = gl;
                    out.hl = hl;
                    out.gr = gr;
                    out.hr = hr;
                    out.nl = nl;
                    out.nr = nr;
                }
            }
        }
        return out;
    }

    size_t partition(const BuildNode& node) {
        auto& idx = *idx_;
        const auto& fc = codes_[node.split.feature];
        auto mid = std::stable_partition(
            idx.begin() + node.begin, idx.begin() + node.end,
            [&](uint32_t s) { return fc[s] <= node.split.bin; });
        return static_cast<size_t>(mid - idx.begin());
    }

    const std::vector<TrainingRecord>& records_;
    const Binner& binner_;
    const std::vector<std::vector<uint16_t>>& codes_;
    const TrainConfig& cfg_;
    const std::vector<double>* grad_ = nullptr;
    const std::vector<double>* hess_ = nullptr;
    std::vector<uint32_t>* idx_ = nullptr;
};

}  // namespace

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void TrainConfig::validate() const {
    if (validation_fraction <= 0.0 || validation_fraction >= 1.0)
        throw std::invalid_argument("TrainConfig: validation_fraction in (0,1)");
    if (learning_rate <= 0.0 || learning_rate > 1.0)
        throw std::invalid_argument("TrainConfig: learning_rate in (0,1]");
    if (max_leaves < 2) throw std::invalid_argument("TrainConfig: max_leaves >= 2");
    if (max_bins < 2) throw std::invalid_argument("TrainConfig: max_bins >= 2");
}

double RegressionTree::evaluate(const FeatureVector& x) const {
    int32_t node = 0;
    while (nodes[node].feature >= 0) {
        const TreeNode& n = nodes[node];
        node = x[n.feature] <= n.threshold ? n.left : n.right;
    }
    return nodes[node].value;
}

GbdtModel GbdtModel::train(const std::vector<TrainingRecord>& records,
                           const TrainConfig& config, TrainReport* report) {
    config.validate();
    if (records.empty()) throw std::invalid_argument("train: empty record set");

    GbdtModel model;
    model.learning_rate_ = config.learning_rate;

    std::vector<uint32_t> perm(records.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(config.seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    size_t n_val = static_cast<size_t>(
        std::floor(config.validation_fraction * double(records.size())));
    if (records.size() - n_val < 1) n_val = records.size() - 1;
    std::vector<uint32_t> val_idx(perm.begin(), perm.begin() + n_val);
    std::vector<uint32_t> train_idx(perm.begin() + n_val, perm.end());
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(val_idx.begin(), val_idx.end());

    size_t pos = 0;
    for (uint32_t i : train_idx) pos += records[i].label ? 1 : 0;
    const double p0 = clamp_prob(double(pos) / double(train_idx.size()));
    model.base_score_ = std::log(p0 / (1.0 - p0));

    // Class-degenerate training sets produce a constant model.
    if (pos == 0 || pos == train_idx.size()) {
        if (report) {
            report->stopping_round = 0;
            report->train_logloss = pos == 0 ? -std::log(1.0 - p0) : -std::log(p0);
        }
        return model;
    }

    Binner binner;
    binner.fit(records, train_idx, config.max_bins);
    std::vector<std::vector<uint16_t>> codes(kFeatureArity);
    for (size_t f = 0; f < kFeatureArity; ++f) {
        codes[f].resize(records.size());
        for (size_t i = 0; i < records.size(); ++i)
            codes[f][i] = binner.code(f, records[i].features[f]);
    }

    std::vector<double> scores(records.size(), model.base_score_);
    std::vector<int> train_labels(train_idx.size()), val_labels(val_idx.size());
    std::vector<double> train_scores(train_idx.size()),
        val_scores(val_idx.size(), model.base_score_);
    for (size_t i = 0; i < train_idx.size(); ++i)
        train_labels[i] = records[train_idx[i]].label;
    for (size_t i = 0; i < val_idx.size(); ++i)
        val_labels[i] = records[val_idx[i]].label;

    std::vector<double> grad(records.size(), 0.0), hess(records.size(), 0.0);
    TreeBuilder builder(records, binner, codes, config);

    const bool have_val = !val_idx.empty();
    double best_loss = std::numeric_limits<double>::infinity();
    uint32_t best_round = 0, since_best = 0;
    TrainReport rep;

    for (uint32_t round = 0; round < config.max_rounds; ++round) {
        for (uint32_t i : train_idx) {
            double p = sigmoid(scores[i]);
            grad[i] = p - double(records[i].label);
            hess[i] = std::max(p * (1.0 - p), 1e-12);
        }
        std::vector<uint32_t> idx = train_idx;
        RegressionTree tree = builder.build(idx, grad, hess);
        for (size_t i = 0; i < records.size(); ++i)
            scores[i] += config.learning_rate * tree.evaluate(records[i].features);
        model.trees_.push_back(std::move(tree));

        for (size_t i = 0; i < train_idx.size(); ++i)
            train_scores[i] = scores[train_idx[i]];
        for (size_t i = 0; i < val_idx.size(); ++i)
            val_scores[i] = scores[val_idx[i]];
        const double train_loss = logloss(train_scores, train_labels);
        const double monitored =
            have_val ? logloss(val_scores, val_labels) : train_loss;
        rep.train_loss_curve.push_back(train_loss);
        rep.train_logloss = train_loss;
        rep.validation_logloss = monitored;

        if (monitored < best_loss - config.early_stop_tolerance) {
            best_loss = monitored;
            best_round = round + 1;
            since_best = 0;
        } else if (++since_best >= config.early_stop_patience) {
            break;
        }
    }
    if (best_round < model.trees_.size())
        model.trees_.resize(best_round);
    rep.stopping_round = static_cast<uint32_t>(model.trees_.size());
    if (report) *report = rep;
    return model;
}

double GbdtModel::predict(const FeatureVector& features) const {
    double acc = base_score_;
    for (const auto& tree : trees_)
        acc += learning_rate_ * tree.evaluate(features);
    return clamp_prob(sigmoid(acc));
}

GbdtModel GbdtModel::from_parts(double base_score, double learning_rate,
                                std::vector<RegressionTree> trees) {
    GbdtModel m;
    m.base_score_ = base_score;
    m.learning_rate_ = learning_rate;
    m.trees_ = std::move(trees);
    return m;
}

void GbdtModel::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write model file: " + path);
    out.write(kMagic, 4);
    out.write(reinterpret_cast<const char*>(&kVersion), sizeof(kVersion));
    out.write(reinterpret_cast<const char*>(&base_score_), sizeof(base_score_));
    out.write(reinterpret_cast<const char*>(&learning_rate_), sizeof(learning_rate_));
    out.write(reinterpret_cast<const char*>(&arity_), sizeof(arity_));
    const uint32_t ntrees = static_cast<uint32_t>(trees_.size());
    out.write(reinterpret_cast<const char*>(&ntrees), sizeof(ntrees));
    for (const auto& tree : trees_) {
        const uint32_t nnodes = static_cast<uint32_t>(tree.nodes.size());
        out.write(reinterpret_cast<const char*>(&nnodes), sizeof(nnodes));
        // field-wise: the struct has padding, which must not hit the file
        for (const auto& n : tree.nodes) {
            out.write(reinterpret_cast<const char*>(&n.feature), sizeof(n.feature));
            out.write(reinterpret_cast<const char*>(&n.threshold),
                      sizeof(n.threshold));
            out.write(reinterpret_cast<const char*>(&n.left), sizeof(n.left));
            out.write(reinterpret_cast<const char*>(&n.right), sizeof(n.right));
            out.write(reinterpret_cast<const char*>(&n.value), sizeof(n.value));
        }
    }
}

GbdtModel GbdtModel::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("not a model file: " + path);
    uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (!in || version != kVersion)
        throw std::runtime_error("unsupported model version");
    GbdtModel m;
    in.read(reinterpret_cast<char*>(&m.base_score_), sizeof(m.base_score_));
    in.read(reinterpret_cast<char*>(&m.learning_rate_), sizeof(m.learning_rate_));
    in.read(reinterpret_cast<char*>(&m.arity_), sizeof(m.arity_));
    uint32_t ntrees = 0;
    in.read(reinterpret_cast<char*>(&ntrees), sizeof(ntrees));
    if (!in) throw std::runtime_error("corrupt model file: " + path);
    if (m.arity_ != kFeatureArity)
        throw std::runtime_error("model feature arity mismatch");
    m.trees_.resize(ntrees);
    for (auto& tree : m.trees_) {
        uint32_t nnodes = 0;
        in.read(reinterpret_cast<char*>(&nnodes), sizeof(nnodes));
        if (!in || nnodes == 0)
            throw std::runtime_error("corrupt model file: " + path);
        tree.nodes.resize(nnodes);
        for (auto& n : tree.nodes) {
            in.read(reinterpret_cast<char*>(&n.feature), sizeof(n.feature));
            in.read(reinterpret_cast<char*>(&n.threshold), sizeof(n.threshold));
            in.read(reinterpret_cast<char*>(&n.left), sizeof(n.left));
            in.read(reinterpret_cast<char*>(&n.right), sizeof(n.right));
            in.read(reinterpret_cast<char*>(&n.value), sizeof(n.value));
        }
        if (!in) throw std::runtime_error("corrupt model file: " + path);
    }
    return m;
}

}  // namespace omega
