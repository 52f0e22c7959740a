#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "omega/features.hpp"

namespace omega {

struct TrainingRecord {
    FeatureVector features;
    int label = 0;  // 1 iff the ground-truth top-1 is the current best unmasked
};

struct TrainConfig {
    uint32_t max_rounds = 100;
    uint32_t max_leaves = 31;
    uint32_t min_samples_per_leaf = 20;
    double learning_rate = 0.1;
    double validation_fraction = 0.1;
    uint32_t early_stop_patience = 5;
    double early_stop_tolerance = 1e-4;
    uint32_t max_bins = 256;
    bool leaf_wise = true;  // depth-wise fallback when false
    uint64_t seed = 7;

    void validate() const;
};

// Axis-aligned threshold splits; leaf values are log-odds increments.
struct TreeNode {
    int32_t feature = -1;   // -1 for leaves
    double threshold = 0.0; // go left when x[feature] <= threshold
    int32_t left = -1;
    int32_t right = -1;
    double value = 0.0;     // leaf value
};

struct RegressionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
    double evaluate(const FeatureVector& x) const;
};

struct TrainReport {
    uint32_t stopping_round = 0;
    double train_logloss = 0.0;
    double validation_logloss = 0.0;
    std::vector<double> train_loss_curve;
};

class GbdtModel {
   public:
    static GbdtModel train(const std::vector<TrainingRecord>& records,
                           const TrainConfig& config,
                           TrainReport* report = nullptr);

    // sigmoid(base_score + lr * sum of leaf values); always in (0, 1).
    double predict(const FeatureVector& features) const;

    double base_score() const { return base_score_; }
    double learning_rate() const { return learning_rate_; }
    size_t num_trees() const { return trees_.size(); }
    const std::vector<RegressionTree>& trees() const { return trees_; }

    void save(const std::string& path) const;
    static GbdtModel load(const std::string& path);

    // Test hook: models assembled directly from parts.
    static GbdtModel from_parts(double base_score, double learning_rate,
                                std::vector<RegressionTree> trees);

   private:
    double base_score_ = 0.0;
    double learning_rate_ = 0.1;
    uint32_t arity_ = kFeatureArity;
    std::vector<RegressionTree> trees_;
};

double sigmoid(double x);

}  // namespace omega
