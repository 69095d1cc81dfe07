#pragma once
// From-scratch random-forest binary classifier: the discriminative model
// trained on aggregate labels. Greedy Gini splits over all features,
// thresholds at midpoints between sorted distinct values, unlimited depth by
// default. Trees train from per-tree seeds (seed + tree index), so parallel
// and sequential training build the identical forest.

#include <cstdint>
#include <string>
#include <vector>

#include "dforge/core.hpp"

namespace dforge::forest {

struct ForestConfig {
    int n_trees = 100;
    int max_depth = 0;  // 0 = unlimited
    int min_samples_split = 2;
    bool bootstrap = true;
    std::uint64_t seed = 0;
    int n_threads = 1;  // training threads; the built forest is identical for any value

    bool operator==(const ForestConfig&) const = default;
};

// Flat node arrays; internal node: feature + threshold (go left when
// x[feature] <= threshold); leaf: left == -1 and leaf_p = P(First).
struct Tree {
    std::vector<int> feature;
    std::vector<double> threshold;
    std::vector<int> left;
    std::vector<int> right;
    std::vector<double> leaf_p;

    bool is_leaf(int n) const { return left[n] < 0; }
    double predict(const std::vector<double>& x) const;

    bool operator==(const Tree&) const = default;
};

struct DecisionForest {
    std::vector<Tree> trees;
    ForestConfig config;
    std::size_t n_features = 0;
    bool rounded_from_probs = false;  // labels came from round_labels
    std::uint64_t rounding_seed = 0;

    bool operator==(const DecisionForest&) const = default;
};

// Trains on feature rows X and hard labels y. Throws std::invalid_argument
// on empty input, ragged rows, or a missing marker (NaN) — imputation must
// precede training.
DecisionForest fit_forest(const std::vector<std::vector<double>>& X,
                          const std::vector<Choice>& y, const ForestConfig& cfg);

// Mean of per-tree leaf First-probabilities.
ProbLabel predict_proba(const DecisionForest& f, const std::vector<double>& x);

// Rounds probabilistic labels (ties by seeded coin) and then fits; the
// rounding seed is recorded in the forest config seed metadata.
DecisionForest fit_on_problabels(const std::vector<std::vector<double>>& X,
                                 const std::vector<ProbLabel>& p, const ForestConfig& cfg,
                                 std::uint64_t rounding_seed);

// Versioned JSON with flat node arrays (feature, threshold, left, right, leaf_p).
void save_forest(const std::string& path, const DecisionForest& f);
DecisionForest load_forest(const std::string& path);

}  // namespace dforge::forest
