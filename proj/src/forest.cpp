#include "dforge/forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "dforge/csv.hpp"
#include "dforge/labelmodel.hpp"
#include "dforge/rng.hpp"

namespace dforge::forest {

namespace {

struct Split {
    bool found = false;
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
};

double gini(std::size_t n_first, std::size_t n_total) {
    if (n_total == 0) return 0.0;
    double pf = static_cast<double>(n_first) / static_cast<double>(n_total);
    double ps = 1.0 - pf;
    return 1.0 - pf * pf - ps * ps;
}

class TreeBuilder {
public:
    TreeBuilder(const std::vector<std::vector<double>>& X, const std::vector<Choice>& y,
                const ForestConfig& cfg)
        : X_(X), y_(y), cfg_(cfg) {}

    Tree build(const std::vector<std::size_t>& sample) {
        tree_ = Tree{};
        grow(sample, 0);
        return std::move(tree_);
    }

private:
    const std::vector<std::vector<double>>& X_;
    const std::vector<Choice>& y_;
    const ForestConfig& cfg_;
    Tree tree_;

    int add_leaf(const std::vector<std::size_t>& idx) {
        std::size_t nf = 0;
        for (std::size_t i : idx) {
            if (y_[i] == Choice::First) ++nf;
        }
        int node = static_cast<int>(tree_.feature.size());
        tree_.feature.push_back(-1);
        tree_.threshold.push_back(0.0);
        tree_.left.push_back(-1);
        tree_.right.push_back(-1);
        tree_.leaf_p.push_back(static_cast<double>(nf) / static_cast<double>(idx.size()));
        return node;
    }

    // Best Gini-gain split over all features. Equal gains break to the lowest
    // feature index, then the lowest threshold (determinism for golden tests).
    Split best_split(const std::vector<std::size_t>& idx) const {
        const std::size_t n = idx.size();
        std::size_t nf_total = 0;
        for (std::size_t i : idx) {
            if (y_[i] == Choice::First) ++nf_total;
        }
        const double parent = gini(nf_total, n);
        Split best;
        std::vector<std::pair<double, bool>> vals(n);  // (value, is_first)
        for (std::size_t f = 0; f < X_[idx[0]].size(); ++f) {
            for (std::size_t k = 0; k < n; ++k) {
                vals[k] = {X_[idx[k]][f], y_[idx[k]] == Choice::First};
            }
            std::sort(vals.begin(), vals.end());
            std::size_t nf_left = 0;
            for (std::size_t k = 0; k + 1 < n; ++k) {
                if (vals[k].second) ++nf_left;
                if (vals[k].first == vals[k + 1].first) continue;
                const std::size_t n_left = k + 1;
                const std::size_t n_right = n - n_left;
                double gain = parent -
                              (static_cast<double>(n_left) / n) * gini(nf_left, n_left) -
                              (static_cast<double>(n_right) / n) *
                                  gini(nf_total - nf_left, n_right);
                if (gain > best.gain + 1e-15) {
                    best.found = true;
                    best.gain = gain;
                    best.feature = static_cast<int>(f);
                    best.threshold = vals[k].first + (vals[k + 1].first - vals[k].first) / 2.0;
                }
            }
        }
        return best;
    }

    int grow(const std::vector<std::size_t>& idx, int depth) {
        std::size_t nf = 0;
        for (std::size_t i : idx) {
            if (y_[i] == Choice::First) ++nf;
        }
        const bool pure = nf == 0 || nf == idx.size();
        const bool too_small = idx.size() < static_cast<std::size_t>(cfg_.min_samples_split);
        const bool too_deep = cfg_.max_depth > 0 && depth >= cfg_.max_depth;
        if (pure || too_small || too_deep) return add_leaf(idx);

        Split s = best_split(idx);
        if (!s.found) return add_leaf(idx);

        std::vector<std::size_t> left_idx, right_idx;
        for (std::size_t i : idx) {
            (X_[i][static_cast<std::size_t>(s.feature)] <= s.threshold ? left_idx : right_idx)
                .push_back(i);
        }
        int node = static_cast<int>(tree_.feature.size());
        tree_.feature.push_back(s.feature);
        tree_.threshold.push_back(s.threshold);
        tree_.left.push_back(0);
        tree_.right.push_back(0);
        tree_.leaf_p.push_back(0.0);
        tree_.left[static_cast<std::size_t>(node)] = grow(left_idx, depth + 1);
        tree_.right[static_cast<std::size_t>(node)] = grow(right_idx, depth + 1);
        return node;
    }
};

Tree train_one(const std::vector<std::vector<double>>& X, const std::vector<Choice>& y,
               const ForestConfig& cfg, int tree_index) {
    const std::size_t n = X.size();
    std::vector<std::size_t> sample;
    sample.reserve(n);
    if (cfg.bootstrap) {
        Rng rng(cfg.seed + static_cast<std::uint64_t>(tree_index));
        for (std::size_t k = 0; k < n; ++k) {
            sample.push_back(static_cast<std::size_t>(rng.uniform_below(n)));
        }
    } else {
        for (std::size_t k = 0; k < n; ++k) sample.push_back(k);
    }
    TreeBuilder builder(X, y, cfg);
    return builder.build(sample);
}

}  // namespace

double Tree::predict(const std::vector<double>& x) const {
    int n = 0;
    while (!is_leaf(n)) {
        n = x[static_cast<std::size_t>(feature[static_cast<std::size_t>(n)])] <=
                    threshold[static_cast<std::size_t>(n)]
                ? left[static_cast<std::size_t>(n)]
                : right[static_cast<std::size_t>(n)];
    }
    return leaf_p[static_cast<std::size_t>(n)];
}

DecisionForest fit_forest(const std::vector<std::vector<double>>& X,
                          const std::vector<Choice>& y, const ForestConfig& cfg) {
    if (X.empty() || X.size() != y.size()) {
        throw std::invalid_argument("fit_forest: need a non-empty X with matching labels");
    }
    if (cfg.n_trees < 1 || cfg.min_samples_split < 2) {
        throw std::invalid_argument("fit_forest: invalid config");
    }
    const std::size_t dim = X[0].size();
    for (const auto& row : X) {
        if (row.size() != dim) throw std::invalid_argument("fit_forest: ragged feature rows");
        for (double v : row) {
            if (std::isnan(v)) {
                throw std::invalid_argument(
                    "fit_forest: missing feature value; impute before training");
            }
        }
    }
    DecisionForest f;
    f.config = cfg;
    f.n_features = dim;
    f.trees.resize(static_cast<std::size_t>(cfg.n_trees));
    const int n_threads = std::max(1, cfg.n_threads);
    if (n_threads == 1) {
        for (int t = 0; t < cfg.n_trees; ++t) {
            f.trees[static_cast<std::size_t>(t)] = train_one(X, y, cfg, t);
        }
    } else {
        std::vector<std::thread> workers;
        std::size_t stride = static_cast<std::size_t>(n_threads);
        for (int w = 0; w < n_threads; ++w) {
            workers.emplace_back([&, w]() {
                for (std::size_t t = static_cast<std::size_t>(w); t < f.trees.size(); t += stride) {
                    f.trees[t] = train_one(X, y, cfg, static_cast<int>(t));
                }
            });
        }
        for (auto& th : workers) th.join();
    }
    return f;
}

ProbLabel predict_proba(const DecisionForest& f, const std::vector<double>& x) {
    if (x.size() != f.n_features) {
        throw std::invalid_argument("predict_proba: expected " + std::to_string(f.n_features) +
                                    " features, got " + std::to_string(x.size()));
    }
    double sum = 0.0;
    for (const Tree& t : f.trees) sum += t.predict(x);
    return {sum / static_cast<double>(f.trees.size())};
}

DecisionForest fit_on_problabels(const std::vector<std::vector<double>>& X,
                                 const std::vector<ProbLabel>& p, const ForestConfig& cfg,
                                 std::uint64_t rounding_seed) {
    std::vector<Choice> y = labelmodel::round_labels(p, rounding_seed);
    DecisionForest f = fit_forest(X, y, cfg);
    f.rounded_from_probs = true;
    f.rounding_seed = rounding_seed;
    return f;
}

void save_forest(const std::string& path, const DecisionForest& f) {
    nlohmann::json j;
    j["version"] = 1;
    j["n_features"] = f.n_features;
    j["config"] = {{"n_trees", f.config.n_trees},
                   {"max_depth", f.config.max_depth},
                   {"min_samples_split", f.config.min_samples_split},
                   {"bootstrap", f.config.bootstrap},
                   {"seed", f.config.seed}};
    j["rounded_from_probs"] = f.rounded_from_probs;
    j["rounding_seed"] = f.rounding_seed;
    nlohmann::json trees = nlohmann::json::array();
    for (const Tree& t : f.trees) {
        trees.push_back({{"feature", t.feature},
                         {"threshold", t.threshold},
                         {"left", t.left},
                         {"right", t.right},
                         {"leaf_p", t.leaf_p}});
    }
    j["trees"] = std::move(trees);
    csv::write_text_file(path, j.dump(1) + "\n");
}

DecisionForest load_forest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open forest file '" + path + "'");
    nlohmann::json j = nlohmann::json::parse(in);
    if (j.at("version").get<int>() != 1) {
        throw std::runtime_error(path + ": unsupported forest version");
    }
    DecisionForest f;
    f.n_features = j.at("n_features").get<std::size_t>();
    const auto& c = j.at("config");
    f.config.n_trees = c.at("n_trees").get<int>();
    f.config.max_depth = c.at("max_depth").get<int>();
    f.config.min_samples_split = c.at("min_samples_split").get<int>();
    f.config.bootstrap = c.at("bootstrap").get<bool>();
    f.config.seed = c.at("seed").get<std::uint64_t>();
    f.rounded_from_probs = j.value("rounded_from_probs", false);
    f.rounding_seed = j.value("rounding_seed", std::uint64_t{0});
    for (const auto& tj : j.at("trees")) {
        Tree t;
        t.feature = tj.at("feature").get<std::vector<int>>();
        t.threshold = tj.at("threshold").get<std::vector<double>>();
        t.left = tj.at("left").get<std::vector<int>>();
        t.right = tj.at("right").get<std::vector<int>>();
        t.leaf_p = tj.at("leaf_p").get<std::vector<double>>();
        f.trees.push_back(std::move(t));
    }
    return f;
}

}  // namespace dforge::forest
