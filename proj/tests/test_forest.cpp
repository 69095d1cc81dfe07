#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "dforge/forest.hpp"
#include "dforge/rng.hpp"

using namespace dforge;
using namespace dforge::forest;

namespace {

// distinct rows with a deterministic (learnable) labeling rule
void make_rows(Rng& rng, std::size_t n, std::size_t dim,
               std::vector<std::vector<double>>& X, std::vector<Choice>& y) {
    X.clear();
    y.clear();
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row(dim);
        for (auto& v : row) v = static_cast<double>(rng.uniform_below(1000));
        row[0] = static_cast<double>(i);  // force distinctness
        y.push_back(row[1] + row[2] > 1000 ? Choice::First : Choice::Second);
        X.push_back(std::move(row));
    }
}

}  // namespace

TEST_CASE("gini arithmetic drives a first split: 3F+1S has impurity 0.375") {
    // fit a single stump-ish tree on a tiny set and check it purifies
    std::vector<std::vector<double>> X = {{0}, {1}, {2}, {3}};
    std::vector<Choice> y = {Choice::First, Choice::First, Choice::First, Choice::Second};
    // impurity by hand: 1 - 0.75^2 - 0.25^2
    CHECK(1.0 - 0.75 * 0.75 - 0.25 * 0.25 == doctest::Approx(0.375));
    ForestConfig cfg;
    cfg.n_trees = 1;
    cfg.bootstrap = false;
    DecisionForest f = fit_forest(X, y, cfg);
    CHECK(predict_proba(f, {0}).p_first == 1.0);
    CHECK(predict_proba(f, {3}).p_first == 0.0);
}

TEST_CASE("single-row dataset: every tree is one leaf with p = 1") {
    std::vector<std::vector<double>> X = {{1.0, 2.0}};
    std::vector<Choice> y = {Choice::First};
    ForestConfig cfg;
    cfg.n_trees = 5;
    DecisionForest f = fit_forest(X, y, cfg);
    for (const auto& t : f.trees) {
        CHECK(t.feature.size() == 1);
        CHECK(t.is_leaf(0));
        CHECK(t.leaf_p[0] == 1.0);
    }
    CHECK(predict_proba(f, {9.0, 9.0}).p_first == 1.0);
}

TEST_CASE("memorization: distinct rows, deterministic labels, no bootstrap") {
    Rng rng(42);
    std::vector<std::vector<double>> X;
    std::vector<Choice> y;
    // adversarial random labels demand true memorization, so disable bootstrap
    for (std::size_t i = 0; i < 200; ++i) {
        X.push_back({static_cast<double>(i), static_cast<double>(rng.uniform_below(7))});
        y.push_back(rng.coin() ? Choice::First : Choice::Second);
    }
    ForestConfig cfg;
    cfg.n_trees = 3;
    cfg.bootstrap = false;
    DecisionForest f = fit_forest(X, y, cfg);
    for (std::size_t i = 0; i < X.size(); ++i) {
        double p = predict_proba(f, X[i]).p_first;
        CHECK((y[i] == Choice::First ? p > 0.5 : p < 0.5));
    }
}

TEST_CASE("determinism: identical inputs and seed build an identical forest") {
    Rng rng(7);
    std::vector<std::vector<double>> X;
    std::vector<Choice> y;
    make_rows(rng, 120, 5, X, y);
    ForestConfig cfg;
    cfg.n_trees = 20;
    cfg.seed = 99;
    DecisionForest a = fit_forest(X, y, cfg);
    DecisionForest b = fit_forest(X, y, cfg);
    CHECK(a == b);
}

TEST_CASE("parallel and sequential training produce identical forests") {
    Rng rng(8);
    std::vector<std::vector<double>> X;
    std::vector<Choice> y;
    make_rows(rng, 150, 6, X, y);
    ForestConfig seq;
    seq.n_trees = 16;
    seq.seed = 3;
    seq.n_threads = 1;
    ForestConfig par = seq;
    par.n_threads = 4;
    DecisionForest a = fit_forest(X, y, seq);
    DecisionForest b = fit_forest(X, y, par);
    b.config.n_threads = 1;  // thread count is not part of the learned structure
    CHECK(a.trees == b.trees);
}

TEST_CASE("predict_proba averages per-tree leaves and stays in [0,1]") {
    Rng rng(10);
    std::vector<std::vector<double>> X;
    std::vector<Choice> y;
    make_rows(rng, 80, 4, X, y);
    ForestConfig cfg;
    cfg.n_trees = 30;
    DecisionForest f = fit_forest(X, y, cfg);
    for (int t = 0; t < 50; ++t) {
        std::vector<double> x(4);
        for (auto& v : x) v = static_cast<double>(rng.uniform_below(1200));
        double p = predict_proba(f, x).p_first;
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
    }
    // n_trees = 1: prediction equals the single tree's leaf value
    ForestConfig one;
    one.n_trees = 1;
    DecisionForest g = fit_forest(X, y, one);
    std::vector<double> x = X[5];
    CHECK(predict_proba(g, x).p_first == g.trees[0].predict(x));
}

TEST_CASE("tree-order permutation cannot change the mean prediction") {
    Rng rng(11);
    std::vector<std::vector<double>> X;
    std::vector<Choice> y;
    make_rows(rng, 60, 4, X, y);
    ForestConfig cfg;
    cfg.n_trees = 9;
    DecisionForest f = fit_forest(X, y, cfg);
    DecisionForest g = f;
    std::reverse(g.trees.begin(), g.trees.end());
    for (int t = 0; t < 20; ++t) {
        std::vector<double> x(4);
        for (auto& v : x) v = static_cast<double>(rng.uniform_below(1200));
        CHECK(predict_proba(f, x).p_first == doctest::Approx(predict_proba(g, x).p_first));
    }
}

TEST_CASE("errors: empty input, ragged rows, missing markers, dimension mismatch") {
    ForestConfig cfg;
    CHECK_THROWS_AS(fit_forest({}, {}, cfg), std::invalid_argument);
    CHECK_THROWS_AS(fit_forest({{1.0}, {1.0, 2.0}}, {Choice::First, Choice::Second}, cfg),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        fit_forest({{std::nan("")}}, {Choice::First}, cfg), std::invalid_argument);
    DecisionForest f = fit_forest({{1.0, 2.0}, {3.0, 4.0}}, {Choice::First, Choice::Second}, cfg);
    CHECK_THROWS_AS(predict_proba(f, {1.0}), std::invalid_argument);
}

TEST_CASE("fit_on_problabels: all-1.0 probabilities equal an all-First fit") {
    Rng rng(14);
    std::vector<std::vector<double>> X;
    std::vector<Choice> labels;
    make_rows(rng, 40, 3, X, labels);
    std::vector<ProbLabel> p(X.size(), ProbLabel{1.0});
    ForestConfig cfg;
    cfg.n_trees = 4;
    DecisionForest a = fit_on_problabels(X, p, cfg, 1);
    DecisionForest b = fit_forest(X, std::vector<Choice>(X.size(), Choice::First), cfg);
    CHECK(a.trees == b.trees);
    CHECK(a.rounded_from_probs);
    CHECK(a.rounding_seed == 1);

    // all-0.5 probabilities: label vectors differ per seed but are deterministic
    std::vector<ProbLabel> half(X.size(), ProbLabel{0.5});
    DecisionForest c1 = fit_on_problabels(X, half, cfg, 7);
    DecisionForest c2 = fit_on_problabels(X, half, cfg, 7);
    CHECK(c1.trees == c2.trees);
}

TEST_CASE("forest json round trip") {
    Rng rng(15);
    std::vector<std::vector<double>> X;
    std::vector<Choice> y;
    make_rows(rng, 50, 4, X, y);
    ForestConfig cfg;
    cfg.n_trees = 6;
    cfg.seed = 5;
    DecisionForest f = fit_forest(X, y, cfg);
    auto tmp = std::filesystem::temp_directory_path() / "dforge_forest_test.json";
    save_forest(tmp.string(), f);
    DecisionForest r = load_forest(tmp.string());
    r.config.n_threads = f.config.n_threads;
    CHECK(r == f);
    std::filesystem::remove(tmp);
}

TEST_CASE("feature permutation with remapped columns leaves predictions unchanged") {
    Rng rng(16);
    std::vector<std::vector<double>> X;
    std::vector<Choice> y;
    make_rows(rng, 100, 5, X, y);
    std::vector<std::size_t> perm = {3, 1, 4, 0, 2};
    std::vector<std::vector<double>> Xp;
    for (const auto& row : X) {
        std::vector<double> r(row.size());
        for (std::size_t f = 0; f < perm.size(); ++f) r[f] = row[perm[f]];
        Xp.push_back(std::move(r));
    }
    ForestConfig cfg;
    cfg.n_trees = 10;
    cfg.seed = 21;
    DecisionForest a = fit_forest(X, y, cfg);
    DecisionForest b = fit_forest(Xp, y, cfg);
    for (int t = 0; t < 30; ++t) {
        std::vector<double> x(5);
        for (auto& v : x) v = static_cast<double>(rng.uniform_below(1200));
        std::vector<double> xp(5);
        for (std::size_t f = 0; f < perm.size(); ++f) xp[f] = x[perm[f]];
        CHECK(predict_proba(a, x).p_first ==
              doctest::Approx(predict_proba(b, xp).p_first).epsilon(1e-12));
    }
}
