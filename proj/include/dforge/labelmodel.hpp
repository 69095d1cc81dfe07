#pragma once
// Aggregating the label matrix into one (probabilistic) label per scenario:
// majority vote, popularity-weighted vote (Borda), and the generative
// factor-graph label model with propensity / accuracy / correlation factors
// fitted by marginal pseudolikelihood.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dforge/core.hpp"
#include "dforge/heuristics.hpp"

namespace dforge::labelmodel {

using heuristics::LabelMatrix;

// A non-negative decimal with a finite base-10 representation
// (units * 10^-scale). Lets vote tallies built from weights read as decimal
// text be compared exactly instead of through float equality.
struct Decimal {
    long long units = 0;
    int scale = 0;  // number of fractional digits, 0..18

    double value() const;
    std::string str() const;
    static Decimal parse(const std::string& text);            // throws on malformed input
    std::optional<Decimal> div_exact(long long divisor) const;  // none if non-terminating
};

// Per-heuristic weight in [0,1], ordered to match LabelMatrix columns.
// `exact` is present when every weight came from decimal text (or an exact
// scaling of it); weighted_vote then tallies in integer arithmetic.
struct VoteWeights {
    std::vector<double> values;
    std::optional<std::vector<Decimal>> exact;

    static VoteWeights from_values(std::vector<double> v);
    static VoteWeights from_decimals(std::vector<Decimal> d);
};

struct GenerativeConfig {
    double epsilon = 0.01;        // L1 strength, >= 0
    double learning_rate = 0.05;  // per-row step size
    int epochs = 500;
    enum class GradientMode { Exact, Gibbs } mode = GradientMode::Exact;
    int gibbs_samples = 200;
    int burn_in = 50;
    std::uint64_t seed = 0;
};

// Learned weight vector over propensity (w_lab), accuracy (w_acc) and
// pairwise correlation (w_corr) factors. |w| = 2M + |C|.
struct GenerativeModel {
    std::size_t n_heuristics = 0;
    std::vector<std::pair<std::size_t, std::size_t>> correlation_pairs;  // j < k, unique
    std::vector<double> w_lab;
    std::vector<double> w_acc;
    std::vector<double> w_corr;
    GenerativeConfig config;
};

struct TiePolicy {
    enum class Kind { Random, GenerativeWeights, AbstainOnTie };
    Kind kind = Kind::Random;
    std::uint64_t seed = 0;
    const GenerativeModel* model = nullptr;

    static TiePolicy random(std::uint64_t seed) { return {Kind::Random, seed, nullptr}; }
    static TiePolicy generative(const GenerativeModel& m, std::uint64_t seed) {
        return {Kind::GenerativeWeights, seed, &m};
    }
    static TiePolicy abstain_on_tie() { return {Kind::AbstainOnTie, 0, nullptr}; }
};

// Per row: strict majority of non-abstaining votes wins; ties (including
// all-abstain rows) resolved by the policy. Random draws one seeded coin per
// tied row, in row order.
std::vector<CandidateLabel> majority_vote(const LabelMatrix& L, const TiePolicy& tie);

// Tally = sum of weights over heuristics voting each side; larger tally wins.
// Tallies closer than 1e-12 are ties (exact integer comparison when the
// weights carry a decimal representation).
std::vector<CandidateLabel> weighted_vote(const LabelMatrix& L, const VoteWeights& weights,
                                          const TiePolicy& tie);

// One respondent's ranking over strategy names; 1 = most preferred, ties
// allowed. Strategies absent from the map share the rank one below the worst
// explicit rank.
struct StrategyRanking {
    std::string respondent_id;
    std::vector<std::pair<std::string, int>> ranks;
};

// Borda count of one ranking: per strategy, the number of other strategies
// ranked strictly below it.
std::vector<int> borda_counts_one(const StrategyRanking& r,
                                  const std::vector<std::string>& strategies);

// Mean Borda count over respondents, per strategy.
std::vector<double> borda_counts(const std::vector<StrategyRanking>& rankings,
                                 const std::vector<std::string>& strategies);

enum class ScaleMode { MaxPossible, MinMax };

// weight = count / (S-1), clipped to [0,1]. MinMax instead normalizes the
// observed counts to span [0,1].
VoteWeights scale_weights(const std::vector<double>& counts, std::size_t n_strategies,
                          ScaleMode mode = ScaleMode::MaxPossible);

// Exact-decimal variant: keeps an integer fixed-point representation when
// count / (S-1) terminates in base 10.
VoteWeights scale_weights(const std::vector<Decimal>& counts, std::size_t n_strategies,
                          ScaleMode mode = ScaleMode::MaxPossible);

// Marginal pseudolikelihood objective: sum over scenarios i and heuristics j
// of -log p_w(L_ij | L_i,~j), the latent label marginalized out; optionally
// plus epsilon * ||w||_1. Weight layout everywhere: [w_lab | w_acc | w_corr].
double pl_objective(const LabelMatrix& L, const GenerativeModel& m, bool include_l1);
std::vector<double> pl_gradient(const LabelMatrix& L, const GenerativeModel& m, bool include_l1);

// log p_w(Lambda): per-row marginalization over the latent label, normalized
// by the per-scenario partition function. Exponential only in correlation
// component size.
double marginal_log_likelihood(const LabelMatrix& L, const GenerativeModel& m);
double log_partition_cell(const GenerativeModel& m);

// Fits by proximal gradient descent from w = 0 (soft-threshold after each
// step). Exact mode computes the per-term marginalization in closed form;
// Gibbs mode estimates the free-phase expectations by alternating sweeps over
// (cell value, latent label). Deterministic given config.seed.
// Throws std::runtime_error on a non-finite objective and
// std::invalid_argument on bad config or duplicate/out-of-range pairs.
GenerativeModel fit_generative(const LabelMatrix& L,
                               std::vector<std::pair<std::size_t, std::size_t>> correlation_pairs,
                               const GenerativeConfig& config);

// All column pairs whose overlap (fraction of rows where both vote) is at
// least tau, for the `correlations = auto` configuration.
std::vector<std::pair<std::size_t, std::size_t>> select_correlation_pairs(const LabelMatrix& L,
                                                                          double tau);

// p(y_i = First | row i) from the accuracy factors (propensity and
// correlation factors are constant in y and cancel).
std::vector<ProbLabel> predict_marginals(const GenerativeModel& m, const LabelMatrix& L);

// p > 0.5 -> First, < 0.5 -> Second, exactly 0.5 -> seeded coin.
std::vector<Choice> round_labels(const std::vector<ProbLabel>& probs, std::uint64_t seed);

// Model JSON (schema: {version, M, pairs, w_lab, w_acc, w_corr, config});
// weights serialized as decimals with 17 significant digits.
void save_model(const std::string& path, const GenerativeModel& m);
GenerativeModel load_model(const std::string& path);

// ---- one-call aggregation used by the metrics module and the CLI ----

struct CorrelationSpec {
    enum class Kind { None, Explicit, AutoOverlap } kind = Kind::None;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  // Explicit
    double tau = 0.25;                                       // AutoOverlap threshold
};

struct LabelModelConfig {
    enum class Kind { Majority, Weighted, Generative } kind = Kind::Majority;
    TiePolicy::Kind tie = TiePolicy::Kind::Random;
    std::uint64_t tie_seed = 0;
    VoteWeights weights;   // Weighted
    GenerativeConfig gen;  // Generative, and the generative_weights tie policy
    CorrelationSpec correlations;
    std::uint64_t rounding_seed = 0;  // generative marginals -> hard labels
};

struct AggregateResult {
    std::vector<CandidateLabel> labels;  // Abstain possible under abstain_on_tie
    std::vector<ProbLabel> probs;        // marginals (generative) or 1 / 0 / 0.5
    std::optional<GenerativeModel> model;
};

AggregateResult aggregate_labels(const LabelMatrix& L, const LabelModelConfig& cfg);

}  // namespace dforge::labelmodel
