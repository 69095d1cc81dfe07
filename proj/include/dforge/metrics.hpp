#pragma once
// Diagnostics over heuristics and label models: coverage, polarity,
// accuracy, label density, pairwise conflict/overlap, per-scenario-type
// breakdowns, leave-one-out perturbation, and learning curves.

#include <optional>
#include <string>
#include <vector>

#include "dforge/core.hpp"
#include "dforge/forest.hpp"
#include "dforge/heuristics.hpp"
#include "dforge/labelmodel.hpp"

namespace dforge::metrics {

using heuristics::LabelMatrix;

// Fraction of rows where column m does not abstain.
double coverage(const LabelMatrix& L, std::size_t m);

std::vector<CandidateLabel> column(const LabelMatrix& L, std::size_t m);

// Fraction of non-abstaining predictions matching truth; absent when every
// prediction abstains.
std::optional<double> accuracy(const std::vector<CandidateLabel>& pred,
                               const std::vector<Choice>& truth);

// Aggregate-model accuracy: scores all rows (an Abstain never matches).
double aggregate_accuracy(const std::vector<CandidateLabel>& pred,
                          const std::vector<Choice>& truth);

double choice_accuracy(const std::vector<Choice>& pred, const std::vector<Choice>& truth);

struct DensityReport {
    std::vector<int> per_row;  // non-abstaining heuristics per scenario
    double mean = 0.0;
};
DensityReport density(const LabelMatrix& L);

struct PairOverlap {
    std::size_t j, k;
    double overlap;   // fraction of rows where both vote
    double conflict;  // fraction of rows where both vote and disagree
};
std::vector<PairOverlap> conflict_overlap(const LabelMatrix& L);

struct TypeAccuracy {
    std::string type;  // untagged rows group under "Random"
    double accuracy;
    std::size_t n;
};
// Grouped by scenario_type, sorted by type name.
std::vector<TypeAccuracy> accuracy_by_type(const std::vector<CandidateLabel>& pred,
                                           const std::vector<Choice>& truth,
                                           const std::vector<std::string>& types);

struct HeuristicStat {
    std::string name;
    double coverage = 0.0;
    double polarity_first = 0.0;   // fraction of non-abstaining votes on First
    double polarity_second = 0.0;
    std::optional<double> accuracy;
    std::optional<double> estimated_weight;  // w_acc from a generative model
};

std::vector<HeuristicStat> heuristic_report(
    const LabelMatrix& L, const std::vector<Choice>* truth = nullptr,
    const labelmodel::GenerativeModel* model = nullptr);

void write_heuristic_report_csv(const std::string& path,
                                const std::vector<HeuristicStat>& report);
void write_heuristic_report_json(const std::string& path,
                                 const std::vector<HeuristicStat>& report);

struct PerturbRow {
    std::string heuristic;
    bool ok = false;
    double gain = 0.0;  // baseline accuracy minus accuracy without this heuristic
    std::string error;
};
struct PerturbationReport {
    double baseline = 0.0;
    std::vector<PerturbRow> rows;
};

// Refits the configured label model with each column removed in turn. A
// refit failure is reported on that row; the others are unaffected.
// Requires M >= 2 and truth for every row.
PerturbationReport perturbation(const LabelMatrix& L, const std::vector<Choice>& truth,
                                const labelmodel::LabelModelConfig& cfg);

// ------------------------------------------------------- learning curves

struct CurveModelSpec {
    std::string name;
    enum class Kind { Supervised, WeakForest, VoteOnly } kind = Kind::Supervised;
    labelmodel::LabelModelConfig label_cfg;  // WeakForest / VoteOnly
    // Recompute Borda weights from the sampled respondents' rankings before
    // each run (weighted models on the respondents axis).
    bool recompute_borda = false;
};

struct CurveConfig {
    enum class Axis { Rows, Respondents } axis = Axis::Rows;
    std::vector<std::size_t> x_values;
    int folds = 5;  // rows axis: cross-validation folds
    std::vector<std::uint64_t> seeds = {0};
    forest::ForestConfig forest_cfg;
    // Respondents axis: train on each sampled respondent's first
    // `within_train` rows and test on their last `within_test` rows. When
    // absent, test on the rows of the unsampled respondents instead.
    std::optional<std::pair<int, int>> within_session;
    std::vector<CurveModelSpec> models;
    // Rankings for recompute_borda, plus the strategy order matching the
    // matrix columns.
    std::vector<labelmodel::StrategyRanking> rankings;
    std::vector<std::string> strategies;
};

struct CurvePoint {
    std::size_t x;
    std::string model;
    double mean;
    double ci_lo;  // mean +/- 1.96 * sd / sqrt(runs)
    double ci_hi;
    std::size_t runs;
};

// For each x: sample (respondent-grouped on that axis), fit every requested
// model, evaluate on the held-out rows; mean and 95% CI over seeds/folds.
// Throws std::runtime_error when a fold has too little data.
std::vector<CurvePoint> learning_curve(const Dataset& d,
                                       const std::vector<heuristics::HeuristicSpec>& suite,
                                       const CurveConfig& cfg);

void write_curve_csv(const std::string& path, const std::vector<CurvePoint>& points);
void write_perturb_csv(const std::string& path, const PerturbationReport& report);

}  // namespace dforge::metrics
