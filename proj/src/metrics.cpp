#include "dforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "dforge/csv.hpp"
#include "dforge/rng.hpp"

namespace dforge::metrics {

namespace {

std::string fmt6(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", x);
    return buf;
}

}  // namespace

double coverage(const LabelMatrix& L, std::size_t m) {
    if (m >= L.n_heuristics) throw std::out_of_range("coverage: column index out of range");
    if (L.n_scenarios == 0) return 0.0;
    std::size_t votes = 0;
    for (std::size_t i = 0; i < L.n_scenarios; ++i) {
        if (L.at(i, m) != CandidateLabel::Abstain) ++votes;
    }
    return static_cast<double>(votes) / static_cast<double>(L.n_scenarios);
}

std::vector<CandidateLabel> column(const LabelMatrix& L, std::size_t m) {
    if (m >= L.n_heuristics) throw std::out_of_range("column: index out of range");
    std::vector<CandidateLabel> out;
    out.reserve(L.n_scenarios);
    for (std::size_t i = 0; i < L.n_scenarios; ++i) out.push_back(L.at(i, m));
    return out;
}

std::optional<double> accuracy(const std::vector<CandidateLabel>& pred,
                               const std::vector<Choice>& truth) {
    if (pred.size() != truth.size()) {
        throw std::invalid_argument("accuracy: prediction/truth length mismatch");
    }
    std::size_t scored = 0, hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] == CandidateLabel::Abstain) continue;
        ++scored;
        if (pred[i] == to_candidate(truth[i])) ++hits;
    }
    if (scored == 0) return std::nullopt;
    return static_cast<double>(hits) / static_cast<double>(scored);
}

double aggregate_accuracy(const std::vector<CandidateLabel>& pred,
                          const std::vector<Choice>& truth) {
    if (pred.size() != truth.size()) {
        throw std::invalid_argument("aggregate_accuracy: length mismatch");
    }
    if (pred.empty()) throw std::invalid_argument("aggregate_accuracy: empty input");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] == to_candidate(truth[i])) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

double choice_accuracy(const std::vector<Choice>& pred, const std::vector<Choice>& truth) {
    if (pred.size() != truth.size() || pred.empty()) {
        throw std::invalid_argument("choice_accuracy: bad input lengths");
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] == truth[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

DensityReport density(const LabelMatrix& L) {
    DensityReport r;
    r.per_row.reserve(L.n_scenarios);
    long long total = 0;
    for (std::size_t i = 0; i < L.n_scenarios; ++i) {
        int c = 0;
        for (std::size_t m = 0; m < L.n_heuristics; ++m) {
            if (L.at(i, m) != CandidateLabel::Abstain) ++c;
        }
        r.per_row.push_back(c);
        total += c;
    }
    r.mean = L.n_scenarios == 0 ? 0.0
                                : static_cast<double>(total) / static_cast<double>(L.n_scenarios);
    return r;
}

std::vector<PairOverlap> conflict_overlap(const LabelMatrix& L) {
    if (L.n_heuristics < 2) {
        throw std::invalid_argument("conflict_overlap: need at least two heuristics");
    }
    std::vector<PairOverlap> out;
    const double n = static_cast<double>(L.n_scenarios);
    for (std::size_t j = 0; j < L.n_heuristics; ++j) {
        for (std::size_t k = j + 1; k < L.n_heuristics; ++k) {
            std::size_t both = 0, disagree = 0;
            for (std::size_t i = 0; i < L.n_scenarios; ++i) {
                CandidateLabel a = L.at(i, j), b = L.at(i, k);
                if (a == CandidateLabel::Abstain || b == CandidateLabel::Abstain) continue;
                ++both;
                if (a != b) ++disagree;
            }
            out.push_back({j, k, n > 0 ? both / n : 0.0, n > 0 ? disagree / n : 0.0});
        }
    }
    return out;
}

std::vector<TypeAccuracy> accuracy_by_type(const std::vector<CandidateLabel>& pred,
                                           const std::vector<Choice>& truth,
                                           const std::vector<std::string>& types) {
    if (pred.size() != truth.size() || pred.size() != types.size()) {
        throw std::invalid_argument("accuracy_by_type: length mismatch");
    }
    std::map<std::string, std::pair<std::size_t, std::size_t>> groups;  // type -> (hits, n)
    for (std::size_t i = 0; i < pred.size(); ++i) {
        std::string key = types[i].empty() ? "Random" : types[i];
        auto& [hits, n] = groups[key];
        ++n;
        if (pred[i] == to_candidate(truth[i])) ++hits;
    }
    std::vector<TypeAccuracy> out;
    for (const auto& [type, stat] : groups) {
        out.push_back({type, static_cast<double>(stat.first) / static_cast<double>(stat.second),
                       stat.second});
    }
    return out;
}

std::vector<HeuristicStat> heuristic_report(const LabelMatrix& L,
                                            const std::vector<Choice>* truth,
                                            const labelmodel::GenerativeModel* model) {
    if (model && model->n_heuristics != L.n_heuristics) {
        throw std::invalid_argument("heuristic_report: model size mismatch");
    }
    if (truth && truth->size() != L.n_scenarios) {
        throw std::invalid_argument("heuristic_report: truth length mismatch");
    }
    std::vector<HeuristicStat> out;
    out.reserve(L.n_heuristics);
    for (std::size_t m = 0; m < L.n_heuristics; ++m) {
        HeuristicStat s;
        s.name = L.heuristic_names[m];
        std::size_t nf = 0, ns = 0;
        for (std::size_t i = 0; i < L.n_scenarios; ++i) {
            if (L.at(i, m) == CandidateLabel::First) ++nf;
            else if (L.at(i, m) == CandidateLabel::Second) ++ns;
        }
        const std::size_t votes = nf + ns;
        s.coverage = L.n_scenarios == 0
                         ? 0.0
                         : static_cast<double>(votes) / static_cast<double>(L.n_scenarios);
        if (votes > 0) {
            s.polarity_first = static_cast<double>(nf) / static_cast<double>(votes);
            s.polarity_second = static_cast<double>(ns) / static_cast<double>(votes);
        }
        if (truth) s.accuracy = accuracy(column(L, m), *truth);
        if (model) s.estimated_weight = model->w_acc[m];
        out.push_back(std::move(s));
    }
    return out;
}

void write_heuristic_report_csv(const std::string& path,
                                const std::vector<HeuristicStat>& report) {
    csv::Table t;
    t.schema_id = "heuristic-report";
    t.header = {"heuristic", "coverage", "polarity_first", "polarity_second", "accuracy",
                "estimated_weight"};
    for (const auto& s : report) {
        t.rows.push_back({s.name, fmt6(s.coverage), fmt6(s.polarity_first),
                          fmt6(s.polarity_second), s.accuracy ? fmt6(*s.accuracy) : "",
                          s.estimated_weight ? fmt6(*s.estimated_weight) : ""});
    }
    csv::write_file(path, t);
}

void write_heuristic_report_json(const std::string& path,
                                 const std::vector<HeuristicStat>& report) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : report) {
        nlohmann::json j = {{"heuristic", s.name},
                            {"coverage", s.coverage},
                            {"polarity", {{"first", s.polarity_first}, {"second", s.polarity_second}}}};
        if (s.accuracy) j["accuracy"] = *s.accuracy;
        if (s.estimated_weight) j["estimated_weight"] = *s.estimated_weight;
        arr.push_back(std::move(j));
    }
    csv::write_text_file(path, nlohmann::json{{"heuristics", arr}}.dump(1) + "\n");
}

// ----------------------------------------------------------- perturbation

namespace {

labelmodel::LabelModelConfig drop_from_config(const labelmodel::LabelModelConfig& cfg,
                                              std::size_t m) {
    labelmodel::LabelModelConfig out = cfg;
    if (cfg.kind == labelmodel::LabelModelConfig::Kind::Weighted) {
        out.weights.values.erase(out.weights.values.begin() + static_cast<long>(m));
        if (out.weights.exact) {
            out.weights.exact->erase(out.weights.exact->begin() + static_cast<long>(m));
        }
    }
    if (cfg.correlations.kind == labelmodel::CorrelationSpec::Kind::Explicit) {
        out.correlations.pairs.clear();
        for (auto [j, k] : cfg.correlations.pairs) {
            if (j == m || k == m) continue;
            out.correlations.pairs.push_back({j > m ? j - 1 : j, k > m ? k - 1 : k});
        }
    }
    return out;
}

}  // namespace

PerturbationReport perturbation(const LabelMatrix& L, const std::vector<Choice>& truth,
                                const labelmodel::LabelModelConfig& cfg) {
    if (L.n_heuristics < 2) {
        throw std::invalid_argument("perturbation: need at least two heuristics");
    }
    if (truth.size() != L.n_scenarios) {
        throw std::invalid_argument("perturbation: truth length mismatch");
    }
    PerturbationReport report;
    report.baseline = aggregate_accuracy(labelmodel::aggregate_labels(L, cfg).labels, truth);
    for (std::size_t m = 0; m < L.n_heuristics; ++m) {
        PerturbRow row;
        row.heuristic = L.heuristic_names[m];
        try {
            LabelMatrix Lm = heuristics::drop_column(L, m);
            auto perturbed = labelmodel::aggregate_labels(Lm, drop_from_config(cfg, m));
            row.gain = report.baseline - aggregate_accuracy(perturbed.labels, truth);
            row.ok = true;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

// -------------------------------------------------------- learning curves

namespace {

std::vector<std::vector<double>> features_for(const Dataset& d,
                                              const std::vector<std::size_t>& rows) {
    std::vector<std::vector<double>> out;
    out.reserve(rows.size());
    for (std::size_t i : rows) out.push_back(concat_features(d.schema, d.scenarios[i]));
    return out;
}

// Median imputation at the feature-vector level: medians (lower-middle for
// even counts) from the training rows fill NaNs in both sets.
void impute_features(std::vector<std::vector<double>>& train,
                     std::vector<std::vector<double>>& test) {
    if (train.empty()) return;
    const std::size_t dim = train[0].size();
    std::vector<double> medians(dim, 0.0);
    std::vector<double> col;
    for (std::size_t f = 0; f < dim; ++f) {
        col.clear();
        for (const auto& row : train) {
            if (!std::isnan(row[f])) col.push_back(row[f]);
        }
        bool any_missing = col.size() != train.size();
        if (!any_missing) {
            for (const auto& row : test) {
                if (std::isnan(row[f])) { any_missing = true; break; }
            }
        }
        if (!any_missing) continue;
        if (col.empty()) {
            throw std::runtime_error("impute: feature " + std::to_string(f) +
                                     " is missing in every training row");
        }
        std::sort(col.begin(), col.end());
        medians[f] = col[(col.size() - 1) / 2];
        for (auto* set : {&train, &test}) {
            for (auto& row : *set) {
                if (std::isnan(row[f])) row[f] = medians[f];
            }
        }
    }
}

std::vector<Choice> truth_for(const Dataset& d, const std::vector<std::size_t>& rows) {
    std::vector<Choice> out;
    out.reserve(rows.size());
    for (std::size_t i : rows) {
        if (!d.scenarios[i].truth) {
            throw std::runtime_error("scenario '" + d.scenarios[i].id +
                                     "' has no ground truth; cannot evaluate");
        }
        out.push_back(*d.scenarios[i].truth);
    }
    return out;
}

struct RunSample {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    std::vector<std::string> sampled_respondents;
};

std::vector<std::pair<std::string, std::vector<std::size_t>>> respondent_groups(
    const Dataset& d) {
    std::vector<std::pair<std::string, std::vector<std::size_t>>> groups;
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < d.scenarios.size(); ++i) {
        const std::string& r = d.scenarios[i].respondent_id;
        if (r.empty()) {
            throw std::invalid_argument("respondents axis requires a respondent_id on every row");
        }
        auto it = index.find(r);
        if (it == index.end()) {
            index.emplace(r, groups.size());
            groups.push_back({r, {i}});
        } else {
            groups[it->second].second.push_back(i);
        }
    }
    return groups;
}

double run_model(const Dataset& d, const LabelMatrix* L_full, const CurveModelSpec& model,
                 const CurveConfig& cfg, const RunSample& sample, std::uint64_t run_seed) {
    std::vector<Choice> test_truth = truth_for(d, sample.test);

    labelmodel::LabelModelConfig label_cfg = model.label_cfg;
    if (model.recompute_borda && !cfg.rankings.empty()) {
        std::vector<labelmodel::StrategyRanking> subset;
        for (const auto& r : cfg.rankings) {
            if (std::find(sample.sampled_respondents.begin(), sample.sampled_respondents.end(),
                          r.respondent_id) != sample.sampled_respondents.end()) {
                subset.push_back(r);
            }
        }
        if (!subset.empty()) {
            auto counts = labelmodel::borda_counts(subset, cfg.strategies);
            label_cfg.weights = labelmodel::scale_weights(counts, cfg.strategies.size());
        }
    }

    if (model.kind == CurveModelSpec::Kind::VoteOnly) {
        LabelMatrix Lt = heuristics::select_rows(*L_full, sample.test);
        auto agg = labelmodel::aggregate_labels(Lt, label_cfg);
        return aggregate_accuracy(agg.labels, test_truth);
    }

    std::vector<std::vector<double>> X_train = features_for(d, sample.train);
    std::vector<std::vector<double>> X_test = features_for(d, sample.test);
    impute_features(X_train, X_test);

    forest::ForestConfig fc = cfg.forest_cfg;
    fc.seed = fc.seed ^ (run_seed * 0x9E3779B97F4A7C15ull + 1);

    forest::DecisionForest f;
    if (model.kind == CurveModelSpec::Kind::Supervised) {
        f = forest::fit_forest(X_train, truth_for(d, sample.train), fc);
    } else {
        LabelMatrix Lt = heuristics::select_rows(*L_full, sample.train);
        auto agg = labelmodel::aggregate_labels(Lt, label_cfg);
        std::vector<std::vector<double>> X_lab;
        std::vector<Choice> y_lab;
        for (std::size_t k = 0; k < agg.labels.size(); ++k) {
            if (agg.labels[k] == CandidateLabel::Abstain) continue;
            X_lab.push_back(X_train[k]);
            y_lab.push_back(agg.labels[k] == CandidateLabel::First ? Choice::First
                                                                   : Choice::Second);
        }
        if (X_lab.empty()) throw std::runtime_error("no labeled training rows after aggregation");
        f = forest::fit_forest(X_lab, y_lab, fc);
    }

    std::vector<ProbLabel> probs;
    probs.reserve(X_test.size());
    for (const auto& x : X_test) probs.push_back(forest::predict_proba(f, x));
    std::vector<Choice> pred = labelmodel::round_labels(probs, run_seed);
    return choice_accuracy(pred, test_truth);
}

}  // namespace

std::vector<CurvePoint> learning_curve(const Dataset& d,
                                       const std::vector<heuristics::HeuristicSpec>& suite,
                                       const CurveConfig& cfg) {
    if (cfg.x_values.empty() || cfg.models.empty()) {
        throw std::invalid_argument("learning_curve: need x values and models");
    }
    if (cfg.axis == CurveConfig::Axis::Rows && cfg.folds < 2) {
        throw std::invalid_argument("learning_curve: folds must be >= 2");
    }
    bool needs_matrix = false;
    for (const auto& m : cfg.models) {
        if (m.kind != CurveModelSpec::Kind::Supervised) needs_matrix = true;
    }
    LabelMatrix L_full;
    if (needs_matrix) L_full = heuristics::apply_all(suite, d);

    // accumulate accuracies per (x, model)
    std::map<std::pair<std::size_t, std::string>, std::vector<double>> acc;

    auto run_all = [&](const RunSample& sample, std::size_t x, std::uint64_t run_seed) {
        if (sample.train.empty() || sample.test.empty()) {
            throw std::runtime_error("learning_curve: empty train or test set at x=" +
                                     std::to_string(x));
        }
        for (const auto& model : cfg.models) {
            double a = run_model(d, needs_matrix ? &L_full : nullptr, model, cfg, sample,
                                 run_seed);
            acc[{x, model.name}].push_back(a);
        }
    };

    if (cfg.axis == CurveConfig::Axis::Rows) {
        const std::size_t n = d.scenarios.size();
        for (std::uint64_t seed : cfg.seeds) {
            std::vector<std::size_t> idx(n);
            for (std::size_t i = 0; i < n; ++i) idx[i] = i;
            Rng rng(seed);
            rng.shuffle(idx);
            const std::size_t folds = static_cast<std::size_t>(cfg.folds);
            for (std::size_t f = 0; f < folds; ++f) {
                const std::size_t lo = f * n / folds, hi = (f + 1) * n / folds;
                RunSample sample;
                sample.test.assign(idx.begin() + static_cast<long>(lo),
                                   idx.begin() + static_cast<long>(hi));
                std::vector<std::size_t> pool;
                pool.insert(pool.end(), idx.begin(), idx.begin() + static_cast<long>(lo));
                pool.insert(pool.end(), idx.begin() + static_cast<long>(hi), idx.end());
                for (std::size_t x : cfg.x_values) {
                    sample.train.assign(pool.begin(),
                                        pool.begin() + static_cast<long>(std::min(x, pool.size())));
                    run_all(sample, x, seed * 1000003ull + f);
                }
            }
        }
    } else {
        auto groups = respondent_groups(d);
        for (std::uint64_t seed : cfg.seeds) {
            auto shuffled = groups;
            Rng rng(seed);
            rng.shuffle(shuffled);
            for (std::size_t x : cfg.x_values) {
                const std::size_t take = std::min(x, shuffled.size());
                RunSample sample;
                for (std::size_t g = 0; g < take; ++g) {
                    sample.sampled_respondents.push_back(shuffled[g].first);
                }
                if (cfg.within_session) {
                    auto [tr, te] = *cfg.within_session;
                    for (std::size_t g = 0; g < take; ++g) {
                        const auto& rows = shuffled[g].second;
                        if (rows.size() < static_cast<std::size_t>(tr + te)) continue;
                        for (int k = 0; k < tr; ++k) {
                            sample.train.push_back(rows[static_cast<std::size_t>(k)]);
                        }
                        for (int k = 0; k < te; ++k) {
                            sample.test.push_back(rows[rows.size() - static_cast<std::size_t>(te) +
                                                       static_cast<std::size_t>(k)]);
                        }
                    }
                } else {
                    for (std::size_t g = 0; g < shuffled.size(); ++g) {
                        auto& dest = g < take ? sample.train : sample.test;
                        dest.insert(dest.end(), shuffled[g].second.begin(),
                                    shuffled[g].second.end());
                    }
                }
                run_all(sample, x, seed);
            }
        }
    }

    std::vector<CurvePoint> points;
    for (std::size_t x : cfg.x_values) {
        for (const auto& model : cfg.models) {
            const auto& vals = acc.at({x, model.name});
            double mean = 0.0;
            for (double v : vals) mean += v;
            mean /= static_cast<double>(vals.size());
            double sd = 0.0;
            if (vals.size() > 1) {
                for (double v : vals) sd += (v - mean) * (v - mean);
                sd = std::sqrt(sd / static_cast<double>(vals.size() - 1));
            }
            double half = 1.96 * sd / std::sqrt(static_cast<double>(vals.size()));
            points.push_back({x, model.name, mean, mean - half, mean + half, vals.size()});
        }
    }
    return points;
}

void write_curve_csv(const std::string& path, const std::vector<CurvePoint>& points) {
    csv::Table t;
    t.schema_id = "learning-curve";
    t.header = {"x", "model", "mean", "ci_lo", "ci_hi"};
    for (const auto& p : points) {
        t.rows.push_back({std::to_string(p.x), p.model, fmt6(p.mean), fmt6(p.ci_lo),
                          fmt6(p.ci_hi)});
    }
    csv::write_file(path, t);
}

void write_perturb_csv(const std::string& path, const PerturbationReport& report) {
    csv::Table t;
    t.schema_id = "perturbation";
    t.header = {"heuristic", "gain", "error"};
    for (const auto& r : report.rows) {
        std::string err = r.error;
        std::replace(err.begin(), err.end(), ',', ';');
        t.rows.push_back({r.heuristic, r.ok ? fmt6(r.gain) : "", std::move(err)});
    }
    csv::write_file(path, t);
}

}  // namespace dforge::metrics
