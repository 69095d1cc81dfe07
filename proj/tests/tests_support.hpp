#pragma once
// Shared test helpers: matrix builders, random generators, and the
// independent brute-force oracles. Everything here stays test-only and
// deliberately avoids the library's own computation paths.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "dforge/labelmodel.hpp"
#include "dforge/rng.hpp"

namespace dforge::tests {

using heuristics::LabelMatrix;
using labelmodel::GenerativeModel;
using labelmodel::StrategyRanking;

inline LabelMatrix matrix(const std::vector<std::vector<std::string>>& rows) {
    const std::size_t m = rows.empty() ? 0 : rows[0].size();
    std::vector<std::string> names, ids;
    for (std::size_t k = 0; k < m; ++k) names.push_back("h" + std::to_string(k));
    std::vector<CandidateLabel> cells;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        ids.push_back("r" + std::to_string(i));
        for (const auto& cell : rows[i]) {
            cells.push_back(cell == "F" ? CandidateLabel::First
                                        : cell == "S" ? CandidateLabel::Second
                                                      : CandidateLabel::Abstain);
        }
    }
    return heuristics::make_matrix(std::move(names), std::move(ids), std::move(cells));
}

inline LabelMatrix random_matrix(Rng& rng, std::size_t n, std::size_t m) {
    std::vector<std::string> names, ids;
    for (std::size_t k = 0; k < m; ++k) names.push_back("h" + std::to_string(k));
    std::vector<CandidateLabel> cells;
    for (std::size_t i = 0; i < n; ++i) {
        ids.push_back("r" + std::to_string(i));
        for (std::size_t k = 0; k < m; ++k) {
            cells.push_back(static_cast<CandidateLabel>(rng.uniform_below(3)));
        }
    }
    return heuristics::make_matrix(std::move(names), std::move(ids), std::move(cells));
}

// Random weights bounded away from zero so finite differences never cross
// the L1 kink.
inline GenerativeModel random_model(
    Rng& rng, std::size_t m, std::vector<std::pair<std::size_t, std::size_t>> pairs) {
    GenerativeModel model;
    model.n_heuristics = m;
    model.correlation_pairs = std::move(pairs);
    auto draw = [&rng]() {
        double mag = 0.1 + 0.9 * rng.uniform01();
        return rng.coin() ? mag : -mag;
    };
    for (std::size_t k = 0; k < m; ++k) {
        model.w_lab.push_back(draw());
        model.w_acc.push_back(draw());
    }
    for (std::size_t k = 0; k < model.correlation_pairs.size(); ++k) {
        model.w_corr.push_back(draw());
    }
    return model;
}

// Brute-force voter: independent tally with the same 1e-12 tie rule,
// Abstain marks a tie.
inline CandidateLabel oracle_vote_row(const LabelMatrix& L, std::size_t i,
                                      const std::vector<double>* weights) {
    double tf = 0.0, ts = 0.0;
    for (std::size_t m = 0; m < L.n_heuristics; ++m) {
        double w = weights ? (*weights)[m] : 1.0;
        if (L.at(i, m) == CandidateLabel::First) tf += w;
        else if (L.at(i, m) == CandidateLabel::Second) ts += w;
    }
    if (tf - ts > 1e-12) return CandidateLabel::First;
    if (ts - tf > 1e-12) return CandidateLabel::Second;
    return CandidateLabel::Abstain;
}

// ---- brute-force marginal likelihood of the factor graph (Eq. 1) ----

inline double oracle_row_score(const LabelMatrix& L, const GenerativeModel& m, std::size_t i,
                               int y) {
    double s = 0.0;
    for (std::size_t j = 0; j < m.n_heuristics; ++j) {
        CandidateLabel v = L.at(i, j);
        if (v != CandidateLabel::Abstain) s += m.w_lab[j];
        if (static_cast<int>(v) == y) s += m.w_acc[j];
    }
    for (std::size_t p = 0; p < m.correlation_pairs.size(); ++p) {
        auto [a, b] = m.correlation_pairs[p];
        if (L.at(i, a) == L.at(i, b)) s += m.w_corr[p];
    }
    return s;
}

inline double logsumexp(const std::vector<double>& xs) {
    double mx = *std::max_element(xs.begin(), xs.end());
    double sum = 0.0;
    for (double x : xs) sum += std::exp(x - mx);
    return std::log(sum) + mx;
}

// log p_w(Lambda) by enumerating all 2^N latent assignments and the full
// per-scenario configuration space for the partition function.
inline double brute_force_log_marginal(const LabelMatrix& L, const GenerativeModel& m) {
    const std::size_t n = L.n_scenarios;
    std::vector<double> totals;
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            s += oracle_row_score(L, m, i, (mask >> i) & 1 ? 1 : 0);
        }
        totals.push_back(s);
    }

    // Z_cell: every (cell-config, y) of one scenario; Z = Z_cell^N.
    std::size_t n_cfg = 1;
    for (std::size_t j = 0; j < m.n_heuristics; ++j) n_cfg *= 3;
    std::vector<double> zs;
    std::vector<CandidateLabel> lam(m.n_heuristics);
    for (std::size_t cfg = 0; cfg < n_cfg; ++cfg) {
        std::size_t rest = cfg;
        for (std::size_t j = 0; j < m.n_heuristics; ++j) {
            lam[j] = static_cast<CandidateLabel>(rest % 3);
            rest /= 3;
        }
        for (int y = 0; y < 2; ++y) {
            double s = 0.0;
            for (std::size_t j = 0; j < m.n_heuristics; ++j) {
                if (lam[j] != CandidateLabel::Abstain) s += m.w_lab[j];
                if (static_cast<int>(lam[j]) == y) s += m.w_acc[j];
            }
            for (std::size_t p = 0; p < m.correlation_pairs.size(); ++p) {
                auto [a, b] = m.correlation_pairs[p];
                if (lam[a] == lam[b]) s += m.w_corr[p];
            }
            zs.push_back(s);
        }
    }
    return logsumexp(totals) - static_cast<double>(n) * logsumexp(zs);
}

// ---- finite differences for the pseudolikelihood gradient ----

inline double get_flat(const GenerativeModel& m, std::size_t f) {
    const std::size_t M = m.n_heuristics;
    if (f < M) return m.w_lab[f];
    if (f < 2 * M) return m.w_acc[f - M];
    return m.w_corr[f - 2 * M];
}

inline void set_flat(GenerativeModel& m, std::size_t f, double v) {
    const std::size_t M = m.n_heuristics;
    if (f < M) m.w_lab[f] = v;
    else if (f < 2 * M) m.w_acc[f - M] = v;
    else m.w_corr[f - 2 * M] = v;
}

inline std::vector<double> finite_difference_gradient(const LabelMatrix& L,
                                                      const GenerativeModel& m, double h) {
    const std::size_t dim = 2 * m.n_heuristics + m.correlation_pairs.size();
    std::vector<double> g(dim);
    for (std::size_t f = 0; f < dim; ++f) {
        GenerativeModel up = m, down = m;
        set_flat(up, f, get_flat(m, f) + h);
        set_flat(down, f, get_flat(m, f) - h);
        g[f] = (labelmodel::pl_objective(L, up, true) -
                labelmodel::pl_objective(L, down, true)) /
               (2 * h);
    }
    return g;
}

// ---- Borda oracles ----

inline const std::vector<std::string>& ke_strategies() {
    return heuristics::ke_strategy_names();
}

inline std::vector<int> effective_ranks(const StrategyRanking& r,
                                        const std::vector<std::string>& strategies) {
    int worst = 0;
    for (const auto& [name, rank] : r.ranks) worst = std::max(worst, rank);
    std::vector<int> eff(strategies.size(), worst + 1);
    for (const auto& [name, rank] : r.ranks) {
        auto it = std::find(strategies.begin(), strategies.end(), name);
        eff[static_cast<std::size_t>(it - strategies.begin())] = rank;
    }
    return eff;
}

// Literal pair counting: the number of other strategies ranked strictly below.
inline std::vector<int> oracle_borda_one(const StrategyRanking& r,
                                         const std::vector<std::string>& strategies) {
    std::vector<int> eff = effective_ranks(r, strategies);
    std::vector<int> counts(strategies.size(), 0);
    for (std::size_t a = 0; a < strategies.size(); ++a) {
        for (std::size_t b = 0; b < strategies.size(); ++b) {
            if (a != b && eff[b] > eff[a]) ++counts[a];
        }
    }
    return counts;
}

inline std::vector<double> oracle_borda_means(const std::vector<StrategyRanking>& rankings,
                                              const std::vector<std::string>& strategies) {
    std::vector<double> sums(strategies.size(), 0.0);
    for (const auto& r : rankings) {
        auto counts = oracle_borda_one(r, strategies);
        for (std::size_t s = 0; s < strategies.size(); ++s) sums[s] += counts[s];
    }
    for (double& x : sums) x /= static_cast<double>(rankings.size());
    return sums;
}

inline StrategyRanking random_ranking(Rng& rng, const std::vector<std::string>& strategies,
                                      const std::string& id) {
    StrategyRanking r;
    r.respondent_id = id;
    std::vector<std::size_t> order(strategies.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    const std::size_t k = 1 + rng.uniform_below(strategies.size());
    for (std::size_t i = 0; i < k; ++i) {
        r.ranks.push_back({strategies[order[i]], 1 + static_cast<int>(rng.uniform_below(4))});
    }
    return r;
}

}  // namespace dforge::tests
