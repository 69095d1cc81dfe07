#include "dforge/labelmodel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "dforge/csv.hpp"
#include "dforge/rng.hpp"

namespace dforge::labelmodel {

namespace {

constexpr int kF = 0;  // CandidateLabel::First
constexpr int kS = 1;  // CandidateLabel::Second
constexpr int kA = 2;  // CandidateLabel::Abstain
constexpr double kTieEps = 1e-12;

int cell(const LabelMatrix& L, std::size_t i, std::size_t m) {
    return static_cast<int>(L.at(i, m));
}

std::string fmt17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

// ---------------------------------------------------------------- voting

struct Tally {
    CandidateLabel decided = CandidateLabel::Abstain;
    bool tied = false;
};

std::vector<CandidateLabel> finalize(const LabelMatrix& L, std::vector<Tally> tallies,
                                     const TiePolicy& tie) {
    if (tie.kind == TiePolicy::Kind::GenerativeWeights) {
        if (tie.model == nullptr) {
            throw std::invalid_argument("generative_weights tie policy requires a model");
        }
        if (tie.model->n_heuristics != L.n_heuristics) {
            throw std::invalid_argument("tie policy model has " +
                                        std::to_string(tie.model->n_heuristics) +
                                        " heuristics, matrix has " +
                                        std::to_string(L.n_heuristics));
        }
    }
    Rng rng(tie.seed);
    std::vector<CandidateLabel> out(L.n_scenarios);
    for (std::size_t i = 0; i < L.n_scenarios; ++i) {
        if (!tallies[i].tied) {
            out[i] = tallies[i].decided;
            continue;
        }
        switch (tie.kind) {
            case TiePolicy::Kind::AbstainOnTie:
                out[i] = CandidateLabel::Abstain;
                break;
            case TiePolicy::Kind::GenerativeWeights: {
                double tf = 0.0, ts = 0.0;
                for (std::size_t m = 0; m < L.n_heuristics; ++m) {
                    int v = cell(L, i, m);
                    if (v == kF) tf += tie.model->w_acc[m];
                    else if (v == kS) ts += tie.model->w_acc[m];
                }
                if (tf - ts > kTieEps) out[i] = CandidateLabel::First;
                else if (ts - tf > kTieEps) out[i] = CandidateLabel::Second;
                else out[i] = rng.coin() ? CandidateLabel::First : CandidateLabel::Second;
                break;
            }
            case TiePolicy::Kind::Random:
                out[i] = rng.coin() ? CandidateLabel::First : CandidateLabel::Second;
                break;
        }
    }
    return out;
}

}  // namespace

std::vector<CandidateLabel> majority_vote(const LabelMatrix& L, const TiePolicy& tie) {
    if (L.n_scenarios == 0) throw std::invalid_argument("majority_vote: empty matrix");
    std::vector<Tally> tallies(L.n_scenarios);
    for (std::size_t i = 0; i < L.n_scenarios; ++i) {
        int nf = 0, ns = 0;
        for (std::size_t m = 0; m < L.n_heuristics; ++m) {
            int v = cell(L, i, m);
            if (v == kF) ++nf;
            else if (v == kS) ++ns;
        }
        if (nf > ns) tallies[i].decided = CandidateLabel::First;
        else if (ns > nf) tallies[i].decided = CandidateLabel::Second;
        else tallies[i].tied = true;
    }
    return finalize(L, std::move(tallies), tie);
}

std::vector<CandidateLabel> weighted_vote(const LabelMatrix& L, const VoteWeights& weights,
                                          const TiePolicy& tie) {
    if (weights.values.size() != L.n_heuristics) {
        throw std::invalid_argument("weighted_vote: " + std::to_string(weights.values.size()) +
                                    " weights for " + std::to_string(L.n_heuristics) +
                                    " heuristics");
    }
    std::vector<Tally> tallies(L.n_scenarios);

    // Exact integer tallies when every weight has a decimal representation.
    bool exact_ok = weights.exact.has_value();
    std::vector<long long> units;
    if (exact_ok) {
        int common = 0;
        for (const Decimal& d : *weights.exact) common = std::max(common, d.scale);
        for (const Decimal& d : *weights.exact) {
            long long u = d.units;
            for (int k = d.scale; k < common; ++k) {
                if (u > (1LL << 61) / 10) { exact_ok = false; break; }
                u *= 10;
            }
            if (!exact_ok) break;
            units.push_back(u);
        }
    }

    for (std::size_t i = 0; i < L.n_scenarios; ++i) {
        if (exact_ok) {
            __int128 tf = 0, ts = 0;
            for (std::size_t m = 0; m < L.n_heuristics; ++m) {
                int v = cell(L, i, m);
                if (v == kF) tf += units[m];
                else if (v == kS) ts += units[m];
            }
            if (tf > ts) tallies[i].decided = CandidateLabel::First;
            else if (ts > tf) tallies[i].decided = CandidateLabel::Second;
            else tallies[i].tied = true;
        } else {
            double tf = 0.0, ts = 0.0;
            for (std::size_t m = 0; m < L.n_heuristics; ++m) {
                int v = cell(L, i, m);
                if (v == kF) tf += weights.values[m];
                else if (v == kS) ts += weights.values[m];
            }
            if (tf - ts > kTieEps) tallies[i].decided = CandidateLabel::First;
            else if (ts - tf > kTieEps) tallies[i].decided = CandidateLabel::Second;
            else tallies[i].tied = true;
        }
    }
    return finalize(L, std::move(tallies), tie);
}

// ---------------------------------------------------------------- decimal

double Decimal::value() const {
    double v = static_cast<double>(units);
    for (int k = 0; k < scale; ++k) v /= 10.0;
    return v;
}

std::string Decimal::str() const {
    long long p = 1;
    for (int k = 0; k < scale; ++k) p *= 10;
    std::ostringstream out;
    out << units / p;
    if (scale > 0) {
        std::string frac = std::to_string(units % p);
        out << '.' << std::string(scale - frac.size(), '0') << frac;
    }
    return out.str();
}

Decimal Decimal::parse(const std::string& text) {
    if (text.empty()) throw std::invalid_argument("empty decimal");
    Decimal d;
    std::size_t i = 0;
    bool any_digit = false;
    for (; i < text.size() && text[i] != '.'; ++i) {
        if (!std::isdigit(static_cast<unsigned char>(text[i]))) {
            throw std::invalid_argument("bad decimal '" + text + "'");
        }
        d.units = d.units * 10 + (text[i] - '0');
        any_digit = true;
    }
    if (i < text.size()) {  // fractional part
        for (++i; i < text.size(); ++i) {
            if (!std::isdigit(static_cast<unsigned char>(text[i]))) {
                throw std::invalid_argument("bad decimal '" + text + "'");
            }
            if (d.scale >= 18) throw std::invalid_argument("too many digits in '" + text + "'");
            d.units = d.units * 10 + (text[i] - '0');
            ++d.scale;
            any_digit = true;
        }
    }
    if (!any_digit) throw std::invalid_argument("bad decimal '" + text + "'");
    return d;
}

std::optional<Decimal> Decimal::div_exact(long long divisor) const {
    if (divisor <= 0) throw std::invalid_argument("div_exact: non-positive divisor");
    long long u = units;
    int s = scale;
    while (true) {
        if (u % divisor == 0) return Decimal{u / divisor, s};
        if (s >= 18 || u > (1LL << 61) / 10) return std::nullopt;
        u *= 10;
        ++s;
    }
}

VoteWeights VoteWeights::from_values(std::vector<double> v) {
    VoteWeights w;
    w.values = std::move(v);
    return w;
}

VoteWeights VoteWeights::from_decimals(std::vector<Decimal> d) {
    VoteWeights w;
    w.values.reserve(d.size());
    for (const Decimal& x : d) w.values.push_back(x.value());
    w.exact = std::move(d);
    return w;
}

// ------------------------------------------------------------------ borda

std::vector<int> borda_counts_one(const StrategyRanking& r,
                                  const std::vector<std::string>& strategies) {
    if (r.ranks.empty()) throw std::invalid_argument("ranking without explicit ranks");
    const std::size_t S = strategies.size();
    int worst_explicit = 0;
    std::vector<int> eff(S, -1);
    for (const auto& [name, rank] : r.ranks) {
        if (rank < 1) throw std::invalid_argument("non-positive rank for '" + name + "'");
        auto it = std::find(strategies.begin(), strategies.end(), name);
        if (it == strategies.end()) {
            throw std::invalid_argument("unknown strategy name '" + name + "'");
        }
        eff[static_cast<std::size_t>(it - strategies.begin())] = rank;
        worst_explicit = std::max(worst_explicit, rank);
    }
    for (int& e : eff) {
        if (e < 0) e = worst_explicit + 1;  // absent strategies tie below the worst
    }
    std::vector<int> sorted = eff;
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> counts(S);
    for (std::size_t s = 0; s < S; ++s) {
        auto past = std::upper_bound(sorted.begin(), sorted.end(), eff[s]);
        counts[s] = static_cast<int>(sorted.end() - past);  // strictly worse ranks
    }
    return counts;
}

std::vector<double> borda_counts(const std::vector<StrategyRanking>& rankings,
                                 const std::vector<std::string>& strategies) {
    if (rankings.empty()) throw std::invalid_argument("borda_counts: no rankings");
    std::vector<double> sums(strategies.size(), 0.0);
    for (const auto& r : rankings) {
        std::vector<int> counts = borda_counts_one(r, strategies);
        for (std::size_t s = 0; s < strategies.size(); ++s) sums[s] += counts[s];
    }
    for (double& x : sums) x /= static_cast<double>(rankings.size());
    return sums;
}

VoteWeights scale_weights(const std::vector<double>& counts, std::size_t n_strategies,
                          ScaleMode mode) {
    if (n_strategies < 2) throw std::invalid_argument("scale_weights: need at least 2 strategies");
    const double max_count = static_cast<double>(n_strategies - 1);
    std::vector<double> values;
    values.reserve(counts.size());
    if (mode == ScaleMode::MinMax) {
        double lo = *std::min_element(counts.begin(), counts.end());
        double hi = *std::max_element(counts.begin(), counts.end());
        double span = hi - lo;
        for (double c : counts) values.push_back(span > 0 ? (c - lo) / span : 0.0);
        return VoteWeights::from_values(std::move(values));
    }
    for (double c : counts) {
        if (c < -1e-9 || c > max_count + 1e-9) {
            throw std::invalid_argument("Borda count " + std::to_string(c) + " outside [0, " +
                                        std::to_string(n_strategies - 1) + "]");
        }
        values.push_back(std::clamp(c / max_count, 0.0, 1.0));
    }
    return VoteWeights::from_values(std::move(values));
}

VoteWeights scale_weights(const std::vector<Decimal>& counts, std::size_t n_strategies,
                          ScaleMode mode) {
    if (mode == ScaleMode::MinMax) {
        std::vector<double> values;
        for (const Decimal& d : counts) values.push_back(d.value());
        return scale_weights(values, n_strategies, mode);
    }
    if (n_strategies < 2) throw std::invalid_argument("scale_weights: need at least 2 strategies");
    std::vector<Decimal> scaled;
    scaled.reserve(counts.size());
    bool all_exact = true;
    for (const Decimal& d : counts) {
        if (d.value() > static_cast<double>(n_strategies - 1) + 1e-9) {
            throw std::invalid_argument("Borda count " + d.str() + " outside [0, " +
                                        std::to_string(n_strategies - 1) + "]");
        }
        auto q = d.div_exact(static_cast<long long>(n_strategies - 1));
        if (!q) { all_exact = false; break; }
        scaled.push_back(*q);
    }
    if (all_exact) return VoteWeights::from_decimals(std::move(scaled));
    std::vector<double> values;
    for (const Decimal& d : counts) values.push_back(d.value());
    return scale_weights(values, n_strategies, mode);
}

// ----------------------------------------------------- generative model

namespace {

struct Packed {
    // Weight layout [w_lab | w_acc | w_corr], plus per-column pair adjacency.
    std::size_t M;
    std::size_t C;
    std::vector<double> w;                                     // 2M + C
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> pairs_of;  // col -> (pair idx, partner)

    double lab(std::size_t m) const { return w[m]; }
    double acc(std::size_t m) const { return w[M + m]; }
    double corr(std::size_t p) const { return w[2 * M + p]; }
};

Packed pack(const GenerativeModel& m) {
    Packed p;
    p.M = m.n_heuristics;
    p.C = m.correlation_pairs.size();
    if (m.w_lab.size() != p.M || m.w_acc.size() != p.M || m.w_corr.size() != p.C) {
        throw std::invalid_argument("generative model weight vectors have inconsistent sizes");
    }
    p.w.reserve(2 * p.M + p.C);
    p.w.insert(p.w.end(), m.w_lab.begin(), m.w_lab.end());
    p.w.insert(p.w.end(), m.w_acc.begin(), m.w_acc.end());
    p.w.insert(p.w.end(), m.w_corr.begin(), m.w_corr.end());
    p.pairs_of.resize(p.M);
    for (std::size_t idx = 0; idx < m.correlation_pairs.size(); ++idx) {
        auto [j, k] = m.correlation_pairs[idx];
        if (j >= k || k >= p.M) throw std::invalid_argument("bad correlation pair");
        p.pairs_of[j].push_back({idx, k});
        p.pairs_of[k].push_back({idx, j});
    }
    return p;
}

void unpack(const std::vector<double>& w, GenerativeModel& m) {
    const std::size_t M = m.n_heuristics;
    m.w_lab.assign(w.begin(), w.begin() + M);
    m.w_acc.assign(w.begin() + M, w.begin() + 2 * M);
    m.w_corr.assign(w.begin() + 2 * M, w.end());
}

// Free-phase expectations of the factors touched by term (i, j); computed
// exactly from the 6 configurations or estimated by Gibbs sweeps.
struct TermStats {
    double e_lab;            // E[ cell != Abstain ]
    double e_accj;           // E[ cell == y ]
    double p_y_first;        // P(y = First)
    double marg_lambda[3];   // marginal of the cell value
};

struct TermContext {
    double acc_f;   // sum of accuracy factors consistent with y=F, column j removed
    double acc_s;
    double corr_j[3];  // correlation factor sum for cell value F/S/A
    double w_lab_j;
    double w_acc_j;
    int vj;
};

// Scores of the 6 (cell value, y) configurations, common terms dropped.
void config_scores(const TermContext& t, double s[3][2]) {
    for (int lam = 0; lam < 3; ++lam) {
        for (int y = 0; y < 2; ++y) {
            double v = (y == kF ? t.acc_f : t.acc_s) + t.corr_j[lam];
            if (lam != kA) v += t.w_lab_j;
            if (lam == y) v += t.w_acc_j;
            s[lam][y] = v;
        }
    }
}

double term_objective(const TermContext& t) {
    double s[3][2];
    config_scores(t, s);
    double zmax = s[0][0], nmax = s[t.vj][0];
    for (int lam = 0; lam < 3; ++lam)
        for (int y = 0; y < 2; ++y) zmax = std::max(zmax, s[lam][y]);
    nmax = std::max(nmax, s[t.vj][1]);
    double zsum = 0.0, nsum = 0.0;
    for (int lam = 0; lam < 3; ++lam)
        for (int y = 0; y < 2; ++y) zsum += std::exp(s[lam][y] - zmax);
    for (int y = 0; y < 2; ++y) nsum += std::exp(s[t.vj][y] - nmax);
    return (std::log(zsum) + zmax) - (std::log(nsum) + nmax);
}

// r[y]: clamped-phase distribution of the latent label.
void clamped_distribution(const TermContext& t, double r[2]) {
    double s[3][2];
    config_scores(t, s);
    double m = std::max(s[t.vj][0], s[t.vj][1]);
    double e0 = std::exp(s[t.vj][0] - m), e1 = std::exp(s[t.vj][1] - m);
    r[0] = e0 / (e0 + e1);
    r[1] = e1 / (e0 + e1);
}

TermStats exact_stats(const TermContext& t) {
    double s[3][2];
    config_scores(t, s);
    double zmax = s[0][0];
    for (int lam = 0; lam < 3; ++lam)
        for (int y = 0; y < 2; ++y) zmax = std::max(zmax, s[lam][y]);
    double q[3][2], zsum = 0.0;
    for (int lam = 0; lam < 3; ++lam)
        for (int y = 0; y < 2; ++y) {
            q[lam][y] = std::exp(s[lam][y] - zmax);
            zsum += q[lam][y];
        }
    TermStats st{};
    for (int lam = 0; lam < 3; ++lam) {
        double marg = 0.0;
        for (int y = 0; y < 2; ++y) {
            q[lam][y] /= zsum;
            marg += q[lam][y];
        }
        st.marg_lambda[lam] = marg;
    }
    st.e_lab = st.marg_lambda[kF] + st.marg_lambda[kS];
    st.e_accj = q[kF][kF] + q[kS][kS];
    st.p_y_first = q[kF][kF] + q[kS][kF] + q[kA][kF];
    return st;
}

TermStats gibbs_stats(const TermContext& t, int burn_in, int samples, Rng& rng) {
    int lam = t.vj;
    int y = kF;
    long long n_lab = 0, n_accj = 0, n_yf = 0, n_marg[3] = {0, 0, 0};
    const int total = burn_in + samples;
    for (int sweep = 0; sweep < total; ++sweep) {
        // cell value given y
        double s[3];
        for (int l = 0; l < 3; ++l) {
            double v = t.corr_j[l];
            if (l != kA) v += t.w_lab_j;
            if (l == y) v += t.w_acc_j;
            s[l] = v;
        }
        double m = std::max({s[0], s[1], s[2]});
        double e0 = std::exp(s[0] - m), e1 = std::exp(s[1] - m), e2 = std::exp(s[2] - m);
        double u = rng.uniform01() * (e0 + e1 + e2);
        lam = u < e0 ? 0 : (u < e0 + e1 ? 1 : 2);
        // latent label given cell value
        double sf = t.acc_f + (lam == kF ? t.w_acc_j : 0.0);
        double ss = t.acc_s + (lam == kS ? t.w_acc_j : 0.0);
        double my = std::max(sf, ss);
        double pf = std::exp(sf - my) / (std::exp(sf - my) + std::exp(ss - my));
        y = rng.uniform01() < pf ? kF : kS;
        if (sweep >= burn_in) {
            if (lam != kA) ++n_lab;
            if (lam == y) ++n_accj;
            if (y == kF) ++n_yf;
            ++n_marg[lam];
        }
    }
    TermStats st{};
    const double n = static_cast<double>(samples);
    st.e_lab = n_lab / n;
    st.e_accj = n_accj / n;
    st.p_y_first = n_yf / n;
    for (int l = 0; l < 3; ++l) st.marg_lambda[l] = n_marg[l] / n;
    return st;
}

TermContext make_context(const LabelMatrix& L, const Packed& p, std::size_t i, std::size_t j,
                         double acc_f_total, double acc_s_total) {
    TermContext t{};
    t.vj = cell(L, i, j);
    t.w_lab_j = p.lab(j);
    t.w_acc_j = p.acc(j);
    t.acc_f = acc_f_total - (t.vj == kF ? t.w_acc_j : 0.0);
    t.acc_s = acc_s_total - (t.vj == kS ? t.w_acc_j : 0.0);
    t.corr_j[0] = t.corr_j[1] = t.corr_j[2] = 0.0;
    for (auto [pidx, partner] : p.pairs_of[j]) {
        t.corr_j[cell(L, i, partner)] += p.corr(pidx);
    }
    return t;
}

void row_acc_totals(const LabelMatrix& L, const Packed& p, std::size_t i, double& acc_f,
                    double& acc_s) {
    acc_f = acc_s = 0.0;
    for (std::size_t m = 0; m < p.M; ++m) {
        int v = cell(L, i, m);
        if (v == kF) acc_f += p.acc(m);
        else if (v == kS) acc_s += p.acc(m);
    }
}

double objective_impl(const LabelMatrix& L, const Packed& p) {
    double total = 0.0;
    for (std::size_t i = 0; i < L.n_scenarios; ++i) {
        double acc_f, acc_s;
        row_acc_totals(L, p, i, acc_f, acc_s);
        for (std::size_t j = 0; j < p.M; ++j) {
            total += term_objective(make_context(L, p, i, j, acc_f, acc_s));
        }
    }
    return total;
}

std::vector<double> gradient_impl(const LabelMatrix& L, const Packed& p,
                                  GenerativeConfig::GradientMode mode, int burn_in, int samples,
                                  Rng* rng) {
    std::vector<double> g(p.w.size(), 0.0);
    std::vector<double> dpf(p.M);
    for (std::size_t i = 0; i < L.n_scenarios; ++i) {
        double acc_f, acc_s;
        row_acc_totals(L, p, i, acc_f, acc_s);
        double dpf_total = 0.0;
        for (std::size_t j = 0; j < p.M; ++j) {
            TermContext t = make_context(L, p, i, j, acc_f, acc_s);
            TermStats st = (mode == GenerativeConfig::GradientMode::Exact)
                               ? exact_stats(t)
                               : gibbs_stats(t, burn_in, samples, *rng);
            double r[2];
            clamped_distribution(t, r);
            // propensity factor of column j
            g[j] += st.e_lab - (t.vj != kA ? 1.0 : 0.0);
            // accuracy factor of column j
            double e_accj_clamped = (t.vj == kF) ? r[kF] : (t.vj == kS ? r[kS] : 0.0);
            g[p.M + j] += st.e_accj - e_accj_clamped;
            // correlation factors of pairs containing j
            for (auto [pidx, partner] : p.pairs_of[j]) {
                int pv = cell(L, i, partner);
                g[2 * p.M + pidx] += st.marg_lambda[pv] - (t.vj == pv ? 1.0 : 0.0);
            }
            dpf[j] = st.p_y_first - r[kF];
            dpf_total += dpf[j];
        }
        // accuracy factors of the fixed columns, via the latent-label shift
        for (std::size_t m = 0; m < p.M; ++m) {
            int v = cell(L, i, m);
            if (v == kA) continue;
            double contribution = dpf_total - dpf[m];
            g[p.M + m] += (v == kF) ? contribution : -contribution;
        }
    }
    return g;
}

void validate_pairs(std::size_t M,
                    const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
    std::vector<std::pair<std::size_t, std::size_t>> sorted = pairs;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t idx = 0; idx < sorted.size(); ++idx) {
        auto [j, k] = sorted[idx];
        if (j >= k || k >= M) {
            throw std::invalid_argument("correlation pair (" + std::to_string(j) + "," +
                                        std::to_string(k) + ") invalid for M=" +
                                        std::to_string(M));
        }
        if (idx > 0 && sorted[idx] == sorted[idx - 1]) {
            throw std::invalid_argument("duplicate correlation pair");
        }
    }
}

}  // namespace

double pl_objective(const LabelMatrix& L, const GenerativeModel& m, bool include_l1) {
    Packed p = pack(m);
    double obj = objective_impl(L, p);
    if (include_l1) {
        for (double w : p.w) obj += m.config.epsilon * std::abs(w);
    }
    return obj;
}

std::vector<double> pl_gradient(const LabelMatrix& L, const GenerativeModel& m, bool include_l1) {
    Packed p = pack(m);
    std::vector<double> g =
        gradient_impl(L, p, GenerativeConfig::GradientMode::Exact, 0, 0, nullptr);
    if (include_l1) {
        for (std::size_t f = 0; f < g.size(); ++f) {
            if (p.w[f] > 0) g[f] += m.config.epsilon;
            else if (p.w[f] < 0) g[f] -= m.config.epsilon;
        }
    }
    return g;
}

double log_partition_cell(const GenerativeModel& m) {
    Packed p = pack(m);
    const std::size_t M = p.M;
    // connected components of the correlation-pair graph
    std::vector<std::size_t> comp(M);
    for (std::size_t i = 0; i < M; ++i) comp[i] = i;
    bool changed = true;
    while (changed) {
        changed = false;
        for (auto [j, k] : m.correlation_pairs) {
            std::size_t c = std::min(comp[j], comp[k]);
            if (comp[j] != c || comp[k] != c) {
                comp[j] = comp[k] = c;
                changed = true;
            }
        }
    }
    std::vector<std::vector<std::size_t>> members(M);
    for (std::size_t i = 0; i < M; ++i) members[comp[i]].push_back(i);

    double log_sum_y[2] = {0.0, 0.0};
    for (const auto& group : members) {
        if (group.empty()) continue;
        if (group.size() > 16) {
            throw std::runtime_error("correlation component too large for exact partition");
        }
        // enumerate the 3^|group| cell configurations
        std::size_t n_cfg = 1;
        for (std::size_t k = 0; k < group.size(); ++k) n_cfg *= 3;
        for (int y = 0; y < 2; ++y) {
            std::vector<double> scores;
            scores.reserve(n_cfg);
            std::vector<int> lam(group.size());
            for (std::size_t cfg = 0; cfg < n_cfg; ++cfg) {
                std::size_t rest = cfg;
                for (std::size_t k = 0; k < group.size(); ++k) {
                    lam[k] = static_cast<int>(rest % 3);
                    rest /= 3;
                }
                double s = 0.0;
                for (std::size_t k = 0; k < group.size(); ++k) {
                    if (lam[k] != kA) s += p.lab(group[k]);
                    if (lam[k] == y) s += p.acc(group[k]);
                }
                for (std::size_t idx = 0; idx < m.correlation_pairs.size(); ++idx) {
                    auto [a, b] = m.correlation_pairs[idx];
                    auto ia = std::find(group.begin(), group.end(), a);
                    if (ia == group.end()) continue;
                    auto ib = std::find(group.begin(), group.end(), b);
                    if (lam[ia - group.begin()] == lam[ib - group.begin()]) s += p.corr(idx);
                }
                scores.push_back(s);
            }
            double mx = *std::max_element(scores.begin(), scores.end());
            double sum = 0.0;
            for (double s : scores) sum += std::exp(s - mx);
            log_sum_y[y] += std::log(sum) + mx;
        }
    }
    double mx = std::max(log_sum_y[0], log_sum_y[1]);
    return std::log(std::exp(log_sum_y[0] - mx) + std::exp(log_sum_y[1] - mx)) + mx;
}

double marginal_log_likelihood(const LabelMatrix& L, const GenerativeModel& m) {
    Packed p = pack(m);
    double total = 0.0;
    for (std::size_t i = 0; i < L.n_scenarios; ++i) {
        double base = 0.0;  // factors constant in y
        double acc_f, acc_s;
        row_acc_totals(L, p, i, acc_f, acc_s);
        for (std::size_t j = 0; j < p.M; ++j) {
            if (cell(L, i, j) != kA) base += p.lab(j);
        }
        for (std::size_t idx = 0; idx < m.correlation_pairs.size(); ++idx) {
            auto [a, b] = m.correlation_pairs[idx];
            if (cell(L, i, a) == cell(L, i, b)) base += p.corr(idx);
        }
        double sf = base + acc_f, ss = base + acc_s;
        double mx = std::max(sf, ss);
        total += std::log(std::exp(sf - mx) + std::exp(ss - mx)) + mx;
    }
    return total - static_cast<double>(L.n_scenarios) * log_partition_cell(m);
}

GenerativeModel fit_generative(const LabelMatrix& L,
                               std::vector<std::pair<std::size_t, std::size_t>> correlation_pairs,
                               const GenerativeConfig& config) {
    if (L.n_scenarios == 0 || L.n_heuristics == 0) {
        throw std::invalid_argument("fit_generative: empty label matrix");
    }
    if (config.epsilon < 0 || config.learning_rate <= 0 || config.epochs < 0) {
        throw std::invalid_argument("fit_generative: invalid config");
    }
    if (config.mode == GenerativeConfig::GradientMode::Gibbs &&
        (config.gibbs_samples < 1 || config.burn_in < 0)) {
        throw std::invalid_argument("fit_generative: invalid Gibbs sample counts");
    }
    validate_pairs(L.n_heuristics, correlation_pairs);

    GenerativeModel model;
    model.n_heuristics = L.n_heuristics;
    model.correlation_pairs = std::move(correlation_pairs);
    model.w_lab.assign(L.n_heuristics, 0.0);
    model.w_acc.assign(L.n_heuristics, 0.0);
    model.w_corr.assign(model.correlation_pairs.size(), 0.0);
    model.config = config;

    Packed p = pack(model);
    Rng rng(config.seed);
    const double step = config.learning_rate / static_cast<double>(L.n_scenarios);
    const double shrink = step * config.epsilon;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::vector<double> g = gradient_impl(L, p, config.mode, config.burn_in,
                                              config.gibbs_samples, &rng);
        for (std::size_t f = 0; f < p.w.size(); ++f) {
            double w = p.w[f] - step * g[f];
            // proximal step for the L1 term
            if (w > shrink) w -= shrink;
            else if (w < -shrink) w += shrink;
            else w = 0.0;
            if (!std::isfinite(w)) {
                throw std::runtime_error("fit_generative: non-finite weight at epoch " +
                                         std::to_string(epoch) + " (diverged learning rate?)");
            }
            p.w[f] = w;
        }
    }
    if (!std::isfinite(objective_impl(L, p))) {
        throw std::runtime_error("fit_generative: non-finite objective after training");
    }
    unpack(p.w, model);
    return model;
}

std::vector<std::pair<std::size_t, std::size_t>> select_correlation_pairs(const LabelMatrix& L,
                                                                          double tau) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    if (L.n_scenarios == 0) return pairs;
    for (std::size_t j = 0; j < L.n_heuristics; ++j) {
        for (std::size_t k = j + 1; k < L.n_heuristics; ++k) {
            std::size_t both = 0;
            for (std::size_t i = 0; i < L.n_scenarios; ++i) {
                if (cell(L, i, j) != kA && cell(L, i, k) != kA) ++both;
            }
            if (static_cast<double>(both) / static_cast<double>(L.n_scenarios) >= tau) {
                pairs.push_back({j, k});
            }
        }
    }
    return pairs;
}

std::vector<ProbLabel> predict_marginals(const GenerativeModel& m, const LabelMatrix& L) {
    if (m.n_heuristics != L.n_heuristics) {
        throw std::invalid_argument("predict_marginals: model has " +
                                    std::to_string(m.n_heuristics) + " heuristics, matrix has " +
                                    std::to_string(L.n_heuristics));
    }
    std::vector<ProbLabel> out(L.n_scenarios);
    for (std::size_t i = 0; i < L.n_scenarios; ++i) {
        double acc_f = 0.0, acc_s = 0.0;
        for (std::size_t j = 0; j < L.n_heuristics; ++j) {
            int v = cell(L, i, j);
            if (v == kF) acc_f += m.w_acc[j];
            else if (v == kS) acc_s += m.w_acc[j];
        }
        out[i].p_first = 1.0 / (1.0 + std::exp(acc_s - acc_f));
    }
    return out;
}

std::vector<Choice> round_labels(const std::vector<ProbLabel>& probs, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Choice> out;
    out.reserve(probs.size());
    for (const ProbLabel& p : probs) {
        if (p.p_first > 0.5) out.push_back(Choice::First);
        else if (p.p_first < 0.5) out.push_back(Choice::Second);
        else out.push_back(rng.coin() ? Choice::First : Choice::Second);
    }
    return out;
}

AggregateResult aggregate_labels(const LabelMatrix& L, const LabelModelConfig& cfg) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    switch (cfg.correlations.kind) {
        case CorrelationSpec::Kind::None: break;
        case CorrelationSpec::Kind::Explicit: pairs = cfg.correlations.pairs; break;
        case CorrelationSpec::Kind::AutoOverlap:
            pairs = select_correlation_pairs(L, cfg.correlations.tau);
            break;
    }

    AggregateResult res;
    if (cfg.kind == LabelModelConfig::Kind::Generative) {
        res.model = fit_generative(L, pairs, cfg.gen);
        res.probs = predict_marginals(*res.model, L);
        std::vector<Choice> rounded = round_labels(res.probs, cfg.rounding_seed);
        res.labels.reserve(rounded.size());
        for (Choice c : rounded) res.labels.push_back(to_candidate(c));
        return res;
    }

    std::optional<GenerativeModel> tie_model;
    TiePolicy tie;
    switch (cfg.tie) {
        case TiePolicy::Kind::AbstainOnTie: tie = TiePolicy::abstain_on_tie(); break;
        case TiePolicy::Kind::GenerativeWeights:
            tie_model = fit_generative(L, pairs, cfg.gen);
            tie = TiePolicy::generative(*tie_model, cfg.tie_seed);
            break;
        case TiePolicy::Kind::Random: tie = TiePolicy::random(cfg.tie_seed); break;
    }
    res.labels = (cfg.kind == LabelModelConfig::Kind::Majority)
                     ? majority_vote(L, tie)
                     : weighted_vote(L, cfg.weights, tie);
    if (tie_model) res.model = std::move(tie_model);
    res.probs.reserve(res.labels.size());
    for (CandidateLabel l : res.labels) {
        double p = l == CandidateLabel::First ? 1.0 : (l == CandidateLabel::Second ? 0.0 : 0.5);
        res.probs.push_back({p});
    }
    return res;
}

// ------------------------------------------------------------- model io

void save_model(const std::string& path, const GenerativeModel& m) {
    std::ostringstream out;
    auto weight_array = [&out](const char* name, const std::vector<double>& v) {
        out << "  \"" << name << "\": [";
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) out << ", ";
            out << fmt17(v[i]);
        }
        out << "],\n";
    };
    out << "{\n";
    out << "  \"version\": 1,\n";
    out << "  \"M\": " << m.n_heuristics << ",\n";
    out << "  \"pairs\": [";
    for (std::size_t i = 0; i < m.correlation_pairs.size(); ++i) {
        if (i) out << ", ";
        out << "[" << m.correlation_pairs[i].first << ", " << m.correlation_pairs[i].second << "]";
    }
    out << "],\n";
    weight_array("w_lab", m.w_lab);
    weight_array("w_acc", m.w_acc);
    weight_array("w_corr", m.w_corr);
    out << "  \"config\": {\n";
    out << "    \"epsilon\": " << fmt17(m.config.epsilon) << ",\n";
    out << "    \"learning_rate\": " << fmt17(m.config.learning_rate) << ",\n";
    out << "    \"epochs\": " << m.config.epochs << ",\n";
    out << "    \"gradient_mode\": \""
        << (m.config.mode == GenerativeConfig::GradientMode::Exact ? "exact" : "gibbs")
        << "\",\n";
    out << "    \"gibbs_samples\": " << m.config.gibbs_samples << ",\n";
    out << "    \"burn_in\": " << m.config.burn_in << ",\n";
    out << "    \"seed\": " << m.config.seed << "\n";
    out << "  }\n";
    out << "}\n";
    csv::write_text_file(path, out.str());
}

GenerativeModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open model file '" + path + "'");
    nlohmann::json j = nlohmann::json::parse(in);
    if (j.at("version").get<int>() != 1) {
        throw std::runtime_error(path + ": unsupported model version");
    }
    GenerativeModel m;
    m.n_heuristics = j.at("M").get<std::size_t>();
    for (const auto& pr : j.at("pairs")) {
        m.correlation_pairs.push_back({pr.at(0).get<std::size_t>(), pr.at(1).get<std::size_t>()});
    }
    m.w_lab = j.at("w_lab").get<std::vector<double>>();
    m.w_acc = j.at("w_acc").get<std::vector<double>>();
    m.w_corr = j.at("w_corr").get<std::vector<double>>();
    const auto& c = j.at("config");
    m.config.epsilon = c.at("epsilon").get<double>();
    m.config.learning_rate = c.at("learning_rate").get<double>();
    m.config.epochs = c.at("epochs").get<int>();
    m.config.mode = c.at("gradient_mode").get<std::string>() == "gibbs"
                        ? GenerativeConfig::GradientMode::Gibbs
                        : GenerativeConfig::GradientMode::Exact;
    m.config.gibbs_samples = c.at("gibbs_samples").get<int>();
    m.config.burn_in = c.at("burn_in").get<int>();
    m.config.seed = c.at("seed").get<std::uint64_t>();
    if (m.w_lab.size() != m.n_heuristics || m.w_acc.size() != m.n_heuristics ||
        m.w_corr.size() != m.correlation_pairs.size()) {
        throw std::runtime_error(path + ": weight vector sizes do not match M and pairs");
    }
    validate_pairs(m.n_heuristics, m.correlation_pairs);
    return m;
}

}  // namespace dforge::labelmodel
