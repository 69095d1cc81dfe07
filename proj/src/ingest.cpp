#include "dforge/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <stdexcept>

#include "dforge/csv.hpp"
#include "dforge/heuristics.hpp"
#include "dforge/rng.hpp"

namespace dforge::ingest {

namespace {

const std::string kDefaultMapCsv = R"(# dilemma-forge v1 abstraction-map
character,male,female,young,old,infant,pregnant,fat,fit,working,medical,homeless,criminal,human,non_human,passenger,law_abiding,law_violating
man,1,0,0,0,0,0,0,0,0,0,0,0,1,0,0,0,0
woman,0,1,0,0,0,0,0,0,0,0,0,0,1,0,0,0,0
pregnant,0,1,0,0,0,1,0,0,0,0,0,0,1,0,0,0,0
stroller,0,0,1,0,1,0,0,0,0,0,0,0,1,0,0,0,0
old_man,1,0,0,1,0,0,0,0,0,0,0,0,1,0,0,0,0
old_woman,0,1,0,1,0,0,0,0,0,0,0,0,1,0,0,0,0
boy,1,0,1,0,0,0,0,0,0,0,0,0,1,0,0,0,0
girl,0,1,1,0,0,0,0,0,0,0,0,0,1,0,0,0,0
homeless,0,0,0,0,0,0,0,0,0,0,1,0,1,0,0,0,0
large_woman,0,1,0,0,0,0,1,0,0,0,0,0,1,0,0,0,0
large_man,1,0,0,0,0,0,1,0,0,0,0,0,1,0,0,0,0
criminal,0,0,0,0,0,0,0,0,0,0,0,1,1,0,0,0,0
male_executive,1,0,0,0,0,0,0,0,1,0,0,0,1,0,0,0,0
female_executive,0,1,0,0,0,0,0,0,1,0,0,0,1,0,0,0,0
female_athlete,0,1,0,0,0,0,0,1,0,0,0,0,1,0,0,0,0
male_athlete,1,0,0,0,0,0,0,1,0,0,0,0,1,0,0,0,0
female_doctor,0,1,0,0,0,0,0,0,0,1,0,0,1,0,0,0,0
male_doctor,1,0,0,0,0,0,0,0,0,1,0,0,1,0,0,0,0
dog,0,0,0,0,0,0,0,0,0,0,0,0,0,1,0,0,0
cat,0,0,0,0,0,0,0,0,0,0,0,0,0,1,0,0,0
)";

AbstractionMap parse_abstraction_map(const csv::Table& t, const std::string& origin) {
    const auto& feats = mm_schema().features;
    if (t.header.size() != feats.size() + 1 || t.header[0] != "character") {
        throw std::runtime_error(origin + ": header must be 'character' plus the 17 features");
    }
    for (std::size_t f = 0; f < feats.size(); ++f) {
        if (t.header[f + 1] != feats[f]) {
            throw std::runtime_error(origin + ": feature column " + std::to_string(f + 1) +
                                     " must be '" + feats[f] + "'");
        }
    }
    AbstractionMap map;
    const int human = mm_schema().feature_index("human");
    const int non_human = mm_schema().feature_index("non_human");
    for (const auto& row : t.rows) {
        std::vector<std::int32_t> vals;
        for (std::size_t f = 1; f < row.size(); ++f) {
            if (row[f] != "0" && row[f] != "1") {
                throw std::runtime_error(origin + ": cell for '" + row[0] + "' must be 0 or 1");
            }
            vals.push_back(row[f] == "1" ? 1 : 0);
        }
        if (vals[static_cast<std::size_t>(human)] == vals[static_cast<std::size_t>(non_human)]) {
            throw std::runtime_error(origin + ": character '" + row[0] +
                                     "' must be exactly one of human / non_human");
        }
        map.characters.push_back(row[0]);
        map.rows.push_back(std::move(vals));
    }
    return map;
}

int parse_int_cell(const std::string& cell, const std::string& what) {
    if (cell.empty()) throw std::runtime_error(what + ": empty cell");
    for (char c : cell) {
        if (!std::isdigit(static_cast<unsigned char>(c)) && c != '-') {
            throw std::runtime_error(what + ": non-integer value '" + cell + "'");
        }
    }
    return std::stoi(cell);
}

bool parse_flag(const std::string& cell, const std::string& what) {
    if (cell == "0") return false;
    if (cell == "1") return true;
    throw std::runtime_error(what + ": flag must be 0 or 1, got '" + cell + "'");
}

CrossingSignal parse_signal(const std::string& cell, const std::string& what) {
    if (cell == "green") return CrossingSignal::Green;
    if (cell == "red") return CrossingSignal::Red;
    if (cell == "none" || cell.empty()) return CrossingSignal::None;
    throw std::runtime_error(what + ": unknown signal value '" + cell + "'");
}

}  // namespace

int AbstractionMap::character_index(const std::string& name) const {
    for (std::size_t i = 0; i < characters.size(); ++i) {
        if (characters[i] == name) return static_cast<int>(i);
    }
    return -1;
}

const std::string& default_abstraction_map_csv() { return kDefaultMapCsv; }

const AbstractionMap& default_abstraction_map() {
    static const AbstractionMap map =
        parse_abstraction_map(csv::read_string(kDefaultMapCsv, "abstraction-map"), "builtin map");
    return map;
}

AbstractionMap load_abstraction_map(const std::string& path) {
    return parse_abstraction_map(csv::read_file(path, "abstraction-map"), path);
}

std::vector<std::int32_t> abstract_characters(const std::map<std::string, std::int32_t>& counts,
                                              const AbstractionMap& B) {
    const std::size_t n_features = mm_schema().features.size();
    std::vector<std::int32_t> out(n_features, 0);
    for (const auto& [name, count] : counts) {
        int c = B.character_index(name);
        if (c < 0) throw std::invalid_argument("unknown character '" + name + "'");
        if (count < 0 && count != kMissingCount) {
            throw std::invalid_argument("negative count for character '" + name + "'");
        }
        const auto& row = B.rows[static_cast<std::size_t>(c)];
        for (std::size_t f = 0; f < n_features; ++f) {
            if (row[f] == 0) continue;
            if (count == kMissingCount || out[f] == kMissingCount) out[f] = kMissingCount;
            else out[f] += count;
        }
    }
    return out;
}

// --------------------------------------------------------------- MM CSV

Dataset load_mm_csv(const std::string& path, const MmOptions& opts) {
    const AbstractionMap& B = opts.map ? *opts.map : default_abstraction_map();
    csv::Table t = csv::read_file(path, "mm-scenarios");
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < t.header.size(); ++i) col[t.header[i]] = i;
    auto require = [&](const std::string& name) {
        auto it = col.find(name);
        if (it == col.end()) {
            throw std::runtime_error(path + ": missing required column '" + name + "'");
        }
        return it->second;
    };
    const std::size_t c_id = require("scenario_id");
    const std::size_t c_resp = require("respondent_id");
    const std::size_t c_type = require("scenario_type");
    const std::size_t c_choice = require("choice");

    const bool abstract_layout = col.count("first_male") > 0;
    if (!abstract_layout && col.count("first_man") == 0) {
        throw std::runtime_error(path +
                                 ": expected abstract feature columns (first_male, ...) or "
                                 "character columns (first_man, ...)");
    }
    const auto& feats = mm_schema().features;
    const int f_passenger = mm_schema().feature_index("passenger");
    const int f_law_abiding = mm_schema().feature_index("law_abiding");
    const int f_law_violating = mm_schema().feature_index("law_violating");

    Dataset d;
    d.schema = mm_schema();
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        const std::string where = path + " row " + std::to_string(r + 1);
        Scenario s;
        s.id = row[c_id];
        s.respondent_id = row[c_resp];
        s.scenario_type = row[c_type];
        const std::string& choice = row[c_choice];
        if (choice == "0") s.truth = Choice::First;
        else if (choice == "1") s.truth = Choice::Second;
        else if (!choice.empty()) throw std::runtime_error(where + ": choice must be 0, 1, or empty");

        for (const char* side : {"first", "second"}) {
            Alternative alt;
            const std::string p = std::string(side) + "_";
            alt.intervention = parse_flag(row[require(p + "intervention")], where);
            alt.crossing_signal = parse_signal(row[require(p + "signal")], where);
            alt.is_passengers = parse_flag(row[require(p + "is_passengers")], where);
            if (abstract_layout) {
                alt.counts.reserve(feats.size());
                for (const auto& f : feats) {
                    const std::string& cell = row[require(p + f)];
                    if (cell.empty()) alt.counts.push_back(kMissingCount);
                    else {
                        int v = parse_int_cell(cell, where + " " + p + f);
                        if (v < 0) throw std::runtime_error(where + ": negative count in " + p + f);
                        alt.counts.push_back(v);
                    }
                }
            } else {
                std::map<std::string, std::int32_t> char_counts;
                std::int64_t total = 0;
                bool total_missing = false;
                for (const auto& ch : B.characters) {
                    const std::string& cell = row[require(p + ch)];
                    if (cell.empty()) {
                        char_counts[ch] = kMissingCount;
                        total_missing = true;
                    } else {
                        int v = parse_int_cell(cell, where + " " + p + ch);
                        if (v < 0) throw std::runtime_error(where + ": negative count in " + p + ch);
                        char_counts[ch] = v;
                        total += v;
                    }
                }
                alt.counts = abstract_characters(char_counts, B);
                // context-derived counts: every character in the alternative is
                // a passenger, a lawful pedestrian, or a jaywalker as a group
                auto group_count = [&](bool cond) -> std::int32_t {
                    if (!cond) return 0;
                    if (total_missing) return kMissingCount;
                    return static_cast<std::int32_t>(total);
                };
                alt.counts[static_cast<std::size_t>(f_passenger)] = group_count(alt.is_passengers);
                alt.counts[static_cast<std::size_t>(f_law_abiding)] = group_count(
                    !alt.is_passengers && alt.crossing_signal == CrossingSignal::Green);
                alt.counts[static_cast<std::size_t>(f_law_violating)] = group_count(
                    !alt.is_passengers && alt.crossing_signal == CrossingSignal::Red);
            }
            (side == std::string("first") ? s.first : s.second) = std::move(alt);
        }
        d.scenarios.push_back(std::move(s));
    }

    if (opts.session_filter) {
        std::map<std::string, int> per_respondent;
        for (const auto& s : d.scenarios) {
            if (!s.respondent_id.empty()) ++per_respondent[s.respondent_id];
        }
        std::vector<Scenario> kept;
        std::size_t dropped = 0;
        for (auto& s : d.scenarios) {
            if (!s.respondent_id.empty() &&
                per_respondent[s.respondent_id] == opts.session_length) {
                kept.push_back(std::move(s));
            } else {
                ++dropped;
            }
        }
        if (dropped > 0) {
            std::fprintf(stderr, "warning: session filter dropped %zu of %zu rows from %s\n",
                         dropped, d.scenarios.size(), path.c_str());
        }
        d.scenarios = std::move(kept);
    }
    return d;
}

void write_mm_csv(const std::string& path, const Dataset& d) {
    if (d.schema != mm_schema()) throw std::invalid_argument("write_mm_csv: not an mm dataset");
    csv::Table t;
    t.schema_id = "mm-scenarios";
    t.header = {"scenario_id", "respondent_id", "scenario_type", "choice"};
    for (const char* side : {"first", "second"}) {
        const std::string p = std::string(side) + "_";
        t.header.push_back(p + "intervention");
        t.header.push_back(p + "signal");
        t.header.push_back(p + "is_passengers");
        for (const auto& f : d.schema.features) t.header.push_back(p + f);
    }
    for (const auto& s : d.scenarios) {
        std::vector<std::string> row = {s.id, s.respondent_id, s.scenario_type,
                                        s.truth ? (*s.truth == Choice::First ? "0" : "1") : ""};
        for (const Alternative* alt : {&s.first, &s.second}) {
            row.push_back(alt->intervention ? "1" : "0");
            row.push_back(to_string(alt->crossing_signal));
            row.push_back(alt->is_passengers ? "1" : "0");
            for (std::int32_t v : alt->counts) {
                row.push_back(v == kMissingCount ? "" : std::to_string(v));
            }
        }
        t.rows.push_back(std::move(row));
    }
    csv::write_file(path, t);
}

// --------------------------------------------------------------- KE CSV

std::string ke_scenario_type(const Alternative& a, const Alternative& b) {
    static const char* kNames[3] = {"Age", "Drinking", "Health"};
    std::string out;
    int differing = 0;
    for (std::size_t f = 0; f < 3; ++f) {
        if (a.counts[f] != b.counts[f]) {
            ++differing;
            if (!out.empty()) out += " & ";
            out += kNames[f];
        }
    }
    if (differing == 3 || differing == 0) return "Random";
    return out;
}

Dataset load_ke_csv(const std::string& path) {
    csv::Table t = csv::read_file(path, "ke-contests");
    const std::vector<std::string> expected = {"respondent_id", "contest_id", "a_age",  "a_drink",
                                               "a_health",      "b_age",      "b_drink", "b_health",
                                               "choice"};
    if (t.header != expected) {
        throw std::runtime_error(path + ": header must be exactly " +
                                 "respondent_id,contest_id,a_age,a_drink,a_health,b_age,b_drink,"
                                 "b_health,choice");
    }
    Dataset d;
    d.schema = ke_schema();
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        const std::string where = path + " row " + std::to_string(r + 1);
        auto binary = [&](std::size_t c, const char* what) -> std::int32_t {
            if (row[c].empty()) throw std::runtime_error(where + ": missing value in " + what);
            if (row[c] != "0" && row[c] != "1") {
                throw std::runtime_error(where + ": non-binary " + what + " value '" + row[c] +
                                         "'");
            }
            return row[c] == "1" ? 1 : 0;
        };
        Scenario s;
        s.respondent_id = row[0];
        s.id = s.respondent_id.empty() ? row[1] : s.respondent_id + ":" + row[1];
        s.first.counts = {binary(2, "a_age"), binary(3, "a_drink"), binary(4, "a_health")};
        s.second.counts = {binary(5, "b_age"), binary(6, "b_drink"), binary(7, "b_health")};
        s.truth = binary(8, "choice") == 0 ? Choice::First : Choice::Second;
        s.scenario_type = ke_scenario_type(s.first, s.second);
        d.scenarios.push_back(std::move(s));
    }
    return d;
}

void write_ke_csv(const std::string& path, const Dataset& d) {
    if (d.schema != ke_schema()) throw std::invalid_argument("write_ke_csv: not a ke dataset");
    csv::Table t;
    t.schema_id = "ke-contests";
    t.header = {"respondent_id", "contest_id", "a_age",  "a_drink", "a_health",
                "b_age",         "b_drink",    "b_health", "choice"};
    for (const auto& s : d.scenarios) {
        if (!s.truth) throw std::invalid_argument("write_ke_csv: scenario without choice");
        std::string contest = s.id;
        if (!s.respondent_id.empty() && s.id.rfind(s.respondent_id + ":", 0) == 0) {
            contest = s.id.substr(s.respondent_id.size() + 1);
        }
        t.rows.push_back({s.respondent_id, contest, std::to_string(s.first.counts[0]),
                          std::to_string(s.first.counts[1]), std::to_string(s.first.counts[2]),
                          std::to_string(s.second.counts[0]), std::to_string(s.second.counts[1]),
                          std::to_string(s.second.counts[2]),
                          *s.truth == Choice::First ? "0" : "1"});
    }
    csv::write_file(path, t);
}

Dataset ke_factorial_design() {
    Dataset d;
    d.schema = ke_schema();
    auto profile = [](int p) {
        return std::vector<std::int32_t>{(p >> 2) & 1, (p >> 1) & 1, p & 1};
    };
    for (int i = 0; i < 8; ++i) {
        for (int j = i + 1; j < 8; ++j) {
            Scenario s;
            s.id = "p" + std::to_string(i) + "-p" + std::to_string(j);
            s.first.counts = profile(i);
            s.second.counts = profile(j);
            s.scenario_type = ke_scenario_type(s.first, s.second);
            d.scenarios.push_back(std::move(s));
        }
    }
    return d;
}

// -------------------------------------------------------------- rankings

std::vector<labelmodel::StrategyRanking> load_rankings_csv(const std::string& path) {
    csv::Table t = csv::read_file(path, "ke-rankings");
    const std::vector<std::string> expected = {"respondent_id", "strategy", "rank"};
    if (t.header != expected) {
        throw std::runtime_error(path + ": header must be respondent_id,strategy,rank");
    }
    const auto& valid = heuristics::ke_strategy_names();
    std::vector<labelmodel::StrategyRanking> out;
    std::map<std::string, std::size_t> index;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        const std::string where = path + " row " + std::to_string(r + 1);
        if (std::find(valid.begin(), valid.end(), row[1]) == valid.end()) {
            throw std::runtime_error(where + ": unknown strategy name '" + row[1] + "'");
        }
        int rank = parse_int_cell(row[2], where + " rank");
        if (rank < 1) throw std::runtime_error(where + ": non-positive rank");
        auto it = index.find(row[0]);
        if (it == index.end()) {
            index.emplace(row[0], out.size());
            out.push_back({row[0], {{row[1], rank}}});
        } else {
            out[it->second].ranks.push_back({row[1], rank});
        }
    }
    return out;
}

void write_rankings_csv(const std::string& path,
                        const std::vector<labelmodel::StrategyRanking>& rankings) {
    csv::Table t;
    t.schema_id = "ke-rankings";
    t.header = {"respondent_id", "strategy", "rank"};
    for (const auto& r : rankings) {
        for (const auto& [strategy, rank] : r.ranks) {
            t.rows.push_back({r.respondent_id, strategy, std::to_string(rank)});
        }
    }
    csv::write_file(path, t);
}

// ------------------------------------------------------------ imputation

Dataset impute_median(const Dataset& d, const std::vector<std::size_t>& fit_on) {
    if (fit_on.empty()) throw std::invalid_argument("impute_median: empty fit_on set");
    Dataset out = d;
    const std::size_t n_features = d.schema.features.size();
    std::vector<std::int32_t> col;
    for (int side = 0; side < 2; ++side) {
        for (std::size_t f = 0; f < n_features; ++f) {
            bool any_missing = false;
            for (const auto& s : d.scenarios) {
                const Alternative& alt = side == 0 ? s.first : s.second;
                if (alt.counts[f] == kMissingCount) { any_missing = true; break; }
            }
            if (!any_missing) continue;
            col.clear();
            for (std::size_t i : fit_on) {
                const Alternative& alt =
                    side == 0 ? d.scenarios[i].first : d.scenarios[i].second;
                if (alt.counts[f] != kMissingCount) col.push_back(alt.counts[f]);
            }
            if (col.empty()) {
                throw std::runtime_error("impute_median: feature '" + d.schema.features[f] +
                                         "' (side " + (side == 0 ? "first" : "second") +
                                         ") is missing in every fit row");
            }
            std::sort(col.begin(), col.end());
            const std::int32_t median = col[(col.size() - 1) / 2];  // lower-middle keeps integers
            for (auto& s : out.scenarios) {
                Alternative& alt = side == 0 ? s.first : s.second;
                if (alt.counts[f] == kMissingCount) alt.counts[f] = median;
            }
        }
    }
    return out;
}

// ----------------------------------------------------------------- splits

std::vector<std::vector<std::size_t>> make_split(const Dataset& d,
                                                 const std::vector<double>& fractions,
                                                 std::uint64_t seed, bool group_by_respondent) {
    double total = 0.0;
    for (double f : fractions) {
        if (f < 0) throw std::invalid_argument("make_split: negative fraction");
        total += f;
    }
    if (total > 1.0 + 1e-9) throw std::invalid_argument("make_split: fractions sum above 1");
    const std::size_t n = d.scenarios.size();
    std::vector<std::size_t> targets;  // cumulative row boundaries
    double cum = 0.0;
    for (double f : fractions) {
        cum += f;
        targets.push_back(static_cast<std::size_t>(std::llround(cum * static_cast<double>(n))));
    }

    std::vector<std::vector<std::size_t>> parts(fractions.size());
    Rng rng(seed);
    if (!group_by_respondent) {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        rng.shuffle(idx);
        std::size_t lo = 0;
        for (std::size_t k = 0; k < fractions.size(); ++k) {
            for (std::size_t i = lo; i < targets[k] && i < n; ++i) parts[k].push_back(idx[i]);
            lo = targets[k];
        }
    } else {
        // whole respondent groups; rows without a respondent form singletons
        std::vector<std::vector<std::size_t>> groups;
        std::map<std::string, std::size_t> gindex;
        for (std::size_t i = 0; i < n; ++i) {
            const std::string& r = d.scenarios[i].respondent_id;
            if (r.empty()) {
                groups.push_back({i});
                continue;
            }
            auto it = gindex.find(r);
            if (it == gindex.end()) {
                gindex.emplace(r, groups.size());
                groups.push_back({i});
            } else {
                groups[it->second].push_back(i);
            }
        }
        rng.shuffle(groups);
        std::size_t assigned = 0, part = 0;
        for (const auto& g : groups) {
            while (part < parts.size() && assigned >= targets[part]) ++part;
            if (part >= parts.size()) break;  // remainder beyond the last fraction
            parts[part].insert(parts[part].end(), g.begin(), g.end());
            assigned += g.size();
        }
    }
    for (std::size_t k = 0; k < fractions.size(); ++k) {
        if (fractions[k] > 0 && parts[k].empty()) {
            throw std::invalid_argument("make_split: part " + std::to_string(k) +
                                        " would be empty");
        }
    }
    return parts;
}

DatasetSplit split_dataset(const Dataset& d, const SplitFractions& f, std::uint64_t seed,
                           bool group_by_respondent) {
    auto parts = make_split(d, {f.train, f.dev, f.valid, f.test}, seed, group_by_respondent);
    DatasetSplit s;
    s.train = std::move(parts[0]);
    s.dev = std::move(parts[1]);
    s.valid = std::move(parts[2]);
    s.test = std::move(parts[3]);
    return s;
}

}  // namespace dforge::ingest
