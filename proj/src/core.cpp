#include "dforge/core.hpp"

#include <limits>
#include <stdexcept>
#include <unordered_set>

namespace dforge {

namespace {
const double kNaN = std::numeric_limits<double>::quiet_NaN();
}

int Schema::feature_index(const std::string& name) const {
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (features[i] == name) return static_cast<int>(i);
    }
    return -1;
}

const Schema& mm_schema() {
    static const Schema schema{
        "mm",
        {"male", "female", "young", "old", "infant", "pregnant", "fat", "fit", "working",
         "medical", "homeless", "criminal", "human", "non_human", "passenger", "law_abiding",
         "law_violating"},
        true};
    return schema;
}

const Schema& ke_schema() {
    static const Schema schema{"ke", {"age_old", "drinks_frequently", "has_health_issue"}, false};
    return schema;
}

const Schema* find_schema(const std::string& domain_id) {
    if (domain_id == "mm") return &mm_schema();
    if (domain_id == "ke") return &ke_schema();
    return nullptr;
}

std::size_t concat_width(const Schema& schema) {
    return 2 * (schema.features.size() + (schema.has_context ? 4 : 0));
}

std::vector<double> concat_features(const Schema& schema, const Scenario& s) {
    const std::size_t n = schema.features.size();
    if (s.first.counts.size() != n || s.second.counts.size() != n) {
        throw std::invalid_argument("concat_features: scenario '" + s.id +
                                    "' does not match the schema feature count");
    }
    std::vector<double> out;
    out.reserve(concat_width(schema));
    for (const Alternative* alt : {&s.first, &s.second}) {
        for (std::size_t f = 0; f < n; ++f) {
            out.push_back(alt->counts[f] == kMissingCount ? kNaN
                                                          : static_cast<double>(alt->counts[f]));
        }
        if (schema.has_context) {
            out.push_back(alt->intervention ? 1.0 : 0.0);
            out.push_back(alt->crossing_signal == CrossingSignal::Green ? 1.0 : 0.0);
            out.push_back(alt->crossing_signal == CrossingSignal::Red ? 1.0 : 0.0);
            out.push_back(alt->is_passengers ? 1.0 : 0.0);
        }
    }
    return out;
}

Scenario swap_sides(const Scenario& s) {
    Scenario r = s;
    std::swap(r.first, r.second);
    if (r.truth) r.truth = opposite(*r.truth);
    return r;
}

std::vector<Violation> validate_dataset(const Dataset& d) {
    std::vector<Violation> out;
    std::unordered_set<std::string> seen;
    const std::size_t n = d.schema.features.size();
    for (const Scenario& s : d.scenarios) {
        if (!seen.insert(s.id).second) {
            out.push_back({s.id, "duplicate-id", "scenario id appears more than once"});
        }
        for (const Alternative* alt : {&s.first, &s.second}) {
            const char* side = (alt == &s.first) ? "first" : "second";
            if (alt->counts.size() != n) {
                out.push_back({s.id, "schema-mismatch",
                               std::string(side) + " has " + std::to_string(alt->counts.size()) +
                                   " features, schema has " + std::to_string(n)});
                continue;
            }
            for (std::size_t f = 0; f < n; ++f) {
                if (alt->counts[f] < 0 && alt->counts[f] != kMissingCount) {
                    out.push_back({s.id, "negative-count",
                                   std::string(side) + "." + d.schema.features[f] + " = " +
                                       std::to_string(alt->counts[f])});
                }
            }
        }
    }
    return out;
}

const char* to_string(Choice c) { return c == Choice::First ? "F" : "S"; }

const char* to_string(CandidateLabel l) {
    switch (l) {
        case CandidateLabel::First: return "F";
        case CandidateLabel::Second: return "S";
        default: return "-";
    }
}

const char* to_string(CrossingSignal s) {
    switch (s) {
        case CrossingSignal::Green: return "green";
        case CrossingSignal::Red: return "red";
        default: return "none";
    }
}

}  // namespace dforge
