#pragma once
// Domain types shared by every other module: pairwise dilemmas, candidate
// labels, datasets and splits. All types are immutable values after
// construction and safe to share across threads.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dforge {

// Final decision between the two alternatives of a scenario. First is the
// alternative listed first; for the Moral Machine domain, First is pinned to
// the stay-on-course alternative.
enum class Choice : std::uint8_t { First = 0, Second = 1 };

// What a heuristic may emit. Abstain is valid only in heuristic outputs,
// never in final decisions.
enum class CandidateLabel : std::uint8_t { First = 0, Second = 1, Abstain = 2 };

inline CandidateLabel to_candidate(Choice c) {
    return c == Choice::First ? CandidateLabel::First : CandidateLabel::Second;
}
inline Choice opposite(Choice c) {
    return c == Choice::First ? Choice::Second : Choice::First;
}
inline CandidateLabel mirror(CandidateLabel l) {
    if (l == CandidateLabel::First) return CandidateLabel::Second;
    if (l == CandidateLabel::Second) return CandidateLabel::First;
    return CandidateLabel::Abstain;
}

// Probability mass on First; mass on Second is 1 - p_first.
struct ProbLabel {
    double p_first = 0.5;
};

enum class CrossingSignal : std::uint8_t { None = 0, Green = 1, Red = 2 };

// Feature-name list of a domain. Feature values are non-negative integer
// counts; `has_context` adds the intervention / crossing-signal / passenger
// flags to each alternative (Moral Machine has them, kidney exchange does not).
struct Schema {
    std::string domain_id;
    std::vector<std::string> features;
    bool has_context = false;

    int feature_index(const std::string& name) const;  // -1 when unknown
    bool operator==(const Schema&) const = default;
};

// The 17 abstract Moral Machine count features, in fixed order.
const Schema& mm_schema();
// The 3 binary kidney-exchange features (age_old, drinks_frequently,
// has_health_issue), no context flags.
const Schema& ke_schema();
const Schema* find_schema(const std::string& domain_id);

// Sentinel for a missing (not zero) feature value inside Alternative::counts.
inline constexpr std::int32_t kMissingCount = -1;

// One of the two sides of a dilemma: how many characters of each abstract
// class this alternative saves, plus the context flags when the domain has
// them.
struct Alternative {
    std::vector<std::int32_t> counts;  // schema order; kMissingCount = missing
    bool intervention = false;         // this alternative results from swerving
    CrossingSignal crossing_signal = CrossingSignal::None;
    bool is_passengers = false;        // the saved group are vehicle passengers

    bool is_missing(std::size_t feature) const { return counts[feature] == kMissingCount; }

    bool operator==(const Alternative&) const = default;
};

struct Scenario {
    std::string id;
    Alternative first;
    Alternative second;
    std::string respondent_id;           // empty = unknown
    std::optional<Choice> truth;         // ground-truth decision, when known
    std::string scenario_type;           // empty = untagged ("Random")

    bool operator==(const Scenario&) const = default;
};

struct Dataset {
    Schema schema;
    std::vector<Scenario> scenarios;

    std::size_t size() const { return scenarios.size(); }

    bool operator==(const Dataset&) const = default;
};

// Disjoint index lists into a Dataset. When built grouped-by-respondent,
// every index with a given respondent_id lands in exactly one part.
struct DatasetSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> dev;
    std::vector<std::size_t> valid;
    std::vector<std::size_t> test;
};

// Deterministic flattening of a scenario for the discriminative model:
// first.counts in schema order, then (when the domain has context) the flags
// [intervention, is_green, is_red, is_passengers], then the same for second.
// Length = 2 * (|features| + 4) with context, 2 * |features| without.
// Missing feature values are emitted as NaN for downstream imputation.
std::vector<double> concat_features(const Schema& schema, const Scenario& s);

std::size_t concat_width(const Schema& schema);

// Swap the two alternatives (and the truth, when present).
Scenario swap_sides(const Scenario& s);

struct Violation {
    std::string scenario_id;
    std::string kind;  // duplicate-id | negative-count | schema-mismatch
    std::string detail;
};

// Report-only invariant check: duplicate ids, count-vector length mismatches,
// negative (non-missing-marker) counts. Empty result iff all invariants hold.
std::vector<Violation> validate_dataset(const Dataset& d);

const char* to_string(Choice c);
const char* to_string(CandidateLabel l);
const char* to_string(CrossingSignal s);

}  // namespace dforge
