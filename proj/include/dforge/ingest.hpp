#pragma once
// Loading and normalizing the case-study data: Moral Machine scenario CSVs
// (with character -> abstract-feature decomposition), kidney-exchange
// contests, coded strategy rankings, median imputation, split construction,
// and the complete kidney-exchange factorial design.
//
// All files carry the version line `# dilemma-forge v1 <schema>` with schema
// ids: mm-scenarios, ke-contests, ke-rankings, abstraction-map.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dforge/core.hpp"
#include "dforge/labelmodel.hpp"

namespace dforge::ingest {

// Binary matrix B decomposing the 20 Moral Machine characters into the 17
// abstract count features. The passenger / law_abiding / law_violating
// columns are all zero here: those counts come from the context flags at
// load time, not from the characters.
struct AbstractionMap {
    std::vector<std::string> characters;
    std::vector<std::vector<std::int32_t>> rows;  // |characters| x 17, cells 0/1

    int character_index(const std::string& name) const;
};

// The shipped default map (also written to data/mm_abstraction.csv).
const AbstractionMap& default_abstraction_map();
AbstractionMap load_abstraction_map(const std::string& path);
const std::string& default_abstraction_map_csv();

// counts = B^T * char_counts. A missing character count makes every abstract
// feature it maps into missing. Throws on an unknown character.
std::vector<std::int32_t> abstract_characters(const std::map<std::string, std::int32_t>& counts,
                                              const AbstractionMap& B);

struct MmOptions {
    bool session_filter = false;  // drop respondents with != session_length rows
    int session_length = 13;
    const AbstractionMap* map = nullptr;  // default map when null
};

// One scenario per row. Accepts either per-character count columns
// (first_man, ...) or pre-abstracted feature columns (first_male, ...), plus
// the per-side intervention / signal / is_passengers flags. Empty numeric
// cells become missing markers. The first alternative must be the
// stay-on-course one (choice 0 means it was chosen).
Dataset load_mm_csv(const std::string& path, const MmOptions& opts = {});

// Abstract-layout writer; load -> write -> load is the identity.
void write_mm_csv(const std::string& path, const Dataset& d);

// Columns respondent_id, contest_id, a_age, a_drink, a_health, b_age,
// b_drink, b_health, choice; all features binary, no missing values, choice
// 0 = alternative a. Scenario ids are "<respondent_id>:<contest_id>".
// The scenario_type tag is derived from the differing features ("Age",
// "Age & Health", ..., all three = "Random").
Dataset load_ke_csv(const std::string& path);
void write_ke_csv(const std::string& path, const Dataset& d);

// Columns respondent_id, strategy, rank; strategies validated against the
// six kidney-exchange strategy names; ties are equal rank values.
std::vector<labelmodel::StrategyRanking> load_rankings_csv(const std::string& path);
void write_rankings_csv(const std::string& path,
                        const std::vector<labelmodel::StrategyRanking>& rankings);

// The complete design: all 28 unordered pairs of the 8 binary patient
// profiles, in lexicographic profile order, no truth.
Dataset ke_factorial_design();

// Scenario-type tag for a kidney-exchange contest.
std::string ke_scenario_type(const Alternative& a, const Alternative& b);

// Per (side, feature) column: the median over non-missing values of the
// fit_on rows (even counts take the lower-middle value, keeping counts
// integral) replaces every missing marker in the whole dataset. Idempotent.
Dataset impute_median(const Dataset& d, const std::vector<std::size_t>& fit_on);

// Seeded shuffle then contiguous assignment by fraction. Fractions must be
// non-negative and sum to <= 1. When grouped, whole respondent groups are
// assigned (rows lacking a respondent_id form singleton groups) with part
// boundaries tracking cumulative row counts. Throws when a part with a
// positive fraction ends up empty.
std::vector<std::vector<std::size_t>> make_split(const Dataset& d,
                                                 const std::vector<double>& fractions,
                                                 std::uint64_t seed, bool group_by_respondent);

struct SplitFractions {
    double train = 0.8;
    double dev = 0.0;
    double valid = 0.0;
    double test = 0.2;
};

DatasetSplit split_dataset(const Dataset& d, const SplitFractions& f, std::uint64_t seed,
                           bool group_by_respondent);

}  // namespace dforge::ingest
