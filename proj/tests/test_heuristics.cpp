#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "dforge/heuristics.hpp"
#include "dforge/ingest.hpp"
#include "dforge/rng.hpp"

using namespace dforge;
using namespace dforge::heuristics;

namespace {

Scenario mm_counts(std::map<std::string, int> first_vals, std::map<std::string, int> second_vals,
                   const std::string& id = "s") {
    Scenario s;
    s.id = id;
    s.first.counts.assign(mm_schema().features.size(), 0);
    s.second.counts.assign(mm_schema().features.size(), 0);
    for (auto& [k, v] : first_vals) s.first.counts[mm_schema().feature_index(k)] = v;
    for (auto& [k, v] : second_vals) s.second.counts[mm_schema().feature_index(k)] = v;
    return s;
}

Scenario ke_scenario(std::vector<std::int32_t> a, std::vector<std::int32_t> b,
                     const std::string& id = "s") {
    Scenario s;
    s.id = id;
    s.first.counts = std::move(a);
    s.second.counts = std::move(b);
    return s;
}

Scenario random_ke(Rng& rng, const std::string& id) {
    Scenario s;
    s.id = id;
    s.first.counts = {static_cast<std::int32_t>(rng.uniform_below(2)),
                      static_cast<std::int32_t>(rng.uniform_below(2)),
                      static_cast<std::int32_t>(rng.uniform_below(2))};
    s.second.counts = {static_cast<std::int32_t>(rng.uniform_below(2)),
                       static_cast<std::int32_t>(rng.uniform_below(2)),
                       static_cast<std::int32_t>(rng.uniform_below(2))};
    return s;
}

}  // namespace

TEST_CASE("argmax heuristic parses to one rule and picks the larger side") {
    auto spec = parse_heuristic(
        R"(heuristic "utilitarian" { when argmax(first.human, second.human) })", mm_schema());
    CHECK(spec.name == "utilitarian");
    CHECK(spec.rules.size() == 1);
    CHECK(evaluate(spec, mm_counts({{"human", 3}}, {{"human", 1}})) == CandidateLabel::First);
    CHECK(evaluate(spec, mm_counts({{"human", 5}}, {{"human", 2}})) == CandidateLabel::First);
    CHECK(evaluate(spec, mm_counts({{"human", 3}}, {{"human", 3}})) == CandidateLabel::Abstain);
}

TEST_CASE("fall-through to implicit abstain") {
    auto spec = parse_heuristic(
        R"(heuristic "x" { when first.human > 0 -> choose first })", mm_schema());
    CHECK(evaluate(spec, mm_counts({{"human", 0}}, {})) == CandidateLabel::Abstain);
    CHECK(evaluate(spec, mm_counts({{"human", 2}}, {})) == CandidateLabel::First);
}

TEST_CASE("unknown feature name errors with the name") {
    try {
        parse_heuristic(R"(heuristic "bad" { when first.unicorn > 0 -> choose first })",
                        mm_schema());
        FAIL("expected DslError");
    } catch (const DslError& e) {
        CHECK(std::string(e.what()).find("unicorn") != std::string::npos);
    }
}

TEST_CASE("syntax error carries line and column") {
    try {
        parse_heuristic("heuristic \"bad\" {\n  when first.human -> choose first\n}", mm_schema());
        FAIL("expected DslError");
    } catch (const DslError& e) {
        CHECK(e.line == 2);  // boolean guard expected, integer given
    }
}

TEST_CASE("type error: integer where boolean expected and vice versa") {
    CHECK_THROWS_AS(parse_heuristic(
                        R"(heuristic "t" { when first.human -> choose first })", mm_schema()),
                    DslError);
    CHECK_THROWS_AS(parse_heuristic(
                        R"(heuristic "t" { when first.intervention + 1 > 0 -> choose first })",
                        mm_schema()),
                    DslError);
}

TEST_CASE("otherwise and boolean operators") {
    auto spec = parse_heuristic(R"(heuristic "combo" {
        when first.human > 1 + 1 and not (second.human >= 5) -> choose first
        otherwise choose second
    })", mm_schema());
    CHECK(evaluate(spec, mm_counts({{"human", 3}}, {{"human", 4}})) == CandidateLabel::First);
    CHECK(evaluate(spec, mm_counts({{"human", 3}}, {{"human", 5}})) == CandidateLabel::Second);
    CHECK(evaluate(spec, mm_counts({{"human", 2}}, {{"human", 0}})) == CandidateLabel::Second);
}

TEST_CASE("guards touching missing values fall through, even under not/or") {
    Schema ke = ke_schema();
    auto spec = parse_heuristic(R"(heuristic "m" {
        when not (first.age_old > 0) or second.age_old == 1 -> choose first
        otherwise choose second
    })", ke);
    Scenario s = ke_scenario({kMissingCount, 0, 0}, {0, 0, 0});
    // first.age_old missing: guard unsatisfied despite `or`, falls to otherwise
    CHECK(evaluate(spec, s) == CandidateLabel::Second);
    // argmax over a missing value also abstains
    auto am = parse_heuristic(
        R"(heuristic "a" { when argmax(second.age_old, first.age_old) })", ke);
    CHECK(evaluate(am, s) == CandidateLabel::Abstain);
}

TEST_CASE("ke builtin suite matches the three study heuristics") {
    auto suite = builtin_suite("ke");
    REQUIRE(suite.size() == 3);
    CHECK(suite[0].name == "choose_younger");
    CHECK(suite[1].name == "choose_drinks_less");
    CHECK(suite[2].name == "choose_no_health_issues");
    // choose_younger: (first old, second young) -> Second
    CHECK(evaluate(suite[0], ke_scenario({1, 0, 0}, {0, 0, 0})) == CandidateLabel::Second);
    CHECK(evaluate(suite[0], ke_scenario({0, 1, 0}, {1, 1, 0})) == CandidateLabel::First);
    CHECK(evaluate(suite[0], ke_scenario({1, 0, 0}, {1, 1, 0})) == CandidateLabel::Abstain);
}

TEST_CASE("ke_with_opposites yields six specs including choose_older") {
    auto suite = builtin_suite("ke_with_opposites");
    REQUIRE(suite.size() == 6);
    CHECK(suite[3].name == "choose_older");
    CHECK(suite[4].name == "choose_drinks_more");
    CHECK(suite[5].name == "choose_health_issues");
}

TEST_CASE("contradiction antisymmetry on random ke scenarios") {
    auto suite = builtin_suite("ke_with_opposites");
    Rng rng(42);
    for (int t = 0; t < 200; ++t) {
        Scenario s = random_ke(rng, "r" + std::to_string(t));
        for (int p = 0; p < 3; ++p) {
            CandidateLabel a = evaluate(suite[p], s);
            CandidateLabel b = evaluate(suite[p + 3], s);
            CHECK(b == mirror(a));
        }
    }
}

TEST_CASE("mm builtin suite has the 16 fixed heuristics, all evaluable") {
    auto suite = builtin_suite("mm");
    REQUIRE(suite.size() == 16);
    CHECK(suite[0].name == "save_humans");
    CHECK(suite[1].name == "utilitarian");
    CHECK(suite[13].name == "prefer_inaction");
    Rng rng(5);
    for (int t = 0; t < 50; ++t) {
        Scenario s;
        s.id = "m" + std::to_string(t);
        for (Alternative* alt : {&s.first, &s.second}) {
            alt->counts.resize(17);
            for (auto& c : alt->counts) c = static_cast<std::int32_t>(rng.uniform_below(3));
            alt->intervention = rng.coin();
            alt->crossing_signal = static_cast<CrossingSignal>(rng.uniform_below(3));
            alt->is_passengers = rng.coin();
        }
        for (const auto& h : suite) CHECK_NOTHROW(evaluate(h, s));
    }
}

TEST_CASE("argmax mirror under side swap") {
    auto suite = builtin_suite("ke");
    Rng rng(77);
    for (int t = 0; t < 100; ++t) {
        Scenario s = random_ke(rng, "w" + std::to_string(t));
        for (const auto& h : suite) {
            CHECK(evaluate(h, swap_sides(s)) == mirror(evaluate(h, s)));
        }
    }
}

TEST_CASE("evaluate is pure: repeated calls agree") {
    auto suite = builtin_suite("ke");
    Rng rng(3);
    Scenario s = random_ke(rng, "p");
    for (const auto& h : suite) CHECK(evaluate(h, s) == evaluate(h, s));
}

TEST_CASE("apply_all dimensions and row equivariance under permutation") {
    auto suite = builtin_suite("ke");
    Dataset d = ingest::ke_factorial_design();
    LabelMatrix L = apply_all(suite, d);
    CHECK(L.n_scenarios == 28);
    CHECK(L.n_heuristics == 3);

    // permute the dataset and check rows permute identically
    Dataset p = d;
    std::reverse(p.scenarios.begin(), p.scenarios.end());
    LabelMatrix Lp = apply_all(suite, p);
    for (std::size_t i = 0; i < 28; ++i) {
        for (std::size_t m = 0; m < 3; ++m) {
            CHECK(Lp.at(i, m) == L.at(27 - i, m));
        }
    }
}

TEST_CASE("28-pair factorial design: age column has exactly 16 non-abstains") {
    // oracle: brute-force enumeration over the unordered pairs of 8 profiles
    int expected = 0;
    for (int i = 0; i < 8; ++i) {
        for (int j = i + 1; j < 8; ++j) {
            if (((i >> 2) & 1) != ((j >> 2) & 1)) ++expected;
        }
    }
    CHECK(expected == 16);

    auto suite = builtin_suite("ke");
    LabelMatrix L = apply_all(suite, ingest::ke_factorial_design());
    int votes = 0;
    for (std::size_t i = 0; i < L.n_scenarios; ++i) {
        if (L.at(i, 0) != CandidateLabel::Abstain) ++votes;
    }
    CHECK(votes == expected);
}

TEST_CASE("1x1 matrix from a single heuristic and scenario") {
    auto suite = std::vector<HeuristicSpec>{builtin_suite("ke")[0]};
    Dataset d;
    d.schema = ke_schema();
    d.scenarios.push_back(ke_scenario({1, 0, 0}, {0, 0, 0}, "only"));
    LabelMatrix L = apply_all(suite, d);
    CHECK(L.n_scenarios == 1);
    CHECK(L.n_heuristics == 1);
    CHECK(L.at(0, 0) == CandidateLabel::Second);
}

TEST_CASE("label matrix csv round trip") {
    auto suite = builtin_suite("ke");
    LabelMatrix L = apply_all(suite, ingest::ke_factorial_design());
    auto tmp = std::filesystem::temp_directory_path() / "dforge_matrix_test.csv";
    write_label_matrix(tmp.string(), L);
    LabelMatrix R = read_label_matrix(tmp.string());
    CHECK(R.n_scenarios == L.n_scenarios);
    CHECK(R.heuristic_names == L.heuristic_names);
    CHECK(R.cells == L.cells);
    std::filesystem::remove(tmp);
}

TEST_CASE("suite directory loads in lexicographic filename order") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "dforge_suite_test";
    fs::create_directories(dir);
    {
        std::ofstream b(dir / "b_second.rules");
        b << R"(heuristic "beta" { when argmax(first.age_old, second.age_old) })";
        std::ofstream a(dir / "a_first.rules");
        a << "# comment line\n";
        a << R"(heuristic "alpha" { when argmax(second.age_old, first.age_old) })";
    }
    auto suite = load_suite_dir(dir.string(), ke_schema());
    REQUIRE(suite.size() == 2);
    CHECK(suite[0].name == "alpha");
    CHECK(suite[1].name == "beta");
    fs::remove_all(dir);
}

TEST_CASE("empty suite and unknown builtin are rejected") {
    Dataset d = ingest::ke_factorial_design();
    CHECK_THROWS_AS(apply_all({}, d), std::invalid_argument);
    CHECK_THROWS_AS(builtin_suite("nope"), std::invalid_argument);
}
