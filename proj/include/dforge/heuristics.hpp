#pragma once
// The heuristic rule DSL: parsing, validation, evaluation, the built-in
// suites for both case studies, and the label matrix they produce.
//
// Grammar:
//   heuristic ::= 'heuristic' STRING '{' rule+ '}'
//   rule      ::= 'when' argmax_form
//               | 'when' expr '->' action
//               | 'otherwise' action
//   argmax_form ::= 'argmax' '(' iexpr ',' iexpr ')'
//   action    ::= 'choose' 'first' | 'choose' 'second' | 'abstain'
//   expr      ::= boolean combinations (and/or/not, parentheses) of
//                 comparisons (== != < <= > >=) over integer expressions
//                 (+, -, integer literals, field paths) and boolean flags
//   field path::= ('first'|'second') '.' name, where name is a schema
//                 feature (integer) or, in domains with context, one of the
//                 boolean flags intervention, is_passengers, signal_green,
//                 signal_red, signal_none
//   '#' starts a line comment
//
// The whole-rule shorthand `when argmax(e1, e2)` chooses first if e1 > e2,
// second if e2 > e1, and abstains on a tie.
//
// Evaluation is total: any rule whose guard touches a missing feature value
// is unsatisfied and evaluation falls through (ultimately to Abstain).

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "dforge/core.hpp"

namespace dforge::heuristics {

struct DslError : std::runtime_error {
    DslError(int line, int col, const std::string& msg)
        : std::runtime_error(std::to_string(line) + ":" + std::to_string(col) + ": " + msg),
          line(line),
          col(col) {}
    int line;
    int col;
};

enum class Side : std::uint8_t { First, Second };
enum class Flag : std::uint8_t { Intervention, IsPassengers, SignalGreen, SignalRed, SignalNone };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

enum class ExprKind : std::uint8_t {
    IntLit, Field, FlagRef, Add, Sub, CmpEq, CmpNe, CmpLt, CmpLe, CmpGt, CmpGe, And, Or, Not
};

struct Expr {
    ExprKind kind;
    std::int64_t literal = 0;  // IntLit
    Side side = Side::First;   // Field / FlagRef
    int feature = -1;          // Field: index into the schema
    Flag flag = Flag::Intervention;
    ExprPtr lhs;
    ExprPtr rhs;
};

enum class RuleAction : std::uint8_t { ChooseFirst, ChooseSecond, Abstain };
enum class RuleKind : std::uint8_t { When, Otherwise, Argmax };

struct Rule {
    RuleKind kind;
    ExprPtr guard;            // When
    RuleAction action = RuleAction::Abstain;  // When / Otherwise
    ExprPtr argmax_first;     // Argmax
    ExprPtr argmax_second;
};

// A named, parsed decision rule evaluable on a Scenario.
struct HeuristicSpec {
    std::string name;
    std::string source;
    Schema schema;
    std::vector<Rule> rules;
};

// Parses one or more heuristic blocks. Field references are resolved against
// `schema` at parse time. Throws DslError with line/column on syntax errors,
// unknown feature names, and type errors.
std::vector<HeuristicSpec> parse_heuristics(const std::string& text, const Schema& schema);

// Convenience for a source holding exactly one block.
HeuristicSpec parse_heuristic(const std::string& text, const Schema& schema);

// First rule whose guard holds fires; pure and deterministic. Rules touching
// missing values fall through; no rule fires -> Abstain.
CandidateLabel evaluate(const HeuristicSpec& h, const Scenario& s);

// N x M grid of candidate labels produced by M heuristics over N scenarios.
struct LabelMatrix {
    std::size_t n_scenarios = 0;
    std::size_t n_heuristics = 0;
    std::vector<CandidateLabel> cells;  // row-major
    std::vector<std::string> heuristic_names;
    std::vector<std::string> scenario_ids;

    CandidateLabel at(std::size_t i, std::size_t m) const { return cells[i * n_heuristics + m]; }
    CandidateLabel& at(std::size_t i, std::size_t m) { return cells[i * n_heuristics + m]; }
};

LabelMatrix make_matrix(std::vector<std::string> heuristic_names,
                        std::vector<std::string> scenario_ids,
                        std::vector<CandidateLabel> cells);

// cells[i][m] = evaluate(suite[m], d.scenarios[i]); preserves input order.
LabelMatrix apply_all(const std::vector<HeuristicSpec>& suite, const Dataset& d);

// Copy of L without column m.
LabelMatrix drop_column(const LabelMatrix& L, std::size_t m);

// Row subset of L, preserving order of `rows`.
LabelMatrix select_rows(const LabelMatrix& L, const std::vector<std::size_t>& rows);

// Built-in suites. "mm" is the 16-heuristic Moral Machine suite, "ke" the
// three kidney-exchange heuristics, "ke_with_opposites" those plus their
// three contradictions. Throws std::invalid_argument on an unknown id.
std::vector<HeuristicSpec> builtin_suite(const std::string& domain);
const std::string& builtin_suite_source(const std::string& domain);

// Canonical order of the six kidney-exchange strategies (mains, then
// opposites); rankings files are validated against these names.
const std::vector<std::string>& ke_strategy_names();

// Loads every heuristic block from a UTF-8 DSL file, or from every regular
// file in a directory in lexicographic filename order (file order fixes the
// label-matrix column order). Duplicate names are an error.
std::vector<HeuristicSpec> load_suite_file(const std::string& path, const Schema& schema);
std::vector<HeuristicSpec> load_suite_dir(const std::string& dir, const Schema& schema);

// Label-matrix CSV (schema id "label-matrix"): rows = scenario ids, columns
// = heuristic names, cells F / S / - .
void write_label_matrix(const std::string& path, const LabelMatrix& L);
LabelMatrix read_label_matrix(const std::string& path);

}  // namespace dforge::heuristics
