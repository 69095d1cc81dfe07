#include "dforge/heuristics.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <unordered_set>

#include "dforge/csv.hpp"

namespace dforge::heuristics {

namespace {

// ---------------------------------------------------------------- lexer

enum class Tok : std::uint8_t {
    KwHeuristic, KwWhen, KwOtherwise, KwChoose, KwFirst, KwSecond, KwAbstain,
    KwAnd, KwOr, KwNot, KwArgmax,
    Ident, String, Int,
    LBrace, RBrace, LParen, RParen, Comma, Dot, Arrow,
    Eq, Ne, Lt, Le, Gt, Ge, Plus, Minus,
    End
};

struct Token {
    Tok kind;
    std::string text;
    std::int64_t value = 0;
    int line = 1;
    int col = 1;
};

const std::map<std::string, Tok, std::less<>> kKeywords = {
    {"heuristic", Tok::KwHeuristic}, {"when", Tok::KwWhen},   {"otherwise", Tok::KwOtherwise},
    {"choose", Tok::KwChoose},       {"first", Tok::KwFirst}, {"second", Tok::KwSecond},
    {"abstain", Tok::KwAbstain},     {"and", Tok::KwAnd},     {"or", Tok::KwOr},
    {"not", Tok::KwNot},             {"argmax", Tok::KwArgmax},
};

std::vector<Token> lex(const std::string& text) {
    std::vector<Token> out;
    int line = 1, col = 1;
    std::size_t i = 0;
    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n; ++k) {
            if (text[i + k] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        i += n;
    };
    while (i < text.size()) {
        char c = text[i];
        if (c == '#') {
            while (i < text.size() && text[i] != '\n') advance(1);
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            advance(1);
            continue;
        }
        Token tok;
        tok.line = line;
        tok.col = col;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < text.size() &&
                   (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_'))
                ++j;
            tok.text = text.substr(i, j - i);
            auto it = kKeywords.find(tok.text);
            tok.kind = it == kKeywords.end() ? Tok::Ident : it->second;
            advance(j - i);
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t j = i;
            while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
            tok.kind = Tok::Int;
            tok.text = text.substr(i, j - i);
            tok.value = std::stoll(tok.text);
            advance(j - i);
        } else if (c == '"') {
            std::size_t j = i + 1;
            while (j < text.size() && text[j] != '"' && text[j] != '\n') ++j;
            if (j >= text.size() || text[j] != '"') {
                throw DslError(line, col, "unterminated string literal");
            }
            tok.kind = Tok::String;
            tok.text = text.substr(i + 1, j - i - 1);
            advance(j + 1 - i);
        } else {
            auto two = text.substr(i, 2);
            if (two == "->") { tok.kind = Tok::Arrow; advance(2); }
            else if (two == "==") { tok.kind = Tok::Eq; advance(2); }
            else if (two == "!=") { tok.kind = Tok::Ne; advance(2); }
            else if (two == "<=") { tok.kind = Tok::Le; advance(2); }
            else if (two == ">=") { tok.kind = Tok::Ge; advance(2); }
            else {
                switch (c) {
                    case '{': tok.kind = Tok::LBrace; break;
                    case '}': tok.kind = Tok::RBrace; break;
                    case '(': tok.kind = Tok::LParen; break;
                    case ')': tok.kind = Tok::RParen; break;
                    case ',': tok.kind = Tok::Comma; break;
                    case '.': tok.kind = Tok::Dot; break;
                    case '<': tok.kind = Tok::Lt; break;
                    case '>': tok.kind = Tok::Gt; break;
                    case '+': tok.kind = Tok::Plus; break;
                    case '-': tok.kind = Tok::Minus; break;
                    default:
                        throw DslError(line, col,
                                       std::string("unexpected character '") + c + "'");
                }
                advance(1);
            }
        }
        out.push_back(std::move(tok));
    }
    out.push_back(Token{Tok::End, "", 0, line, col});
    return out;
}

// ---------------------------------------------------------------- parser

enum class ValType : std::uint8_t { Int, Bool };

struct Value {
    ValType type;
    ExprPtr expr;
};

ExprPtr node(ExprKind kind, ExprPtr lhs = nullptr, ExprPtr rhs = nullptr) {
    auto e = std::make_shared<Expr>();
    e->kind = kind;
    e->lhs = std::move(lhs);
    e->rhs = std::move(rhs);
    return e;
}

class Parser {
public:
    Parser(const std::string& text, const Schema& schema)
        : toks_(lex(text)), schema_(schema) {}

    std::vector<HeuristicSpec> parse_all(const std::string& source) {
        std::vector<HeuristicSpec> specs;
        while (!at(Tok::End)) specs.push_back(parse_heuristic_block(source));
        if (specs.empty()) fail("expected at least one 'heuristic' block");
        return specs;
    }

private:
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    const Schema& schema_;

    const Token& cur() const { return toks_[pos_]; }
    bool at(Tok k) const { return cur().kind == k; }
    Token eat() { return toks_[pos_++]; }

    [[noreturn]] void fail(const std::string& msg) const {
        throw DslError(cur().line, cur().col, msg);
    }
    Token expect(Tok k, const char* what) {
        if (!at(k)) fail(std::string("expected ") + what);
        return eat();
    }

    HeuristicSpec parse_heuristic_block(const std::string& source) {
        expect(Tok::KwHeuristic, "'heuristic'");
        Token name = expect(Tok::String, "heuristic name string");
        expect(Tok::LBrace, "'{'");
        HeuristicSpec spec;
        spec.name = name.text;
        spec.source = source;
        spec.schema = schema_;
        while (!at(Tok::RBrace)) {
            if (at(Tok::End)) fail("unterminated heuristic block (missing '}')");
            spec.rules.push_back(parse_rule());
        }
        eat();  // '}'
        if (spec.rules.empty()) fail("heuristic '" + spec.name + "' has no rules");
        return spec;
    }

    Rule parse_rule() {
        if (at(Tok::KwOtherwise)) {
            eat();
            Rule r;
            r.kind = RuleKind::Otherwise;
            r.action = parse_action();
            return r;
        }
        expect(Tok::KwWhen, "'when' or 'otherwise'");
        if (at(Tok::KwArgmax)) {
            eat();
            expect(Tok::LParen, "'('");
            Rule r;
            r.kind = RuleKind::Argmax;
            r.argmax_first = parse_int_operand();
            expect(Tok::Comma, "','");
            r.argmax_second = parse_int_operand();
            expect(Tok::RParen, "')'");
            return r;
        }
        Rule r;
        r.kind = RuleKind::When;
        r.guard = parse_bool_expr();
        expect(Tok::Arrow, "'->'");
        r.action = parse_action();
        return r;
    }

    RuleAction parse_action() {
        if (at(Tok::KwAbstain)) {
            eat();
            return RuleAction::Abstain;
        }
        expect(Tok::KwChoose, "'choose' or 'abstain'");
        if (at(Tok::KwFirst)) { eat(); return RuleAction::ChooseFirst; }
        if (at(Tok::KwSecond)) { eat(); return RuleAction::ChooseSecond; }
        fail("expected 'first' or 'second' after 'choose'");
    }

    ExprPtr parse_bool_expr() {
        Value v = parse_or();
        if (v.type != ValType::Bool) fail("type error: boolean expression expected");
        return v.expr;
    }

    ExprPtr parse_int_operand() {
        Value v = parse_sum();
        if (v.type != ValType::Int) fail("type error: integer expression expected");
        return v.expr;
    }

    Value parse_or() {
        Value lhs = parse_and();
        while (at(Tok::KwOr)) {
            eat();
            require_bool(lhs);
            Value rhs = parse_and();
            require_bool(rhs);
            lhs = {ValType::Bool, node(ExprKind::Or, lhs.expr, rhs.expr)};
        }
        return lhs;
    }

    Value parse_and() {
        Value lhs = parse_not();
        while (at(Tok::KwAnd)) {
            eat();
            require_bool(lhs);
            Value rhs = parse_not();
            require_bool(rhs);
            lhs = {ValType::Bool, node(ExprKind::And, lhs.expr, rhs.expr)};
        }
        return lhs;
    }

    Value parse_not() {
        if (at(Tok::KwNot)) {
            eat();
            Value v = parse_not();
            require_bool(v);
            return {ValType::Bool, node(ExprKind::Not, v.expr)};
        }
        return parse_comparison();
    }

    Value parse_comparison() {
        Value lhs = parse_sum();
        ExprKind op;
        switch (cur().kind) {
            case Tok::Eq: op = ExprKind::CmpEq; break;
            case Tok::Ne: op = ExprKind::CmpNe; break;
            case Tok::Lt: op = ExprKind::CmpLt; break;
            case Tok::Le: op = ExprKind::CmpLe; break;
            case Tok::Gt: op = ExprKind::CmpGt; break;
            case Tok::Ge: op = ExprKind::CmpGe; break;
            default: return lhs;
        }
        eat();
        require_int(lhs);
        Value rhs = parse_sum();
        require_int(rhs);
        return {ValType::Bool, node(op, lhs.expr, rhs.expr)};
    }

    Value parse_sum() {
        Value lhs = parse_primary();
        while (at(Tok::Plus) || at(Tok::Minus)) {
            ExprKind op = at(Tok::Plus) ? ExprKind::Add : ExprKind::Sub;
            eat();
            require_int(lhs);
            Value rhs = parse_primary();
            require_int(rhs);
            lhs = {ValType::Int, node(op, lhs.expr, rhs.expr)};
        }
        return lhs;
    }

    Value parse_primary() {
        if (at(Tok::Int)) {
            Token t = eat();
            auto e = std::make_shared<Expr>();
            e->kind = ExprKind::IntLit;
            e->literal = t.value;
            return {ValType::Int, e};
        }
        if (at(Tok::LParen)) {
            eat();
            Value v = parse_or();
            expect(Tok::RParen, "')'");
            return v;
        }
        if (at(Tok::KwFirst) || at(Tok::KwSecond)) {
            Side side = at(Tok::KwFirst) ? Side::First : Side::Second;
            eat();
            expect(Tok::Dot, "'.' after first/second");
            Token field = expect(Tok::Ident, "feature or flag name");
            return resolve_field(side, field);
        }
        fail("expected an integer, a field path, or '('");
    }

    Value resolve_field(Side side, const Token& field) {
        int idx = schema_.feature_index(field.text);
        if (idx >= 0) {
            auto e = std::make_shared<Expr>();
            e->kind = ExprKind::Field;
            e->side = side;
            e->feature = idx;
            return {ValType::Int, e};
        }
        static const std::map<std::string, Flag, std::less<>> kFlags = {
            {"intervention", Flag::Intervention},
            {"is_passengers", Flag::IsPassengers},
            {"signal_green", Flag::SignalGreen},
            {"signal_red", Flag::SignalRed},
            {"signal_none", Flag::SignalNone},
        };
        auto it = kFlags.find(field.text);
        if (it != kFlags.end()) {
            if (!schema_.has_context) {
                throw DslError(field.line, field.col,
                               "flag '" + field.text + "' is not available: domain '" +
                                   schema_.domain_id + "' has no context flags");
            }
            auto e = std::make_shared<Expr>();
            e->kind = ExprKind::FlagRef;
            e->side = side;
            e->flag = it->second;
            return {ValType::Bool, e};
        }
        throw DslError(field.line, field.col,
                       "unknown feature name '" + field.text + "' in domain '" +
                           schema_.domain_id + "'");
    }

    void require_int(const Value& v) const {
        if (v.type != ValType::Int) fail("type error: integer operand expected");
    }
    void require_bool(const Value& v) const {
        if (v.type != ValType::Bool) fail("type error: boolean operand expected");
    }
};

// ------------------------------------------------------------- evaluator

enum class TriBool : std::uint8_t { False, True, Unknown };

// Missing values are strict: any subexpression touching one yields Unknown,
// and an Unknown guard never fires. (No short-circuiting: `true or unknown`
// is Unknown, so a rule referencing a missing feature always falls through.)
struct Evaluator {
    const Scenario& s;

    const Alternative& alt(Side side) const {
        return side == Side::First ? s.first : s.second;
    }

    std::optional<std::int64_t> eval_int(const Expr& e) const {
        switch (e.kind) {
            case ExprKind::IntLit:
                return e.literal;
            case ExprKind::Field: {
                std::int32_t v = alt(e.side).counts[static_cast<std::size_t>(e.feature)];
                if (v == kMissingCount) return std::nullopt;
                return static_cast<std::int64_t>(v);
            }
            case ExprKind::Add:
            case ExprKind::Sub: {
                auto a = eval_int(*e.lhs);
                auto b = eval_int(*e.rhs);
                if (!a || !b) return std::nullopt;
                return e.kind == ExprKind::Add ? *a + *b : *a - *b;
            }
            default:
                return std::nullopt;  // unreachable for type-checked trees
        }
    }

    TriBool eval_bool(const Expr& e) const {
        switch (e.kind) {
            case ExprKind::FlagRef: {
                const Alternative& a = alt(e.side);
                bool v = false;
                switch (e.flag) {
                    case Flag::Intervention: v = a.intervention; break;
                    case Flag::IsPassengers: v = a.is_passengers; break;
                    case Flag::SignalGreen: v = a.crossing_signal == CrossingSignal::Green; break;
                    case Flag::SignalRed: v = a.crossing_signal == CrossingSignal::Red; break;
                    case Flag::SignalNone: v = a.crossing_signal == CrossingSignal::None; break;
                }
                return v ? TriBool::True : TriBool::False;
            }
            case ExprKind::And:
            case ExprKind::Or: {
                TriBool a = eval_bool(*e.lhs);
                TriBool b = eval_bool(*e.rhs);
                if (a == TriBool::Unknown || b == TriBool::Unknown) return TriBool::Unknown;
                bool r = e.kind == ExprKind::And
                             ? (a == TriBool::True && b == TriBool::True)
                             : (a == TriBool::True || b == TriBool::True);
                return r ? TriBool::True : TriBool::False;
            }
            case ExprKind::Not: {
                TriBool a = eval_bool(*e.lhs);
                if (a == TriBool::Unknown) return TriBool::Unknown;
                return a == TriBool::True ? TriBool::False : TriBool::True;
            }
            default: {  // comparisons
                auto a = eval_int(*e.lhs);
                auto b = eval_int(*e.rhs);
                if (!a || !b) return TriBool::Unknown;
                bool r = false;
                switch (e.kind) {
                    case ExprKind::CmpEq: r = *a == *b; break;
                    case ExprKind::CmpNe: r = *a != *b; break;
                    case ExprKind::CmpLt: r = *a < *b; break;
                    case ExprKind::CmpLe: r = *a <= *b; break;
                    case ExprKind::CmpGt: r = *a > *b; break;
                    case ExprKind::CmpGe: r = *a >= *b; break;
                    default: return TriBool::Unknown;
                }
                return r ? TriBool::True : TriBool::False;
            }
        }
    }
};

CandidateLabel action_label(RuleAction a) {
    switch (a) {
        case RuleAction::ChooseFirst: return CandidateLabel::First;
        case RuleAction::ChooseSecond: return CandidateLabel::Second;
        default: return CandidateLabel::Abstain;
    }
}

}  // namespace

std::vector<HeuristicSpec> parse_heuristics(const std::string& text, const Schema& schema) {
    Parser parser(text, schema);
    return parser.parse_all(text);
}

HeuristicSpec parse_heuristic(const std::string& text, const Schema& schema) {
    auto specs = parse_heuristics(text, schema);
    if (specs.size() != 1) {
        throw DslError(1, 1, "expected exactly one heuristic block, found " +
                                 std::to_string(specs.size()));
    }
    return std::move(specs.front());
}

CandidateLabel evaluate(const HeuristicSpec& h, const Scenario& s) {
    const std::size_t n = h.schema.features.size();
    if (s.first.counts.size() != n || s.second.counts.size() != n) {
        throw std::invalid_argument("evaluate: scenario '" + s.id +
                                    "' does not match the heuristic's schema");
    }
    Evaluator ev{s};
    for (const Rule& r : h.rules) {
        switch (r.kind) {
            case RuleKind::Otherwise:
                return action_label(r.action);
            case RuleKind::When:
                if (ev.eval_bool(*r.guard) == TriBool::True) return action_label(r.action);
                break;
            case RuleKind::Argmax: {
                auto a = ev.eval_int(*r.argmax_first);
                auto b = ev.eval_int(*r.argmax_second);
                if (!a || !b) break;  // missing value: fall through
                if (*a > *b) return CandidateLabel::First;
                if (*b > *a) return CandidateLabel::Second;
                return CandidateLabel::Abstain;  // tie
            }
        }
    }
    return CandidateLabel::Abstain;
}

LabelMatrix make_matrix(std::vector<std::string> heuristic_names,
                        std::vector<std::string> scenario_ids,
                        std::vector<CandidateLabel> cells) {
    LabelMatrix L;
    L.n_heuristics = heuristic_names.size();
    L.n_scenarios = scenario_ids.size();
    if (cells.size() != L.n_heuristics * L.n_scenarios) {
        throw std::invalid_argument("make_matrix: cell count does not match dimensions");
    }
    L.heuristic_names = std::move(heuristic_names);
    L.scenario_ids = std::move(scenario_ids);
    L.cells = std::move(cells);
    return L;
}

LabelMatrix apply_all(const std::vector<HeuristicSpec>& suite, const Dataset& d) {
    if (suite.empty()) throw std::invalid_argument("apply_all: empty suite");
    LabelMatrix L;
    L.n_scenarios = d.scenarios.size();
    L.n_heuristics = suite.size();
    L.cells.resize(L.n_scenarios * L.n_heuristics);
    L.heuristic_names.reserve(suite.size());
    for (const auto& h : suite) {
        if (h.schema != d.schema) {
            throw std::invalid_argument("apply_all: heuristic '" + h.name +
                                        "' was parsed against a different schema");
        }
        L.heuristic_names.push_back(h.name);
    }
    L.scenario_ids.reserve(d.scenarios.size());
    for (std::size_t i = 0; i < d.scenarios.size(); ++i) {
        L.scenario_ids.push_back(d.scenarios[i].id);
        for (std::size_t m = 0; m < suite.size(); ++m) {
            L.at(i, m) = evaluate(suite[m], d.scenarios[i]);
        }
    }
    return L;
}

LabelMatrix drop_column(const LabelMatrix& L, std::size_t m) {
    if (m >= L.n_heuristics) throw std::out_of_range("drop_column: index out of range");
    LabelMatrix R;
    R.n_scenarios = L.n_scenarios;
    R.n_heuristics = L.n_heuristics - 1;
    R.scenario_ids = L.scenario_ids;
    R.heuristic_names.reserve(R.n_heuristics);
    for (std::size_t k = 0; k < L.n_heuristics; ++k) {
        if (k != m) R.heuristic_names.push_back(L.heuristic_names[k]);
    }
    R.cells.reserve(R.n_scenarios * R.n_heuristics);
    for (std::size_t i = 0; i < L.n_scenarios; ++i) {
        for (std::size_t k = 0; k < L.n_heuristics; ++k) {
            if (k != m) R.cells.push_back(L.at(i, k));
        }
    }
    return R;
}

LabelMatrix select_rows(const LabelMatrix& L, const std::vector<std::size_t>& rows) {
    LabelMatrix R;
    R.n_scenarios = rows.size();
    R.n_heuristics = L.n_heuristics;
    R.heuristic_names = L.heuristic_names;
    R.scenario_ids.reserve(rows.size());
    R.cells.reserve(rows.size() * L.n_heuristics);
    for (std::size_t i : rows) {
        R.scenario_ids.push_back(L.scenario_ids[i]);
        for (std::size_t m = 0; m < L.n_heuristics; ++m) R.cells.push_back(L.at(i, m));
    }
    return R;
}

// ----------------------------------------------------------- built-ins

namespace {

const std::string kMmSuite = R"(# Moral Machine heuristic suite: one rule per measured preference dimension.
heuristic "save_humans" {
  when first.human > 0 and second.human == 0 -> choose first
  when second.human > 0 and first.human == 0 -> choose second
}
heuristic "utilitarian" {
  when argmax(first.human, second.human)
}
heuristic "save_females" {
  when argmax(first.female, second.female)
}
heuristic "save_youth" {
  when argmax(first.young, second.young)
}
heuristic "save_infants" {
  when argmax(first.infant, second.infant)
}
heuristic "save_pregnant" {
  when argmax(first.pregnant, second.pregnant)
}
heuristic "save_doctors" {
  when argmax(first.medical, second.medical)
}
heuristic "save_fit" {
  when argmax(first.fit, second.fit)
}
heuristic "save_higher_status" {
  when argmax(first.working, second.working)
}
heuristic "sacrifice_criminals" {
  when argmax(second.criminal, first.criminal)
}
heuristic "sacrifice_homeless" {
  when argmax(second.homeless, first.homeless)
}
heuristic "spare_lawful_pedestrians" {
  when first.law_abiding > 0 and second.law_abiding == 0 -> choose first
  when second.law_abiding > 0 and first.law_abiding == 0 -> choose second
}
heuristic "sacrifice_jaywalkers" {
  when argmax(second.law_violating, first.law_violating)
}
heuristic "prefer_inaction" {
  when not first.intervention and second.intervention -> choose first
  when not second.intervention and first.intervention -> choose second
}
heuristic "save_passengers" {
  when first.passenger > 0 and second.passenger == 0 -> choose first
  when second.passenger > 0 and first.passenger == 0 -> choose second
}
heuristic "save_pedestrians" {
  when first.passenger == 0 and second.passenger > 0 -> choose first
  when second.passenger == 0 and first.passenger > 0 -> choose second
}
)";

const std::string kKeSuite = R"(# Kidney-exchange heuristics (feature value 0 = younger / drinks rarely / healthy).
heuristic "choose_younger" {
  when argmax(second.age_old, first.age_old)
}
heuristic "choose_drinks_less" {
  when argmax(second.drinks_frequently, first.drinks_frequently)
}
heuristic "choose_no_health_issues" {
  when argmax(second.has_health_issue, first.has_health_issue)
}
)";

const std::string kKeOpposites = R"(# Contradictions of the three kidney-exchange heuristics.
heuristic "choose_older" {
  when argmax(first.age_old, second.age_old)
}
heuristic "choose_drinks_more" {
  when argmax(first.drinks_frequently, second.drinks_frequently)
}
heuristic "choose_health_issues" {
  when argmax(first.has_health_issue, second.has_health_issue)
}
)";

const std::string kKeWithOpposites = kKeSuite + kKeOpposites;

}  // namespace

const std::string& builtin_suite_source(const std::string& domain) {
    if (domain == "mm") return kMmSuite;
    if (domain == "ke") return kKeSuite;
    if (domain == "ke_with_opposites") return kKeWithOpposites;
    throw std::invalid_argument("unknown builtin suite '" + domain +
                                "' (expected mm, ke, or ke_with_opposites)");
}

std::vector<HeuristicSpec> builtin_suite(const std::string& domain) {
    const Schema& schema = (domain == "mm") ? mm_schema() : ke_schema();
    return parse_heuristics(builtin_suite_source(domain), schema);
}

const std::vector<std::string>& ke_strategy_names() {
    static const std::vector<std::string> names = {
        "choose_younger",  "choose_drinks_less", "choose_no_health_issues",
        "choose_older",    "choose_drinks_more", "choose_health_issues",
    };
    return names;
}

// ----------------------------------------------------------- suite files

std::vector<HeuristicSpec> load_suite_file(const std::string& path, const Schema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open suite file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_heuristics(buf.str(), schema);
    } catch (const DslError& e) {
        throw std::runtime_error(path + ":" + e.what());
    }
}

std::vector<HeuristicSpec> load_suite_dir(const std::string& dir, const Schema& schema) {
    namespace fs = std::filesystem;
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file()) files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    std::vector<HeuristicSpec> suite;
    std::unordered_set<std::string> names;
    for (const auto& f : files) {
        for (auto& spec : load_suite_file(f, schema)) {
            if (!names.insert(spec.name).second) {
                throw std::runtime_error("duplicate heuristic name '" + spec.name +
                                         "' in suite directory " + dir);
            }
            suite.push_back(std::move(spec));
        }
    }
    if (suite.empty()) throw std::runtime_error("no heuristics found in directory " + dir);
    return suite;
}

// --------------------------------------------------------- matrix CSV io

void write_label_matrix(const std::string& path, const LabelMatrix& L) {
    csv::Table t;
    t.schema_id = "label-matrix";
    t.header.push_back("scenario_id");
    for (const auto& name : L.heuristic_names) t.header.push_back(name);
    t.rows.reserve(L.n_scenarios);
    for (std::size_t i = 0; i < L.n_scenarios; ++i) {
        std::vector<std::string> row;
        row.reserve(L.n_heuristics + 1);
        row.push_back(L.scenario_ids[i]);
        for (std::size_t m = 0; m < L.n_heuristics; ++m) row.push_back(to_string(L.at(i, m)));
        t.rows.push_back(std::move(row));
    }
    csv::write_file(path, t);
}

LabelMatrix read_label_matrix(const std::string& path) {
    csv::Table t = csv::read_file(path, "label-matrix");
    if (t.header.empty() || t.header[0] != "scenario_id") {
        throw std::runtime_error(path + ": first column must be scenario_id");
    }
    LabelMatrix L;
    L.n_heuristics = t.header.size() - 1;
    L.n_scenarios = t.rows.size();
    L.heuristic_names.assign(t.header.begin() + 1, t.header.end());
    L.cells.reserve(L.n_scenarios * L.n_heuristics);
    for (const auto& row : t.rows) {
        L.scenario_ids.push_back(row[0]);
        for (std::size_t m = 1; m < row.size(); ++m) {
            if (row[m] == "F") L.cells.push_back(CandidateLabel::First);
            else if (row[m] == "S") L.cells.push_back(CandidateLabel::Second);
            else if (row[m] == "-") L.cells.push_back(CandidateLabel::Abstain);
            else throw std::runtime_error(path + ": bad cell '" + row[m] + "'");
        }
    }
    return L;
}

}  // namespace dforge::heuristics
