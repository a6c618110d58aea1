#include "restq/ipd_rules.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>

#include "restq/error.hpp"
#include "restq/rng.hpp"

namespace restq {

namespace {

// --- tokenizer ---------------------------------------------------------

enum class TokKind { Ident, Number, Quoted, Op, LParen, RParen, Comma, End };

struct Token {
    TokKind kind = TokKind::End;
    std::string text;
};

bool ident_start(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_';
}

bool ident_char(char c) {
    return ident_start(c) || (c >= '0' && c <= '9') || c == '.' || c == '-';
}

std::vector<Token> tokenize(const std::string& s, std::string* error) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < s.size()) {
        char c = s[i];
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            ++i;
            continue;
        }
        if (c == '(') {
            out.push_back({TokKind::LParen, "("});
            ++i;
            continue;
        }
        if (c == ')') {
            out.push_back({TokKind::RParen, ")"});
            ++i;
            continue;
        }
        if (c == ',') {
            out.push_back({TokKind::Comma, ","});
            ++i;
            continue;
        }
        if (c == '\'' || c == '"') {
            std::size_t close = s.find(c, i + 1);
            if (close == std::string::npos) {
                *error = "unterminated quote";
                return {};
            }
            out.push_back({TokKind::Quoted, s.substr(i + 1, close - i - 1)});
            i = close + 1;
            continue;
        }
        if (c == '=' || c == '!' || c == '<' || c == '>') {
            std::string op(1, c);
            if (i + 1 < s.size() && s[i + 1] == '=')
                op += '=';
            if (op == "!") {
                *error = "stray '!'";
                return {};
            }
            out.push_back({TokKind::Op, op});
            i += op.size();
            continue;
        }
        if ((c >= '0' && c <= '9') ||
            (c == '-' && i + 1 < s.size() && s[i + 1] >= '0' && s[i + 1] <= '9')) {
            std::size_t j = i + 1;
            bool dot = false;
            while (j < s.size() && ((s[j] >= '0' && s[j] <= '9') || (s[j] == '.' && !dot))) {
                if (s[j] == '.')
                    dot = true;
                ++j;
            }
            out.push_back({TokKind::Number, s.substr(i, j - i)});
            i = j;
            continue;
        }
        if (ident_start(c)) {
            std::size_t j = i + 1;
            while (j < s.size() && ident_char(s[j]))
                ++j;
            out.push_back({TokKind::Ident, s.substr(i, j - i)});
            i = j;
            continue;
        }
        *error = std::string("unexpected character '") + c + "'";
        return {};
    }
    out.push_back({TokKind::End, ""});
    return out;
}

// --- parser ------------------------------------------------------------

struct Cursor {
    const std::vector<Token>* toks;
    std::size_t pos = 0;

    const Token& peek() const { return (*toks)[pos]; }
    Token take() { return (*toks)[pos++]; }
};

ParamRef make_ref(const std::string& name, const std::string& this_param) {
    if (name == "this") {
        if (!this_param.empty())
            return {this_param, false};
        return {"this", true};
    }
    return {name, false};
}

std::optional<Cmp> cmp_from_text(const std::string& op) {
    if (op == "==" || op == "=")
        return Cmp::Eq;
    if (op == "!=")
        return Cmp::Ne;
    if (op == "<")
        return Cmp::Lt;
    if (op == "<=")
        return Cmp::Le;
    if (op == ">")
        return Cmp::Gt;
    if (op == ">=")
        return Cmp::Ge;
    return std::nullopt;
}

bool parse_predicate(Cursor& cur, const std::string& this_param, Predicate& out,
                     std::string* error) {
    if (cur.peek().kind != TokKind::Ident) {
        *error = "expected parameter name";
        return false;
    }
    out.param = make_ref(cur.take().text, this_param);
    out.cmp.reset();
    out.literal.clear();
    if (cur.peek().kind == TokKind::Op) {
        auto cmp = cmp_from_text(cur.take().text);
        if (!cmp) {
            *error = "unknown comparator";
            return false;
        }
        const Token& lit = cur.peek();
        if (lit.kind != TokKind::Ident && lit.kind != TokKind::Number &&
            lit.kind != TokKind::Quoted) {
            *error = "expected literal after comparator";
            return false;
        }
        out.cmp = cmp;
        out.literal = cur.take().text;
    }
    return true;
}

std::optional<RuleKind> kind_from_text(const std::string& word) {
    if (word == "Requires")
        return RuleKind::Requires;
    if (word == "Or")
        return RuleKind::Or;
    if (word == "OnlyOne")
        return RuleKind::OnlyOne;
    if (word == "AllOrNone")
        return RuleKind::AllOrNone;
    if (word == "ZeroOrOne")
        return RuleKind::ZeroOrOne;
    return std::nullopt;
}

bool parse_segment(const std::string& segment, const std::string& this_param, Rule& out,
                   std::string* error) {
    std::vector<Token> toks = tokenize(segment, error);
    if (toks.empty())
        return false;
    Cursor cur{&toks};
    if (cur.peek().kind != TokKind::Ident) {
        *error = "expected rule keyword";
        return false;
    }
    if (cur.peek().text == "IF") {
        cur.take();
        out.kind = RuleKind::Conditional;
        out.params.clear();
        if (!parse_predicate(cur, this_param, out.antecedent, error))
            return false;
        if (cur.peek().kind != TokKind::Ident || cur.peek().text != "THEN") {
            *error = "expected THEN";
            return false;
        }
        cur.take();
        if (!parse_predicate(cur, this_param, out.consequent, error))
            return false;
        if (cur.peek().kind != TokKind::End) {
            *error = "trailing tokens after conditional";
            return false;
        }
        return true;
    }
    auto kind = kind_from_text(cur.peek().text);
    if (!kind) {
        *error = "unknown rule kind '" + cur.peek().text + "'";
        return false;
    }
    cur.take();
    out.kind = *kind;
    out.antecedent = {};
    out.consequent = {};
    out.params.clear();
    if (cur.take().kind != TokKind::LParen) {
        *error = "expected '('";
        return false;
    }
    while (true) {
        if (cur.peek().kind != TokKind::Ident) {
            *error = "expected parameter name";
            return false;
        }
        out.params.push_back(make_ref(cur.take().text, this_param));
        if (cur.peek().kind == TokKind::Comma) {
            cur.take();
            continue;
        }
        break;
    }
    if (cur.take().kind != TokKind::RParen) {
        *error = "expected ')'";
        return false;
    }
    if (cur.peek().kind != TokKind::End) {
        *error = "trailing tokens after combinator";
        return false;
    }
    if (out.params.size() < 2) {
        *error = "combinator needs at least two parameters";
        return false;
    }
    if (out.kind == RuleKind::Requires && out.params.size() != 2) {
        *error = "Requires takes exactly two parameters";
        return false;
    }
    return true;
}

std::vector<std::string> split_segments(const std::string& text) {
    std::vector<std::string> segments;
    std::string current;
    char quote = 0;
    for (char c : text) {
        if (quote) {
            current += c;
            if (c == quote)
                quote = 0;
            continue;
        }
        if (c == '\'' || c == '"') {
            quote = c;
            current += c;
            continue;
        }
        if (c == ';') {
            segments.push_back(current);
            current.clear();
            continue;
        }
        current += c;
    }
    segments.push_back(current);
    return segments;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos)
        return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

// --- evaluation --------------------------------------------------------

bool is_present(const Assignment& a, const std::string& name) {
    return a.find(name) != a.end();
}

std::optional<std::string> value_as_text(const Assignment& a, const std::string& name) {
    auto it = a.find(name);
    if (it == a.end() || !it->second.has_value())
        return std::nullopt;
    const Json& v = *it->second;
    if (v.is_string())
        return v.get<std::string>();
    return v.dump();
}

std::optional<double> as_number(const std::string& s) {
    if (s.empty())
        return std::nullopt;
    try {
        std::size_t pos = 0;
        double d = std::stod(s, &pos);
        if (pos == s.size())
            return d;
    } catch (const std::exception&) {
    }
    return std::nullopt;
}

bool compare(Cmp cmp, const std::string& lhs, const std::string& rhs) {
    auto ln = as_number(lhs);
    auto rn = as_number(rhs);
    int order;
    bool equal;
    if (ln && rn) {
        equal = *ln == *rn;
        order = (*ln < *rn) ? -1 : (*ln > *rn ? 1 : 0);
    } else {
        equal = lhs == rhs;
        order = lhs.compare(rhs);
    }
    switch (cmp) {
    case Cmp::Eq:
        return equal;
    case Cmp::Ne:
        return !equal;
    case Cmp::Lt:
        return order < 0;
    case Cmp::Le:
        return order <= 0;
    case Cmp::Gt:
        return order > 0;
    case Cmp::Ge:
        return order >= 0;
    }
    return false;
}

bool holds(const Predicate& pred, const Assignment& a) {
    if (!is_present(a, pred.param.name))
        return false;
    if (!pred.cmp)
        return true;
    auto text = value_as_text(a, pred.param.name);
    if (!text)
        return false; // to-fill marker: present, but no value to compare yet
    return compare(*pred.cmp, *text, pred.literal);
}

// --- repair helpers ----------------------------------------------------

double priority_of(const std::map<std::string, double>& priority, const std::string& name) {
    auto it = priority.find(name);
    return it == priority.end() ? 0.0 : it->second;
}

// Higher score wins; ties go to the lexicographically smaller name.
std::string best_name(const std::vector<std::string>& names,
                      const std::map<std::string, double>& priority) {
    std::string best = names.front();
    double best_score = priority_of(priority, best);
    for (std::size_t i = 1; i < names.size(); ++i) {
        double score = priority_of(priority, names[i]);
        if (score > best_score || (score == best_score && names[i] < best)) {
            best = names[i];
            best_score = score;
        }
    }
    return best;
}

Json literal_to_json(const std::string& literal) {
    if (literal == "true")
        return true;
    if (literal == "false")
        return false;
    if (auto num = as_number(literal)) {
        double d = *num;
        if (d == std::floor(d) && std::abs(d) < 1e15 &&
            literal.find('.') == std::string::npos)
            return static_cast<std::int64_t>(d);
        return d;
    }
    return literal;
}

// Picks a value satisfying `cmp literal`, or nullopt when none can be made.
std::optional<Json> satisfying_value(Cmp cmp, const std::string& literal) {
    switch (cmp) {
    case Cmp::Eq:
        return literal_to_json(literal);
    case Cmp::Ne: {
        if (auto num = as_number(literal))
            return *num + 1;
        return Json(literal + "_x");
    }
    case Cmp::Lt:
        if (auto num = as_number(literal))
            return *num - 1;
        return std::nullopt;
    case Cmp::Le:
    case Cmp::Ge:
        if (auto num = as_number(literal))
            return literal_to_json(literal);
        return std::nullopt;
    case Cmp::Gt:
        if (auto num = as_number(literal))
            return *num + 1;
        return std::nullopt;
    }
    return std::nullopt;
}

std::vector<std::string> present_members(const std::vector<ParamRef>& refs, const Assignment& a) {
    std::vector<std::string> out;
    for (const auto& r : refs)
        if (is_present(a, r.name))
            out.push_back(r.name);
    return out;
}

std::vector<std::string> member_names(const std::vector<ParamRef>& refs) {
    std::vector<std::string> out;
    out.reserve(refs.size());
    for (const auto& r : refs)
        out.push_back(r.name);
    return out;
}

// One greedy edit toward satisfying an unsatisfied rule. Returns false when
// no edit is available (the value constraint cannot be synthesized).
bool apply_edit(Assignment& a, const Rule& rule, const std::map<std::string, double>& priority) {
    switch (rule.kind) {
    case RuleKind::Requires: {
        a.emplace(rule.params[1].name, std::nullopt);
        return true;
    }
    case RuleKind::Or: {
        a.emplace(best_name(member_names(rule.params), priority), std::nullopt);
        return true;
    }
    case RuleKind::OnlyOne: {
        auto present = present_members(rule.params, a);
        if (present.empty()) {
            a.emplace(best_name(member_names(rule.params), priority), std::nullopt);
            return true;
        }
        std::string keep = best_name(present, priority);
        for (const auto& name : present)
            if (name != keep)
                a.erase(name);
        return true;
    }
    case RuleKind::AllOrNone: {
        for (const auto& ref : rule.params)
            a.emplace(ref.name, std::nullopt);
        return true;
    }
    case RuleKind::ZeroOrOne: {
        auto present = present_members(rule.params, a);
        std::string keep = best_name(present, priority);
        for (const auto& name : present)
            if (name != keep)
                a.erase(name);
        return true;
    }
    case RuleKind::Conditional: {
        const Predicate& cons = rule.consequent;
        if (!cons.cmp) {
            a.emplace(cons.param.name, std::nullopt);
            return true;
        }
        if (auto value = satisfying_value(*cons.cmp, cons.literal)) {
            a[cons.param.name] = *value;
            return true;
        }
        // No synthesizable consequent value: falsify the antecedent instead.
        if (is_present(a, rule.antecedent.param.name)) {
            a.erase(rule.antecedent.param.name);
            return true;
        }
        return false;
    }
    }
    return false;
}

bool greedy_pass(Assignment& a, const std::vector<Rule>& rules,
                 const std::map<std::string, double>& priority, int max_passes) {
    for (int pass = 0; pass < max_passes; ++pass) {
        bool all_ok = true;
        bool edited = false;
        for (const auto& rule : rules) {
            if (evaluate(rule, a))
                continue;
            all_ok = false;
            if (apply_edit(a, rule, priority))
                edited = true;
        }
        if (all_ok)
            return true;
        if (!edited)
            return false;
    }
    return evaluate_all(rules, a);
}

std::vector<std::string> involved_params(const std::vector<Rule>& rules) {
    std::set<std::string> names;
    for (const auto& rule : rules) {
        for (const auto& ref : rule.params)
            names.insert(ref.name);
        if (rule.kind == RuleKind::Conditional) {
            names.insert(rule.antecedent.param.name);
            names.insert(rule.consequent.param.name);
        }
    }
    return {names.begin(), names.end()};
}

// Value pass for the exhaustive fallback: fix presence, force eq-style
// consequents a few rounds, then see whether everything holds.
bool settle_values(Assignment& a, const std::vector<Rule>& rules) {
    int cap = static_cast<int>(rules.size()) + 2;
    for (int pass = 0; pass < cap; ++pass) {
        bool edited = false;
        for (const auto& rule : rules) {
            if (rule.kind != RuleKind::Conditional || evaluate(rule, a))
                continue;
            const Predicate& cons = rule.consequent;
            if (!cons.cmp || !is_present(a, cons.param.name))
                continue;
            if (auto value = satisfying_value(*cons.cmp, cons.literal)) {
                a[cons.param.name] = *value;
                edited = true;
            }
        }
        if (!edited)
            break;
    }
    return evaluate_all(rules, a);
}

} // namespace

std::string to_string(RuleKind kind) {
    switch (kind) {
    case RuleKind::Requires:
        return "Requires";
    case RuleKind::Or:
        return "Or";
    case RuleKind::OnlyOne:
        return "OnlyOne";
    case RuleKind::AllOrNone:
        return "AllOrNone";
    case RuleKind::ZeroOrOne:
        return "ZeroOrOne";
    case RuleKind::Conditional:
        return "Conditional";
    }
    return "Requires";
}

std::string to_string(Cmp cmp) {
    switch (cmp) {
    case Cmp::Eq:
        return "==";
    case Cmp::Ne:
        return "!=";
    case Cmp::Lt:
        return "<";
    case Cmp::Le:
        return "<=";
    case Cmp::Gt:
        return ">";
    case Cmp::Ge:
        return ">=";
    }
    return "==";
}

ParseResult parse_rules(const std::string& text, const std::string& this_param) {
    ParseResult result;
    for (const auto& raw : split_segments(text)) {
        std::string segment = trim(raw);
        if (segment.empty())
            continue;
        Rule rule;
        std::string error;
        if (parse_segment(segment, this_param, rule, &error))
            result.rules.push_back(std::move(rule));
        else
            result.diagnostics.push_back({segment, error});
    }
    return result;
}

void validate_rule(const Rule& rule, const std::set<std::string>& known_params) {
    auto check = [&](const ParamRef& ref) {
        if (ref.is_this)
            throw UnknownParam("unresolved 'this' in rule");
        if (!known_params.count(ref.name))
            throw UnknownParam("rule references unknown parameter '" + ref.name + "'");
    };
    for (const auto& ref : rule.params)
        check(ref);
    if (rule.kind == RuleKind::Conditional) {
        check(rule.antecedent.param);
        check(rule.consequent.param);
    }
}

bool evaluate(const Rule& rule, const Assignment& assignment) {
    switch (rule.kind) {
    case RuleKind::Requires:
        return !is_present(assignment, rule.params[0].name) ||
               is_present(assignment, rule.params[1].name);
    case RuleKind::Or: {
        for (const auto& ref : rule.params)
            if (is_present(assignment, ref.name))
                return true;
        return false;
    }
    case RuleKind::OnlyOne:
        return present_members(rule.params, assignment).size() == 1;
    case RuleKind::AllOrNone: {
        std::size_t n = present_members(rule.params, assignment).size();
        return n == 0 || n == rule.params.size();
    }
    case RuleKind::ZeroOrOne:
        return present_members(rule.params, assignment).size() <= 1;
    case RuleKind::Conditional:
        return !holds(rule.antecedent, assignment) || holds(rule.consequent, assignment);
    }
    return true;
}

bool evaluate_all(const std::vector<Rule>& rules, const Assignment& assignment) {
    for (const auto& rule : rules)
        if (!evaluate(rule, assignment))
            return false;
    return true;
}

Assignment repair(const Assignment& assignment, const std::vector<Rule>& rules,
                  std::uint64_t rng_seed, const std::map<std::string, double>& priority) {
    if (evaluate_all(rules, assignment))
        return assignment;

    constexpr int kMaxPasses = 20;
    Assignment work = assignment;
    if (greedy_pass(work, rules, priority, kMaxPasses))
        return work;

    // Greedy can oscillate between rules that undo each other's edits.
    // Retries with jittered priorities break such cycles cheaply.
    Rng rng(rng_seed);
    for (int attempt = 0; attempt < 8; ++attempt) {
        std::map<std::string, double> jittered = priority;
        for (const auto& name : involved_params(rules))
            jittered[name] = priority_of(priority, name) + rng.uniform();
        work = assignment;
        if (greedy_pass(work, rules, jittered, kMaxPasses))
            return work;
    }

    // Last resort: enumerate presence patterns over the involved parameters,
    // nearest to the original assignment first.
    std::vector<std::string> involved = involved_params(rules);
    if (involved.size() <= 16) {
        std::uint32_t original_bits = 0;
        for (std::size_t i = 0; i < involved.size(); ++i)
            if (is_present(assignment, involved[i]))
                original_bits |= (1u << i);
        std::uint32_t total = 1u << involved.size();
        std::vector<std::uint32_t> patterns(total);
        for (std::uint32_t p = 0; p < total; ++p)
            patterns[p] = p;
        std::sort(patterns.begin(), patterns.end(), [&](std::uint32_t x, std::uint32_t y) {
            int dx = std::popcount(x ^ original_bits);
            int dy = std::popcount(y ^ original_bits);
            return dx != dy ? dx < dy : x < y;
        });
        for (std::uint32_t pattern : patterns) {
            Assignment candidate = assignment;
            for (std::size_t i = 0; i < involved.size(); ++i) {
                bool want = (pattern >> i) & 1;
                if (want)
                    candidate.emplace(involved[i], std::nullopt);
                else
                    candidate.erase(involved[i]);
            }
            if (settle_values(candidate, rules))
                return candidate;
        }
    }
    throw Unsatisfiable("no assignment satisfies the rule set");
}

static std::string serialize_predicate(const Predicate& pred) {
    std::string out = pred.param.is_this ? "this" : pred.param.name;
    if (pred.cmp) {
        out += to_string(*pred.cmp);
        if (pred.literal == "true" || pred.literal == "false" || as_number(pred.literal))
            out += pred.literal;
        else
            out += "'" + pred.literal + "'";
    }
    return out;
}

std::string serialize(const Rule& rule) {
    if (rule.kind == RuleKind::Conditional) {
        return "IF " + serialize_predicate(rule.antecedent) + " THEN " +
               serialize_predicate(rule.consequent) + ";";
    }
    std::string out = to_string(rule.kind) + "(";
    for (std::size_t i = 0; i < rule.params.size(); ++i) {
        if (i)
            out += ",";
        out += rule.params[i].is_this ? "this" : rule.params[i].name;
    }
    out += ")";
    return out;
}

} // namespace restq
