#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "restq/spec_model.hpp"

namespace restq {

enum class RuleKind { Requires, Or, OnlyOne, AllOrNone, ZeroOrOne, Conditional };
enum class Cmp { Eq, Ne, Lt, Le, Gt, Ge };

std::string to_string(RuleKind kind);
std::string to_string(Cmp cmp);

struct ParamRef {
    std::string name;
    bool is_this = false; // unresolved `this`; resolution needs a context parameter

    bool operator==(const ParamRef&) const = default;
};

// Presence test when cmp is absent, value comparison otherwise.
struct Predicate {
    ParamRef param;
    std::optional<Cmp> cmp;
    std::string literal; // raw text, quotes stripped

    bool operator==(const Predicate&) const = default;
};

struct Rule {
    RuleKind kind = RuleKind::Requires;
    std::vector<ParamRef> params; // combinators only
    Predicate antecedent;         // conditionals only
    Predicate consequent;

    bool operator==(const Rule&) const = default;
};

struct ParseDiagnostic {
    std::string segment;
    std::string message;
};

struct ParseResult {
    std::vector<Rule> rules;
    std::vector<ParseDiagnostic> diagnostics;
};

// Parameter assignment for one request. A key that is present but maps to
// nullopt is a "to-fill" marker: the parameter is included, its value is
// chosen later. Value predicates treat to-fill as not matching.
using Assignment = std::map<std::string, std::optional<Json>>;

// Total function: unparseable segments land in diagnostics, never throw.
// `this` tokens resolve to this_param when given, else stay unresolved.
ParseResult parse_rules(const std::string& text, const std::string& this_param = "");

// Throws UnknownParam when the rule mentions a name outside known_params.
void validate_rule(const Rule& rule, const std::set<std::string>& known_params);

bool evaluate(const Rule& rule, const Assignment& assignment);

bool evaluate_all(const std::vector<Rule>& rules, const Assignment& assignment);

// Minimal-greedy edits toward satisfying every rule, deterministic for a
// given (assignment, rules, seed, priority). Throws Unsatisfiable.
Assignment repair(const Assignment& assignment, const std::vector<Rule>& rules,
                  std::uint64_t rng_seed, const std::map<std::string, double>& priority);

// Canonical text: "Kind(p1,p2)" and "IF a==b THEN c=='d';".
// parse_rules(serialize(r)) yields a structurally equal rule.
std::string serialize(const Rule& rule);

} // namespace restq
