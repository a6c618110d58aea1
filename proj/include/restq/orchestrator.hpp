#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "restq/executor.hpp"
#include "restq/ipd_rules.hpp"
#include "restq/lm_backend.hpp"
#include "restq/rl_engine.hpp"
#include "restq/spec_model.hpp"
#include "restq/value_gen.hpp"

namespace restq {

struct FeatureFlags {
    bool use_param_description = true;
    bool use_server_response = true;
    bool use_ipd_model = true;
    bool use_ex_model = true;
};

struct CampaignConfig {
    long long time_budget_ms = 60000;
    std::uint64_t seed = 0;
    std::size_t max_requests = 0; // 0: only the time budget limits the run
    FeatureFlags features;
    RlConfig rl;
    ValueGenConfig values;
    std::string base_url; // empty: use the document's servers entry
    std::map<std::string, std::string> auth_headers;
    int request_timeout_ms = 10000;
    bool normalize_500_messages = true;
    std::map<std::string, std::vector<Rule>> preloaded_rules; // per operation
};

struct CampaignState {
    QState qstate;
    ValuePool pools;
    std::map<std::string, std::vector<Rule>> active_rules;
    ErrorLedger ledger;
    std::set<std::string> processed; // operations with at least one 2xx
    std::vector<TestInteraction> interactions;
    std::vector<std::pair<std::size_t, LmExchange>> lm_exchanges; // (after interaction, exchange)
    std::vector<std::string> rule_conflicts;
    std::size_t rule_diagnostics = 0;
    std::size_t repair_failures = 0;
    std::map<std::string, std::set<std::string>> learned_rule_keys; // per operation
    bool target_unreachable_at_start = false;
    std::string started_at;
    std::string finished_at;
    double wall_time_ms = 0.0;
};

struct CampaignOutcome {
    CampaignState state;
    Json report;
};

// Set-union keyed by canonical serialization. An incoming OnlyOne/AllOrNone
// whose member set matches an active rule of the other kind replaces it; the
// replacement is appended to conflict_log.
std::vector<Rule> merge_rules(const std::vector<Rule>& active, const std::vector<Rule>& incoming,
                              std::vector<std::string>* conflict_log = nullptr);

// The main loop: select operation and parameters, draw values, repair against
// the operation's active rules, send, learn from the outcome, and consult the
// LM after a failure streak. Stops when the time budget (or request cap) is
// reached. lm may be null; LM features then stay inert.
CampaignOutcome run_campaign(const ApiModel& model, const CampaignConfig& config,
                             LmClient* lm = nullptr);

} // namespace restq
