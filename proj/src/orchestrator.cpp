#include "restq/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>

#include "restq/error.hpp"
#include "restq/reporting.hpp"
#include "restq/rng.hpp"

namespace restq {

namespace {

std::string now_rfc3339() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::set<std::string> sorted_member_names(const Rule& rule) {
    std::set<std::string> names;
    for (const auto& ref : rule.params)
        names.insert(ref.name);
    return names;
}

std::set<std::string> known_param_names(const Operation& op) {
    std::set<std::string> names;
    for (const auto& p : op.parameters)
        names.insert(p.name);
    return names;
}

} // namespace

std::vector<Rule> merge_rules(const std::vector<Rule>& active, const std::vector<Rule>& incoming,
                              std::vector<std::string>* conflict_log) {
    std::vector<Rule> out = active;
    std::set<std::string> seen;
    for (const auto& rule : out)
        seen.insert(serialize(rule));

    for (const auto& rule : incoming) {
        std::string key = serialize(rule);
        if (seen.count(key))
            continue;
        if (rule.kind == RuleKind::OnlyOne || rule.kind == RuleKind::AllOrNone) {
            auto names = sorted_member_names(rule);
            for (auto it = out.begin(); it != out.end();) {
                bool exclusivity_pair = (it->kind == RuleKind::OnlyOne ||
                                         it->kind == RuleKind::AllOrNone) &&
                                        it->kind != rule.kind;
                if (exclusivity_pair && sorted_member_names(*it) == names) {
                    if (conflict_log)
                        conflict_log->push_back(serialize(*it) + " replaced by " + key);
                    seen.erase(serialize(*it));
                    it = out.erase(it);
                } else {
                    ++it;
                }
            }
        }
        out.push_back(rule);
        seen.insert(key);
    }
    return out;
}

CampaignOutcome run_campaign(const ApiModel& model, const CampaignConfig& config, LmClient* lm) {
    CampaignState state;
    state.started_at = now_rfc3339();
    auto t0 = std::chrono::steady_clock::now();
    auto deadline = t0 + std::chrono::milliseconds(config.time_budget_ms);

    state.qstate = init_qstate(model);
    state.pools = ValuePool(config.values);
    state.pools.seed_from_spec(model);
    state.ledger = ErrorLedger(config.normalize_500_messages);
    for (const auto& [op_id, rules] : config.preloaded_rules)
        if (model.find_operation(op_id))
            state.active_rules[op_id] = rules;

    Rng rng(config.seed);
    const std::string base = config.base_url.empty() ? model.base_url : config.base_url;
    const bool lm_enabled =
        lm && (config.features.use_ipd_model || config.features.use_ex_model);
    std::map<std::string, std::string> last_message;

    while (!model.operations.empty()) {
        if (std::chrono::steady_clock::now() >= deadline)
            break;
        if (config.max_requests && state.interactions.size() >= config.max_requests)
            break;

        const std::string op_id = select_operation(state.qstate, config.rl, rng);
        const Operation& op = *model.find_operation(op_id);
        const std::set<std::string> chosen =
            select_parameters(state.qstate, op, config.rl, rng);

        Assignment assignment;
        for (const auto& name : chosen) {
            const Parameter* param = op.find_parameter(name);
            assignment[name] = state.pools.draw(op_id, *param, rng);
        }

        const auto& rules = state.active_rules[op_id];
        if (!rules.empty()) {
            std::map<std::string, double> priority = state.qstate.param_q[op_id];
            try {
                assignment = repair(assignment, rules, rng.fork_seed(), priority);
            } catch (const Unsatisfiable&) {
                ++state.repair_failures; // send the unrepaired request anyway
            }
        }
        for (auto& [name, value] : assignment) {
            if (value)
                continue;
            const Parameter* param = op.find_parameter(name);
            if (param)
                value = state.pools.draw(op_id, *param, rng);
            else
                value = Json("");
        }
        for (const auto& param : op.parameters) {
            if (param.required && !assignment.count(param.name))
                assignment[param.name] = state.pools.draw(op_id, param, rng);
        }

        TestInteraction interaction;
        try {
            HttpRequest request = build_request(op, assignment, base, config.auth_headers);
            interaction = send_request(request, config.request_timeout_ms);
        } catch (const MissingPathParam&) {
            interaction.status = 0;
            interaction.status_class = StatusClass::Other;
        }
        interaction.operation_id = op_id;
        const std::size_t index = state.interactions.size();

        std::set<std::string> sent;
        for (const auto& [name, value] : assignment)
            sent.insert(name);
        update_q(state.qstate, op_id, sent, interaction.status_class, config.rl);

        if (interaction.status_class == StatusClass::Success2xx) {
            state.processed.insert(op_id);
            Json body = Json::parse(interaction.response_body, nullptr, false);
            if (!body.is_discarded())
                state.pools.harvest_response(model, body);
        }
        if (interaction.status == 500)
            state.ledger.record(interaction, index);
        last_message[op_id] = interaction.response_message;
        state.interactions.push_back(interaction);

        if (lm_enabled &&
            state.qstate.failure_streak[op_id] >= config.rl.failure_streak_threshold) {
            std::set<std::string> consult = sent;
            consult.insert(chosen.begin(), chosen.end());
            if (consult.empty())
                consult = known_param_names(op);
            const std::set<std::string> known = known_param_names(op);
            for (const auto& name : consult) {
                const Parameter* param = op.find_parameter(name);
                if (!param)
                    continue;
                const std::string context = compose_context(
                    param->description, last_message[op_id],
                    config.features.use_param_description, config.features.use_server_response);
                if (config.features.use_ipd_model) {
                    LmExchange exchange = lm->run({LmTaskKind::Ipd, name, context});
                    state.rule_diagnostics += exchange.rules.diagnostics.size();
                    std::vector<Rule> valid;
                    for (const auto& rule : exchange.rules.rules) {
                        try {
                            validate_rule(rule, known);
                            valid.push_back(rule);
                        } catch (const UnknownParam&) {
                            ++state.rule_diagnostics;
                        }
                    }
                    auto& active = state.active_rules[op_id];
                    std::set<std::string> before;
                    for (const auto& rule : active)
                        before.insert(serialize(rule));
                    active = merge_rules(active, valid, &state.rule_conflicts);
                    for (const auto& rule : valid) {
                        std::string key = serialize(rule);
                        if (!before.count(key))
                            state.learned_rule_keys[op_id].insert(key);
                    }
                    state.lm_exchanges.emplace_back(index, std::move(exchange));
                }
                if (config.features.use_ex_model) {
                    LmExchange exchange = lm->run({LmTaskKind::Ex, name, context});
                    state.pools.enrich(op_id, name, exchange.values, param);
                    state.lm_exchanges.emplace_back(index, std::move(exchange));
                }
            }
            state.qstate.failure_streak[op_id] = 0;
        }
    }

    if (!state.interactions.empty()) {
        std::size_t probe = std::min<std::size_t>(state.interactions.size(), 5);
        bool all_dead = true;
        for (std::size_t i = 0; i < probe; ++i)
            if (state.interactions[i].status != 0)
                all_dead = false;
        state.target_unreachable_at_start = all_dead;
    }

    state.finished_at = now_rfc3339();
    state.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    CampaignOutcome outcome;
    outcome.report = finalize_report(state, config, model);
    outcome.state = std::move(state);
    return outcome;
}

} // namespace restq
