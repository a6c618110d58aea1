#include "restq/reporting.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "restq/error.hpp"
#include "restq/rng.hpp"

namespace restq {

namespace {

Json query_to_json(const std::vector<std::pair<std::string, std::string>>& query) {
    Json out = Json::array();
    for (const auto& [name, value] : query)
        out.push_back(Json{{"name", name}, {"value", value}});
    return out;
}

std::string type_name(const Json& v) {
    if (v.is_object())
        return "object";
    if (v.is_array())
        return "array";
    if (v.is_string())
        return "string";
    if (v.is_boolean())
        return "boolean";
    if (v.is_number_integer() || v.is_number_unsigned())
        return "integer";
    if (v.is_number())
        return "number";
    return "null";
}

bool type_matches(const std::string& expected, const Json& v) {
    if (expected == "number")
        return v.is_number();
    if (expected == "integer")
        return v.is_number_integer() || v.is_number_unsigned();
    return type_name(v) == expected;
}

void validate_node(const Json& instance, const Json& schema, const std::string& where,
                   std::vector<std::string>& problems) {
    if (!schema.is_object())
        return;
    if (schema.contains("type")) {
        const Json& t = schema["type"];
        bool ok = false;
        if (t.is_string()) {
            ok = type_matches(t.get<std::string>(), instance);
        } else if (t.is_array()) {
            for (const auto& alt : t)
                if (alt.is_string() && type_matches(alt.get<std::string>(), instance))
                    ok = true;
        }
        if (!ok) {
            problems.push_back(where + ": expected type " + t.dump() + ", got " +
                               type_name(instance));
            return;
        }
    }
    if (schema.contains("enum")) {
        bool ok = false;
        for (const auto& allowed : schema["enum"])
            if (allowed == instance)
                ok = true;
        if (!ok)
            problems.push_back(where + ": value " + instance.dump() + " not in enum");
    }
    if (instance.is_object()) {
        if (schema.contains("required")) {
            for (const auto& key : schema["required"])
                if (key.is_string() && !instance.contains(key.get<std::string>()))
                    problems.push_back(where + ": missing required key '" +
                                       key.get<std::string>() + "'");
        }
        if (schema.contains("properties")) {
            for (const auto& [key, sub] : schema["properties"].items())
                if (instance.contains(key))
                    validate_node(instance[key], sub, where + "." + key, problems);
        }
        if (schema.contains("additionalProperties") &&
            schema["additionalProperties"].is_object()) {
            const Json& sub = schema["additionalProperties"];
            for (const auto& [key, value] : instance.items()) {
                if (schema.contains("properties") && schema["properties"].contains(key))
                    continue;
                validate_node(value, sub, where + "." + key, problems);
            }
        }
    }
    if (instance.is_array() && schema.contains("items")) {
        for (std::size_t i = 0; i < instance.size(); ++i)
            validate_node(instance[i], schema["items"], where + "[" + std::to_string(i) + "]",
                          problems);
    }
}

} // namespace

Json config_to_json(const CampaignConfig& config) {
    return Json{
        {"time_budget_ms", config.time_budget_ms},
        {"seed", config.seed},
        {"max_requests", config.max_requests},
        {"features",
         Json{{"use_param_description", config.features.use_param_description},
              {"use_server_response", config.features.use_server_response},
              {"use_ipd_model", config.features.use_ipd_model},
              {"use_ex_model", config.features.use_ex_model}}},
        {"rl",
         Json{{"alpha", config.rl.alpha},
              {"gamma", config.rl.gamma},
              {"epsilon", config.rl.epsilon},
              {"reward_success", config.rl.reward_success},
              {"reward_failure", config.rl.reward_failure},
              {"failure_streak_threshold", config.rl.failure_streak_threshold},
              {"p_min", config.rl.p_min}}},
        {"values",
         Json{{"int_min", config.values.int_min},
              {"int_max", config.values.int_max},
              {"pool_cap", config.values.pool_cap},
              {"harvest_cap", config.values.harvest_cap}}},
        {"base_url", config.base_url},
        {"request_timeout_ms", config.request_timeout_ms},
        {"normalize_500_messages", config.normalize_500_messages}};
}

Json finalize_report(const CampaignState& state, const CampaignConfig& config,
                     const ApiModel& model) {
    Json processed_list = Json::array();
    for (const auto& op_id : state.processed)
        processed_list.push_back(op_id);

    Json ledger_entries = Json::array();
    for (const auto& entry : state.ledger.entries())
        ledger_entries.push_back(Json{{"operation_id", entry.operation_id},
                                      {"message", entry.normalized_message},
                                      {"first_seen_index", entry.first_seen_index}});

    std::map<std::string, std::size_t> attempts;
    std::map<std::string, std::size_t> successes;
    for (const auto& interaction : state.interactions) {
        ++attempts[interaction.operation_id];
        if (interaction.status_class == StatusClass::Success2xx)
            ++successes[interaction.operation_id];
    }
    Json per_operation = Json::object();
    for (const auto& op : model.operations) {
        auto learned = state.learned_rule_keys.find(op.id);
        per_operation[op.id] =
            Json{{"attempts", attempts.count(op.id) ? attempts[op.id] : 0},
                 {"successes", successes.count(op.id) ? successes[op.id] : 0},
                 {"final_q", state.qstate.op_q.count(op.id) ? state.qstate.op_q.at(op.id) : 0.0},
                 {"rules_learned",
                  learned == state.learned_rule_keys.end() ? 0 : learned->second.size()}};
    }

    std::size_t cache_hits = 0;
    double latency_sum = 0.0;
    for (const auto& [index, exchange] : state.lm_exchanges) {
        if (exchange.cache_hit)
            ++cache_hits;
        latency_sum += exchange.latency_ms;
    }
    const std::size_t exchanges = state.lm_exchanges.size();

    return Json{
        {"schema_version", 1},
        {"spec_title", model.title},
        {"base_url", config.base_url.empty() ? model.base_url : config.base_url},
        {"started_at", state.started_at},
        {"finished_at", state.finished_at},
        {"wall_time_ms", state.wall_time_ms},
        {"config", config_to_json(config)},
        {"total_operations", model.operations.size()},
        {"processed_operations",
         Json{{"count", state.processed.size()}, {"operations", processed_list}}},
        {"interactions", state.interactions.size()},
        {"unique_internal_server_errors",
         Json{{"count", state.ledger.unique_count()}, {"entries", ledger_entries}}},
        {"total_internal_server_errors", state.ledger.total_count()},
        {"per_operation", per_operation},
        {"lm_stats",
         Json{{"exchanges", exchanges},
              {"cache_hits", cache_hits},
              {"mean_latency_ms", exchanges ? latency_sum / static_cast<double>(exchanges) : 0.0}}},
        {"rule_conflicts", state.rule_conflicts},
        {"rule_diagnostics", state.rule_diagnostics},
        {"repair_failures", state.repair_failures},
        {"target_unreachable_at_start", state.target_unreachable_at_start}};
}

Json interaction_to_json(const TestInteraction& interaction, std::size_t index) {
    Json headers = Json::object();
    for (const auto& [name, value] : interaction.request.headers)
        headers[name] = value;
    return Json{{"type", "interaction"},
                {"index", index},
                {"operation_id", interaction.operation_id},
                {"method", interaction.request.method},
                {"url", full_url(interaction.request)},
                {"headers", headers},
                {"query", query_to_json(interaction.request.query)},
                {"request_body", interaction.request.body},
                {"status", interaction.status},
                {"status_class", to_string(interaction.status_class)},
                {"response_message", interaction.response_message},
                {"response_body", interaction.response_body},
                {"response_content_type", interaction.response_content_type},
                {"timestamp", interaction.timestamp},
                {"duration_ms", interaction.duration_ms}};
}

Json lm_exchange_to_json(const LmExchange& exchange, std::size_t after_interaction) {
    Json rules = Json::array();
    for (const auto& rule : exchange.rules.rules)
        rules.push_back(serialize(rule));
    Json diagnostics = Json::array();
    for (const auto& d : exchange.rules.diagnostics)
        diagnostics.push_back(Json{{"segment", d.segment}, {"message", d.message}});
    return Json{{"type", "lm"},
                {"after_interaction", after_interaction},
                {"kind", to_string(exchange.task.kind)},
                {"param_name", exchange.task.param_name},
                {"context_text", exchange.task.context_text},
                {"prompt", exchange.prompt},
                {"completion", exchange.completion},
                {"rules", rules},
                {"diagnostics", diagnostics},
                {"values", exchange.values},
                {"backend", exchange.backend},
                {"cache_hit", exchange.cache_hit},
                {"latency_ms", exchange.latency_ms}};
}

std::string render_log(const CampaignState& state) {
    std::string out;
    std::size_t lm_pos = 0;
    for (std::size_t i = 0; i < state.interactions.size(); ++i) {
        out += interaction_to_json(state.interactions[i], i).dump();
        out += "\n";
        while (lm_pos < state.lm_exchanges.size() && state.lm_exchanges[lm_pos].first == i) {
            out += lm_exchange_to_json(state.lm_exchanges[lm_pos].second, i).dump();
            out += "\n";
            ++lm_pos;
        }
    }
    return out;
}

void write_log(const std::string& path, const CampaignState& state) {
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write log file: " + path);
    out << render_log(state);
}

std::vector<Json> load_log(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw Error("cannot read log file: " + path);
    std::vector<Json> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        try {
            records.push_back(Json::parse(line));
        } catch (const Json::parse_error& e) {
            throw MalformedDocument("log line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return records;
}

std::uint64_t log_hash(const std::vector<Json>& records) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (const auto& record : records) {
        if (record.value("type", "") != "interaction")
            continue;
        Json stripped = record;
        stripped.erase("timestamp");
        stripped.erase("duration_ms");
        hash = fnv1a(stripped.dump(), hash);
        hash = fnv1a("\n", hash);
    }
    return hash;
}

std::vector<std::string> verify_report(const Json& report, const std::vector<Json>& log_records) {
    std::vector<std::string> problems;
    auto complain = [&](const std::string& what) { problems.push_back(what); };

    std::vector<const Json*> interactions;
    for (const auto& record : log_records)
        if (record.value("type", "") == "interaction")
            interactions.push_back(&record);

    if (report.value("interactions", std::size_t{0}) != interactions.size())
        complain("interaction count: report says " +
                 std::to_string(report.value("interactions", std::size_t{0})) + ", log has " +
                 std::to_string(interactions.size()));

    std::map<std::string, std::size_t> attempts;
    std::map<std::string, std::size_t> successes;
    std::set<std::string> processed;
    bool normalize = true;
    if (report.contains("config") && report["config"].is_object())
        normalize = report["config"].value("normalize_500_messages", true);
    std::set<std::pair<std::string, std::string>> unique_500;
    std::size_t total_500 = 0;
    for (const Json* record : interactions) {
        std::string op = record->value("operation_id", "");
        ++attempts[op];
        int status = record->value("status", 0);
        if (status >= 200 && status < 300) {
            ++successes[op];
            processed.insert(op);
        }
        if (status == 500) {
            ++total_500;
            std::string message = record->value("response_message", "");
            unique_500.emplace(op, normalize ? normalize_500(message) : message);
        }
    }

    std::set<std::string> reported_processed;
    if (report.contains("processed_operations")) {
        for (const auto& op : report["processed_operations"].value("operations", Json::array()))
            reported_processed.insert(op.get<std::string>());
        if (report["processed_operations"].value("count", std::size_t{0}) !=
            reported_processed.size())
            complain("processed_operations count does not match its own list");
    }
    if (reported_processed != processed)
        complain("processed operations differ from log recount");

    if (report.value("total_internal_server_errors", std::size_t{0}) != total_500)
        complain("total 500 count: report says " +
                 std::to_string(report.value("total_internal_server_errors", std::size_t{0})) +
                 ", log has " + std::to_string(total_500));
    if (report.contains("unique_internal_server_errors")) {
        const Json& unique = report["unique_internal_server_errors"];
        if (unique.value("count", std::size_t{0}) != unique_500.size())
            complain("unique 500 count: report says " +
                     std::to_string(unique.value("count", std::size_t{0})) + ", log recount is " +
                     std::to_string(unique_500.size()));
        std::set<std::pair<std::string, std::string>> reported_entries;
        for (const auto& entry : unique.value("entries", Json::array()))
            reported_entries.emplace(entry.value("operation_id", ""), entry.value("message", ""));
        if (reported_entries != unique_500)
            complain("unique 500 entries differ from log recount");
    }

    if (report.contains("per_operation") && report["per_operation"].is_object()) {
        for (const auto& [op, stats] : report["per_operation"].items()) {
            std::size_t logged_attempts = attempts.count(op) ? attempts[op] : 0;
            std::size_t logged_successes = successes.count(op) ? successes[op] : 0;
            if (stats.value("attempts", std::size_t{0}) != logged_attempts)
                complain("attempts mismatch for operation " + op);
            if (stats.value("successes", std::size_t{0}) != logged_successes)
                complain("successes mismatch for operation " + op);
        }
        for (const auto& [op, n] : attempts)
            if (!report["per_operation"].contains(op))
                complain("operation " + op + " appears in the log but not in the report");
    }

    std::size_t total_ops = report.value("total_operations", std::size_t{0});
    if (processed.size() > total_ops)
        complain("processed operations exceed total operations");
    return problems;
}

AblationDelta diff_reports(const Json& a, const Json& b) {
    if (a.value("spec_title", "") != b.value("spec_title", ""))
        throw SpecMismatch("reports cover different specs");
    if (a.value("total_operations", std::size_t{0}) != b.value("total_operations", std::size_t{0}))
        throw SpecMismatch("reports cover different operation counts");
    long long budget_a = 0, budget_b = 0;
    if (a.contains("config"))
        budget_a = a["config"].value("time_budget_ms", 0LL);
    if (b.contains("config"))
        budget_b = b["config"].value("time_budget_ms", 0LL);
    if (budget_a != budget_b)
        throw SpecMismatch("reports use different budgets");

    auto processed = [](const Json& r) -> long long {
        if (!r.contains("processed_operations"))
            return 0;
        return static_cast<long long>(
            r["processed_operations"].value("count", std::size_t{0}));
    };
    auto unique_500 = [](const Json& r) -> long long {
        if (!r.contains("unique_internal_server_errors"))
            return 0;
        return static_cast<long long>(
            r["unique_internal_server_errors"].value("count", std::size_t{0}));
    };
    AblationDelta delta;
    delta.processed_operations = processed(a) - processed(b);
    delta.unique_500 = unique_500(a) - unique_500(b);
    delta.interactions = static_cast<long long>(a.value("interactions", std::size_t{0})) -
                         static_cast<long long>(b.value("interactions", std::size_t{0}));
    return delta;
}

std::vector<std::string> validate_schema(const Json& instance, const Json& schema) {
    std::vector<std::string> problems;
    validate_node(instance, schema, "$", problems);
    return problems;
}

} // namespace restq
