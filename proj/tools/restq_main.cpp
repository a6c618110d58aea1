#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "restq/dataset_builder.hpp"
#include "restq/error.hpp"
#include "restq/lm_backend.hpp"
#include "restq/mock_harness.hpp"
#include "restq/orchestrator.hpp"
#include "restq/reporting.hpp"
#include "restq/spec_model.hpp"

namespace {

using restq::Json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw restq::Error("cannot read file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw restq::Error("cannot write file: " + path);
    out << content;
}

// "60s", "1500ms", "2m", "1h", or bare seconds.
long long parse_duration_ms(const std::string& text) {
    std::size_t pos = 0;
    double value = std::stod(text, &pos);
    std::string unit = text.substr(pos);
    if (unit == "ms")
        return static_cast<long long>(value);
    if (unit.empty() || unit == "s")
        return static_cast<long long>(value * 1000.0);
    if (unit == "m")
        return static_cast<long long>(value * 60000.0);
    if (unit == "h")
        return static_cast<long long>(value * 3600000.0);
    throw restq::Error("cannot parse duration: " + text);
}

void apply_config_file(restq::CampaignConfig& config, const std::string& path) {
    Json doc = Json::parse(read_file(path));
    if (!doc.is_object())
        throw restq::Error("config file must hold a JSON object");
    config.rl.alpha = doc.value("alpha", config.rl.alpha);
    config.rl.gamma = doc.value("gamma", config.rl.gamma);
    config.rl.epsilon = doc.value("epsilon", config.rl.epsilon);
    config.rl.reward_success = doc.value("reward_success", config.rl.reward_success);
    config.rl.reward_failure = doc.value("reward_failure", config.rl.reward_failure);
    config.rl.failure_streak_threshold =
        doc.value("failure_streak_threshold", config.rl.failure_streak_threshold);
    config.rl.p_min = doc.value("p_min", config.rl.p_min);
    config.seed = doc.value("seed", config.seed);
}

std::map<std::string, std::vector<restq::Rule>> load_rules_file(const std::string& path) {
    std::map<std::string, std::vector<restq::Rule>> preloaded;
    std::istringstream in(read_file(path));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        Json record = Json::parse(line);
        if (!record.is_object() || !record.contains("operation") || !record.contains("rules"))
            throw restq::Error("rules file line " + std::to_string(line_no) +
                               ": need operation and rules fields");
        auto parsed = restq::parse_rules(record["rules"].get<std::string>());
        for (const auto& diagnostic : parsed.diagnostics)
            std::cerr << "rules file line " << line_no << ": ignoring '" << diagnostic.segment
                      << "': " << diagnostic.message << "\n";
        auto& bucket = preloaded[record["operation"].get<std::string>()];
        bucket.insert(bucket.end(), parsed.rules.begin(), parsed.rules.end());
    }
    return preloaded;
}

int cmd_run(const std::string& spec_path, const std::string& base_url, restq::CampaignConfig config,
            const std::string& lm_fixture, const restq::RemoteBackendConfig& remote,
            bool use_remote, const std::string& lm_cache, const std::string& rules_path,
            const std::string& report_path, const std::string& log_path) {
    restq::ParseOptions opts;
    opts.base_url_override = base_url;
    restq::ApiModel model = restq::parse_spec(read_file(spec_path), opts);
    config.base_url = base_url;

    if (!rules_path.empty())
        config.preloaded_rules = load_rules_file(rules_path);

    std::unique_ptr<restq::LmClient> lm;
    if (!lm_fixture.empty())
        lm = std::make_unique<restq::LmClient>(
            std::make_unique<restq::ScriptedBackend>(lm_fixture), lm_cache);
    else if (use_remote)
        lm = std::make_unique<restq::LmClient>(std::make_unique<restq::RemoteBackend>(remote),
                                               lm_cache);

    restq::CampaignOutcome outcome = restq::run_campaign(model, config, lm.get());

    if (!log_path.empty())
        restq::write_log(log_path, outcome.state);
    if (!report_path.empty()) {
        write_file(report_path, outcome.report.dump(2) + "\n");
        const Json& r = outcome.report;
        std::cout << "processed " << r["processed_operations"]["count"] << "/"
                  << r["total_operations"] << " operations, "
                  << r["unique_internal_server_errors"]["count"] << " unique 500s ("
                  << r["total_internal_server_errors"] << " total), " << r["interactions"]
                  << " requests\n";
    } else {
        std::cout << outcome.report.dump(2) << "\n";
    }
    if (outcome.state.target_unreachable_at_start)
        std::cerr << "warning: target did not answer any of the first requests\n";
    return 0;
}

int cmd_verify(const std::string& report_path, const std::string& log_path) {
    Json report = Json::parse(read_file(report_path));
    auto records = restq::load_log(log_path);
    auto problems = restq::verify_report(report, records);
    if (problems.empty()) {
        std::cout << "report consistent with log (" << records.size() << " records)\n";
        return 0;
    }
    for (const auto& problem : problems)
        std::cerr << "mismatch: " << problem << "\n";
    return 1;
}

int cmd_harness_serve(const std::string& name, int port) {
    auto service = restq::make_service(name, port);
    std::cout << service->name() << " fixture listening on " << service->base_url() << "\n"
              << "OpenAPI document: " << service->base_url() << "/openapi.json\n";
    service->wait();
    return 0;
}

int cmd_mine_ex(const std::string& specs_dir, const std::string& exclude_path,
                const std::string& out_path) {
    std::vector<std::string> exclusions;
    if (!exclude_path.empty())
        exclusions = restq::exclusion_list_from_file(exclude_path);
    std::vector<std::string> skipped;
    auto records = restq::mine_ex_records(specs_dir, exclusions, &skipped);
    std::string out;
    for (const auto& record : records)
        out += restq::record_to_json(record).dump() + "\n";
    write_file(out_path, out);
    for (const auto& note : skipped)
        std::cerr << "skipped: " << note << "\n";
    std::cout << records.size() << " records -> " << out_path << "\n";
    return 0;
}

int cmd_render(const std::string& in_path, const std::string& kind, const std::string& out_path) {
    restq::LmTaskKind task_kind =
        kind == "ipd" ? restq::LmTaskKind::Ipd : restq::LmTaskKind::Ex;
    auto records = restq::load_csv_records(in_path, task_kind);
    std::string out;
    for (const auto& record : records)
        out += restq::record_to_json(record).dump() + "\n";
    write_file(out_path, out);
    std::cout << records.size() << " records -> " << out_path << "\n";
    return 0;
}

int cmd_lint(const std::string& in_path) {
    std::istringstream in(read_file(in_path));
    std::vector<restq::TrainingRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        records.push_back(restq::record_from_json(Json::parse(line)));
    }
    auto findings = restq::lint_ipd_records(records);
    for (const auto& finding : findings)
        std::cout << "record " << finding.record_index << " [" << finding.flag
                  << "]: " << finding.detail << "\n";
    if (findings.empty()) {
        std::cout << records.size() << " records, no findings\n";
        return 0;
    }
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive REST API testing engine"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "Run a testing campaign against a live service");
    std::string spec_path, base_url, budget = "60s", rules_path, report_path, log_path;
    std::string lm_fixture, lm_cache, config_path;
    restq::CampaignConfig config;
    restq::RemoteBackendConfig remote;
    std::vector<std::string> auth_headers;
    bool no_ipd = false, no_ex = false, no_desc = false, no_server_response = false;
    bool dedup_raw = false;
    run->add_option("--spec", spec_path, "OpenAPI 3.x document (JSON or YAML)")->required();
    run->add_option("--base-url", base_url, "Service root, e.g. http://127.0.0.1:8080")
        ->required();
    run->add_option("--budget", budget, "Time budget, e.g. 60s, 1500ms, 2m");
    run->add_option("--seed", config.seed, "RNG seed");
    run->add_option("--max-requests", config.max_requests, "Stop after N requests (0 = no cap)");
    run->add_flag("--no-ipd", no_ipd, "Disable dependency-rule inference");
    run->add_flag("--no-ex", no_ex, "Disable example-value inference");
    run->add_flag("--no-desc", no_desc, "Drop parameter descriptions from prompts");
    run->add_flag("--no-server-response", no_server_response,
                  "Drop server messages from prompts");
    run->add_option("--rules", rules_path, "Preload dependency rules (NDJSON per operation)");
    auto* lm_url_opt = run->add_option("--lm-url", remote.url, "Completion endpoint URL");
    auto* lm_fixture_opt =
        run->add_option("--lm-fixture", lm_fixture, "Scripted completions (NDJSON)");
    lm_url_opt->excludes(lm_fixture_opt);
    run->add_option("--lm-cache", lm_cache, "Persist LM completions across runs");
    run->add_option("--lm-timeout-ms", remote.timeout_ms, "LM request timeout");
    run->add_option("--lm-request-template", remote.request_template,
                    "Request body template; {{PROMPT}} is replaced");
    run->add_option("--lm-response-path", remote.response_path,
                    "Dot-path of the completion in the response");
    run->add_option("--report", report_path, "Write the campaign report JSON here");
    run->add_option("--log", log_path, "Write the interaction log (NDJSON) here");
    run->add_option("--config", config_path, "JSON config file (CLI flags win)");
    auto* alpha_opt = run->add_option("--alpha", config.rl.alpha, "Q-learning rate");
    auto* gamma_opt = run->add_option("--gamma", config.rl.gamma, "Q-learning discount");
    auto* epsilon_opt = run->add_option("--epsilon", config.rl.epsilon, "Exploration rate");
    auto* rs_opt = run->add_option("--reward-success", config.rl.reward_success, "Reward for 2xx");
    auto* rf_opt =
        run->add_option("--reward-failure", config.rl.reward_failure, "Reward for 4xx/5xx");
    auto* streak_opt = run->add_option("--failure-streak-threshold",
                                       config.rl.failure_streak_threshold,
                                       "Consecutive failures before an LM consult");
    auto* pmin_opt =
        run->add_option("--p-min", config.rl.p_min, "Optional-parameter inclusion floor");
    auto* seed_opt = run->get_option("--seed");
    run->add_option("--int-min", config.values.int_min, "Random integer lower bound");
    run->add_option("--int-max", config.values.int_max, "Random integer upper bound");
    run->add_option("--pool-cap", config.values.pool_cap, "Candidates kept per parameter");
    run->add_option("--harvest-cap", config.values.harvest_cap, "Leaves harvested per response");
    run->add_option("--timeout-ms", config.request_timeout_ms, "HTTP request timeout");
    run->add_option("--auth-header", auth_headers, "Static header, formatted Name=Value");
    run->add_flag("--dedup-raw", dedup_raw, "Deduplicate 500s on raw messages");

    // verify-report
    auto* verify = app.add_subcommand("verify-report", "Recompute report counts from a log");
    std::string verify_report_path, verify_log_path;
    verify->add_option("--report", verify_report_path, "Campaign report JSON")->required();
    verify->add_option("--log", verify_log_path, "Interaction log NDJSON")->required();

    // harness serve
    auto* harness = app.add_subcommand("harness", "Built-in fixture services");
    auto* serve = harness->add_subcommand("serve", "Serve a fixture in the foreground");
    std::string fixture_name;
    int fixture_port = 0;
    std::string names;
    for (const auto& n : restq::fixture_names())
        names += (names.empty() ? "" : ", ") + n;
    serve->add_option("name", fixture_name, "One of: " + names)->required();
    serve->add_option("--port", fixture_port, "Port (0 = ephemeral)");
    harness->require_subcommand(1);

    // dataset
    auto* dataset = app.add_subcommand("dataset", "Fine-tuning dataset utilities");
    auto* mine = dataset->add_subcommand("mine-ex", "Mine enum parameters into EX records");
    std::string mine_specs, mine_exclude, mine_out;
    mine->add_option("--specs", mine_specs, "Directory of OpenAPI documents")->required();
    mine->add_option("--exclude", mine_exclude, "Exclusion list (one name/title per line)");
    mine->add_option("--out", mine_out, "Output NDJSON path")->required();
    auto* render = dataset->add_subcommand("render", "Render CSV rows into training records");
    std::string render_in, render_kind = "ipd", render_out;
    render->add_option("--in", render_in, "CSV of param,description,answer")->required();
    render->add_option("--kind", render_kind, "ipd or ex")
        ->check(CLI::IsMember({"ipd", "ex"}));
    render->add_option("--out", render_out, "Output NDJSON path")->required();
    auto* lint = dataset->add_subcommand("lint", "Check IPD records for common defects");
    std::string lint_in;
    lint->add_option("--in", lint_in, "Records NDJSON path")->required();
    dataset->require_subcommand(1);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            if (!config_path.empty()) {
                restq::CampaignConfig from_file = config;
                apply_config_file(from_file, config_path);
                // CLI flags beat the config file
                if (!*alpha_opt)
                    config.rl.alpha = from_file.rl.alpha;
                if (!*gamma_opt)
                    config.rl.gamma = from_file.rl.gamma;
                if (!*epsilon_opt)
                    config.rl.epsilon = from_file.rl.epsilon;
                if (!*rs_opt)
                    config.rl.reward_success = from_file.rl.reward_success;
                if (!*rf_opt)
                    config.rl.reward_failure = from_file.rl.reward_failure;
                if (!*streak_opt)
                    config.rl.failure_streak_threshold = from_file.rl.failure_streak_threshold;
                if (!*pmin_opt)
                    config.rl.p_min = from_file.rl.p_min;
                if (!*seed_opt)
                    config.seed = from_file.seed;
            }
            config.time_budget_ms = parse_duration_ms(budget);
            config.features.use_ipd_model = !no_ipd;
            config.features.use_ex_model = !no_ex;
            config.features.use_param_description = !no_desc;
            config.features.use_server_response = !no_server_response;
            config.normalize_500_messages = !dedup_raw;
            for (const auto& header : auth_headers) {
                auto eq = header.find('=');
                if (eq == std::string::npos)
                    throw restq::Error("auth header needs Name=Value: " + header);
                config.auth_headers[header.substr(0, eq)] = header.substr(eq + 1);
            }
            return cmd_run(spec_path, base_url, config, lm_fixture, remote,
                           lm_url_opt->count() > 0, lm_cache, rules_path, report_path, log_path);
        }
        if (*verify)
            return cmd_verify(verify_report_path, verify_log_path);
        if (*serve)
            return cmd_harness_serve(fixture_name, fixture_port);
        if (*mine)
            return cmd_mine_ex(mine_specs, mine_exclude, mine_out);
        if (*render)
            return cmd_render(render_in, render_kind, render_out);
        if (*lint)
            return cmd_lint(lint_in);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
