#include <doctest.h>

#include <memory>
#include <string>
#include <vector>

#include "restq/lm_backend.hpp"
#include "restq/mock_harness.hpp"
#include "restq/orchestrator.hpp"
#include "restq/reporting.hpp"

using namespace restq;

namespace {

Rule parse_one(const std::string& text, const std::string& this_param = "") {
    auto result = parse_rules(text, this_param);
    REQUIRE(result.rules.size() == 1);
    return result.rules[0];
}

std::vector<Json> records_from_text(const std::string& ndjson) {
    std::vector<Json> records;
    std::size_t start = 0;
    while (start < ndjson.size()) {
        std::size_t end = ndjson.find('\n', start);
        if (end == std::string::npos)
            end = ndjson.size();
        if (end > start)
            records.push_back(Json::parse(ndjson.substr(start, end - start)));
        start = end + 1;
    }
    return records;
}

std::unique_ptr<LmClient> boundary_client() {
    auto backend = std::make_unique<ScriptedBackend>(std::string(RESTQ_SOURCE_DIR) +
                                                     "/tests/fixtures/boundary_lm.ndjson");
    return std::make_unique<LmClient>(std::move(backend));
}

CampaignConfig boundary_config(const FixtureService& service, std::uint64_t seed) {
    CampaignConfig config;
    config.base_url = service.base_url();
    config.seed = seed;
    config.time_budget_ms = 20000;
    config.max_requests = 60;
    config.rl.p_min = 1.0; // deterministic parameter choice keeps the test tight
    return config;
}

} // namespace

TEST_CASE("merge unions by canonical form") {
    std::vector<Rule> active{parse_one("OnlyOne(a,b)")};
    std::vector<Rule> merged = merge_rules(active, {parse_one("OnlyOne(a, b)")});
    CHECK(merged.size() == 1);
    merged = merge_rules(merged, {parse_one("Requires(a,c)")});
    CHECK(merged.size() == 2);
    merged = merge_rules(merged, {});
    CHECK(merged.size() == 2);
}

TEST_CASE("exclusivity conflicts keep the newer rule and log it") {
    std::vector<std::string> conflicts;
    std::vector<Rule> merged =
        merge_rules({parse_one("OnlyOne(a,b)")}, {parse_one("AllOrNone(a,b)")}, &conflicts);
    REQUIRE(merged.size() == 1);
    CHECK(merged[0].kind == RuleKind::AllOrNone);
    REQUIRE(conflicts.size() == 1);
    CHECK(conflicts[0] == "OnlyOne(a,b) replaced by AllOrNone(a,b)");

    // Different member sets coexist.
    conflicts.clear();
    merged = merge_rules({parse_one("OnlyOne(a,b)")}, {parse_one("AllOrNone(a,c)")}, &conflicts);
    CHECK(merged.size() == 2);
    CHECK(conflicts.empty());
}

TEST_CASE("campaign without lm keeps failing on the boundary service") {
    auto service = boundary_service();
    ApiModel model = parse_spec(service->oas_text());
    CampaignConfig config = boundary_config(*service, 1);
    config.max_requests = 20;

    CampaignOutcome outcome = run_campaign(model, config);
    CHECK(outcome.state.interactions.size() == 20);
    CHECK(outcome.state.processed.empty());
    CHECK(outcome.state.lm_exchanges.empty());
    CHECK(outcome.state.qstate.op_q.at("elementsArea") > 0.0);
}

TEST_CASE("campaign learns the exclusion rule from the lm and succeeds") {
    auto service = boundary_service();
    ApiModel model = parse_spec(service->oas_text());
    CampaignConfig config = boundary_config(*service, 1);
    auto lm = boundary_client();

    CampaignOutcome outcome = run_campaign(model, config, lm.get());
    CHECK(outcome.state.processed.count("elementsArea") == 1);
    CHECK_FALSE(outcome.state.lm_exchanges.empty());
    REQUIRE(outcome.state.active_rules.count("elementsArea"));
    bool has_exclusion = false;
    for (const auto& rule : outcome.state.active_rules.at("elementsArea"))
        if (serialize(rule) == "OnlyOne(bboxes,bcircles,bpolys)")
            has_exclusion = true;
    CHECK(has_exclusion);
    CHECK(outcome.state.learned_rule_keys.at("elementsArea").count(
        "OnlyOne(bboxes,bcircles,bpolys)"));

    // The streak threshold gates the first consult: three failures come first.
    const auto& first_consult = outcome.state.lm_exchanges.front();
    CHECK(first_consult.first == 2);
}

TEST_CASE("disabling the ipd model removes the repair and the success") {
    auto service = boundary_service();
    ApiModel model = parse_spec(service->oas_text());
    CampaignConfig config = boundary_config(*service, 1);
    config.features.use_ipd_model = false;
    auto lm = boundary_client();

    CampaignOutcome outcome = run_campaign(model, config, lm.get());
    CHECK(outcome.state.processed.empty());
    for (const auto& [index, exchange] : outcome.state.lm_exchanges)
        CHECK(exchange.task.kind == LmTaskKind::Ex);
}

TEST_CASE("preloaded rules repair requests from the first attempt") {
    auto service = boundary_service();
    ApiModel model = parse_spec(service->oas_text());
    CampaignConfig config = boundary_config(*service, 3);
    config.max_requests = 6;
    config.preloaded_rules["elementsArea"] = {parse_one("OnlyOne(bboxes,bcircles,bpolys)")};
    config.preloaded_rules["ghostOp"] = {parse_one("Or(x,y)")}; // dropped: unknown operation

    CampaignOutcome outcome = run_campaign(model, config);
    CHECK_FALSE(outcome.state.active_rules.count("ghostOp"));
    for (const auto& interaction : outcome.state.interactions) {
        int boundaries = 0;
        for (const auto& [name, value] : interaction.request.query)
            if (name == "bboxes" || name == "bcircles" || name == "bpolys")
                ++boundaries;
        CHECK(boundaries == 1);
    }
}

TEST_CASE("identical configs replay identically") {
    auto service = chain_crash_service();
    ApiModel model = parse_spec(service->oas_text());
    CampaignConfig config;
    config.base_url = service->base_url();
    config.seed = 77;
    config.time_budget_ms = 20000;
    config.max_requests = 40;

    auto lm_a = std::make_unique<LmClient>(std::make_unique<ScriptedBackend>(
        std::string(RESTQ_SOURCE_DIR) + "/tests/fixtures/chain_lm.ndjson"));
    auto lm_b = std::make_unique<LmClient>(std::make_unique<ScriptedBackend>(
        std::string(RESTQ_SOURCE_DIR) + "/tests/fixtures/chain_lm.ndjson"));
    CampaignOutcome a = run_campaign(model, config, lm_a.get());
    CampaignOutcome b = run_campaign(model, config, lm_b.get());

    REQUIRE(a.state.interactions.size() == b.state.interactions.size());
    CHECK(log_hash(records_from_text(render_log(a.state))) ==
          log_hash(records_from_text(render_log(b.state))));
    for (std::size_t i = 0; i < a.state.interactions.size(); ++i) {
        CHECK(full_url(a.state.interactions[i].request) ==
              full_url(b.state.interactions[i].request));
        CHECK(a.state.interactions[i].status == b.state.interactions[i].status);
    }
}

TEST_CASE("unreachable targets are flagged") {
    ApiModel model;
    Operation op;
    op.id = "ping";
    op.method = "GET";
    op.path = "/ping";
    model.operations = {op};
    model.base_url = "http://127.0.0.1:9"; // discard port: nothing listens

    CampaignConfig config;
    config.max_requests = 6;
    config.time_budget_ms = 20000;
    config.request_timeout_ms = 300;
    CampaignOutcome outcome = run_campaign(model, config);
    CHECK(outcome.state.target_unreachable_at_start);
    CHECK(outcome.report["target_unreachable_at_start"] == true);
}

TEST_CASE("required path parameters always get values") {
    auto service = chain_crash_service();
    ApiModel model = parse_spec(service->oas_text());
    CampaignConfig config;
    config.base_url = service->base_url();
    config.seed = 5;
    config.max_requests = 15;
    config.time_budget_ms = 20000;
    CampaignOutcome outcome = run_campaign(model, config);
    for (const auto& interaction : outcome.state.interactions) {
        CHECK(interaction.status != 0); // a skipped placeholder would show as 0
        CHECK(interaction.request.url.find('{') == std::string::npos);
    }
}
