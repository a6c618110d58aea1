#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "restq/orchestrator.hpp"
#include "restq/spec_model.hpp"

namespace restq {

// Report JSON with a schema_version field; every count is recomputable from
// the interaction log.
Json finalize_report(const CampaignState& state, const CampaignConfig& config,
                     const ApiModel& model);

Json config_to_json(const CampaignConfig& config);

Json interaction_to_json(const TestInteraction& interaction, std::size_t index);
Json lm_exchange_to_json(const LmExchange& exchange, std::size_t after_interaction);

// Line-delimited JSON: interaction records in order, each followed by the LM
// exchanges it triggered. Records carry a "type" discriminator.
std::string render_log(const CampaignState& state);
void write_log(const std::string& path, const CampaignState& state);
std::vector<Json> load_log(const std::string& path);

// Order-sensitive hash over the interaction records only, with volatile
// fields (timestamp, durations) dropped, so reruns of a deterministic
// campaign hash identically.
std::uint64_t log_hash(const std::vector<Json>& records);

// Recomputes every count in the report from the log records and returns the
// mismatches; empty means consistent.
std::vector<std::string> verify_report(const Json& report, const std::vector<Json>& log_records);

struct AblationDelta {
    long long processed_operations = 0; // a minus b
    long long unique_500 = 0;
    long long interactions = 0;
};

// Per-metric deltas between two runs of the same spec and budget.
// Throws SpecMismatch otherwise.
AblationDelta diff_reports(const Json& a, const Json& b);

// Structural validation against the shipped schema subset: type, required,
// properties, items, enum. Returns problems; empty means valid.
std::vector<std::string> validate_schema(const Json& instance, const Json& schema);

} // namespace restq
