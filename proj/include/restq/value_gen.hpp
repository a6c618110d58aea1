#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "restq/rng.hpp"
#include "restq/spec_model.hpp"

namespace restq {

enum class ValueSource { LmExample, SpecEnum, SpecExample, SpecDefault, ResponseMutation, Random };

std::string to_string(ValueSource source);

struct Candidate {
    Json value;
    ValueSource source = ValueSource::Random;
};

struct ValueGenConfig {
    std::int64_t int_min = -1000;
    std::int64_t int_max = 1000;
    std::size_t pool_cap = 32;    // candidates kept per parameter
    std::size_t harvest_cap = 64; // leaves harvested per response body
};

// Type-conformant random value. Strings honor schema `format` (date,
// date-time, uuid) and a practical `pattern` subset (literals, escapes,
// classes, groups, alternation, {n}/{n,m}/?/+/* quantifiers); patterns
// outside the subset fall back to plain alphanumerics.
Json random_value(const Parameter& param, const ValueGenConfig& config, Rng& rng);

// Per-parameter candidate pools with deterministic rotation: draws walk the
// candidate list in priority order, and each full cycle ends with one fresh
// random value before wrapping. Inserting new candidates rewinds the cursor.
class ValuePool {
public:
    explicit ValuePool(ValueGenConfig config = {}) : config_(config) {}

    // Loads enum/example/default candidates for every parameter.
    void seed_from_spec(const ApiModel& model);

    // Appends LM-provided example values (source lm_example).
    void enrich(const std::string& op_id, const std::string& param_name,
                const std::vector<std::string>& lm_values, const Parameter* param = nullptr);

    // Harvests scalar leaves of a 2xx JSON body into response_mutation
    // candidates for same-named, suffix-related, and id-like parameters
    // across every operation of the model.
    void harvest_response(const ApiModel& model, const Json& body);

    Json draw(const std::string& op_id, const Parameter& param, Rng& rng);

    const std::vector<Candidate>& candidates(const std::string& op_id,
                                             const std::string& param_name) const;

    const ValueGenConfig& config() const { return config_; }

private:
    struct Slot {
        std::vector<Candidate> candidates;
        std::size_t cursor = 0;
    };

    bool insert(Slot& slot, Candidate candidate);
    Slot& slot_for(const std::string& op_id, const std::string& param_name);

    std::map<std::pair<std::string, std::string>, Slot> slots_;
    ValueGenConfig config_;
};

// Serialization of a drawn value into request text (query/path/header).
std::string value_to_text(const Json& value);

} // namespace restq
