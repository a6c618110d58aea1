#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "restq/ipd_rules.hpp"

namespace restq {

enum class LmTaskKind { Ipd, Ex };

std::string to_string(LmTaskKind kind);

struct LmTask {
    LmTaskKind kind = LmTaskKind::Ipd;
    std::string param_name;
    std::string context_text;
};

struct LmExchange {
    LmTask task;
    std::string prompt;
    std::string completion;
    ParseResult rules;               // Ipd tasks
    std::vector<std::string> values; // Ex tasks
    double latency_ms = 0.0;
    std::string backend;
    bool cache_hit = false;
};

// Prompt templates. The description field carries the composed context text;
// no trailing end-of-sequence marker is appended.
std::string build_prompt(const LmTask& task);

// context_text = description, then " | server: " + latest server message.
// Either half can be disabled; both disabled yields "".
std::string compose_context(const std::string& description, const std::string& server_message,
                            bool use_description, bool use_server_message);

// Extracts the first balanced [...] region and splits it on top-level commas,
// stripping quotes and whitespace. Total on arbitrary bytes.
std::vector<std::string> parse_ex_completion(const std::string& completion);

// Strips a trailing end-of-sequence marker and parses the rule text.
ParseResult parse_ipd_completion(const std::string& completion, const std::string& this_param);

class LmBackend {
public:
    virtual ~LmBackend() = default;
    virtual std::string complete(const std::string& prompt) = 0;
    virtual std::string name() const = 0;
};

// Fixture-driven backend: line-delimited JSON records
// {"match": <regex over the prompt>, "completion": <text>}.
// The entry whose regex matches the longest span of the prompt wins;
// ties resolve to the earliest entry. No match yields "" unless strict.
class ScriptedBackend : public LmBackend {
public:
    ScriptedBackend(const std::string& fixture_path, bool strict = false);
    static ScriptedBackend from_text(const std::string& ndjson, bool strict = false);

    std::string complete(const std::string& prompt) override;
    std::string name() const override { return "scripted"; }

private:
    ScriptedBackend() = default;
    void load(const std::string& ndjson);

    struct Entry {
        std::string pattern;
        std::string completion;
    };
    std::vector<Entry> entries_;
    bool strict_ = false;
};

struct RemoteBackendConfig {
    std::string url;
    std::string request_template =
        R"({"prompt": {{PROMPT}}, "n_predict": 128, "temperature": 0})";
    std::string response_path = "content"; // dot-separated keys / array indices
    int timeout_ms = 30000;
};

// POSTs the filled request template to a completion endpoint and pulls the
// completion text out of the response via response_path.
class RemoteBackend : public LmBackend {
public:
    explicit RemoteBackend(RemoteBackendConfig config) : config_(std::move(config)) {}

    std::string complete(const std::string& prompt) override;
    std::string name() const override { return "remote"; }

private:
    RemoteBackendConfig config_;
};

// Caching front door: one backend call per distinct (kind, param, context),
// optionally persisted as line-delimited JSON across runs.
class LmClient {
public:
    explicit LmClient(std::unique_ptr<LmBackend> backend, std::string cache_path = "");

    LmExchange run(const LmTask& task);

    std::size_t backend_calls() const { return backend_calls_; }

private:
    std::string cache_key(const LmTask& task) const;
    void load_cache();
    void persist(const std::string& key, const LmTask& task, const std::string& completion);

    std::unique_ptr<LmBackend> backend_;
    std::string cache_path_;
    std::map<std::string, std::string> cache_;
    std::size_t backend_calls_ = 0;
};

} // namespace restq
