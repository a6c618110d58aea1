#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "restq/ipd_rules.hpp"
#include "restq/spec_model.hpp"
#include "restq/status.hpp"

namespace restq {

struct HttpRequest {
    std::string method;
    std::string url; // base + expanded path, no query string
    std::map<std::string, std::string> headers;
    std::vector<std::pair<std::string, std::string>> query; // encoded on send
    std::string body;
};

struct TestInteraction {
    std::string operation_id;
    HttpRequest request;
    int status = 0; // 0 = no HTTP response (network failure)
    StatusClass status_class = StatusClass::Other;
    std::string response_message;
    std::string response_body;
    std::string response_content_type;
    std::string timestamp; // RFC 3339 UTC
    double duration_ms = 0.0;
};

// Deduplicates 500s by (operation, normalized message). Normalization masks
// digit runs of eight or more and UUID-shaped tokens with '#' so echoed
// request ids do not inflate the unique count; raw mode skips that.
class ErrorLedger {
public:
    explicit ErrorLedger(bool normalize = true) : normalize_(normalize) {}

    struct Entry {
        std::string operation_id;
        std::string normalized_message;
        std::size_t first_seen_index = 0;
    };

    // Returns true when the (operation, message) pair is new.
    bool record(const TestInteraction& interaction, std::size_t interaction_index = 0);

    std::size_t unique_count() const { return entries_.size(); }
    std::size_t total_count() const { return total_; }
    const std::vector<Entry>& entries() const { return entries_; }

private:
    bool normalize_;
    std::set<std::pair<std::string, std::string>> seen_;
    std::vector<Entry> entries_;
    std::size_t total_ = 0;
};

std::string percent_encode(const std::string& raw);
std::string percent_decode(const std::string& encoded);

std::string normalize_500(const std::string& message);

// JSON bodies: first string at keys message, error, detail, error_description
// (tried in that order, each searched breadth-first). Text bodies: verbatim,
// truncated to 2048 bytes. Anything else: "".
std::string extract_message(const std::string& body, const std::string& content_type);

// Substitutes path placeholders, splits query/header/body parameters, and
// appends static auth headers. Throws MissingPathParam when a placeholder
// has no filled value.
HttpRequest build_request(const Operation& op, const Assignment& assignment,
                          const std::string& base_url,
                          const std::map<std::string, std::string>& auth_headers = {});

std::string full_url(const HttpRequest& request);

// Blocking send; failures come back as data (status 0, class Other), with a
// single retry after a dropped connection mid-read.
TestInteraction send_request(const HttpRequest& request, int timeout_ms = 10000);

} // namespace restq
