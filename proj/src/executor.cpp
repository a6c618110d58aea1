#include "restq/executor.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <deque>
#include <regex>

#include <httplib.h>

#include "restq/error.hpp"
#include "restq/value_gen.hpp"

namespace restq {

namespace {

bool unreserved(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
           c == '-' || c == '.' || c == '_' || c == '~';
}

std::string now_rfc3339() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

const Json* bfs_find_key(const Json& root, const std::string& key) {
    std::deque<const Json*> queue{&root};
    while (!queue.empty()) {
        const Json* node = queue.front();
        queue.pop_front();
        if (node->is_object()) {
            auto it = node->find(key);
            if (it != node->end() && it->is_string())
                return &*it;
            for (const auto& [k, v] : node->items())
                queue.push_back(&v);
        } else if (node->is_array()) {
            for (const auto& v : *node)
                queue.push_back(&v);
        }
    }
    return nullptr;
}

bool split_origin_path(const std::string& url, std::string& origin, std::string& path) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        return false;
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        origin = url;
        path = "/";
    } else {
        origin = url.substr(0, path_start);
        path = url.substr(path_start);
    }
    return true;
}

} // namespace

std::string percent_encode(const std::string& raw) {
    static const char* hex = "0123456789ABCDEF";
    std::string out;
    out.reserve(raw.size());
    for (unsigned char c : raw) {
        if (unreserved(static_cast<char>(c))) {
            out += static_cast<char>(c);
        } else {
            out += '%';
            out += hex[c >> 4];
            out += hex[c & 0xF];
        }
    }
    return out;
}

std::string percent_decode(const std::string& encoded) {
    auto hex_val = [](char c) -> int {
        if (c >= '0' && c <= '9')
            return c - '0';
        if (c >= 'a' && c <= 'f')
            return c - 'a' + 10;
        if (c >= 'A' && c <= 'F')
            return c - 'A' + 10;
        return -1;
    };
    std::string out;
    out.reserve(encoded.size());
    for (std::size_t i = 0; i < encoded.size(); ++i) {
        if (encoded[i] == '%' && i + 2 < encoded.size()) {
            int hi = hex_val(encoded[i + 1]), lo = hex_val(encoded[i + 2]);
            if (hi >= 0 && lo >= 0) {
                out += static_cast<char>((hi << 4) | lo);
                i += 2;
                continue;
            }
        }
        out += encoded[i];
    }
    return out;
}

std::string normalize_500(const std::string& message) {
    static const std::regex uuid(
        "[0-9a-fA-F]{8}-[0-9a-fA-F]{4}-[0-9a-fA-F]{4}-[0-9a-fA-F]{4}-[0-9a-fA-F]{12}");
    static const std::regex long_digits("[0-9]{8,}");
    std::string out = std::regex_replace(message, uuid, "#");
    return std::regex_replace(out, long_digits, "#");
}

std::string extract_message(const std::string& body, const std::string& content_type) {
    if (body.empty())
        return "";
    bool looks_json = content_type.find("json") != std::string::npos;
    if (!looks_json) {
        for (char c : body) {
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n')
                continue;
            looks_json = c == '{' || c == '[';
            break;
        }
    }
    if (looks_json) {
        Json parsed = Json::parse(body, nullptr, false);
        if (!parsed.is_discarded()) {
            static const char* keys[] = {"message", "error", "detail", "error_description"};
            for (const char* key : keys) {
                if (const Json* found = bfs_find_key(parsed, key))
                    return found->get<std::string>();
            }
            return "";
        }
    }
    if (content_type.empty() || content_type.find("text") != std::string::npos)
        return body.substr(0, 2048);
    return "";
}

bool ErrorLedger::record(const TestInteraction& interaction, std::size_t interaction_index) {
    ++total_;
    std::string message = normalize_ ? normalize_500(interaction.response_message)
                                     : interaction.response_message;
    auto [it, inserted] = seen_.emplace(interaction.operation_id, message);
    if (inserted)
        entries_.push_back({interaction.operation_id, message, interaction_index});
    return inserted;
}

HttpRequest build_request(const Operation& op, const Assignment& assignment,
                          const std::string& base_url,
                          const std::map<std::string, std::string>& auth_headers) {
    HttpRequest request;
    request.method = op.method;
    request.headers = auth_headers;

    std::string path = op.path;
    Json body_fields = Json::object();
    for (const auto& param : op.parameters) {
        auto it = assignment.find(param.name);
        if (it == assignment.end())
            continue;
        switch (param.location) {
        case ParamLocation::Path:
            break; // handled below with the placeholder scan
        case ParamLocation::Query:
            request.query.emplace_back(param.name,
                                       it->second ? value_to_text(*it->second) : "");
            break;
        case ParamLocation::Header:
            request.headers[param.name] = it->second ? value_to_text(*it->second) : "";
            break;
        case ParamLocation::BodyField:
            body_fields[param.name] = it->second ? *it->second : Json();
            break;
        }
    }
    for (const auto& placeholder : path_placeholders(op.path)) {
        auto it = assignment.find(placeholder);
        if (it == assignment.end() || !it->second)
            throw MissingPathParam("no value for path parameter '" + placeholder + "'");
        std::string token = "{" + placeholder + "}";
        std::string encoded = percent_encode(value_to_text(*it->second));
        for (std::size_t at = path.find(token); at != std::string::npos;
             at = path.find(token, at + encoded.size()))
            path.replace(at, token.size(), encoded);
    }

    std::string base = base_url;
    while (!base.empty() && base.back() == '/')
        base.pop_back();
    request.url = base + path;

    if (!body_fields.empty()) {
        request.body = body_fields.dump();
        request.headers["Content-Type"] = "application/json";
    }
    return request;
}

std::string full_url(const HttpRequest& request) {
    std::string url = request.url;
    for (std::size_t i = 0; i < request.query.size(); ++i) {
        url += i == 0 ? "?" : "&";
        url += percent_encode(request.query[i].first) + "=" +
               percent_encode(request.query[i].second);
    }
    return url;
}

TestInteraction send_request(const HttpRequest& request, int timeout_ms) {
    TestInteraction interaction;
    interaction.request = request;
    interaction.timestamp = now_rfc3339();

    std::string origin, path;
    auto started = std::chrono::steady_clock::now();
    auto finish = [&](int status) {
        interaction.status = status;
        interaction.status_class = status == 0 ? StatusClass::Other : classify_status(status);
        interaction.duration_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started)
                .count();
    };

    std::string target = full_url(request);
    if (!split_origin_path(target, origin, path)) {
        finish(0);
        return interaction;
    }

    httplib::Client client(origin);
    client.set_connection_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
    client.set_read_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
    client.set_write_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);

    httplib::Headers headers;
    for (const auto& [name, value] : request.headers)
        headers.emplace(name, value);

    auto dispatch = [&]() -> httplib::Result {
        const std::string& m = request.method;
        std::string content_type = "application/json";
        auto ct = request.headers.find("Content-Type");
        if (ct != request.headers.end())
            content_type = ct->second;
        if (m == "GET")
            return client.Get(path, headers);
        if (m == "HEAD")
            return client.Head(path, headers);
        if (m == "DELETE")
            return client.Delete(path, headers, request.body, content_type);
        if (m == "POST")
            return client.Post(path, headers, request.body, content_type);
        if (m == "PUT")
            return client.Put(path, headers, request.body, content_type);
        if (m == "PATCH")
            return client.Patch(path, headers, request.body, content_type);
        if (m == "OPTIONS")
            return client.Options(path, headers);
        return client.Get(path, headers);
    };

    auto result = dispatch();
    if (!result && result.error() == httplib::Error::Read)
        result = dispatch(); // one retry after a dropped connection
    if (!result) {
        finish(0);
        return interaction;
    }

    interaction.response_body = result->body;
    interaction.response_content_type = result->get_header_value("Content-Type");
    interaction.response_message =
        extract_message(interaction.response_body, interaction.response_content_type);
    finish(result->status);
    return interaction;
}

} // namespace restq
