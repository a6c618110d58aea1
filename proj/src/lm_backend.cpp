#include "restq/lm_backend.hpp"

#include <chrono>
#include <fstream>
#include <regex>
#include <sstream>

#include <httplib.h>

#include "restq/error.hpp"
#include "restq/rng.hpp"

namespace restq {

namespace {

constexpr const char* kEos = "</s>";

std::string trim_ws(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos)
        return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::string strip_quotes(const std::string& s) {
    if (s.size() >= 2 && ((s.front() == '\'' && s.back() == '\'') ||
                          (s.front() == '"' && s.back() == '"')))
        return s.substr(1, s.size() - 2);
    return s;
}

// Splits url into host part and path prefix; httplib wants them separate.
bool split_url(const std::string& url, std::string& origin, std::string& path) {
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

const Json* walk_path(const Json& root, const std::string& dotted) {
    const Json* node = &root;
    std::stringstream ss(dotted);
    std::string part;
    while (std::getline(ss, part, '.')) {
        if (part.empty())
            continue;
        if (node->is_array()) {
            try {
                std::size_t idx = std::stoul(part);
                if (idx >= node->size())
                    return nullptr;
                node = &(*node)[idx];
                continue;
            } catch (const std::exception&) {
                return nullptr;
            }
        }
        if (!node->is_object() || !node->contains(part))
            return nullptr;
        node = &(*node)[part];
    }
    return node;
}

} // namespace

std::string to_string(LmTaskKind kind) {
    return kind == LmTaskKind::Ipd ? "ipd" : "ex";
}

std::string build_prompt(const LmTask& task) {
    const char* instruction = task.kind == LmTaskKind::Ipd
                                  ? "Find Inter-Parameter Dependency for the parameter below"
                                  : "Find example values for the parameter below in a list format";
    return std::string("<s>[INST] ") + instruction + "\nname: " + task.param_name +
           "\ndescription: " + task.context_text + " [/INST]";
}

std::string compose_context(const std::string& description, const std::string& server_message,
                            bool use_description, bool use_server_message) {
    std::string out;
    if (use_description)
        out = description;
    if (use_server_message && !server_message.empty())
        out += " | server: " + server_message;
    return out;
}

std::vector<std::string> parse_ex_completion(const std::string& completion) {
    std::size_t open = completion.find('[');
    if (open == std::string::npos)
        return {};
    int depth = 0;
    char quote = 0;
    std::size_t close = std::string::npos;
    for (std::size_t i = open; i < completion.size(); ++i) {
        char c = completion[i];
        if (quote) {
            if (c == quote)
                quote = 0;
            continue;
        }
        if (c == '\'' || c == '"') {
            quote = c;
            continue;
        }
        if (c == '[')
            ++depth;
        else if (c == ']' && --depth == 0) {
            close = i;
            break;
        }
    }
    if (close == std::string::npos)
        return {};

    std::vector<std::string> out;
    std::string current;
    depth = 0;
    quote = 0;
    for (std::size_t i = open + 1; i < close; ++i) {
        char c = completion[i];
        if (quote) {
            current += c;
            if (c == quote)
                quote = 0;
            continue;
        }
        if (c == '\'' || c == '"') {
            quote = c;
            current += c;
            continue;
        }
        if (c == '[' || c == '{')
            ++depth;
        else if (c == ']' || c == '}')
            --depth;
        if (c == ',' && depth == 0) {
            out.push_back(strip_quotes(trim_ws(current)));
            current.clear();
            continue;
        }
        current += c;
    }
    std::string last = strip_quotes(trim_ws(current));
    if (!last.empty())
        out.push_back(last);
    return out;
}

ParseResult parse_ipd_completion(const std::string& completion, const std::string& this_param) {
    std::string text = trim_ws(completion);
    if (text.size() >= 4 && text.compare(text.size() - 4, 4, kEos) == 0)
        text = trim_ws(text.substr(0, text.size() - 4));
    return parse_rules(text, this_param);
}

// --- ScriptedBackend -----------------------------------------------------

ScriptedBackend::ScriptedBackend(const std::string& fixture_path, bool strict) : strict_(strict) {
    std::ifstream in(fixture_path);
    if (!in)
        throw MalformedDocument("cannot open fixture file: " + fixture_path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    load(buffer.str());
}

ScriptedBackend ScriptedBackend::from_text(const std::string& ndjson, bool strict) {
    ScriptedBackend backend;
    backend.strict_ = strict;
    backend.load(ndjson);
    return backend;
}

void ScriptedBackend::load(const std::string& ndjson) {
    std::stringstream in(ndjson);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string trimmed = trim_ws(line);
        if (trimmed.empty() || trimmed[0] == '#')
            continue;
        Json record;
        try {
            record = Json::parse(trimmed);
        } catch (const Json::parse_error& e) {
            throw MalformedDocument("fixture line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!record.is_object() || !record.contains("match") || !record.contains("completion"))
            throw MalformedDocument("fixture line " + std::to_string(line_no) +
                                    ": need match and completion fields");
        Entry entry{record["match"].get<std::string>(), record["completion"].get<std::string>()};
        try {
            std::regex probe(entry.pattern); // validate now, fail at load time
        } catch (const std::regex_error& e) {
            throw MalformedDocument("fixture line " + std::to_string(line_no) +
                                    ": bad regex: " + e.what());
        }
        entries_.push_back(std::move(entry));
    }
}

std::string ScriptedBackend::complete(const std::string& prompt) {
    std::size_t best_span = 0;
    const Entry* best = nullptr;
    for (const auto& entry : entries_) {
        std::smatch m;
        if (!std::regex_search(prompt, m, std::regex(entry.pattern)))
            continue;
        auto span = static_cast<std::size_t>(m.length(0));
        if (!best || span > best_span) {
            best = &entry;
            best_span = span;
        }
    }
    if (!best) {
        if (strict_)
            throw FixtureMiss("no fixture entry matches prompt: " + prompt);
        return "";
    }
    return best->completion;
}

// --- RemoteBackend -------------------------------------------------------

std::string RemoteBackend::complete(const std::string& prompt) {
    std::string origin, path;
    if (!split_url(config_.url, origin, path))
        throw BackendUnreachable("malformed backend url: " + config_.url);

    std::string body = config_.request_template;
    const std::string placeholder = "{{PROMPT}}";
    const std::string encoded = Json(prompt).dump();
    for (std::size_t at = body.find(placeholder); at != std::string::npos;
         at = body.find(placeholder, at + encoded.size()))
        body.replace(at, placeholder.size(), encoded);

    httplib::Client client(origin);
    client.set_connection_timeout(config_.timeout_ms / 1000, (config_.timeout_ms % 1000) * 1000);
    client.set_read_timeout(config_.timeout_ms / 1000, (config_.timeout_ms % 1000) * 1000);

    auto result = client.Post(path, body, "application/json");
    if (!result) {
        auto err = result.error();
        if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read)
            throw BackendTimeout("backend timed out: " + config_.url);
        throw BackendUnreachable("backend unreachable: " + config_.url);
    }
    Json parsed;
    try {
        parsed = Json::parse(result->body);
    } catch (const Json::parse_error&) {
        return result->body;
    }
    const Json* node = walk_path(parsed, config_.response_path);
    if (!node)
        return "";
    if (node->is_string())
        return node->get<std::string>();
    return node->dump();
}

// --- LmClient ------------------------------------------------------------

LmClient::LmClient(std::unique_ptr<LmBackend> backend, std::string cache_path)
    : backend_(std::move(backend)), cache_path_(std::move(cache_path)) {
    if (!cache_path_.empty())
        load_cache();
}

std::string LmClient::cache_key(const LmTask& task) const {
    return to_string(task.kind) + "|" + task.param_name + "|" +
           std::to_string(fnv1a(task.context_text));
}

void LmClient::load_cache() {
    std::ifstream in(cache_path_);
    if (!in)
        return;
    std::string line;
    while (std::getline(in, line)) {
        if (trim_ws(line).empty())
            continue;
        try {
            Json record = Json::parse(line);
            if (record.contains("key") && record.contains("completion"))
                cache_[record["key"].get<std::string>()] =
                    record["completion"].get<std::string>();
        } catch (const Json::parse_error&) {
            // tolerate a torn tail line from an interrupted run
        }
    }
}

void LmClient::persist(const std::string& key, const LmTask& task,
                       const std::string& completion) {
    if (cache_path_.empty())
        return;
    std::ofstream out(cache_path_, std::ios::app);
    if (!out)
        return;
    Json record = {{"key", key},
                   {"kind", to_string(task.kind)},
                   {"param", task.param_name},
                   {"completion", completion}};
    out << record.dump() << "\n";
}

LmExchange LmClient::run(const LmTask& task) {
    LmExchange exchange;
    exchange.task = task;
    exchange.prompt = build_prompt(task);
    exchange.backend = backend_->name();

    const std::string key = cache_key(task);
    auto start = std::chrono::steady_clock::now();
    auto hit = cache_.find(key);
    if (hit != cache_.end()) {
        exchange.completion = hit->second;
        exchange.cache_hit = true;
    } else {
        exchange.completion = backend_->complete(exchange.prompt);
        ++backend_calls_;
        cache_[key] = exchange.completion;
        persist(key, task, exchange.completion);
    }
    auto end = std::chrono::steady_clock::now();
    exchange.latency_ms = std::chrono::duration<double, std::milli>(end - start).count();

    if (task.kind == LmTaskKind::Ipd)
        exchange.rules = parse_ipd_completion(exchange.completion, task.param_name);
    else
        exchange.values = parse_ex_completion(exchange.completion);
    return exchange;
}

} // namespace restq
