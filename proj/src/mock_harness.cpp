#include "restq/mock_harness.hpp"

#include <atomic>
#include <cstdio>
#include <regex>

#include <httplib.h>

#include "restq/error.hpp"

namespace restq {

namespace {

constexpr const char* kNoBoundaryMsg =
    "The query did not specify any parameter. Please remember: You need to define one of the "
    "boundary parameters (bboxes, bcircles, bpolys).";
constexpr const char* kTooManyBoundariesMsg =
    "The query should not have more than one boundary parameters (bboxes, bcircles, bpolys).";

void reply_json(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

Json query_param(const std::string& name, const std::string& description,
                 const std::string& type = "string") {
    return Json{{"name", name},
                {"in", "query"},
                {"required", false},
                {"description", description},
                {"schema", Json{{"type", type}}}};
}

Json path_param(const std::string& name, const std::string& description) {
    return Json{{"name", name},
                {"in", "path"},
                {"required", true},
                {"description", description},
                {"schema", Json{{"type", "string"}}}};
}

Json ok_response() {
    return Json{{"200", Json{{"description", "ok"}}},
                {"400", Json{{"description", "bad request"}}}};
}

} // namespace

FixtureService::FixtureService(std::string name, Json oas)
    : name_(std::move(name)), oas_(std::move(oas)), server_(std::make_unique<httplib::Server>()) {}

FixtureService::~FixtureService() {
    if (thread_.joinable()) {
        server_->stop();
        thread_.join();
    }
}

void FixtureService::start(int port) {
    server_->Get("/openapi.json", [this](const httplib::Request&, httplib::Response& res) {
        res.set_content(oas_text(), "application/json");
    });
    if (port == 0) {
        port_ = server_->bind_to_any_port("127.0.0.1");
        if (port_ <= 0)
            throw Error("cannot bind fixture service to an ephemeral port");
    } else {
        if (!server_->bind_to_port("127.0.0.1", port))
            throw Error("cannot bind fixture service to port " + std::to_string(port));
        port_ = port;
    }
    oas_["servers"] = Json::array({Json{{"url", base_url()}}});
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
}

void FixtureService::wait() {
    if (thread_.joinable())
        thread_.join();
}

std::string FixtureService::base_url() const {
    return "http://127.0.0.1:" + std::to_string(port_);
}

std::unique_ptr<FixtureService> boundary_service(int port) {
    Json oas{
        {"openapi", "3.0.3"},
        {"info", Json{{"title", "boundary fixture"}, {"version", "1.0.0"}}},
        {"paths",
         Json{{"/elements/area",
               Json{{"get",
                     Json{{"operationId", "elementsArea"},
                          {"summary", "Aggregate element area within a boundary"},
                          {"parameters",
                           Json::array(
                               {query_param("bboxes",
                                            "Bounding boxes as lon1,lat1,lon2,lat2 coordinate "
                                            "lists."),
                                query_param("bcircles",
                                            "Circles as lon,lat,radius coordinate lists."),
                                query_param("bpolys",
                                            "Polygons as lon,lat coordinate pair lists."),
                                query_param("filter", "Element filter expression."),
                                query_param("format", "Output format of the result."),
                                query_param("time", "Timestamp or time range to evaluate.")})},
                          {"responses", ok_response()}}}}}}}};

    auto service = std::make_unique<FixtureService>("boundary", std::move(oas));
    service->server().Get(
        "/elements/area", [](const httplib::Request& req, httplib::Response& res) {
            static const std::regex bboxes_re(R"(^-?\d+(\.\d+)?(,-?\d+(\.\d+)?){3}$)");
            static const std::regex bcircles_re(R"(^-?\d+(\.\d+)?(,-?\d+(\.\d+)?){2}$)");
            static const std::regex bpolys_re(R"(^-?\d+(\.\d+)?(,-?\d+(\.\d+)?){5,}$)");

            std::vector<std::pair<std::string, const std::regex*>> boundaries;
            if (req.has_param("bboxes"))
                boundaries.emplace_back("bboxes", &bboxes_re);
            if (req.has_param("bcircles"))
                boundaries.emplace_back("bcircles", &bcircles_re);
            if (req.has_param("bpolys"))
                boundaries.emplace_back("bpolys", &bpolys_re);

            if (boundaries.empty()) {
                reply_json(res, 400, Json{{"message", kNoBoundaryMsg}});
                return;
            }
            if (boundaries.size() > 1) {
                reply_json(res, 400, Json{{"message", kTooManyBoundariesMsg}});
                return;
            }
            const auto& [name, pattern] = boundaries.front();
            std::string value = req.get_param_value(name);
            if (!std::regex_match(value, *pattern)) {
                reply_json(res, 400,
                           Json{{"message", "The boundary parameter '" + name +
                                                "' is malformed. Expected a comma-separated "
                                                "coordinate list."}});
                return;
            }
            reply_json(res, 200, Json{{"result", Json::array({Json{{"value", 42195.7}}})}});
        });
    service->start(port);
    return service;
}

std::unique_ptr<FixtureService> conditional_service(int port) {
    Json oas{
        {"openapi", "3.0.3"},
        {"info", Json{{"title", "conditional fixture"}, {"version", "1.0.0"}}},
        {"paths",
         Json{{"/search",
               Json{{"get",
                     Json{{"operationId", "searchList"},
                          {"summary", "Search the catalogue"},
                          {"parameters",
                           Json::array(
                               {query_param("q", "Free-text search terms."),
                                query_param("type",
                                            "Resource type to return: video, channel or "
                                            "playlist."),
                                query_param("eventType",
                                            "Restrict results to broadcast events; only valid "
                                            "for video searches."),
                                query_param("maxResults", "Page size.", "integer")})},
                          {"responses", ok_response()}}}}}}}};

    auto service = std::make_unique<FixtureService>("conditional", std::move(oas));
    service->server().Get("/search", [](const httplib::Request& req, httplib::Response& res) {
        if (req.has_param("eventType") && req.get_param_value("type") != "video") {
            reply_json(res, 400, Json{{"message", "eventType requires type=video"}});
            return;
        }
        reply_json(res, 200, Json{{"items", Json::array()}});
    });
    service->start(port);
    return service;
}

std::unique_ptr<FixtureService> chain_crash_service(int port) {
    Json oas{
        {"openapi", "3.0.3"},
        {"info", Json{{"title", "chain fixture"}, {"version", "1.0.0"}}},
        {"paths",
         Json{{"/playlists/{playlist_id}/tracks",
               Json{{"get", Json{{"operationId", "getPlaylistTracks"},
                                 {"summary", "List the tracks of a playlist"},
                                 {"parameters", Json::array({path_param(
                                                    "playlist_id", "Playlist identifier.")})},
                                 {"responses", ok_response()}}}}},
              {"/users/{user_id}/playlists",
               Json{{"get", Json{{"operationId", "getUserPlaylists"},
                                 {"summary", "List the playlists of a user"},
                                 {"parameters",
                                  Json::array({path_param("user_id", "User identifier.")})},
                                 {"responses", ok_response()}}}}}}}};

    auto service = std::make_unique<FixtureService>("chain-crash", std::move(oas));
    service->server().Get(
        R"(/playlists/([^/]+)/tracks)", [](const httplib::Request& req, httplib::Response& res) {
            static const std::regex playlist_re("^[A-Za-z0-9]{22}$");
            std::string id = req.matches[1];
            if (!std::regex_match(id, playlist_re)) {
                reply_json(res, 404, Json{{"message", "playlist not found"}});
                return;
            }
            reply_json(res, 200,
                       Json{{"tracks", Json::array({Json{{"isrc", "USUM71703861"},
                                                         {"title", "track one"}}})}});
        });
    service->server().Get(
        R"(/users/([^/]+)/playlists)", [](const httplib::Request& req, httplib::Response& res) {
            static const std::regex isrc_re(R"(^[A-Z]{2}[A-Z0-9]{3}\d{7}$)");
            std::string id = req.matches[1];
            if (std::regex_match(id, isrc_re)) {
                reply_json(res, 500, Json{{"message", "unresolved reference: " + id}});
                return;
            }
            reply_json(res, 200,
                       Json{{"playlists", Json::array({Json{{"id", "37i9dQZF1DXcBWIGoYBM5M"},
                                                            {"name", "daily mix"}}})}});
        });
    service->start(port);
    return service;
}

std::unique_ptr<FixtureService> dedup_service(int port) {
    Json oas{{"openapi", "3.0.3"},
             {"info", Json{{"title", "dedup fixture"}, {"version", "1.0.0"}}},
             {"paths",
              Json{{"/boom", Json{{"get", Json{{"operationId", "boom"},
                                               {"summary", "Always fails"},
                                               {"responses", ok_response()}}}}}}}};

    auto service = std::make_unique<FixtureService>("dedup", std::move(oas));
    auto counter = std::make_shared<std::atomic<std::uint64_t>>(0);
    service->server().Get("/boom", [counter](const httplib::Request&, httplib::Response& res) {
        std::uint64_t n = counter->fetch_add(1) + 0x9e3779b97f4a7c15ULL;
        n *= 0xbf58476d1ce4e5b9ULL;
        char uuid[40];
        std::snprintf(uuid, sizeof(uuid), "%08x-%04x-4%03x-9%03x-%012llx",
                      static_cast<unsigned>(n >> 32), static_cast<unsigned>(n >> 16) & 0xffffu,
                      static_cast<unsigned>(n) & 0xfffu, static_cast<unsigned>(n >> 8) & 0xfffu,
                      static_cast<unsigned long long>(n & 0xffffffffffffULL));
        reply_json(res, 500,
                   Json{{"message", std::string("request ") + uuid + " failed: index overflow"}});
    });
    service->start(port);
    return service;
}

std::vector<std::string> fixture_names() {
    return {"boundary", "conditional", "chain-crash", "dedup"};
}

std::unique_ptr<FixtureService> make_service(const std::string& name, int port) {
    if (name == "boundary")
        return boundary_service(port);
    if (name == "conditional")
        return conditional_service(port);
    if (name == "chain-crash")
        return chain_crash_service(port);
    if (name == "dedup")
        return dedup_service(port);
    throw Error("unknown fixture service: " + name);
}

} // namespace restq
