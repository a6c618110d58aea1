#pragma once

#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "restq/spec_model.hpp"

namespace httplib {
class Server;
}

namespace restq {

// In-process HTTP fixture bound to an ephemeral localhost port. Each fixture
// serves its own OpenAPI document at /openapi.json so the engine can be
// pointed at it unmodified.
class FixtureService {
public:
    FixtureService(std::string name, Json oas);
    ~FixtureService();

    FixtureService(const FixtureService&) = delete;
    FixtureService& operator=(const FixtureService&) = delete;

    // Starts listening; port 0 picks an ephemeral port. Throws Error when
    // binding fails.
    void start(int port = 0);

    // Blocks until the server stops (foreground serving from the CLI).
    void wait();

    const std::string& name() const { return name_; }
    int port() const { return port_; }
    std::string base_url() const;
    const Json& oas() const { return oas_; }
    std::string oas_text() const { return oas_.dump(2); }

    httplib::Server& server() { return *server_; }

private:
    std::string name_;
    Json oas_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;
};

// GET /elements/area: exactly one well-formed boundary parameter out of
// {bboxes, bcircles, bpolys} succeeds; none or several yield the verbatim
// guidance messages; a single malformed one yields a format hint.
std::unique_ptr<FixtureService> boundary_service(int port = 0);

// GET /search: presence of eventType demands type=video.
std::unique_ptr<FixtureService> conditional_service(int port = 0);

// GET /playlists/{playlist_id}/tracks: 200 with an ISRC leaf for 22-char
// alphanumeric ids, else 404. GET /users/{user_id}/playlists: 500 when the
// id is ISRC-shaped (the hidden cross-operation conflict), else 200.
std::unique_ptr<FixtureService> chain_crash_service(int port = 0);

// GET /boom: always 500, message carries a fresh UUID per request so
// deduplication by normalized message can be exercised. The per-request
// counter makes this the one deliberately impure fixture.
std::unique_ptr<FixtureService> dedup_service(int port = 0);

std::vector<std::string> fixture_names();
std::unique_ptr<FixtureService> make_service(const std::string& name, int port = 0);

} // namespace restq
