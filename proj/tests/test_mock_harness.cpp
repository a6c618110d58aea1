#include <doctest.h>

#include <set>
#include <string>

#include "restq/error.hpp"
#include "restq/executor.hpp"
#include "restq/mock_harness.hpp"
#include "restq/spec_model.hpp"

using namespace restq;

namespace {

TestInteraction get(const std::string& base, const std::string& path,
                    const std::vector<std::pair<std::string, std::string>>& query = {}) {
    HttpRequest request;
    request.method = "GET";
    request.url = base + path;
    request.query = query;
    return send_request(request);
}

} // namespace

TEST_CASE("every fixture serves a parseable spec at /openapi.json") {
    for (const auto& name : fixture_names()) {
        auto service = make_service(name);
        TestInteraction spec = get(service->base_url(), "/openapi.json");
        REQUIRE(spec.status == 200);
        ApiModel model = parse_spec(spec.response_body);
        CHECK_FALSE(model.operations.empty());
        CHECK(model.base_url == service->base_url());
    }
    CHECK_THROWS_AS(make_service("nonsense"), Error);
}

TEST_CASE("boundary service enforces mutual exclusion") {
    auto service = boundary_service();
    const std::string base = service->base_url();

    TestInteraction none = get(base, "/elements/area");
    CHECK(none.status == 400);
    CHECK(none.response_message ==
          "The query did not specify any parameter. Please remember: You need to define one of "
          "the boundary parameters (bboxes, bcircles, bpolys).");

    TestInteraction two =
        get(base, "/elements/area", {{"bboxes", "8.6,49.3,8.7,49.4"}, {"bcircles", "8,49,100"}});
    CHECK(two.status == 400);
    CHECK(two.response_message ==
          "The query should not have more than one boundary parameters (bboxes, bcircles, "
          "bpolys).");

    TestInteraction ok = get(base, "/elements/area", {{"bboxes", "8.6,49.3,8.7,49.4"}});
    CHECK(ok.status == 200);

    TestInteraction malformed = get(base, "/elements/area", {{"bboxes", "not-coordinates"}});
    CHECK(malformed.status == 400);
    CHECK(malformed.response_message.find("malformed") != std::string::npos);

    TestInteraction circle = get(base, "/elements/area", {{"bcircles", "8.65,49.35,1000"}});
    CHECK(circle.status == 200);
    TestInteraction poly =
        get(base, "/elements/area", {{"bpolys", "8.6,49.3,8.7,49.3,8.7,49.4,8.6,49.3"}});
    CHECK(poly.status == 200);
}

TEST_CASE("conditional service ties eventType to type=video") {
    auto service = conditional_service();
    const std::string base = service->base_url();
    CHECK(get(base, "/search").status == 200);
    CHECK(get(base, "/search", {{"type", "video"}, {"eventType", "live"}}).status == 200);
    TestInteraction broken = get(base, "/search", {{"eventType", "live"}});
    CHECK(broken.status == 400);
    CHECK(broken.response_message == "eventType requires type=video");
    CHECK(get(base, "/search", {{"type", "playlist"}, {"eventType", "live"}}).status == 400);
}

TEST_CASE("chain service links playlist ids to tracks and crashes on isrc user ids") {
    auto service = chain_crash_service();
    const std::string base = service->base_url();

    TestInteraction miss = get(base, "/playlists/short/tracks");
    CHECK(miss.status == 404);

    TestInteraction tracks = get(base, "/playlists/37i9dQZF1DXcBWIGoYBM5M/tracks");
    REQUIRE(tracks.status == 200);
    Json body = Json::parse(tracks.response_body);
    CHECK(body["tracks"][0]["isrc"] == "USUM71703861");

    TestInteraction fine = get(base, "/users/alice/playlists");
    REQUIRE(fine.status == 200);
    Json playlists = Json::parse(fine.response_body);
    CHECK(playlists["playlists"][0]["id"] == "37i9dQZF1DXcBWIGoYBM5M");

    TestInteraction crash = get(base, "/users/USUM71703861/playlists");
    CHECK(crash.status == 500);
    CHECK(crash.response_message == "unresolved reference: USUM71703861");
}

TEST_CASE("dedup service varies the uuid but keeps one error shape") {
    auto service = dedup_service();
    ErrorLedger ledger;
    std::set<std::string> raw_messages;
    for (int i = 0; i < 10; ++i) {
        TestInteraction boom = get(service->base_url(), "/boom");
        REQUIRE(boom.status == 500);
        raw_messages.insert(boom.response_message);
        boom.operation_id = "boom";
        ledger.record(boom, i);
    }
    CHECK(raw_messages.size() == 10); // embedded ids differ every time
    CHECK(ledger.unique_count() == 1);
    CHECK(ledger.total_count() == 10);
}

TEST_CASE("fixture specs drive the model parser end to end") {
    auto service = chain_crash_service();
    ApiModel model = parse_spec(service->oas_text());
    CHECK(model.operations.size() == 2);
    const Operation* tracks = model.find_operation("getPlaylistTracks");
    REQUIRE(tracks != nullptr);
    const Parameter* id = tracks->find_parameter("playlist_id");
    REQUIRE(id != nullptr);
    CHECK(id->required);
    CHECK(id->location == ParamLocation::Path);
}
