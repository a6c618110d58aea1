#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "restq/error.hpp"
#include "restq/lm_backend.hpp"

using namespace restq;

namespace {

std::string slurp(const std::string& relative) {
    std::string path = std::string(RESTQ_SOURCE_DIR) + "/" + relative;
    std::ifstream in(path, std::ios::binary);
    REQUIRE_MESSAGE(bool(in), "missing fixture ", path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) {
        path = std::string("/tmp/restq_test_") + name + "_" + std::to_string(::getpid());
    }
    ~TempFile() { std::remove(path.c_str()); }
};

} // namespace

TEST_CASE("ipd prompt matches the golden file byte for byte") {
    LmTask task{LmTaskKind::Ipd, "travelMode",
                "If startTime is present, travelMode must be 'driving'."};
    CHECK(build_prompt(task) == slurp("tests/golden/prompt_ipd.txt"));
}

TEST_CASE("ex prompt matches the golden file byte for byte") {
    LmTask task{LmTaskKind::Ex, "Content-Type", "The content type."};
    CHECK(build_prompt(task) == slurp("tests/golden/prompt_ex.txt"));
}

TEST_CASE("context composition honors the feature toggles") {
    CHECK(compose_context("desc", "msg", true, true) == "desc | server: msg");
    CHECK(compose_context("desc", "msg", true, false) == "desc");
    CHECK(compose_context("desc", "msg", false, true) == " | server: msg");
    CHECK(compose_context("desc", "", true, true) == "desc");
    CHECK(compose_context("", "", true, true) == "");
}

TEST_CASE("ex completions parse into value lists") {
    CHECK(parse_ex_completion("['json', 'xml']") == std::vector<std::string>{"json", "xml"});
    CHECK(parse_ex_completion("['application/x-www-form-urlencoded', 'application/json']</s>") ==
          std::vector<std::string>{"application/x-www-form-urlencoded", "application/json"});
    CHECK(parse_ex_completion("here you go: [1, 2, 3] done") ==
          std::vector<std::string>{"1", "2", "3"});
    CHECK(parse_ex_completion("['a,b', \"c\"]") == std::vector<std::string>{"a,b", "c"});
    CHECK(parse_ex_completion("[]").empty());
    CHECK(parse_ex_completion("no list here").empty());
    CHECK(parse_ex_completion("[[1,2],[3,4]]") == std::vector<std::string>{"[1,2]", "[3,4]"});
    CHECK(parse_ex_completion("['unterminated").empty());
}

TEST_CASE("ipd completions strip the end token and parse totally") {
    auto one = parse_ipd_completion("IF eventType THEN type=video</s>", "eventType");
    REQUIRE(one.rules.size() == 1);
    CHECK(one.diagnostics.empty());
    CHECK(serialize(one.rules[0]) == "IF eventType THEN type=='video';");

    auto combo = parse_ipd_completion("OnlyOne(bboxes, bcircles, bpolys)", "bboxes");
    REQUIRE(combo.rules.size() == 1);
    CHECK(serialize(combo.rules[0]) == "OnlyOne(bboxes,bcircles,bpolys)");

    auto with_this = parse_ipd_completion("AllOrNone(this,locationRadius)</s>", "location");
    REQUIRE(with_this.rules.size() == 1);
    CHECK(with_this.rules[0].params[0].name == "location");

    auto garbage = parse_ipd_completion("I could not find any dependency.", "x");
    CHECK(garbage.rules.empty());
    CHECK(garbage.diagnostics.size() == 1);

    auto empty = parse_ipd_completion("", "x");
    CHECK(empty.rules.empty());
    CHECK(empty.diagnostics.empty());
}

TEST_CASE("scripted backend picks the longest match, file order breaking ties") {
    auto backend = ScriptedBackend::from_text(R"x({"match": "name", "completion": "short"}
{"match": "name: bboxes", "completion": "long"}
{"match": "name: (bboxes|filter)", "completion": "alternation"}
)x");
    CHECK(backend.complete("prompt with name: bboxes inside") == "long");
    CHECK(backend.complete("prompt with name: filter inside") == "alternation");
    CHECK(backend.complete("bare name only") == "short");
    CHECK(backend.complete("nothing relevant") == "");
}

TEST_CASE("strict scripted backend throws on a miss") {
    auto backend = ScriptedBackend::from_text(R"({"match": "xyz", "completion": "c"})", true);
    CHECK_THROWS_AS(backend.complete("no match in here"), FixtureMiss);
}

TEST_CASE("fixture files validate at load time") {
    CHECK_THROWS_AS(ScriptedBackend::from_text("{not json}"), MalformedDocument);
    CHECK_THROWS_AS(ScriptedBackend::from_text(R"({"match": "a"})"), MalformedDocument);
    CHECK_THROWS_AS(ScriptedBackend::from_text(R"({"match": "[unclosed", "completion": "c"})"),
                    MalformedDocument);
    auto ok = ScriptedBackend::from_text("# comment line\n\n{\"match\": \"a\", \"completion\": \"b\"}");
    CHECK(ok.complete("has a inside") == "b");
}

TEST_CASE("the shipped boundary fixture answers ipd and ex prompts") {
    ScriptedBackend backend(std::string(RESTQ_SOURCE_DIR) + "/tests/fixtures/boundary_lm.ndjson");
    LmTask ipd{LmTaskKind::Ipd, "bboxes",
               "Bounding boxes. | server: You need to define one of the boundary parameters "
               "(bboxes, bcircles, bpolys)."};
    CHECK(backend.complete(build_prompt(ipd)) == "OnlyOne(bboxes, bcircles, bpolys)");
    LmTask ex{LmTaskKind::Ex, "bboxes", "Bounding boxes."};
    CHECK(backend.complete(build_prompt(ex)) == "['8.6,49.3,8.7,49.4']");
}

TEST_CASE("client caches by task identity and counts backend calls") {
    auto backend = std::make_unique<ScriptedBackend>(ScriptedBackend::from_text(
        R"x({"match": "Dependency", "completion": "Requires(a,b)"}
{"match": "example values", "completion": "['v']"})x"));
    LmClient client(std::move(backend));

    LmTask task{LmTaskKind::Ipd, "a", "ctx"};
    LmExchange first = client.run(task);
    CHECK_FALSE(first.cache_hit);
    REQUIRE(first.rules.rules.size() == 1);
    CHECK(client.backend_calls() == 1);

    LmExchange again = client.run(task);
    CHECK(again.cache_hit);
    CHECK(again.completion == first.completion);
    REQUIRE(again.rules.rules.size() == 1); // parsing still happens on hits
    CHECK(client.backend_calls() == 1);

    LmTask other{LmTaskKind::Ex, "a", "ctx"}; // same param, different kind
    LmExchange ex = client.run(other);
    CHECK_FALSE(ex.cache_hit);
    CHECK(ex.values == std::vector<std::string>{"v"});
    CHECK(client.backend_calls() == 2);

    LmTask shifted{LmTaskKind::Ipd, "a", "different ctx"};
    CHECK_FALSE(client.run(shifted).cache_hit);
    CHECK(client.backend_calls() == 3);
}

TEST_CASE("cache persists across clients through the ndjson file") {
    TempFile cache("lm_cache");
    {
        auto backend = std::make_unique<ScriptedBackend>(
            ScriptedBackend::from_text(R"({"match": ".", "completion": "['x']"})"));
        LmClient client(std::move(backend), cache.path);
        client.run({LmTaskKind::Ex, "p", "ctx"});
        CHECK(client.backend_calls() == 1);
    }
    {
        // Strict backend with no entries: any real call would throw.
        auto backend = std::make_unique<ScriptedBackend>(ScriptedBackend::from_text("", true));
        LmClient client(std::move(backend), cache.path);
        LmExchange hit = client.run({LmTaskKind::Ex, "p", "ctx"});
        CHECK(hit.cache_hit);
        CHECK(hit.values == std::vector<std::string>{"x"});
        CHECK(client.backend_calls() == 0);
    }
}

TEST_CASE("remote backend reports unreachable hosts") {
    RemoteBackendConfig config;
    config.url = "http://127.0.0.1:9/completion"; // port 9: nothing listens
    config.timeout_ms = 300;
    RemoteBackend backend(config);
    CHECK_THROWS_AS(backend.complete("prompt"), Error);
}
