#include <doctest.h>

#include <fstream>
#include <sstream>
#include <string>

#include "restq/error.hpp"
#include "restq/spec_model.hpp"

using namespace restq;

namespace {

std::string slurp(const std::string& relative) {
    std::string path = std::string(RESTQ_SOURCE_DIR) + "/" + relative;
    std::ifstream in(path);
    REQUIRE_MESSAGE(bool(in), "missing fixture ", path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("yaml document parses into the model") {
    ApiModel model = parse_spec(slurp("tests/fixtures/element_area.yaml"));
    CHECK(model.title == "element area service");
    CHECK(model.base_url == "https://api.example.org/v1");
    REQUIRE(model.operations.size() == 1);

    const Operation& op = model.operations[0];
    CHECK(op.id == "elementsArea");
    CHECK(op.method == "GET");
    CHECK(op.path == "/elements/area");
    REQUIRE(op.parameters.size() == 6);
    CHECK(op.parameters[0].name == "bboxes");
    CHECK(op.parameters[0].location == ParamLocation::Query);
    CHECK_FALSE(op.parameters[0].required);
    CHECK(op.parameters[0].description.find("WGS84") == 0);

    const Parameter* format = op.find_parameter("format");
    REQUIRE(format != nullptr);
    REQUIRE(format->enum_values.has_value());
    CHECK(*format->enum_values == std::vector<std::string>{"geojson", "csv", "json"});

    const Parameter* time = op.find_parameter("time");
    REQUIRE(time != nullptr);
    REQUIRE(time->example.has_value());
    CHECK(*time->example == "2014-01-01");
}

TEST_CASE("json document parses identically through the auto sniffer") {
    std::string text = slurp("tests/fixtures/refs.json");
    ApiModel sniffed = parse_spec(text);
    ParseOptions opts;
    opts.format = FormatHint::Json;
    ApiModel forced = parse_spec(text, opts);
    CHECK(sniffed.operations.size() == forced.operations.size());
    CHECK(sniffed.title == forced.title);
}

TEST_CASE("refs resolve with sibling keys merged over the target") {
    Json doc = Json::parse(slurp("tests/fixtures/refs.json"));
    Json resolved = resolve_refs(doc);
    const Json& tag =
        resolved["components"]["schemas"]["Pet"]["properties"]["tag"];
    CHECK(tag["type"] == "string");
    CHECK(tag["description"] == "Sibling override"); // sibling wins over target
    const Json& pet_id = resolved["paths"]["/pets/{petId}"]["parameters"][0];
    CHECK(pet_id["name"] == "petId");
    CHECK_FALSE(pet_id.contains("$ref"));
}

TEST_CASE("path-item parameters merge and the operation wins on conflicts") {
    ApiModel model = parse_spec(slurp("tests/fixtures/refs.json"));
    const Operation* get_pet = model.find_operation("getPet");
    REQUIRE(get_pet != nullptr);
    REQUIRE(get_pet->parameters.size() == 2);

    const Parameter* pet_id = get_pet->find_parameter("petId");
    REQUIRE(pet_id != nullptr);
    CHECK(pet_id->location == ParamLocation::Path);
    CHECK(pet_id->required);
    CHECK(pet_id->type == ValueType::Integer);

    const Parameter* verbose = get_pet->find_parameter("verbose");
    REQUIRE(verbose != nullptr);
    CHECK(verbose->description == "operation wins");
    CHECK(verbose->type == ValueType::String);
}

TEST_CASE("request body fields flatten to body parameters") {
    ApiModel model = parse_spec(slurp("tests/fixtures/refs.json"));
    const Operation* create = model.find_operation("createPet");
    REQUIRE(create != nullptr);
    REQUIRE(create->parameters.size() == 3);

    const Parameter* name = create->find_parameter("name");
    REQUIRE(name != nullptr);
    CHECK(name->location == ParamLocation::BodyField);
    CHECK(name->required);

    const Parameter* age = create->find_parameter("age");
    REQUIRE(age != nullptr);
    CHECK_FALSE(age->required);
    CHECK(age->type == ValueType::Integer);
    REQUIRE(age->schema != nullptr);
    CHECK(age->schema->constraints.maximum == 30.0);

    const Parameter* tag = create->find_parameter("tag");
    REQUIRE(tag != nullptr);
    CHECK(tag->type == ValueType::String);
    REQUIRE(create->request_body_schema != nullptr);
    CHECK(create->request_body_schema->type == ValueType::Object);
}

TEST_CASE("cyclic refs throw unless truncation is requested") {
    std::string text = slurp("tests/fixtures/cycle.json");
    CHECK_THROWS_AS(parse_spec(text), CyclicRef);
    ParseOptions opts;
    opts.truncate_cycles = true;
    ApiModel model = parse_spec(text, opts);
    REQUIRE(model.operations.size() == 1);
    CHECK(model.find_operation("createNode")->find_parameter("label") != nullptr);
}

TEST_CASE("dangling and external refs are rejected") {
    Json doc{{"openapi", "3.0.0"},
             {"info", Json{{"title", "x"}, {"version", "1"}}},
             {"paths", Json::object()},
             {"components",
              Json{{"schemas", Json{{"A", Json{{"$ref", "#/components/schemas/Missing"}}}}}}}};
    CHECK_THROWS_AS(resolve_refs(doc), DanglingRef);
    doc["components"]["schemas"]["A"]["$ref"] = "other.yaml#/components/schemas/B";
    CHECK_THROWS_AS(resolve_refs(doc), DanglingRef);
}

TEST_CASE("swagger 2 and garbage are rejected") {
    CHECK_THROWS_AS(parse_spec(R"({"swagger": "2.0", "paths": {}})"), UnsupportedVersion);
    CHECK_THROWS_AS(parse_spec(R"({"openapi": "4.1.0", "paths": {}})"), UnsupportedVersion);
    CHECK_THROWS_AS(parse_spec("{{{{"), MalformedDocument);
    CHECK_THROWS_AS(parse_spec(R"json(["not", "an", "object"])json"), MalformedDocument);
}

TEST_CASE("missing operationId falls back to method plus path") {
    std::string text = R"({
      "openapi": "3.1.0",
      "info": {"title": "t", "version": "1"},
      "paths": {"/things": {"delete": {"responses": {"204": {"description": "gone"}}}}}
    })";
    ApiModel model = parse_spec(text);
    REQUIRE(model.operations.size() == 1);
    CHECK(model.operations[0].id == "DELETE /things");
}

TEST_CASE("undeclared path placeholders synthesize required parameters") {
    std::string text = R"({
      "openapi": "3.0.1",
      "info": {"title": "t", "version": "1"},
      "paths": {"/users/{user_id}/posts/{post_id}": {"get": {
        "operationId": "getPost",
        "parameters": [{"name": "user_id", "in": "path", "required": true,
                        "schema": {"type": "string"}}],
        "responses": {"200": {"description": "ok"}}
      }}}
    })";
    ApiModel model = parse_spec(text);
    const Operation* op = model.find_operation("getPost");
    REQUIRE(op != nullptr);
    const Parameter* synthesized = op->find_parameter("post_id");
    REQUIRE(synthesized != nullptr);
    CHECK(synthesized->required);
    CHECK(synthesized->location == ParamLocation::Path);
}

TEST_CASE("base url override wins over servers") {
    ParseOptions opts;
    opts.base_url_override = "http://127.0.0.1:8080";
    ApiModel model = parse_spec(slurp("tests/fixtures/element_area.yaml"), opts);
    CHECK(model.base_url == "http://127.0.0.1:8080");
}

TEST_CASE("zero paths yields an empty model, not an error") {
    ApiModel model = parse_spec(R"({"openapi": "3.0.0",
      "info": {"title": "empty", "version": "1"}, "paths": {}})");
    CHECK(model.operations.empty());
    CHECK(model.title == "empty");
}

TEST_CASE("path placeholder extraction") {
    CHECK(path_placeholders("/users/{user_id}/posts/{post_id}") ==
          std::vector<std::string>{"user_id", "post_id"});
    CHECK(path_placeholders("/plain").empty());
    CHECK(path_placeholders("/odd/{unclosed").empty());
}

TEST_CASE("yaml scalars keep their spelling when quoted") {
    std::string text = R"(
openapi: 3.0.0
info:
  title: scalar check
  version: "0.1"
paths:
  /q:
    get:
      operationId: q
      parameters:
        - name: flag
          in: query
          schema:
            type: string
            enum: ["true", "0123", "plain"]
      responses:
        "200":
          description: ok
)";
    ApiModel model = parse_spec(text);
    const Parameter* flag = model.find_operation("q")->find_parameter("flag");
    REQUIRE(flag != nullptr);
    REQUIRE(flag->enum_values.has_value());
    CHECK(*flag->enum_values == std::vector<std::string>{"true", "0123", "plain"});
}
