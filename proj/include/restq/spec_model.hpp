#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace restq {

// Insertion-ordered so object key order follows the source document and
// construction order, which keeps serialized reports and logs stable.
using Json = nlohmann::ordered_json;

enum class ParamLocation { Query, Path, Header, BodyField };
enum class ValueType { String, Integer, Number, Boolean, Array, Object };

std::string to_string(ParamLocation loc);
std::string to_string(ValueType type);

struct SchemaConstraints {
    std::optional<double> minimum;
    std::optional<double> maximum;
    std::optional<std::string> pattern;
    std::optional<std::string> format;
};

struct Schema {
    ValueType type = ValueType::String;
    std::map<std::string, std::shared_ptr<Schema>> properties; // objects
    std::shared_ptr<Schema> items;                             // arrays
    SchemaConstraints constraints;
};

struct Parameter {
    std::string name;
    ParamLocation location = ParamLocation::Query;
    ValueType type = ValueType::String;
    bool required = false;
    std::string description; // empty when the document has none, never absent
    std::optional<std::vector<std::string>> enum_values;
    std::optional<std::string> example;
    std::optional<std::string> default_value;
    std::shared_ptr<Schema> schema; // full schema for nested body fields
};

struct Operation {
    std::string id; // operationId, or "METHOD path" when absent
    std::string method;
    std::string path; // template with {placeholders}
    std::vector<Parameter> parameters;
    std::shared_ptr<Schema> request_body_schema;

    const Parameter* find_parameter(const std::string& name) const;
};

struct ApiModel {
    std::string title;
    std::string base_url;
    std::vector<Operation> operations; // document order

    const Operation* find_operation(const std::string& id) const;
};

enum class FormatHint { Json, Yaml, Auto };

struct ParseOptions {
    FormatHint format = FormatHint::Auto;
    int max_schema_depth = 32; // recursion bound for nested schemas
    bool truncate_cycles = false; // true: cut cyclic $refs at the depth limit instead of failing
    std::string base_url_override; // wins over the document's servers[0].url
};

// Replaces every internal "$ref": "#/components/..." node by its target.
// Throws CyclicRef (unless opts.truncate_cycles) and DanglingRef.
Json resolve_refs(const Json& document, const ParseOptions& opts = {});

// Parses an OpenAPI 3.x document (JSON or YAML bytes) into an ApiModel.
// Throws MalformedDocument, UnsupportedVersion, CyclicRef, DanglingRef.
ApiModel parse_spec(const std::string& document, const ParseOptions& opts = {});

// Path template helpers shared with the executor and tests.
std::vector<std::string> path_placeholders(const std::string& path_template);

} // namespace restq
