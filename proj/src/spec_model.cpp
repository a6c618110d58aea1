#include "restq/spec_model.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include <yaml-cpp/yaml.h>

#include "restq/error.hpp"

namespace restq {

namespace {

Json yaml_to_json(const YAML::Node& node) {
    switch (node.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
        return nullptr;
    case YAML::NodeType::Scalar: {
        if (node.Tag() == "!") // quoted scalars stay strings
            return node.as<std::string>();
        const std::string& raw = node.Scalar();
        if (raw == "null" || raw == "~" || raw == "Null" || raw == "NULL")
            return nullptr;
        if (raw == "true" || raw == "True" || raw == "TRUE")
            return true;
        if (raw == "false" || raw == "False" || raw == "FALSE")
            return false;
        try {
            std::size_t pos = 0;
            long long i = std::stoll(raw, &pos);
            if (pos == raw.size())
                return i;
        } catch (const std::exception&) {
        }
        try {
            std::size_t pos = 0;
            double d = std::stod(raw, &pos);
            if (pos == raw.size())
                return d;
        } catch (const std::exception&) {
        }
        return raw;
    }
    case YAML::NodeType::Sequence: {
        Json arr = Json::array();
        for (const auto& item : node)
            arr.push_back(yaml_to_json(item));
        return arr;
    }
    case YAML::NodeType::Map: {
        Json obj = Json::object();
        for (const auto& kv : node)
            obj[kv.first.as<std::string>()] = yaml_to_json(kv.second);
        return obj;
    }
    }
    return nullptr;
}

Json parse_document(const std::string& text, FormatHint hint) {
    auto try_json = [&]() -> Json { return Json::parse(text); };
    auto try_yaml = [&]() -> Json { return yaml_to_json(YAML::Load(text)); };

    if (hint == FormatHint::Json) {
        try {
            return try_json();
        } catch (const Json::parse_error& e) {
            throw MalformedDocument(std::string("invalid JSON: ") + e.what());
        }
    }
    if (hint == FormatHint::Yaml) {
        try {
            return try_yaml();
        } catch (const YAML::Exception& e) {
            throw MalformedDocument(std::string("invalid YAML: ") + e.what());
        }
    }
    try {
        return try_json();
    } catch (const Json::parse_error&) {
    }
    try {
        return try_yaml();
    } catch (const YAML::Exception& e) {
        throw MalformedDocument(std::string("document is neither valid JSON nor valid YAML: ") +
                                e.what());
    }
}

class RefResolver {
public:
    RefResolver(const Json& root, const ParseOptions& opts) : root_(root), opts_(opts) {}

    Json expand(const Json& node, int depth) {
        if (depth > opts_.max_schema_depth) {
            if (opts_.truncate_cycles)
                return Json::object();
            throw CyclicRef("$ref nesting exceeds depth limit " +
                            std::to_string(opts_.max_schema_depth));
        }
        if (node.is_object()) {
            auto ref_it = node.find("$ref");
            if (ref_it != node.end() && ref_it->is_string()) {
                const std::string ref = ref_it->get<std::string>();
                if (ref.empty() || ref[0] != '#')
                    throw DanglingRef("external $ref not supported: " + ref);
                if (active_.count(ref)) {
                    if (opts_.truncate_cycles)
                        return Json::object();
                    throw CyclicRef("cyclic $ref: " + ref);
                }
                const Json* target = lookup(ref);
                if (!target)
                    throw DanglingRef("unresolvable $ref: " + ref);
                active_.insert(ref);
                Json expanded = expand(*target, depth + 1);
                active_.erase(ref);
                // Sibling keys next to $ref are merged over the target,
                // matching common usage of description overrides.
                if (node.size() > 1 && expanded.is_object()) {
                    for (const auto& [k, v] : node.items()) {
                        if (k != "$ref")
                            expanded[k] = expand(v, depth + 1);
                    }
                }
                return expanded;
            }
            Json out = Json::object();
            for (const auto& [k, v] : node.items())
                out[k] = expand(v, depth + 1);
            return out;
        }
        if (node.is_array()) {
            Json out = Json::array();
            for (const auto& v : node)
                out.push_back(expand(v, depth + 1));
            return out;
        }
        return node;
    }

private:
    const Json* lookup(const std::string& ref) const {
        try {
            const Json::json_pointer ptr(ref.substr(1));
            if (!root_.contains(ptr))
                return nullptr;
            return &root_.at(ptr);
        } catch (const Json::parse_error&) {
            return nullptr;
        }
    }

    const Json& root_;
    const ParseOptions& opts_;
    std::set<std::string> active_;
};

ValueType type_from_string(const std::string& s) {
    if (s == "integer")
        return ValueType::Integer;
    if (s == "number")
        return ValueType::Number;
    if (s == "boolean")
        return ValueType::Boolean;
    if (s == "array")
        return ValueType::Array;
    if (s == "object")
        return ValueType::Object;
    return ValueType::String;
}

std::string scalar_to_string(const Json& v) {
    if (v.is_string())
        return v.get<std::string>();
    return v.dump();
}

std::shared_ptr<Schema> build_schema(const Json& node, int depth) {
    auto schema = std::make_shared<Schema>();
    if (!node.is_object() || depth <= 0)
        return schema;
    if (node.contains("type") && node["type"].is_string())
        schema->type = type_from_string(node["type"].get<std::string>());
    else if (node.contains("properties"))
        schema->type = ValueType::Object;
    else if (node.contains("items"))
        schema->type = ValueType::Array;
    if (node.contains("minimum") && node["minimum"].is_number())
        schema->constraints.minimum = node["minimum"].get<double>();
    if (node.contains("maximum") && node["maximum"].is_number())
        schema->constraints.maximum = node["maximum"].get<double>();
    if (node.contains("pattern") && node["pattern"].is_string())
        schema->constraints.pattern = node["pattern"].get<std::string>();
    if (node.contains("format") && node["format"].is_string())
        schema->constraints.format = node["format"].get<std::string>();
    if (node.contains("properties") && node["properties"].is_object()) {
        for (const auto& [name, prop] : node["properties"].items())
            schema->properties[name] = build_schema(prop, depth - 1);
    }
    if (node.contains("items") && node["items"].is_object())
        schema->items = build_schema(node["items"], depth - 1);
    return schema;
}

void fill_from_schema(Parameter& param, const Json& schema_node) {
    if (!schema_node.is_object())
        return;
    if (schema_node.contains("type") && schema_node["type"].is_string())
        param.type = type_from_string(schema_node["type"].get<std::string>());
    if (schema_node.contains("enum") && schema_node["enum"].is_array()) {
        std::vector<std::string> values;
        for (const auto& v : schema_node["enum"])
            values.push_back(scalar_to_string(v));
        if (!values.empty())
            param.enum_values = std::move(values);
    }
    if (schema_node.contains("example"))
        param.example = scalar_to_string(schema_node["example"]);
    if (schema_node.contains("default"))
        param.default_value = scalar_to_string(schema_node["default"]);
    param.schema = build_schema(schema_node, 16);
}

Parameter parse_parameter(const Json& node) {
    Parameter param;
    if (node.contains("name") && node["name"].is_string())
        param.name = node["name"].get<std::string>();
    std::string loc = node.value("in", "query");
    if (loc == "path")
        param.location = ParamLocation::Path;
    else if (loc == "header")
        param.location = ParamLocation::Header;
    else
        param.location = ParamLocation::Query;
    param.required = node.value("required", false);
    if (param.location == ParamLocation::Path)
        param.required = true;
    param.description = node.value("description", "");
    if (node.contains("schema"))
        fill_from_schema(param, node["schema"]);
    if (node.contains("example") && !param.example)
        param.example = scalar_to_string(node["example"]);
    return param;
}

// Flattens the top level of a JSON request body into one parameter per field.
void append_body_parameters(Operation& op, const Json& body_node) {
    if (!body_node.is_object() || !body_node.contains("content"))
        return;
    const Json& content = body_node["content"];
    if (!content.is_object())
        return;
    const Json* media = nullptr;
    for (const auto& [mime, node] : content.items()) {
        if (mime.find("json") != std::string::npos) {
            media = &node;
            break;
        }
    }
    if (!media && !content.empty())
        media = &content.begin().value();
    if (!media || !media->is_object() || !media->contains("schema"))
        return;
    const Json& schema = (*media)["schema"];
    op.request_body_schema = build_schema(schema, 16);
    if (!schema.is_object() || !schema.contains("properties"))
        return;
    std::set<std::string> required_fields;
    bool body_required = body_node.value("required", false);
    if (schema.contains("required") && schema["required"].is_array()) {
        for (const auto& r : schema["required"])
            if (r.is_string())
                required_fields.insert(r.get<std::string>());
    }
    for (const auto& [field, field_schema] : schema["properties"].items()) {
        Parameter param;
        param.name = field;
        param.location = ParamLocation::BodyField;
        param.required = body_required && required_fields.count(field) > 0;
        if (field_schema.is_object())
            param.description = field_schema.value("description", "");
        fill_from_schema(param, field_schema);
        op.parameters.push_back(std::move(param));
    }
}

void merge_parameters(std::vector<Parameter>& into, std::vector<Parameter> overrides) {
    for (auto& p : overrides) {
        auto it = std::find_if(into.begin(), into.end(), [&](const Parameter& existing) {
            return existing.name == p.name && existing.location == p.location;
        });
        if (it != into.end())
            *it = std::move(p);
        else
            into.push_back(std::move(p));
    }
}

} // namespace

std::string to_string(ParamLocation loc) {
    switch (loc) {
    case ParamLocation::Query:
        return "query";
    case ParamLocation::Path:
        return "path";
    case ParamLocation::Header:
        return "header";
    case ParamLocation::BodyField:
        return "body";
    }
    return "query";
}

std::string to_string(ValueType type) {
    switch (type) {
    case ValueType::String:
        return "string";
    case ValueType::Integer:
        return "integer";
    case ValueType::Number:
        return "number";
    case ValueType::Boolean:
        return "boolean";
    case ValueType::Array:
        return "array";
    case ValueType::Object:
        return "object";
    }
    return "string";
}

const Parameter* Operation::find_parameter(const std::string& name) const {
    for (const auto& p : parameters)
        if (p.name == name)
            return &p;
    return nullptr;
}

const Operation* ApiModel::find_operation(const std::string& id) const {
    for (const auto& op : operations)
        if (op.id == id)
            return &op;
    return nullptr;
}

std::vector<std::string> path_placeholders(const std::string& path_template) {
    std::vector<std::string> names;
    std::size_t i = 0;
    while (i < path_template.size()) {
        if (path_template[i] == '{') {
            std::size_t close = path_template.find('}', i + 1);
            if (close == std::string::npos)
                break;
            names.push_back(path_template.substr(i + 1, close - i - 1));
            i = close + 1;
        } else {
            ++i;
        }
    }
    return names;
}

Json resolve_refs(const Json& document, const ParseOptions& opts) {
    RefResolver resolver(document, opts);
    return resolver.expand(document, 0);
}

ApiModel parse_spec(const std::string& document, const ParseOptions& opts) {
    Json raw = parse_document(document, opts.format);
    if (!raw.is_object())
        throw MalformedDocument("top-level document must be an object");
    if (!raw.contains("openapi")) {
        if (raw.contains("swagger"))
            throw UnsupportedVersion("Swagger 2.0 documents are not supported");
        throw MalformedDocument("missing openapi version field");
    }
    if (!raw["openapi"].is_string())
        throw MalformedDocument("openapi version must be a string");
    const std::string version = raw["openapi"].get<std::string>();
    if (version.rfind("3.", 0) != 0)
        throw UnsupportedVersion("unsupported OpenAPI version: " + version);

    Json doc = resolve_refs(raw, opts);

    ApiModel model;
    if (doc.contains("info") && doc["info"].is_object())
        model.title = doc["info"].value("title", "");
    if (!opts.base_url_override.empty()) {
        model.base_url = opts.base_url_override;
    } else if (doc.contains("servers") && doc["servers"].is_array() && !doc["servers"].empty()) {
        const Json& first = doc["servers"][0];
        if (first.is_object())
            model.base_url = first.value("url", "");
    }

    if (!doc.contains("paths") || !doc["paths"].is_object())
        return model;

    static const char* methods[] = {"get", "put", "post", "delete", "options", "head", "patch",
                                    "trace"};
    for (const auto& [path, path_item] : doc["paths"].items()) {
        if (!path_item.is_object())
            continue;
        std::vector<Parameter> shared;
        if (path_item.contains("parameters") && path_item["parameters"].is_array()) {
            for (const auto& p : path_item["parameters"])
                if (p.is_object())
                    shared.push_back(parse_parameter(p));
        }
        for (const char* method : methods) {
            if (!path_item.contains(method))
                continue;
            const Json& op_node = path_item[method];
            if (!op_node.is_object())
                continue;
            Operation op;
            op.method = method;
            std::transform(op.method.begin(), op.method.end(), op.method.begin(),
                           [](unsigned char c) { return std::toupper(c); });
            op.path = path;
            op.id = op_node.value("operationId", "");
            if (op.id.empty())
                op.id = op.method + " " + path;
            op.parameters = shared;
            std::vector<Parameter> own;
            if (op_node.contains("parameters") && op_node["parameters"].is_array()) {
                for (const auto& p : op_node["parameters"])
                    if (p.is_object())
                        own.push_back(parse_parameter(p));
            }
            merge_parameters(op.parameters, std::move(own));
            if (op_node.contains("requestBody"))
                append_body_parameters(op, op_node["requestBody"]);
            for (const auto& placeholder : path_placeholders(op.path)) {
                if (!op.find_parameter(placeholder)) {
                    Parameter synthesized;
                    synthesized.name = placeholder;
                    synthesized.location = ParamLocation::Path;
                    synthesized.required = true;
                    op.parameters.push_back(std::move(synthesized));
                }
            }
            model.operations.push_back(std::move(op));
        }
    }
    return model;
}

} // namespace restq
