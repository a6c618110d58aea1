#include "restq/dataset_builder.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "restq/error.hpp"
#include "restq/ipd_rules.hpp"

namespace fs = std::filesystem;

namespace restq {

namespace {

constexpr const char* kEos = "</s>";

std::string flatten(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (c == '\r') {
            if (i + 1 < text.size() && text[i + 1] == '\n')
                continue; // the \n becomes the space
            out += ' ';
            continue;
        }
        if (c == '\n') {
            out += ' ';
            continue;
        }
        out += c;
    }
    return out;
}

std::string enum_answer(const std::vector<std::string>& values) {
    std::string out = "[";
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i)
            out += ", ";
        out += "'" + values[i] + "'";
    }
    out += "]";
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot read file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

bool is_excluded(const fs::path& path, const std::string& title,
                 const std::vector<std::string>& exclusions) {
    for (const auto& entry : exclusions) {
        if (entry.empty())
            continue;
        if (path.filename().string() == entry || path.stem().string() == entry ||
            title == entry)
            return true;
    }
    return false;
}

} // namespace

std::string render_record(const TrainingRecord& record) {
    LmTask task{record.kind, flatten(record.param_name), flatten(record.description)};
    return build_prompt(task) + " " + record.answer + kEos;
}

bool parse_rendered(const std::string& line, TrainingRecord& out) {
    constexpr const char* kPrefix = "<s>[INST] ";
    constexpr const char* kIpdInstruction =
        "Find Inter-Parameter Dependency for the parameter below";
    constexpr const char* kExInstruction =
        "Find example values for the parameter below in a list format";

    if (line.rfind(kPrefix, 0) != 0)
        return false;
    std::string rest = line.substr(std::string(kPrefix).size());
    if (rest.rfind(kIpdInstruction, 0) == 0) {
        out.kind = LmTaskKind::Ipd;
        rest = rest.substr(std::string(kIpdInstruction).size());
    } else if (rest.rfind(kExInstruction, 0) == 0) {
        out.kind = LmTaskKind::Ex;
        rest = rest.substr(std::string(kExInstruction).size());
    } else {
        return false;
    }
    constexpr const char* kName = "\nname: ";
    constexpr const char* kDesc = "\ndescription: ";
    constexpr const char* kClose = " [/INST] ";
    if (rest.rfind(kName, 0) != 0)
        return false;
    rest = rest.substr(std::string(kName).size());
    std::size_t desc_at = rest.find(kDesc);
    if (desc_at == std::string::npos)
        return false;
    out.param_name = rest.substr(0, desc_at);
    rest = rest.substr(desc_at + std::string(kDesc).size());
    std::size_t close_at = rest.find(kClose);
    if (close_at == std::string::npos)
        return false;
    out.description = rest.substr(0, close_at);
    rest = rest.substr(close_at + std::string(kClose).size());
    const std::string eos = kEos;
    if (rest.size() < eos.size() || rest.compare(rest.size() - eos.size(), eos.size(), eos) != 0)
        return false;
    out.answer = rest.substr(0, rest.size() - eos.size());
    return true;
}

Json record_to_json(const TrainingRecord& record) {
    return Json{{"kind", to_string(record.kind)},
                {"param_name", record.param_name},
                {"description", record.description},
                {"answer", record.answer},
                {"rendered", render_record(record)},
                {"source", record.source},
                {"param_path", record.param_path}};
}

TrainingRecord record_from_json(const Json& node) {
    TrainingRecord record;
    record.kind = node.value("kind", "ex") == "ipd" ? LmTaskKind::Ipd : LmTaskKind::Ex;
    record.param_name = node.value("param_name", "");
    record.description = node.value("description", "");
    record.answer = node.value("answer", "");
    record.source = node.value("source", "");
    record.param_path = node.value("param_path", "");
    return record;
}

std::vector<TrainingRecord> mine_ex_records(const std::string& spec_dir,
                                            const std::vector<std::string>& exclusions,
                                            std::vector<std::string>* skipped) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(spec_dir)) {
        if (!entry.is_regular_file())
            continue;
        std::string ext = entry.path().extension().string();
        if (ext == ".json" || ext == ".yaml" || ext == ".yml")
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    std::vector<TrainingRecord> records;
    for (const auto& path : files) {
        ApiModel model;
        try {
            model = parse_spec(read_file(path.string()));
        } catch (const Error& e) {
            if (skipped)
                skipped->push_back(path.string() + ": " + e.what());
            continue;
        }
        if (is_excluded(path, model.title, exclusions))
            continue;
        std::vector<TrainingRecord> from_file;
        for (const auto& op : model.operations) {
            for (const auto& param : op.parameters) {
                if (!param.enum_values || param.enum_values->empty())
                    continue;
                TrainingRecord record;
                record.kind = LmTaskKind::Ex;
                record.param_name = param.name;
                record.description = flatten(param.description);
                record.answer = enum_answer(*param.enum_values);
                record.source = path.string();
                record.param_path = op.id + "/" + param.name;
                from_file.push_back(std::move(record));
            }
        }
        std::sort(from_file.begin(), from_file.end(),
                  [](const TrainingRecord& a, const TrainingRecord& b) {
                      return a.param_path < b.param_path;
                  });
        records.insert(records.end(), from_file.begin(), from_file.end());
    }
    return records;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t i = 0;
    auto end_field = [&] {
        row.push_back(field);
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        if (!row.empty() || field_started || !field.empty()) {
            end_field();
            rows.push_back(row);
            row.clear();
        }
    };
    while (i < text.size()) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    i += 2;
                    continue;
                }
                in_quotes = false;
                ++i;
                continue;
            }
            field += c;
            ++i;
            continue;
        }
        if (c == '"' && field.empty()) {
            in_quotes = true;
            field_started = true;
            ++i;
            continue;
        }
        if (c == ',') {
            end_field();
            field_started = true; // next field exists even if empty
            ++i;
            continue;
        }
        if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n')
                ++i;
            end_row();
            ++i;
            continue;
        }
        field += c;
        ++i;
    }
    end_row();
    return rows;
}

std::vector<TrainingRecord> load_csv_records(const std::string& csv_path, LmTaskKind kind) {
    auto rows = parse_csv(read_file(csv_path));
    std::vector<TrainingRecord> records;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.size() < 3)
            continue;
        if (i == 0 && row[0] == "param" && row[1] == "description" &&
            (row[2] == "rule" || row[2] == "answer"))
            continue;
        TrainingRecord record;
        record.kind = kind;
        record.param_name = row[0];
        record.description = flatten(row[1]);
        record.answer = flatten(row[2]);
        record.source = csv_path;
        record.param_path = row[0];
        records.push_back(std::move(record));
    }
    return records;
}

std::vector<LintFinding> lint_ipd_records(
    const std::vector<TrainingRecord>& records,
    const std::map<std::string, std::set<std::string>>* known_params) {
    std::vector<LintFinding> findings;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& record = records[i];
        if (record.kind != LmTaskKind::Ipd)
            continue;
        ParseResult parsed = parse_rules(record.answer, record.param_name);
        for (const auto& diagnostic : parsed.diagnostics)
            findings.push_back({i, "unparseable", diagnostic.segment + ": " + diagnostic.message});
        if (parsed.rules.empty())
            continue;

        std::set<std::string> referenced;
        for (const auto& rule : parsed.rules) {
            for (const auto& ref : rule.params)
                referenced.insert(ref.name);
            if (rule.kind == RuleKind::Conditional) {
                referenced.insert(rule.antecedent.param.name);
                referenced.insert(rule.consequent.param.name);
            }
        }
        if (!referenced.count(record.param_name))
            findings.push_back({i, "unrelated_param",
                                "no rule references the record's parameter '" +
                                    record.param_name + "'"});
        if (known_params) {
            std::string op_key = record.param_path;
            std::size_t slash = op_key.find('/');
            if (slash != std::string::npos)
                op_key = op_key.substr(0, slash);
            auto universe = known_params->find(op_key);
            if (universe == known_params->end())
                universe = known_params->find(record.source);
            if (universe != known_params->end()) {
                for (const auto& name : referenced)
                    if (!universe->second.count(name))
                        findings.push_back({i, "unknown_param",
                                            "rule references '" + name +
                                                "' which the operation does not define"});
            }
        }

        // Requires(A,B) followed by Requires(B,C) often denotes AllOrNone.
        for (const auto& a : parsed.rules) {
            if (a.kind != RuleKind::Requires)
                continue;
            for (const auto& b : parsed.rules) {
                if (&a == &b || b.kind != RuleKind::Requires)
                    continue;
                if (a.params[1].name == b.params[0].name) {
                    findings.push_back({i, "chained_requires",
                                        serialize(a) + " and " + serialize(b) +
                                            " may denote AllOrNone(" + a.params[0].name + "," +
                                            a.params[1].name + "," + b.params[1].name + ")"});
                }
            }
        }
    }
    return findings;
}

std::vector<std::string> exclusion_list_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw Error("cannot read exclusion file: " + path);
    std::vector<std::string> entries;
    std::string line;
    while (std::getline(in, line)) {
        std::size_t a = line.find_first_not_of(" \t\r");
        if (a == std::string::npos)
            continue;
        std::size_t b = line.find_last_not_of(" \t\r");
        std::string entry = line.substr(a, b - a + 1);
        if (!entry.empty() && entry[0] != '#')
            entries.push_back(entry);
    }
    return entries;
}

} // namespace restq
