#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "restq/lm_backend.hpp"
#include "restq/spec_model.hpp"

namespace restq {

struct TrainingRecord {
    LmTaskKind kind = LmTaskKind::Ex;
    std::string param_name;
    std::string description; // single line; newlines flattened to spaces
    std::string answer;      // bracket list (EX) or rule text (IPD)
    std::string source;      // spec path or input file
    std::string param_path;  // operation-id/parameter-name
};

// prompt + " " + answer + end-of-sequence marker.
std::string render_record(const TrainingRecord& record);

// Inverse of render_record; returns false when line does not fit the shape.
bool parse_rendered(const std::string& line, TrainingRecord& out);

Json record_to_json(const TrainingRecord& record);
TrainingRecord record_from_json(const Json& node);

// Scans a directory of OpenAPI documents (.json/.yaml/.yml, sorted by path)
// and emits one EX record per enum-carrying parameter. Exclusion entries
// match a file name, file stem, or document title. Unparseable documents are
// appended to skipped and ignored.
std::vector<TrainingRecord> mine_ex_records(const std::string& spec_dir,
                                            const std::vector<std::string>& exclusions,
                                            std::vector<std::string>* skipped = nullptr);

// Reads (param, description, rule-or-list) rows; a leading header row named
// param/description/answer or param/description/rule is skipped.
std::vector<TrainingRecord> load_csv_records(const std::string& csv_path, LmTaskKind kind);

// Minimal CSV reader: quoted fields, escaped quotes, embedded separators and
// newlines.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

struct LintFinding {
    std::size_t record_index = 0;
    std::string flag; // unparseable | unknown_param | unrelated_param | chained_requires
    std::string detail;
};

// Checks IPD answers: parse cleanly, reference the record's parameter, stay
// within known parameter names when a universe is supplied, and avoid
// Requires chains that look like an AllOrNone in disguise.
std::vector<LintFinding> lint_ipd_records(
    const std::vector<TrainingRecord>& records,
    const std::map<std::string, std::set<std::string>>* known_params = nullptr);

std::vector<std::string> exclusion_list_from_file(const std::string& path);

} // namespace restq
