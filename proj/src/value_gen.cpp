#include "restq/value_gen.hpp"

#include <algorithm>
#include <cstdio>

#include "restq/error.hpp"

namespace restq {

namespace {

// --- pattern subset generator -------------------------------------------

struct PatternNode {
    enum class Type { Literal, Class, Seq, Alt, Rep };
    Type type = Type::Literal;
    char literal = 0;
    std::string charset;
    std::vector<PatternNode> children;
    int rep_min = 0;
    int rep_max = 0;
};

class PatternParser {
public:
    explicit PatternParser(const std::string& pattern) : s_(pattern) {
        if (!s_.empty() && s_.front() == '^')
            ++i_;
        if (!s_.empty() && s_.back() == '$')
            end_ = s_.size() - 1;
        else
            end_ = s_.size();
    }

    PatternNode parse() {
        PatternNode node = parse_alternation();
        if (i_ != end_)
            fail();
        return node;
    }

private:
    [[noreturn]] void fail() { throw Error("unsupported pattern"); }

    bool done() const { return i_ >= end_; }
    char peek() const { return s_[i_]; }

    PatternNode parse_alternation() {
        PatternNode alt;
        alt.type = PatternNode::Type::Alt;
        alt.children.push_back(parse_concat());
        while (!done() && peek() == '|') {
            ++i_;
            alt.children.push_back(parse_concat());
        }
        if (alt.children.size() == 1)
            return alt.children.front();
        return alt;
    }

    PatternNode parse_concat() {
        PatternNode seq;
        seq.type = PatternNode::Type::Seq;
        while (!done() && peek() != '|' && peek() != ')')
            seq.children.push_back(parse_repeated());
        return seq;
    }

    PatternNode parse_repeated() {
        PatternNode atom = parse_atom();
        if (done())
            return atom;
        int lo = -1, hi = -1;
        char c = peek();
        if (c == '?') {
            lo = 0;
            hi = 1;
            ++i_;
        } else if (c == '*') {
            lo = 0;
            hi = 3;
            ++i_;
        } else if (c == '+') {
            lo = 1;
            hi = 3;
            ++i_;
        } else if (c == '{') {
            std::size_t close = s_.find('}', i_);
            if (close == std::string::npos || close >= end_)
                fail();
            std::string body = s_.substr(i_ + 1, close - i_ - 1);
            std::size_t comma = body.find(',');
            try {
                if (comma == std::string::npos) {
                    lo = hi = std::stoi(body);
                } else {
                    lo = std::stoi(body.substr(0, comma));
                    std::string rest = body.substr(comma + 1);
                    hi = rest.empty() ? lo + 3 : std::stoi(rest);
                }
            } catch (const std::exception&) {
                fail();
            }
            i_ = close + 1;
        } else {
            return atom;
        }
        PatternNode rep;
        rep.type = PatternNode::Type::Rep;
        rep.rep_min = lo;
        rep.rep_max = std::max(lo, hi);
        rep.children.push_back(std::move(atom));
        return rep;
    }

    PatternNode parse_atom() {
        if (done())
            fail();
        char c = s_[i_];
        if (c == '(') {
            ++i_;
            if (i_ + 1 < end_ && s_[i_] == '?' && s_[i_ + 1] == ':')
                i_ += 2;
            PatternNode inner = parse_alternation();
            if (done() || peek() != ')')
                fail();
            ++i_;
            return inner;
        }
        if (c == '[')
            return parse_class();
        if (c == '\\') {
            ++i_;
            if (done())
                fail();
            return escape_node(s_[i_++]);
        }
        if (c == '.') {
            ++i_;
            PatternNode node;
            node.type = PatternNode::Type::Class;
            node.charset = "abcdefghijklmnopqrstuvwxyz0123456789";
            return node;
        }
        if (c == '*' || c == '+' || c == '?' || c == '{' || c == ')' || c == ']')
            fail();
        ++i_;
        PatternNode node;
        node.type = PatternNode::Type::Literal;
        node.literal = c;
        return node;
    }

    PatternNode escape_node(char c) {
        PatternNode node;
        if (c == 'd') {
            node.type = PatternNode::Type::Class;
            node.charset = "0123456789";
        } else if (c == 'w') {
            node.type = PatternNode::Type::Class;
            node.charset = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_";
        } else if (c == 's') {
            node.type = PatternNode::Type::Literal;
            node.literal = ' ';
        } else {
            node.type = PatternNode::Type::Literal;
            node.literal = c;
        }
        return node;
    }

    PatternNode parse_class() {
        ++i_; // '['
        if (!done() && peek() == '^')
            fail(); // negated classes unsupported
        PatternNode node;
        node.type = PatternNode::Type::Class;
        while (!done() && peek() != ']') {
            char c = s_[i_];
            if (c == '\\') {
                ++i_;
                if (done())
                    fail();
                PatternNode esc = escape_node(s_[i_++]);
                if (esc.type == PatternNode::Type::Class)
                    node.charset += esc.charset;
                else
                    node.charset += esc.literal;
                continue;
            }
            if (i_ + 2 < end_ && s_[i_ + 1] == '-' && s_[i_ + 2] != ']') {
                char lo = c, hi = s_[i_ + 2];
                if (lo > hi)
                    fail();
                for (char x = lo; x <= hi; ++x)
                    node.charset += x;
                i_ += 3;
                continue;
            }
            node.charset += c;
            ++i_;
        }
        if (done() || peek() != ']')
            fail();
        ++i_;
        if (node.charset.empty())
            fail();
        return node;
    }

    const std::string& s_;
    std::size_t i_ = 0;
    std::size_t end_ = 0;
};

void generate_from_node(const PatternNode& node, Rng& rng, std::string& out) {
    switch (node.type) {
    case PatternNode::Type::Literal:
        out += node.literal;
        return;
    case PatternNode::Type::Class:
        out += rng.pick_char(node.charset);
        return;
    case PatternNode::Type::Seq:
        for (const auto& child : node.children)
            generate_from_node(child, rng, out);
        return;
    case PatternNode::Type::Alt:
        generate_from_node(node.children[rng.index(node.children.size())], rng, out);
        return;
    case PatternNode::Type::Rep: {
        auto n = rng.uniform_int(node.rep_min, node.rep_max);
        for (std::int64_t k = 0; k < n; ++k)
            generate_from_node(node.children.front(), rng, out);
        return;
    }
    }
}

std::string random_alnum(Rng& rng, std::size_t min_len, std::size_t max_len) {
    static const std::string alphabet = "abcdefghijklmnopqrstuvwxyz0123456789";
    auto len = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(min_len), static_cast<std::int64_t>(max_len)));
    std::string out;
    out.reserve(len);
    for (std::size_t i = 0; i < len; ++i)
        out += rng.pick_char(alphabet);
    return out;
}

std::string random_date(Rng& rng) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", static_cast<int>(rng.uniform_int(2000, 2024)),
                  static_cast<int>(rng.uniform_int(1, 12)), static_cast<int>(rng.uniform_int(1, 28)));
    return buf;
}

std::string random_date_time(Rng& rng) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "T%02d:%02d:%02dZ", static_cast<int>(rng.uniform_int(0, 23)),
                  static_cast<int>(rng.uniform_int(0, 59)), static_cast<int>(rng.uniform_int(0, 59)));
    return random_date(rng) + buf;
}

std::string random_uuid(Rng& rng) {
    static const std::string hex = "0123456789abcdef";
    std::string out;
    for (int group : {8, 4, 4, 4, 12}) {
        if (!out.empty())
            out += '-';
        for (int i = 0; i < group; ++i)
            out += rng.pick_char(hex);
    }
    out[14] = '4';
    out[19] = rng.pick_char("89ab");
    return out;
}

std::string random_string(const SchemaConstraints* constraints, const ValueGenConfig&, Rng& rng) {
    if (constraints) {
        if (constraints->format) {
            const std::string& fmt = *constraints->format;
            if (fmt == "date")
                return random_date(rng);
            if (fmt == "date-time")
                return random_date_time(rng);
            if (fmt == "uuid")
                return random_uuid(rng);
        }
        if (constraints->pattern) {
            try {
                PatternParser parser(*constraints->pattern);
                PatternNode root = parser.parse();
                std::string out;
                generate_from_node(root, rng, out);
                return out;
            } catch (const Error&) {
                // pattern outside the supported subset: plain string below
            }
        }
    }
    return random_alnum(rng, 1, 20);
}

Json random_from_schema(const Schema* schema, ValueType type, const ValueGenConfig& config,
                        Rng& rng, int depth) {
    switch (type) {
    case ValueType::Integer: {
        std::int64_t lo = config.int_min, hi = config.int_max;
        if (schema && schema->constraints.minimum)
            lo = static_cast<std::int64_t>(*schema->constraints.minimum);
        if (schema && schema->constraints.maximum)
            hi = static_cast<std::int64_t>(*schema->constraints.maximum);
        if (lo > hi)
            std::swap(lo, hi);
        return rng.uniform_int(lo, hi);
    }
    case ValueType::Number: {
        double lo = static_cast<double>(config.int_min);
        double hi = static_cast<double>(config.int_max);
        if (schema && schema->constraints.minimum)
            lo = *schema->constraints.minimum;
        if (schema && schema->constraints.maximum)
            hi = *schema->constraints.maximum;
        if (lo > hi)
            std::swap(lo, hi);
        return lo + rng.uniform() * (hi - lo);
    }
    case ValueType::Boolean:
        return rng.coin(0.5);
    case ValueType::Array: {
        Json arr = Json::array();
        if (depth <= 0)
            return arr;
        auto n = rng.uniform_int(1, 3);
        const Schema* items = schema && schema->items ? schema->items.get() : nullptr;
        ValueType item_type = items ? items->type : ValueType::String;
        for (std::int64_t i = 0; i < n; ++i)
            arr.push_back(random_from_schema(items, item_type, config, rng, depth - 1));
        return arr;
    }
    case ValueType::Object: {
        Json obj = Json::object();
        if (depth <= 0 || !schema)
            return obj;
        for (const auto& [name, prop] : schema->properties)
            obj[name] = random_from_schema(prop.get(), prop ? prop->type : ValueType::String,
                                           config, rng, depth - 1);
        return obj;
    }
    case ValueType::String:
        break;
    }
    return random_string(schema ? &schema->constraints : nullptr, config, rng);
}

// --- pool helpers --------------------------------------------------------

int source_rank(ValueSource source) {
    return static_cast<int>(source);
}

std::optional<Json> coerce(const std::string& text, ValueType type) {
    switch (type) {
    case ValueType::Integer: {
        try {
            std::size_t pos = 0;
            long long v = std::stoll(text, &pos);
            if (pos == text.size())
                return Json(v);
        } catch (const std::exception&) {
        }
        return std::nullopt;
    }
    case ValueType::Number: {
        try {
            std::size_t pos = 0;
            double v = std::stod(text, &pos);
            if (pos == text.size())
                return Json(v);
        } catch (const std::exception&) {
        }
        return std::nullopt;
    }
    case ValueType::Boolean:
        if (text == "true")
            return Json(true);
        if (text == "false")
            return Json(false);
        return std::nullopt;
    default:
        return Json(text);
    }
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

// "user_id" -> "user", "userId" -> "user"; empty stem when nothing remains.
std::string id_stem(const std::string& name) {
    std::string l = lower(name);
    if (l.size() > 3 && l.compare(l.size() - 3, 3, "_id") == 0)
        return l.substr(0, l.size() - 3);
    if (name.size() > 2 && name.compare(name.size() - 2, 2, "Id") == 0)
        return l.substr(0, l.size() - 2);
    return l;
}

bool is_id_like(const std::string& name) {
    std::string l = lower(name);
    if (l == "id")
        return true;
    if (l.size() > 3 && l.compare(l.size() - 3, 3, "_id") == 0)
        return true;
    if (name.size() > 2 && name.compare(name.size() - 2, 2, "Id") == 0)
        return true;
    return false;
}

bool name_matches(const std::string& param_name, const std::string& leaf_key) {
    if (leaf_key.empty())
        return false;
    std::string p = lower(param_name), k = lower(leaf_key);
    if (p == k)
        return true;
    std::string ps = id_stem(param_name), ks = id_stem(leaf_key);
    return !ps.empty() && !ks.empty() && ps == ks;
}

void collect_leaves(const Json& node, const std::string& key,
                    std::vector<std::pair<std::string, Json>>& out, std::size_t cap) {
    if (out.size() >= cap)
        return;
    if (node.is_object()) {
        for (const auto& [k, v] : node.items())
            collect_leaves(v, k, out, cap);
        return;
    }
    if (node.is_array()) {
        for (const auto& v : node)
            collect_leaves(v, key, out, cap);
        return;
    }
    if (node.is_null())
        return;
    if (out.size() < cap)
        out.emplace_back(key, node);
}

} // namespace

std::string to_string(ValueSource source) {
    switch (source) {
    case ValueSource::LmExample:
        return "lm_example";
    case ValueSource::SpecEnum:
        return "spec_enum";
    case ValueSource::SpecExample:
        return "spec_example";
    case ValueSource::SpecDefault:
        return "spec_default";
    case ValueSource::ResponseMutation:
        return "response_mutation";
    case ValueSource::Random:
        return "random";
    }
    return "random";
}

Json random_value(const Parameter& param, const ValueGenConfig& config, Rng& rng) {
    return random_from_schema(param.schema.get(), param.type, config, rng, 3);
}

bool ValuePool::insert(Slot& slot, Candidate candidate) {
    const std::string dump = candidate.value.dump();
    for (const auto& existing : slot.candidates) {
        if (existing.source == candidate.source && existing.value.dump() == dump)
            return false;
    }
    if (slot.candidates.size() >= config_.pool_cap) {
        int worst = source_rank(slot.candidates.back().source);
        if (source_rank(candidate.source) >= worst)
            return false;
        slot.candidates.pop_back();
    }
    auto pos = std::find_if(slot.candidates.begin(), slot.candidates.end(),
                            [&](const Candidate& c) {
                                return source_rank(c.source) > source_rank(candidate.source);
                            });
    slot.candidates.insert(pos, std::move(candidate));
    slot.cursor = 0;
    return true;
}

ValuePool::Slot& ValuePool::slot_for(const std::string& op_id, const std::string& param_name) {
    return slots_[{op_id, param_name}];
}

void ValuePool::seed_from_spec(const ApiModel& model) {
    for (const auto& op : model.operations) {
        for (const auto& param : op.parameters) {
            Slot& slot = slot_for(op.id, param.name);
            if (param.enum_values) {
                for (const auto& v : *param.enum_values)
                    if (auto coerced = coerce(v, param.type))
                        insert(slot, {*coerced, ValueSource::SpecEnum});
            }
            if (param.example)
                if (auto coerced = coerce(*param.example, param.type))
                    insert(slot, {*coerced, ValueSource::SpecExample});
            if (param.default_value)
                if (auto coerced = coerce(*param.default_value, param.type))
                    insert(slot, {*coerced, ValueSource::SpecDefault});
            slot.cursor = 0;
        }
    }
}

void ValuePool::enrich(const std::string& op_id, const std::string& param_name,
                       const std::vector<std::string>& lm_values, const Parameter* param) {
    if (lm_values.empty())
        return;
    Slot& slot = slot_for(op_id, param_name);
    ValueType type = param ? param->type : ValueType::String;
    for (const auto& text : lm_values)
        if (auto coerced = coerce(text, type))
            insert(slot, {*coerced, ValueSource::LmExample});
}

void ValuePool::harvest_response(const ApiModel& model, const Json& body) {
    if (!body.is_object() && !body.is_array())
        return;
    std::vector<std::pair<std::string, Json>> leaves;
    collect_leaves(body, "", leaves, config_.harvest_cap);
    for (const auto& op : model.operations) {
        for (const auto& param : op.parameters) {
            for (const auto& [key, value] : leaves) {
                bool sink = is_id_like(param.name) && value.is_string();
                if (!sink && !name_matches(param.name, key))
                    continue;
                insert(slot_for(op.id, param.name), {value, ValueSource::ResponseMutation});
            }
        }
    }
}

Json ValuePool::draw(const std::string& op_id, const Parameter& param, Rng& rng) {
    Slot& slot = slot_for(op_id, param.name);
    if (slot.cursor < slot.candidates.size()) {
        const Json& value = slot.candidates[slot.cursor].value;
        ++slot.cursor;
        return value;
    }
    Json fresh = random_value(param, config_, rng);
    insert(slot, {fresh, ValueSource::Random});
    slot.cursor = 0; // wrap whether or not the random was kept
    return fresh;
}

const std::vector<Candidate>& ValuePool::candidates(const std::string& op_id,
                                                    const std::string& param_name) const {
    static const std::vector<Candidate> empty;
    auto it = slots_.find({op_id, param_name});
    return it == slots_.end() ? empty : it->second.candidates;
}

std::string value_to_text(const Json& value) {
    if (value.is_string())
        return value.get<std::string>();
    if (value.is_array()) {
        std::string out;
        for (std::size_t i = 0; i < value.size(); ++i) {
            if (i)
                out += ",";
            out += value_to_text(value[i]);
        }
        return out;
    }
    return value.dump();
}

} // namespace restq
