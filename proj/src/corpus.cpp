#include "deepalign/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace deepalign {

namespace {

const std::string kReservedNames[kNumReservedIds] = {"<pad>", "<bos>", "<eos>"};

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

}  // namespace

Vocabulary Vocabulary::from_values(std::vector<std::string> values) {
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    Vocabulary v;
    for (auto& s : values) {
        for (const auto& reserved : kReservedNames) {
            if (s == reserved) fail("vocabulary value collides with reserved symbol: " + s);
        }
        v.index_[s] = kNumReservedIds + static_cast<int>(v.values_.size());
        v.values_.push_back(std::move(s));
    }
    return v;
}

bool Vocabulary::contains(const std::string& value) const {
    return index_.find(value) != index_.end();
}

int Vocabulary::encode(const std::string& value) const {
    auto it = index_.find(value);
    if (it == index_.end()) throw std::out_of_range("value not in vocabulary: " + value);
    return it->second;
}

const std::string& Vocabulary::decode(int id) const {
    if (id >= 0 && id < kNumReservedIds) return kReservedNames[id];
    int k = id - kNumReservedIds;
    if (k < 0 || k >= static_cast<int>(values_.size()))
        throw std::out_of_range("id not in vocabulary: " + std::to_string(id));
    return values_[static_cast<std::size_t>(k)];
}

const Vocabulary& AttributeSchema::case_vocab(const std::string& name) const {
    for (const auto& [n, v] : case_attributes)
        if (n == name) return v;
    fail("unknown case attribute: " + name);
}

const Vocabulary& AttributeSchema::event_vocab(const std::string& name) const {
    for (const auto& [n, v] : event_attributes)
        if (n == name) return v;
    fail("unknown event attribute: " + name);
}

std::string AttributeSchema::to_json() const {
    nlohmann::ordered_json j;
    j["activities"] = activity_vocabulary.values();
    auto dump_attrs = [](const std::vector<std::pair<std::string, Vocabulary>>& attrs) {
        nlohmann::ordered_json out = nlohmann::ordered_json::array();
        for (const auto& [name, vocab] : attrs)
            out.push_back({{"name", name}, {"values", vocab.values()}});
        return out;
    };
    j["case_attributes"] = dump_attrs(case_attributes);
    j["event_attributes"] = dump_attrs(event_attributes);
    return j.dump();
}

AttributeSchema AttributeSchema::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    AttributeSchema s;
    s.activity_vocabulary = Vocabulary::from_values(j.at("activities").get<std::vector<std::string>>());
    auto load_attrs = [](const nlohmann::json& arr) {
        std::vector<std::pair<std::string, Vocabulary>> out;
        for (const auto& e : arr)
            out.emplace_back(e.at("name").get<std::string>(),
                             Vocabulary::from_values(e.at("values").get<std::vector<std::string>>()));
        return out;
    };
    s.case_attributes = load_attrs(j.at("case_attributes"));
    s.event_attributes = load_attrs(j.at("event_attributes"));
    return s;
}

std::uint64_t AttributeSchema::fingerprint() const {
    // FNV-1a over the canonical JSON form.
    std::string text = to_json();
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::vector<std::string> Case::activities() const {
    std::vector<std::string> out;
    out.reserve(events.size());
    for (const auto& e : events) out.push_back(e.activity);
    return out;
}

AttributeSchema build_schema(const std::vector<Case>& cases) {
    if (cases.empty()) fail("empty corpus");

    std::set<std::string> activities;
    std::map<std::string, std::set<std::string>> case_values;
    std::map<std::string, std::set<std::string>> event_values;

    const Case& first = cases.front();
    std::set<std::string> case_names, event_names;
    for (const auto& [name, _] : first.case_attributes) case_names.insert(name);
    for (const auto& c : cases) {
        std::set<std::string> names;
        for (const auto& [name, value] : c.case_attributes) {
            names.insert(name);
            case_values[name].insert(value);
        }
        if (names != case_names)
            fail("case " + c.id + ": case attribute names differ from the rest of the log");
        for (const auto& e : c.events) {
            activities.insert(e.activity);
            for (const auto& [name, value] : e.attributes) event_values[name].insert(value);
        }
    }
    // Event attribute names must agree across every event of every case.
    if (!event_values.empty()) {
        for (const auto& [name, _] : event_values) event_names.insert(name);
        for (const auto& c : cases)
            for (const auto& e : c.events) {
                std::set<std::string> names;
                for (const auto& [name, _] : e.attributes) names.insert(name);
                if (names != event_names)
                    fail("case " + c.id + ": event attribute names differ from the rest of the log");
            }
    }

    AttributeSchema schema;
    schema.activity_vocabulary =
        Vocabulary::from_values({activities.begin(), activities.end()});
    for (const auto& [name, values] : case_values)
        schema.case_attributes.emplace_back(
            name, Vocabulary::from_values({values.begin(), values.end()}));
    for (const auto& [name, values] : event_values)
        schema.event_attributes.emplace_back(
            name, Vocabulary::from_values({values.begin(), values.end()}));
    return schema;
}

AttributeSchema build_schema(const EventLog& raw) { return build_schema(raw.cases); }

EncodedCase encode_case(const AttributeSchema& schema, const Case& c, Direction direction) {
    const std::size_t width = 1 + schema.event_attributes.size();

    EncodedCase enc;
    enc.case_attr_ids.reserve(schema.case_attributes.size());
    for (const auto& [name, vocab] : schema.case_attributes) {
        auto it = c.case_attributes.find(name);
        if (it == c.case_attributes.end())
            fail("case " + c.id + ": missing case attribute " + name);
        if (!vocab.contains(it->second))
            fail("case attribute " + name + ": value not in vocabulary: " + it->second);
        enc.case_attr_ids.push_back(vocab.encode(it->second));
    }

    std::vector<std::vector<int>> interior;
    interior.reserve(c.events.size());
    for (const auto& e : c.events) {
        std::vector<int> step(width);
        if (!schema.activity_vocabulary.contains(e.activity))
            fail("activity: value not in vocabulary: " + e.activity);
        step[0] = schema.activity_vocabulary.encode(e.activity);
        std::size_t k = 1;
        for (const auto& [name, vocab] : schema.event_attributes) {
            auto it = e.attributes.find(name);
            if (it == e.attributes.end())
                fail("case " + c.id + ": missing event attribute " + name);
            if (!vocab.contains(it->second))
                fail("event attribute " + name + ": value not in vocabulary: " + it->second);
            step[k++] = vocab.encode(it->second);
        }
        interior.push_back(std::move(step));
    }
    if (direction == Direction::backward)
        std::reverse(interior.begin(), interior.end());

    enc.steps.reserve(interior.size() + 2);
    enc.steps.emplace_back(width, kBosId);
    for (auto& s : interior) enc.steps.push_back(std::move(s));
    enc.steps.emplace_back(width, kEosId);
    return enc;
}

std::vector<std::string> decode_sequence(const AttributeSchema& schema,
                                         const std::vector<int>& activity_ids) {
    std::vector<std::string> out;
    for (int id : activity_ids) {
        if (id == kPadId || id == kBosId || id == kEosId) continue;
        out.push_back(schema.activity_vocabulary.decode(id));
    }
    return out;
}

EventLog read_log(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open log file: " + path);

    EventLog log;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            fail(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        try {
            Case c;
            c.id = j.at("id").get<std::string>();
            if (j.contains("case_attrs"))
                for (const auto& [k, v] : j.at("case_attrs").items())
                    c.case_attributes[k] = v.get<std::string>();
            if (!j.contains("events"))
                fail("missing \"events\" key");
            for (const auto& je : j.at("events")) {
                Event e;
                e.activity = je.at("activity").get<std::string>();
                if (je.contains("attrs"))
                    for (const auto& [k, v] : je.at("attrs").items())
                        e.attributes[k] = v.get<std::string>();
                c.events.push_back(std::move(e));
            }
            if (j.contains("label")) c.label = j.at("label").get<std::string>();
            log.cases.push_back(std::move(c));
        } catch (const std::exception& e) {
            fail(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (!log.cases.empty()) log.schema = build_schema(log.cases);
    return log;
}

void write_log(const EventLog& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("cannot open file for writing: " + path);
    for (const auto& c : log.cases) {
        nlohmann::ordered_json j;
        j["id"] = c.id;
        j["case_attrs"] = nlohmann::ordered_json::object();
        for (const auto& [k, v] : c.case_attributes) j["case_attrs"][k] = v;
        j["events"] = nlohmann::ordered_json::array();
        for (const auto& e : c.events) {
            nlohmann::ordered_json je;
            je["activity"] = e.activity;
            je["attrs"] = nlohmann::ordered_json::object();
            for (const auto& [k, v] : e.attributes) je["attrs"][k] = v;
            j["events"].push_back(std::move(je));
        }
        if (!c.label.empty()) j["label"] = c.label;
        out << j.dump() << "\n";
    }
    if (!out) fail("write failed: " + path);
}

}  // namespace deepalign
