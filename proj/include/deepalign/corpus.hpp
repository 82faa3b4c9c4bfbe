#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace deepalign {

// Reserved integer codes shared by every vocabulary. Real values start at 3.
enum : int { kPadId = 0, kBosId = 1, kEosId = 2 };
inline constexpr int kNumReservedIds = 3;

// Ordered set of categorical values with the three reserved slots in front.
class Vocabulary {
public:
    Vocabulary() = default;
    // Values are deduplicated and sorted; reserved display names are rejected.
    static Vocabulary from_values(std::vector<std::string> values);

    int size() const { return kNumReservedIds + static_cast<int>(values_.size()); }
    int num_real_values() const { return static_cast<int>(values_.size()); }

    bool contains(const std::string& value) const;
    // Id of a real value; throws std::out_of_range when absent.
    int encode(const std::string& value) const;
    // String for any id, including reserved ones; throws on invalid id.
    const std::string& decode(int id) const;

    const std::vector<std::string>& values() const { return values_; }

    bool operator==(const Vocabulary&) const = default;

private:
    std::vector<std::string> values_;           // real values, sorted
    std::map<std::string, int> index_;          // value -> id (>= 3)
};

struct AttributeSchema {
    std::vector<std::pair<std::string, Vocabulary>> case_attributes;
    std::vector<std::pair<std::string, Vocabulary>> event_attributes;
    Vocabulary activity_vocabulary;

    bool operator==(const AttributeSchema&) const = default;

    const Vocabulary& case_vocab(const std::string& name) const;
    const Vocabulary& event_vocab(const std::string& name) const;
    // Stable content hash; used to pair checkpoints with logs.
    std::uint64_t fingerprint() const;
    std::string to_json() const;
    static AttributeSchema from_json(const std::string& text);
};

struct Event {
    std::string activity;
    std::map<std::string, std::string> attributes;

    bool operator==(const Event&) const = default;
};

struct Case {
    std::string id;
    std::map<std::string, std::string> case_attributes;
    std::vector<Event> events;
    std::string label;  // empty = unlabeled; "normal" or an anomaly kind otherwise

    bool operator==(const Case&) const = default;
    std::vector<std::string> activities() const;
};

struct EventLog {
    AttributeSchema schema;
    std::vector<Case> cases;

    bool operator==(const EventLog&) const = default;
};

enum class Direction { forward, backward };

inline const char* to_string(Direction d) {
    return d == Direction::forward ? "forward" : "backward";
}

// Integer view of one case, framed as BOS ... EOS. steps[t] holds the
// activity id followed by one id per event attribute, in schema order.
struct EncodedCase {
    std::vector<int> case_attr_ids;
    std::vector<std::vector<int>> steps;

    std::size_t interior_length() const { return steps.size() - 2; }

    bool operator==(const EncodedCase&) const = default;
};

// Schema derived from the log itself: vocabularies hold every value seen,
// sorted, after the reserved slots. Throws on an empty log or on cases whose
// attribute names disagree.
AttributeSchema build_schema(const EventLog& raw);
AttributeSchema build_schema(const std::vector<Case>& cases);

EncodedCase encode_case(const AttributeSchema& schema, const Case& c, Direction direction);

// Activity strings for a framed id sequence, with PAD/BOS/EOS stripped.
std::vector<std::string> decode_sequence(const AttributeSchema& schema,
                                         const std::vector<int>& activity_ids);

// Line-oriented JSON log files; the schema of the result is rebuilt from the
// file contents. Errors carry 1-based line numbers.
EventLog read_log(const std::string& path);
void write_log(const EventLog& log, const std::string& path);

}  // namespace deepalign
