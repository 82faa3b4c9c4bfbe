#pragma once

#include <optional>
#include <string>
#include <vector>

#include "deepalign/corpus.hpp"

namespace deepalign {

// Gap marker used in alignment files.
inline const std::string kGapSymbol = ">>";

// One column of an alignment: log side and model side, each an activity or a
// gap. Never both gaps.
struct AlignmentPair {
    std::optional<std::string> log;
    std::optional<std::string> model;

    bool is_sync() const { return log.has_value() && model.has_value(); }
    bool is_log_move() const { return log.has_value() && !model.has_value(); }
    bool is_model_move() const { return !log.has_value() && model.has_value(); }

    bool operator==(const AlignmentPair&) const = default;
};

using Alignment = std::vector<AlignmentPair>;

std::vector<std::string> log_projection(const Alignment& a);
std::vector<std::string> model_projection(const Alignment& a);
int empty_move_count(const Alignment& a);

// Search edit applied to the working case. Positions index the case as it
// was when the operation ran.
struct AlignmentOp {
    enum class Kind { sync, insert, del };
    Kind kind = Kind::sync;
    int position = 0;  // insert: events before the new one; del: first removed index
    int run = 0;       // del only
    Event event;       // insert only
};

// Per-case record of the alignment output file.
struct AlignmentRecord {
    std::string id;
    double score = 0.0;
    Alignment alignment;
    std::vector<std::string> corrected;
    bool converged = false;
    int iterations = 0;
};

void write_alignments(const std::vector<AlignmentRecord>& records, const std::string& path);
std::vector<AlignmentRecord> read_alignments(const std::string& path);

}  // namespace deepalign
