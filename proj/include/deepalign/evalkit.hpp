#pragma once

#include <map>
#include <string>
#include <vector>

#include "deepalign/alignment.hpp"
#include "deepalign/corpus.hpp"

namespace deepalign {

// Unit-cost edit distance between two activity sequences.
int levenshtein(const std::vector<std::string>& a, const std::vector<std::string>& b);

// Minimal number of gap moves in any alignment of the two sequences (sync
// moves are free, substitution is not a move).
int optimal_empty_moves(const std::vector<std::string>& log_seq,
                        const std::vector<std::string>& model_seq);

// Optimal alignment of a case against the best-matching variant, ties broken
// by lexicographically smaller variant. Throws on an empty variant set.
Alignment reference_align(const std::vector<std::string>& case_activities,
                          const std::vector<std::vector<std::string>>& variants);

struct KindStats {
    int count = 0;
    int detected = 0;   // predicted anomalous
    int corrected = 0;  // exactly equal to ground truth
    double mean_error_incorrect = 0.0;
};

struct EvaluationReport {
    std::size_t n_cases = 0;
    // true label -> (predicted normal, predicted anomalous)
    std::map<std::string, std::pair<int, int>> confusion;
    double f1_normal = 0.0;
    double f1_anomalous = 0.0;
    double f1_macro = 0.0;
    double correction_accuracy = 0.0;
    double mean_levenshtein_incorrect = 0.0;
    bool has_incorrect = false;
    double optimality_rate = 0.0;
    bool has_correct = false;
    std::map<std::string, KindStats> per_kind;
    std::string config_echo;
};

// Scores top-1 corrections against the labeled ground truth, matched by case
// id. A case counts as detected when its alignment has at least one empty
// move, and as corrected when the model-side sequence equals the truth.
EvaluationReport evaluate(const std::vector<AlignmentRecord>& corrections,
                          const EventLog& ground_truth);

std::string report_to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const std::string& text);
// Aligned-column text table (F1 per class, macro F1, error, optimality).
std::string report_table(const EvaluationReport& report, const std::string& row_label);

}  // namespace deepalign
