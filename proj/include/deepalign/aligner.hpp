#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "deepalign/alignment.hpp"
#include "deepalign/corpus.hpp"
#include "deepalign/neuralnet.hpp"

namespace deepalign {

struct SearchConfig {
    int beam_width = 5;        // K
    int max_deletion_run = 3;  // N
    int max_iterations = 10;
    bool control_flow_only = false;
};

// One search hypothesis: the working case plus everything needed to score
// edits without re-running unchanged segments.
struct Beam {
    struct Token {
        Event event;
        std::vector<int> ids;  // encoded step (activity + event attributes)
        bool from_input = true;
    };

    std::vector<Token> tokens;
    double score = 0.0;
    std::vector<AlignmentOp> history;
    int empty_moves = 0;

    // fwd_states[t]: forward state after BOS and the first t tokens.
    // bwd_states[j]: backward state after BOS and tokens T-1 ... j.
    // fwd_prefix_lp[t]: log P of the first t tokens under the forward model.
    // bwd_suffix_lp[j]: log P of tokens j ... T-1 under the backward model.
    std::vector<Eigen::VectorXd> fwd_states;
    std::vector<Eigen::VectorXd> bwd_states;
    std::vector<double> fwd_prefix_lp;
    std::vector<double> bwd_suffix_lp;
};

// log of the averaged case probability under both models.
double case_score(const NextEventModel& fwd, const NextEventModel& bwd, const Case& c,
                  bool control_flow_only = false);

// Beam over the unmodified case with freshly built state caches. The flag
// must match the one later passed to the scoring functions.
Beam init_beam(const NextEventModel& fwd, const NextEventModel& bwd, const Case& c,
               bool control_flow_only = false);

// Approximate log-probability of the case after inserting `event` behind the
// first t tokens / deleting the n tokens starting at index t.
double insertion_score(const NextEventModel& fwd, const NextEventModel& bwd, const Beam& beam,
                       const Event& event, int t, bool control_flow_only = false);
double deletion_score(const NextEventModel& fwd, const NextEventModel& bwd, const Beam& beam,
                      int n, int t, bool control_flow_only = false);

// One edit applied to a beam; caches are rebuilt only on the side the edit
// touched, which must stay equal to a from-scratch rebuild.
Beam apply_op(const NextEventModel& fwd, const NextEventModel& bwd, const Beam& parent,
              const AlignmentOp& op, bool control_flow_only = false);

// Replays an operation history against the input case, producing the
// corrected case and the alignment implied by the edits.
std::pair<Case, Alignment> replay_history(const Case& input,
                                          const std::vector<AlignmentOp>& history);

struct AlignedBeam {
    Case corrected;
    Alignment alignment;
    double score = 0.0;
    int empty_moves = 0;
};

struct DeepAlignResult {
    std::vector<AlignedBeam> beams;  // ranked, best first, at most K
    bool converged = false;
    int iterations = 0;
};

// Bidirectional beam search over skip/insert/delete edits.
DeepAlignResult deep_align(const NextEventModel& fwd, const NextEventModel& bwd, const Case& input,
                           const SearchConfig& config);

// deep_align from the empty case; the result depends on the case attributes
// through the initial states.
Case complete_case(const NextEventModel& fwd, const NextEventModel& bwd,
                   const std::map<std::string, std::string>& case_attrs,
                   const SearchConfig& config);

// Top-1 alignment per case, in input order; cases are independent, so the
// work is spread across threads.
std::vector<AlignmentRecord> align_log(const NextEventModel& fwd, const NextEventModel& bwd,
                                       const EventLog& log, const SearchConfig& config,
                                       int n_threads = 1);

}  // namespace deepalign
