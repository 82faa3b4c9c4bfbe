#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "deepalign/corpus.hpp"
#include "deepalign/rng.hpp"

namespace deepalign {

// Generative process description: activity nodes with attribute emission
// distributions and probabilistic transitions. Source and sink are pseudo
// nodes (empty activity) that emit nothing.

struct EmissionRule {
    // Guards on attribute values already emitted at the same event.
    std::map<std::string, std::string> when;
    std::map<std::string, double> probs;
};

struct NodeEmission {
    std::vector<EmissionRule> rules;  // first match wins
    std::map<std::string, double> default_probs;
};

struct NodeTransitions {
    std::map<int, double> default_probs;  // successor node id -> probability
};

struct LikelihoodGraph {
    std::vector<std::pair<int, std::string>> nodes;  // (id, activity); "" = pseudo
    int source = -1;
    int sink = -1;
    std::map<int, NodeTransitions> transitions;
    std::vector<std::string> event_attribute_names;  // emission sampling order
    // per node, one emission per event attribute name (same order as above)
    std::map<int, std::vector<NodeEmission>> emissions;

    const std::string& activity_of(int node_id) const;
    bool is_pseudo(int node_id) const;
};

// Joint case-attribute distribution plus transition overrides keyed on
// case-attribute value predicates.
struct CaseAttributeRule {
    struct Tuple {
        std::map<std::string, std::string> values;
        double prob;
    };
    struct Override {
        int node;
        std::map<std::string, std::string> when;  // all must match the case
        std::map<int, double> probs;
    };
    std::vector<std::string> attribute_names;
    std::vector<Tuple> joint;
    std::vector<Override> overrides;  // first match per node wins
};

enum class AnomalyKind { Skip, Insert, Rework, Early, Late, Attribute };

const std::vector<AnomalyKind>& all_anomaly_kinds();
std::string to_string(AnomalyKind kind);

struct AnomalySizes {
    int skip_max = 2;
    int insert_max = 2;
    int rework_max = 3;
    int early_max = 2;
    int late_max = 2;
    int attribute_max = 3;
};

// Throws when a graph or rule violates its structural invariants.
void validate(const LikelihoodGraph& graph, const CaseAttributeRule& rule);

// Effective successor distribution of `node` for a case with the given
// attributes: first matching override, otherwise the graph default.
const std::map<int, double>& effective_transitions(const LikelihoodGraph& graph,
                                                   const CaseAttributeRule& rule, int node,
                                                   const std::map<std::string, std::string>& case_attrs);

// Random walk from source to sink. Throws "graph walk diverged" past max_len.
Case sample_case(const LikelihoodGraph& graph, const CaseAttributeRule& rule, Rng& rng,
                 std::size_t max_len = 100);

EventLog generate_log(const LikelihoodGraph& graph, const CaseAttributeRule& rule,
                      std::size_t n_cases, Rng& rng);

// True when the case's activity sequence is a source-to-sink path of the
// graph under the case's attribute assignment.
bool accepts(const LikelihoodGraph& graph, const CaseAttributeRule& rule, const Case& c);

// Applies labeled mutations. Holds the per-attribute value pools needed by
// Insert and Attribute anomalies (drawn from the clean log).
class AnomalyInjector {
public:
    explicit AnomalyInjector(const EventLog& clean_log, AnomalySizes sizes = {});

    // Throws "inapplicable anomaly" when the case cannot host the kind.
    std::pair<Case, std::string> inject(const Case& c, AnomalyKind kind, Rng& rng) const;

    bool applicable(const Case& c, AnomalyKind kind) const;

private:
    std::vector<std::pair<std::string, std::vector<std::string>>> pools_;
    AnomalySizes sizes_;
};

// Mutates round(ratio * |log|) cases, kinds uniform among applicable ones.
// Returns (noisy log, ground truth log with labels).
std::pair<EventLog, EventLog> apply_noise(const EventLog& log, double noise_ratio, Rng& rng,
                                          AnomalySizes sizes = {});

struct RandomGraphParams {
    int n_activities = 10;
    int breadth = 3;
    int depth = 5;
    int n_event_attrs = 1;
    int n_case_attrs = 1;
};

// Layered random process with choice structure; when case attributes are
// requested the graph carries a case-attribute-dependent branch early and a
// matching one late (a long-term dependency). Throws on infeasible params.
std::pair<LikelihoodGraph, CaseAttributeRule> random_likelihood_graph(const RandomGraphParams& params,
                                                                      Rng& rng);

// The fixed paper-submission process: 12 activities, a User event attribute,
// Topic/Decision case attributes, and topic/decision-dependent branching.
std::pair<LikelihoodGraph, CaseAttributeRule> paper_process();

void write_graph(const LikelihoodGraph& graph, const CaseAttributeRule& rule,
                 const std::string& path);
std::pair<LikelihoodGraph, CaseAttributeRule> read_graph(const std::string& path);

}  // namespace deepalign
