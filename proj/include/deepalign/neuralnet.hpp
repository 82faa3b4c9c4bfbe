#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "deepalign/corpus.hpp"
#include "deepalign/rng.hpp"

namespace deepalign {

struct TrainConfig {
    int epochs = 50;
    int batch_size = 100;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double clip_norm = 5.0;
    std::uint64_t seed = 0;
};

struct TrainResult {
    std::vector<double> epoch_loss;  // mean summed-head cross entropy per step
};

// Per-head next-event distributions plus the recurrent state they came from.
struct StepDistribution {
    std::vector<Eigen::VectorXd> head_probs;  // activity first, event attrs after
    Eigen::VectorXd state;
};

// Probability floor applied before taking logs anywhere in scoring.
inline constexpr double kProbFloor = 1e-12;

Eigen::VectorXd stable_softmax(const Eigen::VectorXd& logits);

// One directional next-event model: per-attribute embeddings into a gated
// recurrent cell whose initial state comes from a network over the case
// attributes, with a softmax head per predicted attribute.
class NextEventModel {
public:
    NextEventModel() = default;

    // H = 2 * max_case_len (encoded length, BOS/EOS included).
    static NextEventModel init(const AttributeSchema& schema, Direction direction,
                               int max_case_len, bool use_case_attributes,
                               bool use_event_attributes, Rng& rng);

    Direction direction() const { return direction_; }
    int hidden_size() const { return hidden_; }
    bool uses_case_attributes() const { return use_case_attrs_; }
    bool uses_event_attributes() const { return use_event_attrs_; }
    const AttributeSchema& schema() const { return schema_; }
    std::uint64_t schema_fingerprint() const { return schema_.fingerprint(); }

    // Head count: activity plus one per event attribute when those are used.
    int num_heads() const { return 1 + (use_event_attrs_ ? static_cast<int>(schema_.event_attributes.size()) : 0); }
    int head_vocab_size(int head) const;
    int case_net_layer1_size() const;

    // h0 from the case-attribute network; zeros for attribute-free models.
    Eigen::VectorXd case_state(const std::vector<int>& case_attr_ids) const;

    // Recurrent state after consuming one encoded step.
    Eigen::VectorXd advance(const Eigen::VectorXd& state, const std::vector<int>& event_ids) const;

    // Next-event distributions read off a state, one per head.
    std::vector<Eigen::VectorXd> head_distributions(const Eigen::VectorXd& state) const;

    // Feed one encoded step, return the next-event distributions.
    StepDistribution step(const Eigen::VectorXd& state, const std::vector<int>& event_ids) const;

    // log P of the target step under the given distributions; full product
    // over heads, or the activity head only.
    double step_log_prob(const std::vector<Eigen::VectorXd>& head_probs,
                         const std::vector<int>& target_ids, bool control_flow_only) const;
    double step_log_prob(const StepDistribution& dist, const std::vector<int>& target_ids,
                         bool control_flow_only) const;

    // Sum over positions of log P(next step | prefix), EOS included.
    double sequence_log_prob(const Eigen::VectorXd& h0,
                             const std::vector<std::vector<int>>& steps,
                             bool control_flow_only = false) const;
    double sequence_log_prob(const EncodedCase& c, bool control_flow_only = false) const;

    // Named parameter registry, in a fixed order. Used by the optimizer,
    // serialization, and gradient checks.
    std::vector<std::pair<std::string, Eigen::MatrixXd*>> parameters();
    std::vector<std::pair<std::string, const Eigen::MatrixXd*>> parameters() const;

    void save(const std::string& path, const std::string& config_echo = "") const;
    static NextEventModel load(const std::string& path);
    static NextEventModel load(const std::string& path, const AttributeSchema& expected_schema);
    static std::string load_config_echo(const std::string& path);

private:
    friend double training_loss(const NextEventModel&, const std::vector<EncodedCase>&);
    friend double training_loss_and_gradients(const NextEventModel&,
                                              const std::vector<EncodedCase>&,
                                              std::map<std::string, Eigen::MatrixXd>&);

    Eigen::VectorXd input_vector(const std::vector<int>& event_ids) const;

    Direction direction_ = Direction::forward;
    int hidden_ = 0;
    bool use_case_attrs_ = false;
    bool use_event_attrs_ = false;
    AttributeSchema schema_;

    // input embeddings: activity first, then event attributes (when used)
    std::vector<Eigen::MatrixXd> embeddings_;
    std::vector<int> embedding_dims_;
    int input_dim_ = 0;

    // gated recurrent cell
    Eigen::MatrixXd w_update_, w_reset_, w_cand_;  // H x input_dim
    Eigen::MatrixXd u_update_, u_reset_, u_cand_;  // H x H
    Eigen::MatrixXd b_update_, b_reset_, b_cand_;  // H x 1

    // case-attribute network
    std::vector<Eigen::MatrixXd> case_embeddings_;
    std::vector<int> case_embedding_dims_;
    Eigen::MatrixXd case_w1_, case_b1_, case_w2_, case_b2_;

    // output heads
    std::vector<Eigen::MatrixXd> head_w_, head_b_;
};

// Mean summed-head cross entropy per target step over the given cases.
double training_loss(const NextEventModel& model, const std::vector<EncodedCase>& cases);

// Same loss, with gradients for every named parameter accumulated into
// `grads` (keyed like the parameter registry).
double training_loss_and_gradients(const NextEventModel& model,
                                   const std::vector<EncodedCase>& cases,
                                   std::map<std::string, Eigen::MatrixXd>& grads);

// Adam on mini-batches; loss trace per epoch. Deterministic per config.seed.
TrainResult train(NextEventModel& model, const EventLog& log, const TrainConfig& config);

int embedding_dim_for(int vocab_size);

}  // namespace deepalign
