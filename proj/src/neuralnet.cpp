#include "deepalign/neuralnet.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace deepalign {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

Eigen::VectorXd sigmoid(const Eigen::VectorXd& x) {
    return x.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

double log_sum_exp(const Eigen::VectorXd& v) {
    double m = v.maxCoeff();
    double s = (v.array() - m).exp().sum();
    return m + std::log(s);
}

// Parameters live in double matrices but stay exactly representable as f32,
// so checkpoints round-trip bit for bit.
void quantize_to_f32(Eigen::MatrixXd& m) {
    for (int c = 0; c < m.cols(); ++c)
        for (int r = 0; r < m.rows(); ++r)
            m(r, c) = static_cast<double>(static_cast<float>(m(r, c)));
}

struct GruStep {
    Eigen::VectorXd x, z, r, n, h_prev, h;
};

}  // namespace

Eigen::VectorXd stable_softmax(const Eigen::VectorXd& logits) {
    double m = logits.maxCoeff();
    Eigen::VectorXd e = (logits.array() - m).exp().matrix();
    return e / e.sum();
}

int embedding_dim_for(int vocab_size) {
    int dim = static_cast<int>(std::ceil(1.5 * std::sqrt(static_cast<double>(vocab_size))));
    return std::min(32, std::max(2, dim));
}

int NextEventModel::head_vocab_size(int head) const {
    if (head == 0) return schema_.activity_vocabulary.size();
    return schema_.event_attributes.at(static_cast<std::size_t>(head - 1)).second.size();
}

int NextEventModel::case_net_layer1_size() const { return std::max(1, hidden_ / 8); }

NextEventModel NextEventModel::init(const AttributeSchema& schema, Direction direction,
                                    int max_case_len, bool use_case_attributes,
                                    bool use_event_attributes, Rng& rng) {
    if (max_case_len < 2) fail("max_case_len must be at least 2");

    NextEventModel m;
    m.schema_ = schema;
    m.direction_ = direction;
    m.hidden_ = 2 * max_case_len;
    m.use_case_attrs_ = use_case_attributes && !schema.case_attributes.empty();
    m.use_event_attrs_ = use_event_attributes && !schema.event_attributes.empty();

    const int H = m.hidden_;

    auto emb_dim = [](const Vocabulary& v) { return embedding_dim_for(v.size()); };

    m.embedding_dims_.push_back(emb_dim(schema.activity_vocabulary));
    m.embeddings_.emplace_back(schema.activity_vocabulary.size(),
                               m.embedding_dims_.back());
    if (m.use_event_attrs_)
        for (const auto& [name, vocab] : schema.event_attributes) {
            m.embedding_dims_.push_back(emb_dim(vocab));
            m.embeddings_.emplace_back(vocab.size(), m.embedding_dims_.back());
        }
    m.input_dim_ = 0;
    for (int d : m.embedding_dims_) m.input_dim_ += d;

    m.w_update_.resize(H, m.input_dim_);
    m.w_reset_.resize(H, m.input_dim_);
    m.w_cand_.resize(H, m.input_dim_);
    m.u_update_.resize(H, H);
    m.u_reset_.resize(H, H);
    m.u_cand_.resize(H, H);
    m.b_update_.resize(H, 1);
    m.b_reset_.resize(H, 1);
    m.b_cand_.resize(H, 1);

    if (m.use_case_attrs_) {
        int case_input = 0;
        for (const auto& [name, vocab] : schema.case_attributes) {
            m.case_embedding_dims_.push_back(emb_dim(vocab));
            m.case_embeddings_.emplace_back(vocab.size(), m.case_embedding_dims_.back());
            case_input += m.case_embedding_dims_.back();
        }
        const int d1 = m.case_net_layer1_size();
        m.case_w1_.resize(d1, case_input);
        m.case_b1_.resize(d1, 1);
        m.case_w2_.resize(H, d1);
        m.case_b2_.resize(H, 1);
    }

    m.head_w_.emplace_back(schema.activity_vocabulary.size(), H);
    m.head_b_.emplace_back(schema.activity_vocabulary.size(), 1);
    if (m.use_event_attrs_)
        for (const auto& [name, vocab] : schema.event_attributes) {
            m.head_w_.emplace_back(vocab.size(), H);
            m.head_b_.emplace_back(vocab.size(), 1);
        }

    // Scaled-uniform init, biases zero; draw order follows the registry.
    for (auto& [name, param] : m.parameters()) {
        if (name.ends_with(".b") || name.starts_with("gru.b") || name == "case.b1" || name == "case.b2") {
            param->setZero();
            continue;
        }
        double limit = std::sqrt(6.0 / static_cast<double>(param->rows() + param->cols()));
        for (Eigen::Index r = 0; r < param->rows(); ++r)
            for (Eigen::Index c = 0; c < param->cols(); ++c)
                (*param)(r, c) = rng.uniform(-limit, limit);
        quantize_to_f32(*param);
    }
    return m;
}

std::vector<std::pair<std::string, Eigen::MatrixXd*>> NextEventModel::parameters() {
    std::vector<std::pair<std::string, Eigen::MatrixXd*>> out;
    out.emplace_back("embedding.activity", &embeddings_[0]);
    if (use_event_attrs_)
        for (std::size_t k = 0; k < schema_.event_attributes.size(); ++k)
            out.emplace_back("embedding.event." + schema_.event_attributes[k].first,
                             &embeddings_[k + 1]);
    out.emplace_back("gru.w_update", &w_update_);
    out.emplace_back("gru.w_reset", &w_reset_);
    out.emplace_back("gru.w_cand", &w_cand_);
    out.emplace_back("gru.u_update", &u_update_);
    out.emplace_back("gru.u_reset", &u_reset_);
    out.emplace_back("gru.u_cand", &u_cand_);
    out.emplace_back("gru.b_update", &b_update_);
    out.emplace_back("gru.b_reset", &b_reset_);
    out.emplace_back("gru.b_cand", &b_cand_);
    if (use_case_attrs_) {
        for (std::size_t k = 0; k < schema_.case_attributes.size(); ++k)
            out.emplace_back("case.embedding." + schema_.case_attributes[k].first,
                             &case_embeddings_[k]);
        out.emplace_back("case.w1", &case_w1_);
        out.emplace_back("case.b1", &case_b1_);
        out.emplace_back("case.w2", &case_w2_);
        out.emplace_back("case.b2", &case_b2_);
    }
    out.emplace_back("head.activity.w", &head_w_[0]);
    out.emplace_back("head.activity.b", &head_b_[0]);
    if (use_event_attrs_)
        for (std::size_t k = 0; k < schema_.event_attributes.size(); ++k) {
            out.emplace_back("head.event." + schema_.event_attributes[k].first + ".w",
                             &head_w_[k + 1]);
            out.emplace_back("head.event." + schema_.event_attributes[k].first + ".b",
                             &head_b_[k + 1]);
        }
    return out;
}

std::vector<std::pair<std::string, const Eigen::MatrixXd*>> NextEventModel::parameters() const {
    auto mutable_params = const_cast<NextEventModel*>(this)->parameters();
    std::vector<std::pair<std::string, const Eigen::MatrixXd*>> out;
    out.reserve(mutable_params.size());
    for (auto& [name, p] : mutable_params) out.emplace_back(name, p);
    return out;
}

Eigen::VectorXd NextEventModel::case_state(const std::vector<int>& case_attr_ids) const {
    if (!use_case_attrs_) return Eigen::VectorXd::Zero(hidden_);
    if (case_attr_ids.size() != schema_.case_attributes.size())
        fail("case attribute id count does not match schema");
    int offset = 0;
    Eigen::VectorXd e(case_w1_.cols());
    for (std::size_t k = 0; k < case_embeddings_.size(); ++k) {
        int id = case_attr_ids[k];
        if (id < 0 || id >= case_embeddings_[k].rows())
            fail("case attribute id out of range: " + std::to_string(id));
        e.segment(offset, case_embedding_dims_[k]) = case_embeddings_[k].row(id).transpose();
        offset += case_embedding_dims_[k];
    }
    Eigen::VectorXd a1 = ((case_w1_ * e) + case_b1_.col(0)).array().tanh().matrix();
    return ((case_w2_ * a1) + case_b2_.col(0)).array().tanh().matrix();
}

Eigen::VectorXd NextEventModel::input_vector(const std::vector<int>& event_ids) const {
    if (event_ids.size() != 1 + schema_.event_attributes.size())
        fail("event id width does not match schema");
    Eigen::VectorXd x(input_dim_);
    int offset = 0;
    const std::size_t used = use_event_attrs_ ? embeddings_.size() : 1;
    for (std::size_t k = 0; k < used; ++k) {
        int id = event_ids[k];
        if (id < 0 || id >= embeddings_[k].rows())
            fail("event id out of range: " + std::to_string(id));
        x.segment(offset, embedding_dims_[k]) = embeddings_[k].row(id).transpose();
        offset += embedding_dims_[k];
    }
    return x;
}

Eigen::VectorXd NextEventModel::advance(const Eigen::VectorXd& state,
                                        const std::vector<int>& event_ids) const {
    if (state.size() != hidden_) fail("state width does not match the model");
    Eigen::VectorXd x = input_vector(event_ids);
    Eigen::VectorXd z = sigmoid(w_update_ * x + u_update_ * state + b_update_.col(0));
    Eigen::VectorXd r = sigmoid(w_reset_ * x + u_reset_ * state + b_reset_.col(0));
    Eigen::VectorXd n =
        (w_cand_ * x + u_cand_ * (r.cwiseProduct(state)) + b_cand_.col(0)).array().tanh().matrix();
    return ((1.0 - z.array()) * state.array() + z.array() * n.array()).matrix();
}

std::vector<Eigen::VectorXd> NextEventModel::head_distributions(const Eigen::VectorXd& state) const {
    if (state.size() != hidden_) fail("state width does not match the model");
    std::vector<Eigen::VectorXd> probs;
    probs.reserve(head_w_.size());
    for (std::size_t k = 0; k < head_w_.size(); ++k)
        probs.push_back(stable_softmax(head_w_[k] * state + head_b_[k].col(0)));
    return probs;
}

StepDistribution NextEventModel::step(const Eigen::VectorXd& state,
                                      const std::vector<int>& event_ids) const {
    StepDistribution out;
    out.state = advance(state, event_ids);
    out.head_probs = head_distributions(out.state);
    return out;
}

double NextEventModel::step_log_prob(const std::vector<Eigen::VectorXd>& head_probs,
                                     const std::vector<int>& target_ids,
                                     bool control_flow_only) const {
    const std::size_t heads = control_flow_only ? 1 : head_probs.size();
    double lp = 0.0;
    for (std::size_t k = 0; k < heads; ++k) {
        int id = target_ids[k];
        if (id < 0 || id >= head_probs[k].size())
            fail("target id out of range: " + std::to_string(id));
        lp += std::log(std::max(head_probs[k](id), kProbFloor));
    }
    return lp;
}

double NextEventModel::step_log_prob(const StepDistribution& dist,
                                     const std::vector<int>& target_ids,
                                     bool control_flow_only) const {
    return step_log_prob(dist.head_probs, target_ids, control_flow_only);
}

double NextEventModel::sequence_log_prob(const Eigen::VectorXd& h0,
                                         const std::vector<std::vector<int>>& steps,
                                         bool control_flow_only) const {
    if (steps.size() < 2) fail("sequence must be framed as BOS ... EOS");
    Eigen::VectorXd h = h0;
    double lp = 0.0;
    for (std::size_t t = 0; t + 1 < steps.size(); ++t) {
        StepDistribution dist = step(h, steps[t]);
        lp += step_log_prob(dist, steps[t + 1], control_flow_only);
        h = std::move(dist.state);
    }
    return lp;
}

double NextEventModel::sequence_log_prob(const EncodedCase& c, bool control_flow_only) const {
    return sequence_log_prob(case_state(c.case_attr_ids), c.steps, control_flow_only);
}

double training_loss_and_gradients(const NextEventModel& model,
                                   const std::vector<EncodedCase>& cases,
                                   std::map<std::string, Eigen::MatrixXd>& grads) {
    grads.clear();
    auto params = model.parameters();
    for (const auto& [name, p] : params)
        grads.emplace(name, Eigen::MatrixXd::Zero(p->rows(), p->cols()));

    // Resolve gradient slots once; the loops below are hot.
    auto slot = [&](const std::string& name) { return &grads.at(name); };
    const std::size_t n_heads = model.head_w_.size();
    std::vector<Eigen::MatrixXd*> g_emb, g_head_w, g_head_b, g_case_emb;
    g_emb.push_back(slot("embedding.activity"));
    g_head_w.push_back(slot("head.activity.w"));
    g_head_b.push_back(slot("head.activity.b"));
    if (model.use_event_attrs_)
        for (const auto& [name, _] : model.schema_.event_attributes) {
            g_emb.push_back(slot("embedding.event." + name));
            g_head_w.push_back(slot("head.event." + name + ".w"));
            g_head_b.push_back(slot("head.event." + name + ".b"));
        }
    Eigen::MatrixXd* g_wz = slot("gru.w_update");
    Eigen::MatrixXd* g_wr = slot("gru.w_reset");
    Eigen::MatrixXd* g_wn = slot("gru.w_cand");
    Eigen::MatrixXd* g_uz = slot("gru.u_update");
    Eigen::MatrixXd* g_ur = slot("gru.u_reset");
    Eigen::MatrixXd* g_un = slot("gru.u_cand");
    Eigen::MatrixXd* g_bz = slot("gru.b_update");
    Eigen::MatrixXd* g_br = slot("gru.b_reset");
    Eigen::MatrixXd* g_bn = slot("gru.b_cand");
    if (model.use_case_attrs_)
        for (const auto& [name, _] : model.schema_.case_attributes)
            g_case_emb.push_back(slot("case.embedding." + name));

    const int H = model.hidden_;
    double total_loss = 0.0;
    std::size_t total_steps = 0;

    for (const auto& c : cases) {
        const std::size_t n_inputs = c.steps.size() - 1;
        total_steps += n_inputs;

        Eigen::VectorXd h0 = model.case_state(c.case_attr_ids);
        std::vector<GruStep> trace(n_inputs);
        std::vector<Eigen::VectorXd> dh(n_inputs + 1, Eigen::VectorXd::Zero(H));
        Eigen::VectorXd h = h0;
        for (std::size_t t = 0; t < n_inputs; ++t) {
            GruStep& s = trace[t];
            s.h_prev = h;
            s.x = model.input_vector(c.steps[t]);
            s.z = sigmoid(model.w_update_ * s.x + model.u_update_ * h + model.b_update_.col(0));
            s.r = sigmoid(model.w_reset_ * s.x + model.u_reset_ * h + model.b_reset_.col(0));
            s.n = (model.w_cand_ * s.x + model.u_cand_ * (s.r.cwiseProduct(h)) +
                   model.b_cand_.col(0)).array().tanh().matrix();
            s.h = ((1.0 - s.z.array()) * h.array() + s.z.array() * s.n.array()).matrix();
            h = s.h;

            for (std::size_t k = 0; k < n_heads; ++k) {
                Eigen::VectorXd logits = model.head_w_[k] * s.h + model.head_b_[k].col(0);
                int target = c.steps[t + 1][k];
                total_loss += log_sum_exp(logits) - logits(target);
                Eigen::VectorXd dlogits = stable_softmax(logits);
                dlogits(target) -= 1.0;
                g_head_w[k]->noalias() += dlogits * s.h.transpose();
                g_head_b[k]->col(0) += dlogits;
                dh[t + 1].noalias() += model.head_w_[k].transpose() * dlogits;
            }
        }

        // backward through time
        for (std::size_t t = n_inputs; t-- > 0;) {
            const GruStep& s = trace[t];
            const Eigen::VectorXd& g = dh[t + 1];

            Eigen::VectorXd dz = g.cwiseProduct(s.n - s.h_prev);
            Eigen::VectorXd dn = g.cwiseProduct(s.z);
            Eigen::VectorXd dh_prev =
                (g.array() * (1.0 - s.z.array())).matrix();

            Eigen::VectorXd dn_pre = (dn.array() * (1.0 - s.n.array().square())).matrix();
            g_wn->noalias() += dn_pre * s.x.transpose();
            g_un->noalias() += dn_pre * (s.r.cwiseProduct(s.h_prev)).transpose();
            g_bn->col(0) += dn_pre;
            Eigen::VectorXd through_cand = model.u_cand_.transpose() * dn_pre;
            dh_prev += through_cand.cwiseProduct(s.r);
            Eigen::VectorXd dr = through_cand.cwiseProduct(s.h_prev);

            Eigen::VectorXd dz_pre = (dz.array() * s.z.array() * (1.0 - s.z.array())).matrix();
            g_wz->noalias() += dz_pre * s.x.transpose();
            g_uz->noalias() += dz_pre * s.h_prev.transpose();
            g_bz->col(0) += dz_pre;
            dh_prev.noalias() += model.u_update_.transpose() * dz_pre;

            Eigen::VectorXd dr_pre = (dr.array() * s.r.array() * (1.0 - s.r.array())).matrix();
            g_wr->noalias() += dr_pre * s.x.transpose();
            g_ur->noalias() += dr_pre * s.h_prev.transpose();
            g_br->col(0) += dr_pre;
            dh_prev.noalias() += model.u_reset_.transpose() * dr_pre;

            Eigen::VectorXd dx = model.w_update_.transpose() * dz_pre +
                                 model.w_reset_.transpose() * dr_pre +
                                 model.w_cand_.transpose() * dn_pre;
            int offset = 0;
            for (std::size_t k = 0; k < g_emb.size(); ++k) {
                g_emb[k]->row(c.steps[t][k]) +=
                    dx.segment(offset, model.embedding_dims_[k]).transpose();
                offset += model.embedding_dims_[k];
            }

            dh[t] += dh_prev;
        }

        // case-attribute network
        if (model.use_case_attrs_) {
            int offset = 0;
            Eigen::VectorXd e(model.case_w1_.cols());
            for (std::size_t k = 0; k < model.case_embeddings_.size(); ++k) {
                e.segment(offset, model.case_embedding_dims_[k]) =
                    model.case_embeddings_[k].row(c.case_attr_ids[k]).transpose();
                offset += model.case_embedding_dims_[k];
            }
            Eigen::VectorXd a1 =
                ((model.case_w1_ * e) + model.case_b1_.col(0)).array().tanh().matrix();

            Eigen::VectorXd d_pre2 = (dh[0].array() * (1.0 - h0.array().square())).matrix();
            grads.at("case.w2").noalias() += d_pre2 * a1.transpose();
            grads.at("case.b2").col(0) += d_pre2;
            Eigen::VectorXd da1 = model.case_w2_.transpose() * d_pre2;
            Eigen::VectorXd d_pre1 = (da1.array() * (1.0 - a1.array().square())).matrix();
            grads.at("case.w1").noalias() += d_pre1 * e.transpose();
            grads.at("case.b1").col(0) += d_pre1;
            Eigen::VectorXd de = model.case_w1_.transpose() * d_pre1;
            offset = 0;
            for (std::size_t k = 0; k < model.case_embeddings_.size(); ++k) {
                g_case_emb[k]->row(c.case_attr_ids[k]) +=
                    de.segment(offset, model.case_embedding_dims_[k]).transpose();
                offset += model.case_embedding_dims_[k];
            }
        }
    }

    if (total_steps == 0) fail("no target steps in batch");
    const double scale = 1.0 / static_cast<double>(total_steps);
    for (auto& [_, g] : grads) g *= scale;
    return total_loss * scale;
}

double training_loss(const NextEventModel& model, const std::vector<EncodedCase>& cases) {
    const std::size_t n_heads = model.head_w_.size();
    double total_loss = 0.0;
    std::size_t total_steps = 0;
    for (const auto& c : cases) {
        Eigen::VectorXd h = model.case_state(c.case_attr_ids);
        for (std::size_t t = 0; t + 1 < c.steps.size(); ++t) {
            Eigen::VectorXd x = model.input_vector(c.steps[t]);
            Eigen::VectorXd z =
                sigmoid(model.w_update_ * x + model.u_update_ * h + model.b_update_.col(0));
            Eigen::VectorXd r =
                sigmoid(model.w_reset_ * x + model.u_reset_ * h + model.b_reset_.col(0));
            Eigen::VectorXd n = (model.w_cand_ * x + model.u_cand_ * (r.cwiseProduct(h)) +
                                 model.b_cand_.col(0)).array().tanh().matrix();
            h = ((1.0 - z.array()) * h.array() + z.array() * n.array()).matrix();
            for (std::size_t k = 0; k < n_heads; ++k) {
                Eigen::VectorXd logits = model.head_w_[k] * h + model.head_b_[k].col(0);
                total_loss += log_sum_exp(logits) - logits(c.steps[t + 1][k]);
            }
            ++total_steps;
        }
    }
    if (total_steps == 0) fail("no target steps");
    return total_loss / static_cast<double>(total_steps);
}

TrainResult train(NextEventModel& model, const EventLog& log, const TrainConfig& config) {
    if (log.cases.empty()) fail("training log is empty");
    if (config.epochs <= 0 || config.batch_size <= 0 || config.learning_rate <= 0.0)
        fail("train config values must be positive");

    std::vector<EncodedCase> encoded;
    encoded.reserve(log.cases.size());
    for (const auto& c : log.cases) encoded.push_back(encode_case(model.schema(), c, model.direction()));

    auto params = model.parameters();
    std::map<std::string, Eigen::MatrixXd> adam_m, adam_v;
    for (const auto& [name, p] : params) {
        adam_m.emplace(name, Eigen::MatrixXd::Zero(p->rows(), p->cols()));
        adam_v.emplace(name, Eigen::MatrixXd::Zero(p->rows(), p->cols()));
    }

    Rng rng(config.seed);
    std::vector<std::size_t> order(encoded.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    TrainResult result;
    std::map<std::string, Eigen::MatrixXd> grads;
    long adam_t = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t epoch_steps = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
            std::size_t end = std::min(order.size(), begin + config.batch_size);
            std::vector<EncodedCase> batch;
            batch.reserve(end - begin);
            std::size_t batch_steps = 0;
            for (std::size_t i = begin; i < end; ++i) {
                batch.push_back(encoded[order[i]]);
                batch_steps += encoded[order[i]].steps.size() - 1;
            }

            double loss = training_loss_and_gradients(model, batch, grads);
            if (!std::isfinite(loss))
                fail("non-finite training loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                     std::to_string(begin / config.batch_size + 1));
            epoch_loss += loss * static_cast<double>(batch_steps);
            epoch_steps += batch_steps;

            double sq_norm = 0.0;
            for (const auto& [_, g] : grads) sq_norm += g.squaredNorm();
            double norm = std::sqrt(sq_norm);
            double clip_scale = (config.clip_norm > 0.0 && norm > config.clip_norm)
                                    ? config.clip_norm / norm
                                    : 1.0;

            ++adam_t;
            const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(adam_t));
            const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(adam_t));
            for (auto& [name, p] : params) {
                Eigen::MatrixXd g = grads.at(name) * clip_scale;
                Eigen::MatrixXd& mom = adam_m.at(name);
                Eigen::MatrixXd& vel = adam_v.at(name);
                mom = config.beta1 * mom + (1.0 - config.beta1) * g;
                vel = config.beta2 * vel + (1.0 - config.beta2) * g.cwiseProduct(g);
                Eigen::ArrayXXd m_hat = mom.array() / bc1;
                Eigen::ArrayXXd v_hat = vel.array() / bc2;
                p->array() -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
                quantize_to_f32(*p);
            }
        }
        result.epoch_loss.push_back(epoch_loss / static_cast<double>(epoch_steps));
    }
    return result;
}

// ---------------------------------------------------------------------------
// checkpoint format: "DALN", u32 version, direction/flag bytes, u32 hidden,
// u64 schema fingerprint, schema JSON, config echo, then named f32 tensors.

namespace {

constexpr std::uint32_t kFormatVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
    put_u32(out, static_cast<std::uint32_t>(v));
    put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

void put_f32(std::ostream& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

void put_string(std::ostream& out, const std::string& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) fail("truncated checkpoint");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint64_t get_u64(std::istream& in) {
    std::uint64_t lo = get_u32(in);
    std::uint64_t hi = get_u32(in);
    return lo | (hi << 32);
}

float get_f32(std::istream& in) { return std::bit_cast<float>(get_u32(in)); }

std::string get_string(std::istream& in) {
    std::uint32_t len = get_u32(in);
    std::string s(len, '\0');
    in.read(s.data(), static_cast<std::streamsize>(len));
    if (!in) fail("truncated checkpoint");
    return s;
}

}  // namespace

void NextEventModel::save(const std::string& path, const std::string& config_echo) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("cannot open checkpoint for writing: " + path);
    out.write("DALN", 4);
    put_u32(out, kFormatVersion);
    unsigned char flags[4] = {static_cast<unsigned char>(direction_ == Direction::backward ? 1 : 0),
                              static_cast<unsigned char>(use_case_attrs_ ? 1 : 0),
                              static_cast<unsigned char>(use_event_attrs_ ? 1 : 0), 0};
    out.write(reinterpret_cast<const char*>(flags), 4);
    put_u32(out, static_cast<std::uint32_t>(hidden_));
    put_u64(out, schema_.fingerprint());
    put_string(out, schema_.to_json());
    put_string(out, config_echo);

    auto params = parameters();
    put_u32(out, static_cast<std::uint32_t>(params.size()));
    for (const auto& [name, p] : params) {
        put_string(out, name);
        put_u32(out, static_cast<std::uint32_t>(p->rows()));
        put_u32(out, static_cast<std::uint32_t>(p->cols()));
        for (Eigen::Index r = 0; r < p->rows(); ++r)
            for (Eigen::Index c = 0; c < p->cols(); ++c)
                put_f32(out, static_cast<float>((*p)(r, c)));
    }
    if (!out) fail("write failed: " + path);
}

NextEventModel NextEventModel::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open checkpoint: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "DALN", 4) != 0) fail("not a model checkpoint: " + path);
    std::uint32_t version = get_u32(in);
    if (version != kFormatVersion)
        fail("unsupported checkpoint format version " + std::to_string(version));
    unsigned char flags[4];
    in.read(reinterpret_cast<char*>(flags), 4);
    if (!in) fail("truncated checkpoint");
    Direction direction = flags[0] ? Direction::backward : Direction::forward;
    bool use_case = flags[1] != 0;
    bool use_event = flags[2] != 0;
    int hidden = static_cast<int>(get_u32(in));
    std::uint64_t stored_fingerprint = get_u64(in);
    std::string schema_json = get_string(in);
    get_string(in);  // config echo

    AttributeSchema schema = AttributeSchema::from_json(schema_json);
    if (schema.fingerprint() != stored_fingerprint)
        fail("checkpoint schema fingerprint mismatch (corrupt file?)");

    Rng rng(0);
    NextEventModel model = init(schema, direction, hidden / 2, use_case, use_event, rng);
    if (model.hidden_ != hidden) fail("checkpoint hidden size is not even");

    auto params = model.parameters();
    std::uint32_t n_tensors = get_u32(in);
    if (n_tensors != params.size()) fail("checkpoint tensor count mismatch");
    for (auto& [name, p] : params) {
        std::string stored_name = get_string(in);
        if (stored_name != name) fail("checkpoint tensor order mismatch: " + stored_name);
        std::uint32_t rows = get_u32(in), cols = get_u32(in);
        if (rows != static_cast<std::uint32_t>(p->rows()) ||
            cols != static_cast<std::uint32_t>(p->cols()))
            fail("checkpoint tensor shape mismatch: " + name);
        for (std::uint32_t r = 0; r < rows; ++r)
            for (std::uint32_t c = 0; c < cols; ++c)
                (*p)(r, c) = static_cast<double>(get_f32(in));
    }
    return model;
}

NextEventModel NextEventModel::load(const std::string& path, const AttributeSchema& expected_schema) {
    NextEventModel model = load(path);
    if (model.schema_fingerprint() != expected_schema.fingerprint())
        fail("schema fingerprint mismatch between checkpoint and provided schema");
    return model;
}

std::string NextEventModel::load_config_echo(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open checkpoint: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "DALN", 4) != 0) fail("not a model checkpoint: " + path);
    std::uint32_t version = get_u32(in);
    if (version != kFormatVersion)
        fail("unsupported checkpoint format version " + std::to_string(version));
    unsigned char flags[4];
    in.read(reinterpret_cast<char*>(flags), 4);
    get_u32(in);
    get_u64(in);
    get_string(in);
    return get_string(in);
}

}  // namespace deepalign
