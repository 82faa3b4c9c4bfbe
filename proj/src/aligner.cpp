#include "deepalign/aligner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace deepalign {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

double log_mean_exp(double a, double b) {
    double m = std::max(a, b);
    if (!std::isfinite(m)) return m;
    return m + std::log(0.5 * (std::exp(a - m) + std::exp(b - m)));
}

std::vector<int> encode_event_ids(const AttributeSchema& schema, const Event& e) {
    std::vector<int> ids(1 + schema.event_attributes.size());
    ids[0] = schema.activity_vocabulary.encode(e.activity);
    std::size_t k = 1;
    for (const auto& [name, vocab] : schema.event_attributes) {
        auto it = e.attributes.find(name);
        if (it == e.attributes.end()) fail("event missing attribute " + name);
        ids[k++] = vocab.encode(it->second);
    }
    return ids;
}

std::vector<int> frame_step(const AttributeSchema& schema, int symbol) {
    return std::vector<int>(1 + schema.event_attributes.size(), symbol);
}

void check_models(const NextEventModel& fwd, const NextEventModel& bwd) {
    if (fwd.direction() != Direction::forward) fail("forward model has the wrong direction");
    if (bwd.direction() != Direction::backward) fail("backward model has the wrong direction");
    if (fwd.schema_fingerprint() != bwd.schema_fingerprint())
        fail("schema mismatch between forward and backward models");
    if (fwd.uses_event_attributes() != bwd.uses_event_attributes() ||
        fwd.uses_case_attributes() != bwd.uses_case_attributes())
        fail("forward and backward models use different attribute sets");
}

}  // namespace

std::vector<std::string> log_projection(const Alignment& a) {
    std::vector<std::string> out;
    for (const auto& p : a)
        if (p.log) out.push_back(*p.log);
    return out;
}

std::vector<std::string> model_projection(const Alignment& a) {
    std::vector<std::string> out;
    for (const auto& p : a)
        if (p.model) out.push_back(*p.model);
    return out;
}

int empty_move_count(const Alignment& a) {
    int n = 0;
    for (const auto& p : a)
        if (!p.is_sync()) ++n;
    return n;
}

double case_score(const NextEventModel& fwd, const NextEventModel& bwd, const Case& c,
                  bool control_flow_only) {
    check_models(fwd, bwd);
    EncodedCase ef = encode_case(fwd.schema(), c, Direction::forward);
    EncodedCase eb = encode_case(bwd.schema(), c, Direction::backward);
    double lpf = fwd.sequence_log_prob(fwd.case_state(ef.case_attr_ids), ef.steps, control_flow_only);
    double lpb = bwd.sequence_log_prob(bwd.case_state(eb.case_attr_ids), eb.steps, control_flow_only);
    return log_mean_exp(lpf, lpb);
}

namespace {

struct SearchContext {
    const NextEventModel& fwd;
    const NextEventModel& bwd;
    const AttributeSchema& schema;
    Eigen::VectorXd h0_fwd, h0_bwd;
    std::vector<int> bos_step, eos_step;
    bool cf_only = false;
};

SearchContext make_context(const NextEventModel& fwd, const NextEventModel& bwd,
                           const std::map<std::string, std::string>& case_attrs, bool cf_only) {
    check_models(fwd, bwd);
    const AttributeSchema& schema = fwd.schema();
    std::vector<int> case_ids;
    for (const auto& [name, vocab] : schema.case_attributes) {
        auto it = case_attrs.find(name);
        if (it == case_attrs.end()) fail("case missing attribute " + name);
        case_ids.push_back(vocab.encode(it->second));
    }
    return SearchContext{fwd,
                         bwd,
                         schema,
                         fwd.case_state(case_ids),
                         bwd.case_state(case_ids),
                         frame_step(schema, kBosId),
                         frame_step(schema, kEosId),
                         cf_only};
}

// Rebuild forward caches for token indices >= from (tokens before `from` are
// unchanged), and backward caches for suffix starts <= until.
void rebuild_forward(const SearchContext& ctx, Beam& beam, std::size_t from) {
    const std::size_t T = beam.tokens.size();
    beam.fwd_states.resize(T + 1);
    beam.fwd_prefix_lp.resize(T + 1);
    if (from == 0) {
        beam.fwd_states[0] = ctx.fwd.advance(ctx.h0_fwd, ctx.bos_step);
        beam.fwd_prefix_lp[0] = 0.0;
        from = 1;
    }
    for (std::size_t t = from; t <= T; ++t) {
        auto dist = ctx.fwd.head_distributions(beam.fwd_states[t - 1]);
        beam.fwd_prefix_lp[t] =
            beam.fwd_prefix_lp[t - 1] +
            ctx.fwd.step_log_prob(dist, beam.tokens[t - 1].ids, ctx.cf_only);
        beam.fwd_states[t] = ctx.fwd.advance(beam.fwd_states[t - 1], beam.tokens[t - 1].ids);
    }
}

void rebuild_backward(const SearchContext& ctx, Beam& beam, std::size_t until) {
    const std::size_t T = beam.tokens.size();
    beam.bwd_states.resize(T + 1);
    beam.bwd_suffix_lp.resize(T + 1);
    std::size_t start = until;
    if (until == T) {
        beam.bwd_states[T] = ctx.bwd.advance(ctx.h0_bwd, ctx.bos_step);
        beam.bwd_suffix_lp[T] = 0.0;
        if (T == 0) return;
        start = T - 1;
    }
    for (std::size_t j = start + 1; j-- > 0;) {
        auto dist = ctx.bwd.head_distributions(beam.bwd_states[j + 1]);
        beam.bwd_suffix_lp[j] =
            beam.bwd_suffix_lp[j + 1] +
            ctx.bwd.step_log_prob(dist, beam.tokens[j].ids, ctx.cf_only);
        beam.bwd_states[j] = ctx.bwd.advance(beam.bwd_states[j + 1], beam.tokens[j].ids);
    }
}

Beam make_beam(const SearchContext& ctx, const Case& c) {
    Beam beam;
    beam.tokens.reserve(c.events.size());
    for (const auto& e : c.events)
        beam.tokens.push_back({e, encode_event_ids(ctx.schema, e), true});
    rebuild_forward(ctx, beam, 0);
    rebuild_backward(ctx, beam, beam.tokens.size());
    return beam;
}

double score_insertion(const NextEventModel& fwd, const NextEventModel& bwd, bool cf_only,
                       const Beam& beam, const std::vector<Eigen::VectorXd>& fdist,
                       const std::vector<Eigen::VectorXd>& bdist,
                       const std::vector<int>& event_ids, std::size_t t) {
    return beam.fwd_prefix_lp[t] + beam.bwd_suffix_lp[t] +
           fwd.step_log_prob(fdist, event_ids, cf_only) +
           bwd.step_log_prob(bdist, event_ids, cf_only);
}

double score_deletion(const NextEventModel& fwd, const NextEventModel& bwd, bool cf_only,
                      const std::vector<int>& eos_step, const Beam& beam,
                      const std::vector<Eigen::VectorXd>& fdist_t,
                      const std::vector<Eigen::VectorXd>& bdist_after, std::size_t n,
                      std::size_t t) {
    const std::size_t T = beam.tokens.size();
    const std::vector<int>& next_ids = (t + n < T) ? beam.tokens[t + n].ids : eos_step;
    const std::vector<int>& prev_ids = (t > 0) ? beam.tokens[t - 1].ids : eos_step;
    return beam.fwd_prefix_lp[t] + beam.bwd_suffix_lp[t + n] +
           fwd.step_log_prob(fdist_t, next_ids, cf_only) +
           bwd.step_log_prob(bdist_after, prev_ids, cf_only);
}

Beam apply_insertion(const SearchContext& ctx, const Beam& parent, std::size_t t, Event event,
                     double score) {
    Beam beam;
    beam.tokens.reserve(parent.tokens.size() + 1);
    beam.tokens.assign(parent.tokens.begin(), parent.tokens.begin() + t);
    beam.tokens.push_back({event, encode_event_ids(ctx.schema, event), false});
    beam.tokens.insert(beam.tokens.end(), parent.tokens.begin() + t, parent.tokens.end());
    beam.score = score;
    beam.history = parent.history;
    AlignmentOp op;
    op.kind = AlignmentOp::Kind::insert;
    op.position = static_cast<int>(t);
    op.event = std::move(event);
    beam.history.push_back(std::move(op));
    beam.empty_moves = parent.empty_moves + 1;

    // Unchanged prefix states carry over; the suffix side shifts by one.
    const std::size_t T_new = beam.tokens.size();
    beam.fwd_states.assign(parent.fwd_states.begin(), parent.fwd_states.begin() + t + 1);
    beam.fwd_prefix_lp.assign(parent.fwd_prefix_lp.begin(), parent.fwd_prefix_lp.begin() + t + 1);
    rebuild_forward(ctx, beam, t + 1);

    beam.bwd_states.resize(T_new + 1);
    beam.bwd_suffix_lp.resize(T_new + 1);
    for (std::size_t j = t + 1; j <= T_new; ++j) {
        beam.bwd_states[j] = parent.bwd_states[j - 1];
        beam.bwd_suffix_lp[j] = parent.bwd_suffix_lp[j - 1];
    }
    rebuild_backward(ctx, beam, t);
    return beam;
}

Beam apply_deletion(const SearchContext& ctx, const Beam& parent, std::size_t t, std::size_t n,
                    double score, int empty_moves) {
    Beam beam;
    beam.tokens.assign(parent.tokens.begin(), parent.tokens.begin() + t);
    beam.tokens.insert(beam.tokens.end(), parent.tokens.begin() + t + n, parent.tokens.end());
    beam.score = score;
    beam.history = parent.history;
    AlignmentOp op;
    op.kind = AlignmentOp::Kind::del;
    op.position = static_cast<int>(t);
    op.run = static_cast<int>(n);
    beam.history.push_back(std::move(op));
    beam.empty_moves = empty_moves;

    const std::size_t T_new = beam.tokens.size();
    beam.fwd_states.assign(parent.fwd_states.begin(), parent.fwd_states.begin() + t + 1);
    beam.fwd_prefix_lp.assign(parent.fwd_prefix_lp.begin(), parent.fwd_prefix_lp.begin() + t + 1);
    rebuild_forward(ctx, beam, t + 1);

    beam.bwd_states.resize(T_new + 1);
    beam.bwd_suffix_lp.resize(T_new + 1);
    for (std::size_t j = t; j <= T_new; ++j) {
        beam.bwd_states[j] = parent.bwd_states[j + n];
        beam.bwd_suffix_lp[j] = parent.bwd_suffix_lp[j + n];
    }
    if (t > 0) rebuild_backward(ctx, beam, t - 1);
    return beam;
}

std::vector<int> sequence_key(const Beam& beam) {
    std::vector<int> key;
    key.reserve(beam.tokens.size() * (beam.tokens.empty() ? 1 : beam.tokens[0].ids.size()));
    for (const auto& tok : beam.tokens)
        key.insert(key.end(), tok.ids.begin(), tok.ids.end());
    return key;
}

std::vector<int> activity_key(const std::vector<Beam::Token>& tokens) {
    std::vector<int> key;
    key.reserve(tokens.size());
    for (const auto& tok : tokens) key.push_back(tok.ids[0]);
    return key;
}

struct Candidate {
    double score = 0.0;
    int empty_moves = 0;
    std::size_t parent = 0;
    AlignmentOp::Kind kind = AlignmentOp::Kind::sync;
    std::size_t position = 0;
    std::size_t run = 0;
    Event event;               // insert only
    std::vector<int> act_key;  // corrected activity ids, for tie-breaking
    std::vector<int> full_key; // corrected step ids, for deduplication
};

bool candidate_order(const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.empty_moves != b.empty_moves) return a.empty_moves < b.empty_moves;
    if (a.act_key != b.act_key) return a.act_key < b.act_key;
    return a.full_key < b.full_key;
}

}  // namespace

Beam init_beam(const NextEventModel& fwd, const NextEventModel& bwd, const Case& c,
               bool control_flow_only) {
    SearchContext ctx = make_context(fwd, bwd, c.case_attributes, control_flow_only);
    Beam beam = make_beam(ctx, c);
    beam.score = case_score(fwd, bwd, c, control_flow_only);
    return beam;
}

double insertion_score(const NextEventModel& fwd, const NextEventModel& bwd, const Beam& beam,
                       const Event& event, int t, bool control_flow_only) {
    if (t < 0 || t > static_cast<int>(beam.tokens.size()))
        throw std::out_of_range("insertion position out of range");
    check_models(fwd, bwd);
    std::vector<int> ids = encode_event_ids(fwd.schema(), event);
    auto fdist = fwd.head_distributions(beam.fwd_states[t]);
    auto bdist = bwd.head_distributions(beam.bwd_states[t]);
    return score_insertion(fwd, bwd, control_flow_only, beam, fdist, bdist, ids,
                           static_cast<std::size_t>(t));
}

double deletion_score(const NextEventModel& fwd, const NextEventModel& bwd, const Beam& beam,
                      int n, int t, bool control_flow_only) {
    if (n < 1 || t < 0 || t + n > static_cast<int>(beam.tokens.size()))
        throw std::out_of_range("deletion run out of range");
    check_models(fwd, bwd);
    auto fdist = fwd.head_distributions(beam.fwd_states[t]);
    auto bdist = bwd.head_distributions(beam.bwd_states[t + n]);
    return score_deletion(fwd, bwd, control_flow_only, frame_step(fwd.schema(), kEosId), beam,
                          fdist, bdist, static_cast<std::size_t>(n), static_cast<std::size_t>(t));
}

Beam apply_op(const NextEventModel& fwd, const NextEventModel& bwd, const Beam& parent,
              const AlignmentOp& op, bool control_flow_only) {
    check_models(fwd, bwd);
    // Incremental rebuilds never reach back to the initial states, so the
    // context can leave them empty.
    SearchContext ctx{fwd,
                      bwd,
                      fwd.schema(),
                      Eigen::VectorXd(),
                      Eigen::VectorXd(),
                      frame_step(fwd.schema(), kBosId),
                      frame_step(fwd.schema(), kEosId),
                      control_flow_only};
    switch (op.kind) {
        case AlignmentOp::Kind::sync:
            return parent;
        case AlignmentOp::Kind::insert: {
            double score =
                insertion_score(fwd, bwd, parent, op.event, op.position, control_flow_only);
            return apply_insertion(ctx, parent, static_cast<std::size_t>(op.position), op.event,
                                   score);
        }
        case AlignmentOp::Kind::del: {
            double score = deletion_score(fwd, bwd, parent, op.run, op.position, control_flow_only);
            int empty = parent.empty_moves;
            for (int j = op.position; j < op.position + op.run; ++j)
                empty += parent.tokens[static_cast<std::size_t>(j)].from_input ? 1 : -1;
            return apply_deletion(ctx, parent, static_cast<std::size_t>(op.position),
                                  static_cast<std::size_t>(op.run), score, empty);
        }
    }
    fail("unknown operation kind");
}

std::pair<Case, Alignment> replay_history(const Case& input,
                                          const std::vector<AlignmentOp>& history) {
    enum ColKind { kSync, kLogMove, kModelMove };
    struct Col {
        ColKind kind;
        Event event;
    };
    std::vector<Col> cols;
    cols.reserve(input.events.size());
    for (const auto& e : input.events) cols.push_back({kSync, e});

    auto active_index = [&cols](std::size_t pos) {
        // Index in cols just past the pos-th active column.
        std::size_t seen = 0;
        std::size_t i = 0;
        for (; i < cols.size() && seen < pos; ++i)
            if (cols[i].kind != kLogMove) ++seen;
        if (seen < pos) fail("invalid position during replay");
        return i;
    };

    for (const auto& op : history) {
        switch (op.kind) {
            case AlignmentOp::Kind::sync:
                break;
            case AlignmentOp::Kind::insert: {
                std::size_t at = active_index(static_cast<std::size_t>(op.position));
                cols.insert(cols.begin() + at, {kModelMove, op.event});
                break;
            }
            case AlignmentOp::Kind::del: {
                if (op.run < 1) fail("invalid deletion run during replay");
                std::size_t begin = active_index(static_cast<std::size_t>(op.position));
                // `begin` points just past position-1 actives; walk over the
                // next `run` active columns.
                std::size_t remaining = static_cast<std::size_t>(op.run);
                std::size_t i = begin;
                std::vector<std::size_t> to_erase;
                while (remaining > 0) {
                    if (i >= cols.size()) fail("invalid position during replay");
                    if (cols[i].kind == kSync) {
                        cols[i].kind = kLogMove;
                        --remaining;
                    } else if (cols[i].kind == kModelMove) {
                        to_erase.push_back(i);
                        --remaining;
                    }
                    ++i;
                }
                for (auto it = to_erase.rbegin(); it != to_erase.rend(); ++it)
                    cols.erase(cols.begin() + *it);
                break;
            }
        }
    }

    Case corrected;
    corrected.id = input.id;
    corrected.case_attributes = input.case_attributes;
    Alignment alignment;
    alignment.reserve(cols.size());
    for (const auto& col : cols) {
        switch (col.kind) {
            case kSync:
                corrected.events.push_back(col.event);
                alignment.push_back({col.event.activity, col.event.activity});
                break;
            case kLogMove:
                alignment.push_back({col.event.activity, std::nullopt});
                break;
            case kModelMove:
                corrected.events.push_back(col.event);
                alignment.push_back({std::nullopt, col.event.activity});
                break;
        }
    }
    return {std::move(corrected), std::move(alignment)};
}

DeepAlignResult deep_align(const NextEventModel& fwd, const NextEventModel& bwd, const Case& input,
                           const SearchConfig& config) {
    if (config.beam_width < 1 || config.max_deletion_run < 1 || config.max_iterations < 1)
        throw std::invalid_argument("search config values must be at least 1");

    SearchContext ctx = make_context(fwd, bwd, input.case_attributes, config.control_flow_only);
    const Vocabulary& activities = ctx.schema.activity_vocabulary;
    const std::size_t K = static_cast<std::size_t>(config.beam_width);

    std::vector<Beam> beams;
    beams.push_back(make_beam(ctx, input));
    beams.back().score = case_score(fwd, bwd, input, config.control_flow_only);

    DeepAlignResult result;
    for (int iter = 1; iter <= config.max_iterations; ++iter) {
        result.iterations = iter;
        std::vector<Candidate> candidates;
        for (std::size_t bi = 0; bi < beams.size(); ++bi) {
            const Beam& beam = beams[bi];
            const std::size_t T = beam.tokens.size();

            Candidate noop;
            noop.score = beam.score;
            noop.empty_moves = beam.empty_moves;
            noop.parent = bi;
            noop.kind = AlignmentOp::Kind::sync;
            noop.act_key = activity_key(beam.tokens);
            noop.full_key = sequence_key(beam);
            candidates.push_back(std::move(noop));

            std::vector<std::vector<Eigen::VectorXd>> fdist(T + 1), bdist(T + 1);
            for (std::size_t t = 0; t <= T; ++t) {
                fdist[t] = fwd.head_distributions(beam.fwd_states[t]);
                bdist[t] = bwd.head_distributions(beam.bwd_states[t]);
            }

            // deletions of runs 1..N at every position
            for (std::size_t n = 1; n <= std::min<std::size_t>(config.max_deletion_run, T); ++n)
                for (std::size_t t = 0; t + n <= T; ++t) {
                    Candidate cand;
                    cand.score = score_deletion(fwd, bwd, ctx.cf_only, ctx.eos_step, beam,
                                                fdist[t], bdist[t + n], n, t);
                    cand.empty_moves = beam.empty_moves;
                    for (std::size_t j = t; j < t + n; ++j)
                        cand.empty_moves += beam.tokens[j].from_input ? 1 : -1;
                    cand.parent = bi;
                    cand.kind = AlignmentOp::Kind::del;
                    cand.position = t;
                    cand.run = n;
                    std::vector<Beam::Token> tokens;
                    tokens.insert(tokens.end(), beam.tokens.begin(), beam.tokens.begin() + t);
                    tokens.insert(tokens.end(), beam.tokens.begin() + t + n, beam.tokens.end());
                    cand.act_key = activity_key(tokens);
                    for (const auto& tok : tokens)
                        cand.full_key.insert(cand.full_key.end(), tok.ids.begin(), tok.ids.end());
                    candidates.push_back(std::move(cand));
                }

            // insertions of every activity at every position, attributes by
            // forward argmax
            for (std::size_t t = 0; t <= T; ++t) {
                Event proto;
                std::size_t k = 1;
                for (const auto& [name, vocab] : ctx.schema.event_attributes) {
                    int chosen = kNumReservedIds;  // lowest real id
                    if (k < fdist[t].size()) {
                        const Eigen::VectorXd& p = fdist[t][k];
                        double best = -1.0;
                        for (int id = kNumReservedIds; id < p.size(); ++id)
                            if (p(id) > best) {
                                best = p(id);
                                chosen = id;
                            }
                    }
                    proto.attributes[name] = vocab.decode(chosen);
                    ++k;
                }
                for (int act_id = kNumReservedIds; act_id < activities.size(); ++act_id) {
                    Event e = proto;
                    e.activity = activities.decode(act_id);
                    std::vector<int> ids = encode_event_ids(ctx.schema, e);
                    Candidate cand;
                    cand.score = score_insertion(fwd, bwd, ctx.cf_only, beam, fdist[t], bdist[t],
                                                 ids, t);
                    cand.empty_moves = beam.empty_moves + 1;
                    cand.parent = bi;
                    cand.kind = AlignmentOp::Kind::insert;
                    cand.position = t;
                    cand.event = std::move(e);
                    cand.act_key = activity_key(beam.tokens);
                    cand.act_key.insert(cand.act_key.begin() + t, ids[0]);
                    for (std::size_t j = 0; j < t; ++j)
                        cand.full_key.insert(cand.full_key.end(), beam.tokens[j].ids.begin(),
                                             beam.tokens[j].ids.end());
                    cand.full_key.insert(cand.full_key.end(), ids.begin(), ids.end());
                    for (std::size_t j = t; j < T; ++j)
                        cand.full_key.insert(cand.full_key.end(), beam.tokens[j].ids.begin(),
                                             beam.tokens[j].ids.end());
                    candidates.push_back(std::move(cand));
                }
            }
        }

        std::stable_sort(candidates.begin(), candidates.end(), candidate_order);

        // keep the best candidate per distinct corrected sequence
        std::vector<const Candidate*> selected;
        std::set<std::vector<int>> seen;
        for (const auto& cand : candidates) {
            if (selected.size() >= K) break;
            if (!seen.insert(cand.full_key).second) continue;
            selected.push_back(&cand);
        }

        std::vector<Beam> next;
        next.reserve(selected.size());
        for (const Candidate* cand : selected) {
            switch (cand->kind) {
                case AlignmentOp::Kind::sync:
                    next.push_back(beams[cand->parent]);
                    break;
                case AlignmentOp::Kind::insert:
                    next.push_back(apply_insertion(ctx, beams[cand->parent], cand->position,
                                                   cand->event, cand->score));
                    break;
                case AlignmentOp::Kind::del:
                    next.push_back(apply_deletion(ctx, beams[cand->parent], cand->position,
                                                  cand->run, cand->score, cand->empty_moves));
                    break;
            }
        }

        std::set<std::vector<int>> old_keys, new_keys;
        for (const auto& b : beams) old_keys.insert(sequence_key(b));
        for (const auto& b : next) new_keys.insert(sequence_key(b));
        beams = std::move(next);
        if (old_keys == new_keys) {
            result.converged = true;
            break;
        }
    }

    result.beams.reserve(beams.size());
    for (const auto& beam : beams) {
        auto [corrected, alignment] = replay_history(input, beam.history);
        AlignedBeam ab;
        ab.corrected = std::move(corrected);
        ab.alignment = std::move(alignment);
        ab.score = beam.score;
        ab.empty_moves = beam.empty_moves;
        result.beams.push_back(std::move(ab));
    }
    return result;
}

Case complete_case(const NextEventModel& fwd, const NextEventModel& bwd,
                   const std::map<std::string, std::string>& case_attrs,
                   const SearchConfig& config) {
    Case empty;
    empty.id = "completion";
    empty.case_attributes = case_attrs;
    DeepAlignResult result = deep_align(fwd, bwd, empty, config);
    return result.beams.front().corrected;
}

std::vector<AlignmentRecord> align_log(const NextEventModel& fwd, const NextEventModel& bwd,
                                       const EventLog& log, const SearchConfig& config,
                                       int n_threads) {
    std::vector<AlignmentRecord> records(log.cases.size());
    std::atomic<std::size_t> cursor{0};
    auto worker = [&]() {
        while (true) {
            std::size_t i = cursor.fetch_add(1);
            if (i >= log.cases.size()) return;
            const Case& c = log.cases[i];
            DeepAlignResult result = deep_align(fwd, bwd, c, config);
            const AlignedBeam& best = result.beams.front();
            AlignmentRecord rec;
            rec.id = c.id;
            rec.score = best.score;
            rec.alignment = best.alignment;
            rec.corrected = best.corrected.activities();
            rec.converged = result.converged;
            rec.iterations = result.iterations;
            records[i] = std::move(rec);
        }
    };
    int threads = std::max(1, n_threads);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return records;
}

void write_alignments(const std::vector<AlignmentRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("cannot open file for writing: " + path);
    for (const auto& rec : records) {
        nlohmann::ordered_json j;
        j["id"] = rec.id;
        j["score"] = rec.score;
        j["alignment"] = nlohmann::ordered_json::array();
        for (const auto& p : rec.alignment)
            j["alignment"].push_back({p.log ? *p.log : kGapSymbol, p.model ? *p.model : kGapSymbol});
        j["corrected"] = rec.corrected;
        j["converged"] = rec.converged;
        j["iterations"] = rec.iterations;
        out << j.dump() << "\n";
    }
    if (!out) fail("write failed: " + path);
}

std::vector<AlignmentRecord> read_alignments(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open alignments file: " + path);
    std::vector<AlignmentRecord> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            nlohmann::json j = nlohmann::json::parse(line);
            AlignmentRecord rec;
            rec.id = j.at("id").get<std::string>();
            rec.score = j.at("score").get<double>();
            for (const auto& pair : j.at("alignment")) {
                std::string log_side = pair.at(0).get<std::string>();
                std::string model_side = pair.at(1).get<std::string>();
                AlignmentPair p;
                if (log_side != kGapSymbol) p.log = log_side;
                if (model_side != kGapSymbol) p.model = model_side;
                if (!p.log && !p.model) fail("double gap in alignment");
                rec.alignment.push_back(std::move(p));
            }
            rec.corrected = j.at("corrected").get<std::vector<std::string>>();
            rec.converged = j.at("converged").get<bool>();
            rec.iterations = j.at("iterations").get<int>();
            records.push_back(std::move(rec));
        } catch (const std::exception& e) {
            fail(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return records;
}

}  // namespace deepalign
