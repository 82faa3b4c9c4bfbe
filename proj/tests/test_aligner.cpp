#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "deepalign/aligner.hpp"
#include "deepalign/evalkit.hpp"
#include "deepalign/neuralnet.hpp"
#include "deepalign/rng.hpp"
#include "testutil.hpp"

using namespace deepalign;
using testutil::TempDir;

namespace {

EventLog two_activity_log() {
    EventLog log;
    log.cases.push_back(testutil::make_case("c1", {"x", "y"}));
    log.cases.push_back(testutil::make_case("c2", {"x", "y"}));
    log.schema = build_schema(log.cases);
    return log;
}

EventLog attr_log(Rng& rng, std::size_t n_cases, std::size_t max_len = 6) {
    const std::vector<std::string> acts = {"a", "b", "c", "d"};
    const std::vector<std::string> users = {"u1", "u2"};
    EventLog log;
    for (std::size_t i = 0; i < n_cases; ++i) {
        Case c;
        c.id = "c" + std::to_string(i);
        c.case_attributes["Region"] = (i % 2) ? "east" : "west";
        std::size_t len = rng.uniform_index(max_len + 1);
        for (std::size_t k = 0; k < len; ++k) {
            Event e;
            e.activity = acts[rng.uniform_index(acts.size())];
            e.attributes["User"] = users[rng.uniform_index(2)];
            c.events.push_back(std::move(e));
        }
        log.cases.push_back(std::move(c));
    }
    log.schema = build_schema(log.cases);
    return log;
}

std::pair<NextEventModel, NextEventModel> random_models(const AttributeSchema& schema,
                                                        std::uint64_t seed, bool use_case,
                                                        bool use_event, int max_len = 8) {
    Rng fr(seed), br(seed + 1);
    return {NextEventModel::init(schema, Direction::forward, max_len, use_case, use_event, fr),
            NextEventModel::init(schema, Direction::backward, max_len, use_case, use_event, br)};
}

void zero_parameters(NextEventModel& model) {
    for (auto& [_, p] : model.parameters()) p->setZero();
}

Eigen::MatrixXd* param_by_name(NextEventModel& model, const std::string& name) {
    for (auto& [n, p] : model.parameters())
        if (n == name) return p;
    REQUIRE(false);
    return nullptr;
}

std::vector<int> event_ids(const AttributeSchema& schema, const Event& e) {
    std::vector<int> ids{schema.activity_vocabulary.encode(e.activity)};
    for (const auto& [name, vocab] : schema.event_attributes)
        ids.push_back(vocab.encode(e.attributes.at(name)));
    return ids;
}

// --- naive re-computation oracle for the factorization checks ---------------

// log P of the event run under the model, reading from state after BOS.
struct NaiveScorer {
    const NextEventModel& model;
    bool cf_only = false;

    // consume BOS then the given steps, returning (log prob, final state,
    // final dists)
    std::tuple<double, Eigen::VectorXd, std::vector<Eigen::VectorXd>> run(
        const Eigen::VectorXd& h0, const std::vector<std::vector<int>>& steps) const {
        std::vector<int> bos(1 + model.schema().event_attributes.size(), kBosId);
        Eigen::VectorXd h = model.advance(h0, bos);
        auto dists = model.head_distributions(h);
        double lp = 0.0;
        for (const auto& s : steps) {
            lp += model.step_log_prob(dists, s, cf_only);
            h = model.advance(h, s);
            dists = model.head_distributions(h);
        }
        return {lp, h, dists};
    }
};

double naive_insertion(const NextEventModel& fwd, const NextEventModel& bwd, const Case& c,
                       const Event& e, int t, bool cf_only) {
    const AttributeSchema& schema = fwd.schema();
    EncodedCase ef = encode_case(schema, c, Direction::forward);
    EncodedCase eb = encode_case(schema, c, Direction::backward);
    const std::size_t T = c.events.size();

    std::vector<std::vector<int>> prefix(ef.steps.begin() + 1, ef.steps.begin() + 1 + t);
    std::vector<std::vector<int>> suffix_rev(eb.steps.begin() + 1,
                                             eb.steps.begin() + 1 + (T - t));
    NaiveScorer f{fwd, cf_only}, b{bwd, cf_only};
    auto [lp1, hf, fdists] = f.run(fwd.case_state(ef.case_attr_ids), prefix);
    auto [lp4, hb, bdists] = b.run(bwd.case_state(eb.case_attr_ids), suffix_rev);
    std::vector<int> ids = event_ids(schema, e);
    double lp2 = fwd.step_log_prob(fdists, ids, cf_only);
    double lp3 = bwd.step_log_prob(bdists, ids, cf_only);
    return lp1 + lp2 + lp3 + lp4;
}

double naive_deletion(const NextEventModel& fwd, const NextEventModel& bwd, const Case& c, int n,
                      int t, bool cf_only) {
    const AttributeSchema& schema = fwd.schema();
    EncodedCase ef = encode_case(schema, c, Direction::forward);
    EncodedCase eb = encode_case(schema, c, Direction::backward);
    const int T = static_cast<int>(c.events.size());

    std::vector<std::vector<int>> prefix(ef.steps.begin() + 1, ef.steps.begin() + 1 + t);
    std::vector<std::vector<int>> suffix_rev(eb.steps.begin() + 1,
                                             eb.steps.begin() + 1 + (T - t - n));
    NaiveScorer f{fwd, cf_only}, b{bwd, cf_only};
    auto [lp1, hf, fdists] = f.run(fwd.case_state(ef.case_attr_ids), prefix);
    auto [lp4, hb, bdists] = b.run(bwd.case_state(eb.case_attr_ids), suffix_rev);
    std::vector<int> eos(1 + schema.event_attributes.size(), kEosId);
    std::vector<int> next = (t + n < T) ? event_ids(schema, c.events[t + n]) : eos;
    std::vector<int> prev = (t > 0) ? event_ids(schema, c.events[t - 1]) : eos;
    double lp2 = fwd.step_log_prob(fdists, next, cf_only);
    double lp3 = bwd.step_log_prob(bdists, prev, cf_only);
    return lp1 + lp2 + lp3 + lp4;
}

}  // namespace

TEST_CASE("case_score equals log p when both directions agree") {
    EventLog log = two_activity_log();
    auto [fwd, bwd] = random_models(log.schema, 1, false, false, 4);
    zero_parameters(fwd);
    zero_parameters(bwd);
    // all-zero weights: every step is uniform over the 5-symbol vocabulary
    double per_step = std::log(1.0 / 5.0);
    double expected = 3 * per_step;  // two events plus the EOS prediction
    CHECK(case_score(fwd, bwd, log.cases[0]) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("case_score matches a hand-computed bias-only model") {
    EventLog log = two_activity_log();
    auto [fwd, bwd] = random_models(log.schema, 2, false, false, 4);
    zero_parameters(fwd);
    zero_parameters(bwd);
    // vocabulary ids: pad bos eos x y
    Eigen::VectorXd fwd_bias(5), bwd_bias(5);
    fwd_bias << 0.0, 0.0, 0.5, 1.0, 2.0;
    bwd_bias << 0.0, 0.0, 1.5, 0.5, 1.0;
    param_by_name(fwd, "head.activity.b")->col(0) = fwd_bias;
    param_by_name(bwd, "head.activity.b")->col(0) = bwd_bias;

    auto dist = [](const Eigen::VectorXd& bias, int id) {
        double denom = bias.array().exp().sum();
        return std::exp(bias(id)) / denom;
    };
    // case <x, y>: forward reads x, y, eos; backward reads y, x, eos
    double pf = dist(fwd_bias, 3) * dist(fwd_bias, 4) * dist(fwd_bias, 2);
    double pb = dist(bwd_bias, 4) * dist(bwd_bias, 3) * dist(bwd_bias, 2);
    double expected = std::log(0.5 * (pf + pb));
    CHECK(case_score(fwd, bwd, log.cases[0]) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("case_score is bounded by the larger directional log-prob") {
    Rng rng(3);
    EventLog log = attr_log(rng, 20);
    auto [fwd, bwd] = random_models(log.schema, 4, true, true);
    for (const auto& c : log.cases) {
        EncodedCase ef = encode_case(log.schema, c, Direction::forward);
        EncodedCase eb = encode_case(log.schema, c, Direction::backward);
        double lpf = fwd.sequence_log_prob(ef);
        double lpb = bwd.sequence_log_prob(eb);
        CHECK(case_score(fwd, bwd, c) <= std::max(lpf, lpb) + 1e-12);
    }
}

TEST_CASE("case_score rejects mismatched schemas") {
    EventLog log = two_activity_log();
    EventLog other;
    other.cases.push_back(testutil::make_case("o", {"x", "y", "z"}));
    other.schema = build_schema(other.cases);
    auto [fwd, _unused] = random_models(log.schema, 5, false, false, 4);
    auto [_unused2, bwd] = random_models(other.schema, 6, false, false, 4);
    CHECK_THROWS_WITH(case_score(fwd, bwd, log.cases[0]), doctest::Contains("schema"));
}

TEST_CASE("insertion at position 0 of the empty case is a pure continuation product") {
    EventLog log = two_activity_log();
    auto [fwd, bwd] = random_models(log.schema, 7, false, false, 4);
    Case empty;
    Beam beam = init_beam(fwd, bwd, empty);
    Event e = testutil::make_event("x");

    std::vector<int> bos{kBosId};
    auto fdist = fwd.head_distributions(fwd.advance(Eigen::VectorXd::Zero(8), bos));
    auto bdist = bwd.head_distributions(bwd.advance(Eigen::VectorXd::Zero(8), bos));
    int id = log.schema.activity_vocabulary.encode("x");
    double expected = std::log(fdist[0](id)) + std::log(bdist[0](id));
    CHECK(insertion_score(fwd, bwd, beam, e, 0) == doctest::Approx(expected).epsilon(1e-12));
    CHECK_THROWS_AS(insertion_score(fwd, bwd, beam, e, 1), std::out_of_range);
}

TEST_CASE("insertion and deletion scores match naive recomputation") {
    Rng rng(8);
    EventLog log = attr_log(rng, 30);
    for (bool cf_only : {false, true}) {
        for (std::uint64_t seed : {11, 12}) {
            auto [fwd, bwd] = random_models(log.schema, seed, true, true);
            for (const auto& c : log.cases) {
                Beam beam = init_beam(fwd, bwd, c, cf_only);
                const int T = static_cast<int>(c.events.size());
                for (int t = 0; t <= T; ++t) {
                    Event e;
                    e.activity = "b";
                    e.attributes["User"] = "u2";
                    CHECK(insertion_score(fwd, bwd, beam, e, t, cf_only) ==
                          doctest::Approx(naive_insertion(fwd, bwd, c, e, t, cf_only))
                              .epsilon(1e-9));
                }
                for (int n = 1; n <= std::min(3, T); ++n)
                    for (int t = 0; t + n <= T; ++t)
                        CHECK(deletion_score(fwd, bwd, beam, n, t, cf_only) ==
                              doctest::Approx(naive_deletion(fwd, bwd, c, n, t, cf_only))
                                  .epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("incrementally maintained caches equal a fresh rebuild") {
    Rng rng(13);
    EventLog log = attr_log(rng, 15, 5);
    auto [fwd, bwd] = random_models(log.schema, 14, true, true);

    for (const auto& c : log.cases) {
        Beam beam = init_beam(fwd, bwd, c);
        Case current = c;
        for (int round = 0; round < 4; ++round) {
            AlignmentOp op;
            const int T = static_cast<int>(current.events.size());
            if (T > 0 && rng.uniform() < 0.5) {
                op.kind = AlignmentOp::Kind::del;
                op.run = 1 + static_cast<int>(rng.uniform_index(std::min(2, T)));
                op.position = static_cast<int>(rng.uniform_index(T - op.run + 1));
                current.events.erase(current.events.begin() + op.position,
                                     current.events.begin() + op.position + op.run);
            } else {
                op.kind = AlignmentOp::Kind::insert;
                op.position = static_cast<int>(rng.uniform_index(T + 1));
                op.event.activity = "c";
                op.event.attributes["User"] = "u1";
                current.events.insert(current.events.begin() + op.position, op.event);
            }
            beam = apply_op(fwd, bwd, beam, op);

            Beam fresh = init_beam(fwd, bwd, current);
            REQUIRE(beam.fwd_states.size() == fresh.fwd_states.size());
            for (std::size_t i = 0; i < fresh.fwd_states.size(); ++i) {
                CHECK(beam.fwd_states[i] == fresh.fwd_states[i]);
                CHECK(beam.bwd_states[i] == fresh.bwd_states[i]);
                CHECK(beam.fwd_prefix_lp[i] == fresh.fwd_prefix_lp[i]);
                CHECK(beam.bwd_suffix_lp[i] == fresh.bwd_suffix_lp[i]);
            }
            // history replays to the current case
            auto [corrected, alignment] = replay_history(c, beam.history);
            CHECK(corrected.events == current.events);
            CHECK(empty_move_count(alignment) == beam.empty_moves);
        }
    }
}

TEST_CASE("replay_history") {
    Case input = testutil::make_case("r1", {"a", "b", "c"});

    SUBCASE("empty history is the all-sync identity") {
        auto [corrected, alignment] = replay_history(input, {});
        CHECK(corrected.events == input.events);
        REQUIRE(alignment.size() == 3);
        for (const auto& p : alignment) CHECK(p.is_sync());
    }

    SUBCASE("a single deletion becomes one log move") {
        AlignmentOp op;
        op.kind = AlignmentOp::Kind::del;
        op.position = 1;
        op.run = 1;
        auto [corrected, alignment] = replay_history(input, {op});
        CHECK(corrected.activities() == std::vector<std::string>{"a", "c"});
        REQUIRE(alignment.size() == 3);
        CHECK(alignment[1].is_log_move());
        CHECK(*alignment[1].log == "b");
    }

    SUBCASE("insert and delete compose to the late-anomaly shape") {
        // late anomaly: <a, c, b> where b belongs between a and c
        Case late = testutil::make_case("r2", {"a", "c", "b"});
        AlignmentOp ins;
        ins.kind = AlignmentOp::Kind::insert;
        ins.position = 1;
        ins.event = testutil::make_event("b");
        AlignmentOp del;
        del.kind = AlignmentOp::Kind::del;
        del.position = 3;  // the stale trailing b, after the insertion
        del.run = 1;
        auto [corrected, alignment] = replay_history(late, {ins, del});
        CHECK(corrected.activities() == std::vector<std::string>{"a", "b", "c"});
        REQUIRE(alignment.size() == 4);
        CHECK(alignment[0].is_sync());
        CHECK(alignment[1].is_model_move());
        CHECK(*alignment[1].model == "b");
        CHECK(alignment[2].is_sync());
        CHECK(alignment[3].is_log_move());
        CHECK(*alignment[3].log == "b");
    }

    SUBCASE("deleting an inserted event removes the column entirely") {
        AlignmentOp ins;
        ins.kind = AlignmentOp::Kind::insert;
        ins.position = 0;
        ins.event = testutil::make_event("c");
        AlignmentOp del;
        del.kind = AlignmentOp::Kind::del;
        del.position = 0;
        del.run = 1;
        auto [corrected, alignment] = replay_history(input, {ins, del});
        CHECK(corrected.events == input.events);
        CHECK(alignment.size() == 3);
        for (const auto& p : alignment) CHECK(p.is_sync());
    }

    SUBCASE("invalid positions are reported") {
        AlignmentOp op;
        op.kind = AlignmentOp::Kind::del;
        op.position = 2;
        op.run = 2;
        CHECK_THROWS_WITH(replay_history(input, {op}), doctest::Contains("replay"));
    }
}

TEST_CASE("equal-score beams are ordered by empty moves, then lexicographically") {
    EventLog log = two_activity_log();
    auto [fwd, bwd] = random_models(log.schema, 15, false, false, 4);
    zero_parameters(fwd);
    zero_parameters(bwd);

    SearchConfig config;
    config.beam_width = 5;
    config.max_deletion_run = 1;
    config.max_iterations = 1;
    DeepAlignResult result = deep_align(fwd, bwd, log.cases[0], config);

    REQUIRE(result.beams.size() == 5);
    // all uniform: the unmodified case and both single deletions tie exactly
    CHECK(result.beams[0].score == result.beams[1].score);
    CHECK(result.beams[1].score == result.beams[2].score);
    CHECK(result.beams[0].corrected.activities() == std::vector<std::string>{"x", "y"});
    CHECK(result.beams[0].empty_moves == 0);
    CHECK(result.beams[1].corrected.activities() == std::vector<std::string>{"x"});
    CHECK(result.beams[2].corrected.activities() == std::vector<std::string>{"y"});
    CHECK(result.beams[1].empty_moves == 1);
    CHECK(result.beams[2].empty_moves == 1);
}

TEST_CASE("deep_align restores a single-variant log after one deletion") {
    const std::vector<std::string> variant = {"a", "b", "c", "d", "e"};
    EventLog log;
    for (int i = 0; i < 80; ++i)
        log.cases.push_back(testutil::make_case("v" + std::to_string(i), variant));
    log.schema = build_schema(log.cases);

    auto train_dir = [&](Direction dir, std::uint64_t seed) {
        Rng rng(seed);
        NextEventModel model = NextEventModel::init(log.schema, dir, 7, false, false, rng);
        TrainConfig config;
        config.epochs = 250;
        config.batch_size = 20;
        config.seed = seed;
        train(model, log, config);
        return model;
    };
    NextEventModel fwd = train_dir(Direction::forward, 31);
    NextEventModel bwd = train_dir(Direction::backward, 32);

    SearchConfig config;
    config.beam_width = 1;
    config.max_deletion_run = 1;
    for (std::size_t drop = 0; drop < variant.size(); ++drop) {
        Case damaged = log.cases[0];
        damaged.events.erase(damaged.events.begin() + drop);
        DeepAlignResult result = deep_align(fwd, bwd, damaged, config);
        const AlignedBeam& best = result.beams.front();
        CHECK(best.corrected.activities() == variant);
        CHECK(best.empty_moves == 1);
        CHECK(result.iterations <= config.max_iterations);
        int model_moves = 0;
        for (const auto& p : best.alignment)
            if (p.is_model_move()) ++model_moves;
        CHECK(model_moves == 1);
    }

    SUBCASE("clean input aligns all-sync") {
        DeepAlignResult result = deep_align(fwd, bwd, log.cases[0], config);
        CHECK(result.beams.front().empty_moves == 0);
        CHECK(result.beams.front().corrected.activities() == variant);
        CHECK(result.converged);
    }

    SUBCASE("complete_case reproduces the variant from nothing") {
        SearchConfig complete_config;
        Case completed = complete_case(fwd, bwd, {}, complete_config);
        CHECK(completed.activities() == variant);
    }
}

TEST_CASE("alignment invariants hold on random models") {
    Rng rng(33);
    EventLog log = attr_log(rng, 40);
    auto [fwd, bwd] = random_models(log.schema, 34, true, true);
    SearchConfig config;
    config.max_iterations = 6;

    for (const auto& c : log.cases) {
        double input_score = case_score(fwd, bwd, c);
        DeepAlignResult result = deep_align(fwd, bwd, c, config);
        CHECK(result.iterations <= config.max_iterations);
        CHECK(result.beams.front().score >= input_score - 1e-12);
        for (const auto& beam : result.beams) {
            CHECK(log_projection(beam.alignment) == c.activities());
            CHECK(model_projection(beam.alignment) == beam.corrected.activities());
            for (const auto& p : beam.alignment) CHECK((p.log || p.model));
            CHECK(empty_move_count(beam.alignment) == beam.empty_moves);
            CHECK(empty_move_count(beam.alignment) >=
                  optimal_empty_moves(log_projection(beam.alignment),
                                      model_projection(beam.alignment)));
        }
    }
}

TEST_CASE("align_log is case-parallel deterministic") {
    Rng rng(35);
    EventLog log = attr_log(rng, 25);
    auto [fwd, bwd] = random_models(log.schema, 36, true, true);
    SearchConfig config;
    config.max_iterations = 3;
    auto serial = align_log(fwd, bwd, log, config, 1);
    auto parallel = align_log(fwd, bwd, log, config, 4);
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].id == parallel[i].id);
        CHECK(serial[i].score == parallel[i].score);
        CHECK(serial[i].corrected == parallel[i].corrected);
        CHECK(serial[i].alignment == parallel[i].alignment);
    }
}

TEST_CASE("alignment record file round-trip") {
    TempDir dir("aligner_records");
    Rng rng(37);
    EventLog log = attr_log(rng, 10);
    auto [fwd, bwd] = random_models(log.schema, 38, true, true);
    SearchConfig config;
    config.max_iterations = 2;
    auto records = align_log(fwd, bwd, log, config, 1);
    write_alignments(records, dir.file("alignments.jsonl"));
    auto back = read_alignments(dir.file("alignments.jsonl"));
    REQUIRE(back.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(back[i].id == records[i].id);
        CHECK(back[i].score == records[i].score);
        CHECK(back[i].alignment == records[i].alignment);
        CHECK(back[i].corrected == records[i].corrected);
        CHECK(back[i].converged == records[i].converged);
        CHECK(back[i].iterations == records[i].iterations);
    }
}
