#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <climits>
#include <functional>

#include "deepalign/evalkit.hpp"
#include "deepalign/rng.hpp"
#include "testutil.hpp"

using namespace deepalign;

namespace {

using Seq = std::vector<std::string>;

// Brute-force edit distance: try every script of sync / substitute / insert /
// delete moves.
int brute_levenshtein(const Seq& a, const Seq& b, std::size_t i = 0, std::size_t j = 0) {
    if (i == a.size()) return static_cast<int>(b.size() - j);
    if (j == b.size()) return static_cast<int>(a.size() - i);
    int best = 1 + brute_levenshtein(a, b, i + 1, j);
    best = std::min(best, 1 + brute_levenshtein(a, b, i, j + 1));
    best = std::min(best, (a[i] == b[j] ? 0 : 1) + brute_levenshtein(a, b, i + 1, j + 1));
    return best;
}

// Brute-force minimal gap count: sync only on equal symbols, otherwise one
// gap per side.
int brute_empty_moves(const Seq& a, const Seq& b, std::size_t i = 0, std::size_t j = 0) {
    if (i == a.size()) return static_cast<int>(b.size() - j);
    if (j == b.size()) return static_cast<int>(a.size() - i);
    int best = 1 + brute_empty_moves(a, b, i + 1, j);
    best = std::min(best, 1 + brute_empty_moves(a, b, i, j + 1));
    if (a[i] == b[j]) best = std::min(best, brute_empty_moves(a, b, i + 1, j + 1));
    return best;
}

std::vector<Seq> all_sequences(const std::vector<std::string>& alphabet, std::size_t max_len) {
    std::vector<Seq> out = {{}};
    std::vector<Seq> frontier = {{}};
    for (std::size_t len = 1; len <= max_len; ++len) {
        std::vector<Seq> next;
        for (const auto& seq : frontier)
            for (const auto& sym : alphabet) {
                Seq grown = seq;
                grown.push_back(sym);
                next.push_back(grown);
                out.push_back(std::move(grown));
            }
        frontier = std::move(next);
    }
    return out;
}

Seq random_seq(Rng& rng, std::size_t max_len) {
    const std::vector<std::string> alphabet = {"a", "b", "c", "d"};
    Seq s;
    std::size_t len = rng.uniform_index(max_len + 1);
    for (std::size_t i = 0; i < len; ++i) s.push_back(alphabet[rng.uniform_index(4)]);
    return s;
}

AlignmentRecord make_record(const std::string& id, const Alignment& alignment) {
    AlignmentRecord rec;
    rec.id = id;
    rec.alignment = alignment;
    rec.corrected = model_projection(alignment);
    rec.converged = true;
    rec.iterations = 1;
    return rec;
}

Case truth_case(const std::string& id, const Seq& activities, const std::string& label) {
    Case c = testutil::make_case(id, activities);
    c.label = label;
    return c;
}

}  // namespace

TEST_CASE("levenshtein on fixed examples") {
    CHECK(levenshtein({"a", "b", "c"}, {"a", "b", "c"}) == 0);
    CHECK(levenshtein({"a", "b", "c"}, {}) == 3);
    CHECK(levenshtein({"a", "b", "c", "x", "e"}, {"a", "b", "c", "d", "e"}) == 1);
}

TEST_CASE("levenshtein is a metric on random sequences") {
    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        Seq a = random_seq(rng, 7), b = random_seq(rng, 7), c = random_seq(rng, 7);
        int dab = levenshtein(a, b);
        CHECK(dab == levenshtein(b, a));
        CHECK((dab == 0) == (a == b));
        CHECK(dab <= levenshtein(a, c) + levenshtein(c, b));
    }
}

TEST_CASE("optimal_empty_moves on fixed examples") {
    CHECK(optimal_empty_moves({"a", "b", "c", "x", "e"}, {"a", "b", "c", "d", "e"}) == 2);
    CHECK(optimal_empty_moves({"a", "b"}, {"a", "b"}) == 0);
    CHECK(optimal_empty_moves({}, {"a", "b", "c"}) == 3);
    CHECK(optimal_empty_moves({"a", "b", "c"}, {}) == 3);
}

TEST_CASE("dp oracles match exhaustive search over short sequences") {
    // Acceptance criterion 9 runs the full grid; this keeps a small version in
    // the unit suite.
    auto seqs = all_sequences({"a", "b", "c"}, 3);
    for (const auto& a : seqs)
        for (const auto& b : seqs) {
            CHECK(levenshtein(a, b) == brute_levenshtein(a, b));
            CHECK(optimal_empty_moves(a, b) == brute_empty_moves(a, b));
        }
}

TEST_CASE("optimal_empty_moves lower bound and parity") {
    Rng rng(23);
    for (int trial = 0; trial < 200; ++trial) {
        Seq a = random_seq(rng, 7), b = random_seq(rng, 7);
        int gaps = optimal_empty_moves(a, b);
        int diff = static_cast<int>(a.size()) - static_cast<int>(b.size());
        CHECK(gaps >= std::abs(diff));
        // every sync consumes one symbol of each side, so the gap count has
        // the parity of |a| + |b|
        CHECK((gaps % 2) == (static_cast<int>(a.size() + b.size()) % 2));
    }
}

TEST_CASE("reference_align basics") {
    std::vector<Seq> variants = {{"a", "b", "c"}, {"a", "d", "c"}};

    SUBCASE("a case equal to a variant aligns all-sync") {
        Alignment al = reference_align({"a", "d", "c"}, variants);
        CHECK(empty_move_count(al) == 0);
        CHECK(log_projection(al) == Seq{"a", "d", "c"});
        CHECK(model_projection(al) == Seq{"a", "d", "c"});
    }

    SUBCASE("a one-deletion case needs one model move") {
        Alignment al = reference_align({"a", "c"}, variants);
        CHECK(empty_move_count(al) == 1);
        CHECK(log_projection(al) == Seq{"a", "c"});
        // ties across variants resolve to the lexicographically smaller one
        CHECK(model_projection(al) == Seq{"a", "b", "c"});
    }

    SUBCASE("empty variant set is an error") {
        CHECK_THROWS(reference_align({"a"}, {}));
    }

    SUBCASE("alignment cost agrees with the oracle") {
        Rng rng(31);
        for (int trial = 0; trial < 100; ++trial) {
            Seq probe = random_seq(rng, 6);
            int best = INT_MAX;
            for (const auto& v : variants) best = std::min(best, optimal_empty_moves(probe, v));
            Alignment al = reference_align(probe, variants);
            CHECK(empty_move_count(al) == best);
            CHECK(log_projection(al) == probe);
        }
    }
}

TEST_CASE("evaluate on a hand-built micro log") {
    // 4 cases: one true normal aligned all-sync (TN), one true normal with a
    // spurious edit (FP), one anomaly corrected exactly (TP), one anomaly
    // aligned all-sync (FN).
    EventLog truth;
    truth.cases.push_back(truth_case("c1", {"a", "b"}, "normal"));
    truth.cases.push_back(truth_case("c2", {"a", "b"}, "normal"));
    truth.cases.push_back(truth_case("c3", {"a", "b"}, "skip"));
    truth.cases.push_back(truth_case("c4", {"a", "x"}, "attribute"));
    truth.schema = build_schema(truth.cases);

    std::vector<AlignmentRecord> recs;
    recs.push_back(make_record("c1", {{"a", "a"}, {"b", "b"}}));
    // c2: model dropped "b" -> prediction anomalous, corrected != truth
    recs.push_back(make_record("c2", {{"a", "a"}, {"b", std::nullopt}}));
    // c3: skip anomaly, "b" restored by a model move -> corrected == truth
    recs.push_back(make_record("c3", {{"a", "a"}, {std::nullopt, "b"}}));
    // c4: attribute anomaly, all-sync -> predicted normal but still correct
    recs.push_back(make_record("c4", {{"a", "a"}, {"x", "x"}}));

    EvaluationReport report = evaluate(recs, truth);
    CHECK(report.n_cases == 4);

    // anomalous: TP=1 (c3), FP=1 (c2), FN=1 (c4) -> P=R=0.5, F1=0.5
    CHECK(report.f1_anomalous == doctest::Approx(0.5));
    // normal: TP=1 (c1), FP=1 (c4 predicted normal), FN=1 (c2) -> F1=0.5
    CHECK(report.f1_normal == doctest::Approx(0.5));
    CHECK(report.f1_macro == doctest::Approx(0.5));

    // correct corrections: c1, c3, c4 -> accuracy 0.75
    CHECK(report.correction_accuracy == doctest::Approx(0.75));
    // only c2 is incorrect, distance 1
    CHECK(report.has_incorrect);
    CHECK(report.mean_levenshtein_incorrect == doctest::Approx(1.0));
    // all three correct ones have minimal empty moves
    CHECK(report.has_correct);
    CHECK(report.optimality_rate == doctest::Approx(1.0));

    CHECK(report.per_kind.at("skip").count == 1);
    CHECK(report.per_kind.at("skip").detected == 1);
    CHECK(report.per_kind.at("attribute").detected == 0);
    CHECK(report.per_kind.at("attribute").corrected == 1);
}

TEST_CASE("evaluate: all exact and minimal") {
    EventLog truth;
    truth.cases.push_back(truth_case("c1", {"a"}, "normal"));
    truth.cases.push_back(truth_case("c2", {"a", "b"}, "normal"));
    truth.schema = build_schema(truth.cases);
    std::vector<AlignmentRecord> recs;
    recs.push_back(make_record("c1", {{"a", "a"}}));
    recs.push_back(make_record("c2", {{"a", "a"}, {"b", "b"}}));

    EvaluationReport report = evaluate(recs, truth);
    CHECK(report.f1_normal == doctest::Approx(1.0));
    // no anomalous cases at all: F1_A degenerates to 0 by convention
    CHECK(report.correction_accuracy == doctest::Approx(1.0));
    CHECK_FALSE(report.has_incorrect);
    CHECK(report.mean_levenshtein_incorrect == 0.0);
    CHECK(report.optimality_rate == doctest::Approx(1.0));
}

TEST_CASE("evaluate is permutation invariant and strict about ids") {
    EventLog truth;
    truth.cases.push_back(truth_case("c1", {"a"}, "normal"));
    truth.cases.push_back(truth_case("c2", {"b"}, "skip"));
    truth.schema = build_schema(truth.cases);
    std::vector<AlignmentRecord> recs;
    recs.push_back(make_record("c1", {{"a", "a"}}));
    recs.push_back(make_record("c2", {{"b", "b"}}));

    EvaluationReport forward_order = evaluate(recs, truth);
    std::reverse(recs.begin(), recs.end());
    EvaluationReport reverse_order = evaluate(recs, truth);
    CHECK(forward_order.f1_macro == reverse_order.f1_macro);
    CHECK(forward_order.correction_accuracy == reverse_order.correction_accuracy);

    recs.pop_back();
    CHECK_THROWS(evaluate(recs, truth));
    recs.push_back(make_record("c9", {{"b", "b"}}));
    CHECK_THROWS(evaluate(recs, truth));
}

TEST_CASE("report json round-trip") {
    EventLog truth;
    truth.cases.push_back(truth_case("c1", {"a"}, "normal"));
    truth.schema = build_schema(truth.cases);
    std::vector<AlignmentRecord> recs;
    recs.push_back(make_record("c1", {{"a", "a"}}));
    EvaluationReport report = evaluate(recs, truth);
    report.config_echo = R"({"command":"evaluate"})";

    EvaluationReport back = report_from_json(report_to_json(report));
    CHECK(back.f1_macro == report.f1_macro);
    CHECK(back.n_cases == report.n_cases);
    CHECK(back.confusion == report.confusion);
}
