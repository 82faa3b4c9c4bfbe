#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "deepalign/corpus.hpp"
#include "deepalign/rng.hpp"
#include "testutil.hpp"

using namespace deepalign;
using testutil::make_case;
using testutil::make_event;
using testutil::TempDir;

TEST_CASE("build_schema sorts vocabularies after the reserved symbols") {
    EventLog log;
    log.cases.push_back(make_case("c1", {"b", "a"}));
    AttributeSchema schema = build_schema(log.cases);

    CHECK(schema.activity_vocabulary.size() == 5);
    CHECK(schema.activity_vocabulary.encode("a") == 3);
    CHECK(schema.activity_vocabulary.encode("b") == 4);
    CHECK(schema.activity_vocabulary.decode(kPadId) == "<pad>");
    CHECK(schema.activity_vocabulary.decode(kBosId) == "<bos>");
    CHECK(schema.activity_vocabulary.decode(kEosId) == "<eos>");
}

TEST_CASE("build_schema collects case attribute vocabularies") {
    EventLog log;
    for (const auto& [topic, decision] :
         std::vector<std::pair<std::string, std::string>>{{"Theory", "Accept"},
                                                          {"Engineering", "Reject"},
                                                          {"Theory", "Weak Accept"}}) {
        Case c = make_case("c" + topic + decision, {"Submit"});
        c.case_attributes["Topic"] = topic;
        c.case_attributes["Decision"] = decision;
        log.cases.push_back(std::move(c));
    }
    AttributeSchema schema = build_schema(log.cases);
    REQUIRE(schema.case_attributes.size() == 2);
    CHECK(schema.case_attributes[0].first == "Decision");
    CHECK(schema.case_attributes[1].first == "Topic");
    CHECK(schema.case_vocab("Topic").num_real_values() == 2);
    CHECK(schema.case_vocab("Decision").num_real_values() == 3);
}

TEST_CASE("build_schema is deterministic and rejects an empty corpus") {
    Rng rng(42);
    EventLog log = testutil::random_log(rng, 20);
    CHECK(build_schema(log.cases) == build_schema(log.cases));
    CHECK_THROWS_WITH(build_schema(std::vector<Case>{}), doctest::Contains("empty corpus"));
}

TEST_CASE("encode_case frames and reverses") {
    EventLog log;
    log.cases.push_back(make_case("c1", {"a", "b", "c"}));
    AttributeSchema schema = build_schema(log.cases);

    EncodedCase fwd = encode_case(schema, log.cases[0], Direction::forward);
    REQUIRE(fwd.steps.size() == 5);
    CHECK(fwd.steps.front() == std::vector<int>{kBosId});
    CHECK(fwd.steps.back() == std::vector<int>{kEosId});
    CHECK(fwd.steps[1][0] == schema.activity_vocabulary.encode("a"));
    CHECK(fwd.steps[3][0] == schema.activity_vocabulary.encode("c"));

    EncodedCase bwd = encode_case(schema, log.cases[0], Direction::backward);
    CHECK(bwd.steps[1][0] == schema.activity_vocabulary.encode("c"));
    CHECK(bwd.steps[3][0] == schema.activity_vocabulary.encode("a"));

    SUBCASE("backward interior is the reverse of forward interior") {
        Rng rng(7);
        EventLog rl = testutil::random_log(rng, 50);
        for (const auto& c : rl.cases) {
            EncodedCase f = encode_case(rl.schema, c, Direction::forward);
            EncodedCase b = encode_case(rl.schema, c, Direction::backward);
            std::vector<std::vector<int>> interior(f.steps.begin() + 1, f.steps.end() - 1);
            std::reverse(interior.begin(), interior.end());
            CHECK(std::vector<std::vector<int>>(b.steps.begin() + 1, b.steps.end() - 1) ==
                  interior);
        }
    }
}

TEST_CASE("encode_case on the empty case gives BOS EOS in either direction") {
    EventLog log;
    log.cases.push_back(make_case("c1", {"a"}));
    AttributeSchema schema = build_schema(log.cases);
    Case empty = make_case("c2", {});
    for (Direction dir : {Direction::forward, Direction::backward}) {
        EncodedCase enc = encode_case(schema, empty, dir);
        REQUIRE(enc.steps.size() == 2);
        CHECK(enc.steps[0][0] == kBosId);
        CHECK(enc.steps[1][0] == kEosId);
    }
}

TEST_CASE("encode_case rejects out-of-vocabulary values with attribute and value named") {
    EventLog log;
    Case c = make_case("c1", {"a"});
    c.events[0].attributes["User"] = "u1";
    log.cases.push_back(c);
    AttributeSchema schema = build_schema(log.cases);

    Case bad_act = make_case("x", {"zz"});
    bad_act.events[0].attributes["User"] = "u1";
    CHECK_THROWS_WITH(encode_case(schema, bad_act, Direction::forward), doctest::Contains("zz"));

    Case bad_attr = make_case("x", {"a"});
    bad_attr.events[0].attributes["User"] = "u9";
    CHECK_THROWS_WITH(encode_case(schema, bad_attr, Direction::forward),
                      doctest::Contains("User"));
    CHECK_THROWS_WITH(encode_case(schema, bad_attr, Direction::forward), doctest::Contains("u9"));
}

TEST_CASE("decode_sequence strips framing and rejects unknown ids") {
    EventLog log;
    log.cases.push_back(make_case("c1", {"a", "b"}));
    AttributeSchema schema = build_schema(log.cases);

    CHECK(decode_sequence(schema, {kBosId, 3, kEosId}) == std::vector<std::string>{"a"});
    CHECK(decode_sequence(schema, {kBosId, kEosId}).empty());
    CHECK_THROWS(decode_sequence(schema, {999}));
}

TEST_CASE("encode then decode is the identity on activities") {
    Rng rng(3);
    EventLog log = testutil::random_log(rng, 30);
    for (const auto& c : log.cases) {
        EncodedCase enc = encode_case(log.schema, c, Direction::forward);
        std::vector<int> act_ids;
        for (const auto& s : enc.steps) act_ids.push_back(s[0]);
        CHECK(decode_sequence(log.schema, act_ids) == c.activities());
    }
}

TEST_CASE("log round-trip is the identity") {
    TempDir dir("corpus_roundtrip");
    Rng rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        EventLog log = testutil::random_log(rng, 1 + rng.uniform_index(30));
        std::string path = dir.file("log_" + std::to_string(trial) + ".jsonl");
        write_log(log, path);
        EventLog back = read_log(path);
        CHECK(back == log);
    }
}

TEST_CASE("labels survive the round-trip") {
    TempDir dir("corpus_labels");
    Rng rng(5);
    EventLog log = testutil::random_log(rng, 10);
    log.cases[0].label = "normal";
    log.cases[1].label = "skip";
    write_log(log, dir.file("labeled.jsonl"));
    EventLog back = read_log(dir.file("labeled.jsonl"));
    CHECK(back.cases[0].label == "normal");
    CHECK(back.cases[1].label == "skip");
    CHECK(back.cases[2].label.empty());
}

TEST_CASE("read_log reports malformed lines with their line number") {
    TempDir dir("corpus_malformed");
    {
        std::ofstream out(dir.file("bad.jsonl"));
        out << R"({"id":"ok","case_attrs":{},"events":[]})" << "\n";
        out << "this is not json\n";
    }
    CHECK_THROWS_WITH(read_log(dir.file("bad.jsonl")), doctest::Contains(":2"));

    {
        std::ofstream out(dir.file("noevents.jsonl"));
        out << R"({"id":"x","case_attrs":{}})" << "\n";
    }
    CHECK_THROWS_WITH(read_log(dir.file("noevents.jsonl")), doctest::Contains("events"));
}

TEST_CASE("a zero-case file is a valid empty log") {
    TempDir dir("corpus_empty");
    { std::ofstream out(dir.file("empty.jsonl")); }
    EventLog log = read_log(dir.file("empty.jsonl"));
    CHECK(log.cases.empty());
}

TEST_CASE("vocabulary rejects reserved display names") {
    CHECK_THROWS(Vocabulary::from_values({"<bos>"}));
    CHECK_THROWS(Vocabulary::from_values({"a", "<pad>"}));
}

TEST_CASE("schema json round-trip preserves the fingerprint") {
    Rng rng(21);
    EventLog log = testutil::random_log(rng, 15);
    AttributeSchema back = AttributeSchema::from_json(log.schema.to_json());
    CHECK(back == log.schema);
    CHECK(back.fingerprint() == log.schema.fingerprint());
}
