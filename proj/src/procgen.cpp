#include "deepalign/procgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace deepalign {

namespace {

constexpr double kDistTolerance = 1e-9;

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

bool matches(const std::map<std::string, std::string>& when,
             const std::map<std::string, std::string>& values) {
    for (const auto& [k, v] : when) {
        auto it = values.find(k);
        if (it == values.end() || it->second != v) return false;
    }
    return true;
}

void check_distribution(const std::map<std::string, double>& probs, const std::string& what) {
    double sum = 0.0;
    for (const auto& [_, p] : probs) {
        if (p < 0.0) fail(what + ": negative probability");
        sum += p;
    }
    if (std::abs(sum - 1.0) > kDistTolerance) fail(what + ": probabilities sum to " + std::to_string(sum));
}

void check_distribution(const std::map<int, double>& probs, const std::string& what) {
    double sum = 0.0;
    for (const auto& [_, p] : probs) {
        if (p < 0.0) fail(what + ": negative probability");
        sum += p;
    }
    if (std::abs(sum - 1.0) > kDistTolerance) fail(what + ": probabilities sum to " + std::to_string(sum));
}

template <typename K>
K sample_from(const std::map<K, double>& probs, Rng& rng) {
    std::vector<K> keys;
    std::vector<double> weights;
    keys.reserve(probs.size());
    for (const auto& [k, p] : probs) {
        keys.push_back(k);
        weights.push_back(p);
    }
    return keys[rng.discrete(weights)];
}

std::string sample_emission(const NodeEmission& emission,
                            const std::map<std::string, std::string>& emitted, Rng& rng) {
    for (const auto& rule : emission.rules)
        if (matches(rule.when, emitted)) return sample_from(rule.probs, rng);
    return sample_from(emission.default_probs, rng);
}

}  // namespace

const std::string& LikelihoodGraph::activity_of(int node_id) const {
    for (const auto& [id, act] : nodes)
        if (id == node_id) return act;
    fail("unknown node id: " + std::to_string(node_id));
}

bool LikelihoodGraph::is_pseudo(int node_id) const { return activity_of(node_id).empty(); }

const std::vector<AnomalyKind>& all_anomaly_kinds() {
    static const std::vector<AnomalyKind> kinds = {AnomalyKind::Skip,  AnomalyKind::Insert,
                                                   AnomalyKind::Rework, AnomalyKind::Early,
                                                   AnomalyKind::Late,   AnomalyKind::Attribute};
    return kinds;
}

std::string to_string(AnomalyKind kind) {
    switch (kind) {
        case AnomalyKind::Skip: return "skip";
        case AnomalyKind::Insert: return "insert";
        case AnomalyKind::Rework: return "rework";
        case AnomalyKind::Early: return "early";
        case AnomalyKind::Late: return "late";
        case AnomalyKind::Attribute: return "attribute";
    }
    fail("unknown anomaly kind");
}

void validate(const LikelihoodGraph& graph, const CaseAttributeRule& rule) {
    std::set<int> ids;
    for (const auto& [id, _] : graph.nodes) {
        if (!ids.insert(id).second) fail("duplicate node id: " + std::to_string(id));
    }
    if (!ids.count(graph.source)) fail("source is not a node");
    if (!ids.count(graph.sink)) fail("sink is not a node");
    if (graph.transitions.count(graph.sink)) {
        if (!graph.transitions.at(graph.sink).default_probs.empty()) fail("sink has successors");
    }

    for (const auto& [id, _] : graph.nodes) {
        if (id == graph.sink) continue;
        auto it = graph.transitions.find(id);
        if (it == graph.transitions.end() || it->second.default_probs.empty())
            fail("node " + std::to_string(id) + " has no transitions");
        check_distribution(it->second.default_probs, "transitions of node " + std::to_string(id));
        for (const auto& [succ, _] : it->second.default_probs)
            if (!ids.count(succ)) fail("transition to unknown node: " + std::to_string(succ));
    }

    for (const auto& ov : rule.overrides) {
        if (!ids.count(ov.node)) fail("override on unknown node");
        check_distribution(ov.probs, "override of node " + std::to_string(ov.node));
        for (const auto& [succ, _] : ov.probs)
            if (!ids.count(succ)) fail("override to unknown node: " + std::to_string(succ));
    }

    double joint_sum = rule.joint.empty() ? 1.0 : 0.0;
    for (const auto& t : rule.joint) joint_sum += t.prob;
    if (std::abs(joint_sum - 1.0) > kDistTolerance) fail("case-attribute joint does not sum to 1");

    // Every activity node emits every event attribute, with valid distributions.
    for (const auto& [id, act] : graph.nodes) {
        if (act.empty()) continue;
        auto it = graph.emissions.find(id);
        std::size_t n = it == graph.emissions.end() ? 0 : it->second.size();
        if (n != graph.event_attribute_names.size())
            fail("node " + std::to_string(id) + ": emission count does not match attribute count");
        if (it != graph.emissions.end())
            for (std::size_t k = 0; k < n; ++k) {
                const auto& em = it->second[k];
                check_distribution(em.default_probs,
                                   "emission of " + graph.event_attribute_names[k]);
                for (const auto& r : em.rules)
                    check_distribution(r.probs, "emission rule of " + graph.event_attribute_names[k]);
            }
    }

    // Reachability over the union of default and override successors.
    auto successors_any = [&](int id) {
        std::set<int> out;
        auto it = graph.transitions.find(id);
        if (it != graph.transitions.end())
            for (const auto& [succ, p] : it->second.default_probs)
                if (p > 0.0) out.insert(succ);
        for (const auto& ov : rule.overrides)
            if (ov.node == id)
                for (const auto& [succ, p] : ov.probs)
                    if (p > 0.0) out.insert(succ);
        return out;
    };
    std::set<int> reached{graph.source};
    std::vector<int> frontier{graph.source};
    while (!frontier.empty()) {
        int u = frontier.back();
        frontier.pop_back();
        for (int v : successors_any(u))
            if (reached.insert(v).second) frontier.push_back(v);
    }
    if (reached.size() != ids.size()) fail("graph has nodes unreachable from source");

    std::map<int, std::set<int>> preds;
    for (int u : ids)
        for (int v : successors_any(u)) preds[v].insert(u);
    std::set<int> coreached{graph.sink};
    frontier = {graph.sink};
    while (!frontier.empty()) {
        int u = frontier.back();
        frontier.pop_back();
        for (int v : preds[u])
            if (coreached.insert(v).second) frontier.push_back(v);
    }
    if (coreached.size() != ids.size()) fail("graph has nodes that cannot reach the sink");
}

const std::map<int, double>& effective_transitions(const LikelihoodGraph& graph,
                                                   const CaseAttributeRule& rule, int node,
                                                   const std::map<std::string, std::string>& case_attrs) {
    for (const auto& ov : rule.overrides)
        if (ov.node == node && matches(ov.when, case_attrs)) return ov.probs;
    auto it = graph.transitions.find(node);
    if (it == graph.transitions.end()) fail("node has no transitions: " + std::to_string(node));
    return it->second.default_probs;
}

Case sample_case(const LikelihoodGraph& graph, const CaseAttributeRule& rule, Rng& rng,
                 std::size_t max_len) {
    Case c;
    if (!rule.joint.empty()) {
        std::vector<double> weights;
        weights.reserve(rule.joint.size());
        for (const auto& t : rule.joint) weights.push_back(t.prob);
        c.case_attributes = rule.joint[rng.discrete(weights)].values;
    }

    int node = graph.source;
    while (true) {
        const auto& dist = effective_transitions(graph, rule, node, c.case_attributes);
        int next = sample_from(dist, rng);
        if (next == graph.sink) break;
        Event e;
        e.activity = graph.activity_of(next);
        if (!graph.event_attribute_names.empty()) {
            const auto& emissions = graph.emissions.at(next);
            for (std::size_t k = 0; k < graph.event_attribute_names.size(); ++k)
                e.attributes[graph.event_attribute_names[k]] =
                    sample_emission(emissions[k], e.attributes, rng);
        }
        c.events.push_back(std::move(e));
        if (c.events.size() > max_len) fail("graph walk diverged");
        node = next;
    }
    return c;
}

EventLog generate_log(const LikelihoodGraph& graph, const CaseAttributeRule& rule,
                      std::size_t n_cases, Rng& rng) {
    if (n_cases == 0) fail("generate_log: n_cases must be positive");
    EventLog log;
    log.cases.reserve(n_cases);
    int width = static_cast<int>(std::to_string(n_cases).size());
    for (std::size_t i = 0; i < n_cases; ++i) {
        Case c = sample_case(graph, rule, rng);
        std::ostringstream id;
        id << "case_" << std::setw(width) << std::setfill('0') << i;
        c.id = id.str();
        log.cases.push_back(std::move(c));
    }
    log.schema = build_schema(log.cases);
    return log;
}

bool accepts(const LikelihoodGraph& graph, const CaseAttributeRule& rule, const Case& c) {
    std::set<int> current{graph.source};
    for (const auto& e : c.events) {
        std::set<int> next;
        for (int u : current) {
            if (u == graph.sink) continue;
            for (const auto& [v, p] : effective_transitions(graph, rule, u, c.case_attributes)) {
                if (p <= 0.0 || v == graph.sink) continue;
                if (graph.activity_of(v) == e.activity) next.insert(v);
            }
        }
        if (next.empty()) return false;
        current = std::move(next);
    }
    for (int u : current) {
        auto dist = effective_transitions(graph, rule, u, c.case_attributes);
        auto it = dist.find(graph.sink);
        if (it != dist.end() && it->second > 0.0) return true;
    }
    return false;
}

AnomalyInjector::AnomalyInjector(const EventLog& clean_log, AnomalySizes sizes) : sizes_(sizes) {
    std::map<std::string, std::set<std::string>> values;
    for (const auto& c : clean_log.cases)
        for (const auto& e : c.events)
            for (const auto& [name, value] : e.attributes) values[name].insert(value);
    for (const auto& [name, vals] : values)
        pools_.emplace_back(name, std::vector<std::string>(vals.begin(), vals.end()));
}

bool AnomalyInjector::applicable(const Case& c, AnomalyKind kind) const {
    const long T = static_cast<long>(c.events.size());
    switch (kind) {
        case AnomalyKind::Skip: return T >= 2;
        case AnomalyKind::Insert: return true;
        case AnomalyKind::Rework: return T >= 1;
        case AnomalyKind::Early:
        case AnomalyKind::Late: return T >= 2;
        case AnomalyKind::Attribute: {
            if (T < 1) return false;
            for (const auto& [_, pool] : pools_)
                if (pool.size() >= 2) return true;
            return false;
        }
    }
    return false;
}

std::pair<Case, std::string> AnomalyInjector::inject(const Case& input, AnomalyKind kind,
                                                     Rng& rng) const {
    if (!applicable(input, kind)) fail("inapplicable anomaly: " + to_string(kind));
    Case c = input;
    auto& ev = c.events;
    const long T = static_cast<long>(ev.size());

    auto draw_run = [&](int max_size, long min_keep) {
        // Run length uniform over the sizes this case can host.
        long cap = std::min<long>(max_size, T - min_keep);
        long s = rng.uniform_int(1, cap);
        return s;
    };

    switch (kind) {
        case AnomalyKind::Skip: {
            long s = draw_run(sizes_.skip_max, 1);
            long i = rng.uniform_int(0, T - s);
            ev.erase(ev.begin() + i, ev.begin() + i + s);
            break;
        }
        case AnomalyKind::Insert: {
            long k = rng.uniform_int(1, sizes_.insert_max);
            for (long j = 0; j < k; ++j) {
                Event e;
                e.activity = "Random activity " + std::to_string(rng.uniform_int(1, 99));
                for (const auto& [name, pool] : pools_)
                    e.attributes[name] = pool[rng.uniform_index(pool.size())];
                long p = rng.uniform_int(0, static_cast<long>(ev.size()));
                ev.insert(ev.begin() + p, std::move(e));
            }
            break;
        }
        case AnomalyKind::Rework: {
            long s = draw_run(sizes_.rework_max, 0);
            long i = rng.uniform_int(0, T - s);
            std::vector<Event> run(ev.begin() + i, ev.begin() + i + s);
            ev.insert(ev.begin() + i + s, run.begin(), run.end());
            break;
        }
        case AnomalyKind::Early: {
            long s = draw_run(sizes_.early_max, 1);
            long i = rng.uniform_int(1, T - s);  // run start; must have room before it
            long j = rng.uniform_int(0, i - 1);  // final position, strictly earlier
            std::vector<Event> run(ev.begin() + i, ev.begin() + i + s);
            ev.erase(ev.begin() + i, ev.begin() + i + s);
            ev.insert(ev.begin() + j, run.begin(), run.end());
            break;
        }
        case AnomalyKind::Late: {
            long s = draw_run(sizes_.late_max, 1);
            long i = rng.uniform_int(0, T - s - 1);
            long j = rng.uniform_int(i + 1, T - s);  // final position, strictly later
            std::vector<Event> run(ev.begin() + i, ev.begin() + i + s);
            ev.erase(ev.begin() + i, ev.begin() + i + s);
            ev.insert(ev.begin() + j, run.begin(), run.end());
            break;
        }
        case AnomalyKind::Attribute: {
            std::vector<std::size_t> mutable_attrs;
            for (std::size_t k = 0; k < pools_.size(); ++k)
                if (pools_[k].second.size() >= 2) mutable_attrs.push_back(k);
            long m = rng.uniform_int(1, std::min<long>(sizes_.attribute_max, T));
            std::vector<long> idx(T);
            for (long k = 0; k < T; ++k) idx[k] = k;
            rng.shuffle(idx);
            idx.resize(m);
            std::sort(idx.begin(), idx.end());
            for (long k : idx) {
                const auto& [name, pool] = pools_[mutable_attrs[rng.uniform_index(mutable_attrs.size())]];
                std::string& value = ev[k].attributes.at(name);
                std::string replacement;
                do {
                    replacement = pool[rng.uniform_index(pool.size())];
                } while (replacement == value);
                value = replacement;
            }
            break;
        }
    }
    return {std::move(c), to_string(kind)};
}

std::pair<EventLog, EventLog> apply_noise(const EventLog& log, double noise_ratio, Rng& rng,
                                          AnomalySizes sizes) {
    if (noise_ratio < 0.0 || noise_ratio > 1.0) fail("noise ratio must be in [0, 1]");
    AnomalyInjector injector(log, sizes);
    const std::size_t n = log.cases.size();
    const std::size_t n_mut = static_cast<std::size_t>(std::llround(noise_ratio * static_cast<double>(n)));

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<bool> mutate(n, false);
    for (std::size_t i = 0; i < n_mut; ++i) mutate[order[i]] = true;

    EventLog noisy, truth;
    noisy.cases.reserve(n);
    truth.cases.reserve(n);
    const auto& kinds = all_anomaly_kinds();
    for (std::size_t i = 0; i < n; ++i) {
        Case original = log.cases[i];
        original.label.clear();
        if (!mutate[i]) {
            Case labeled = original;
            labeled.label = "normal";
            truth.cases.push_back(std::move(labeled));
            noisy.cases.push_back(std::move(original));
            continue;
        }
        AnomalyKind kind;
        do {
            kind = kinds[rng.uniform_index(kinds.size())];
        } while (!injector.applicable(original, kind));
        auto [mutated, label] = injector.inject(original, kind, rng);
        Case labeled = original;
        labeled.label = label;
        truth.cases.push_back(std::move(labeled));
        noisy.cases.push_back(std::move(mutated));
    }
    noisy.schema = build_schema(noisy.cases);
    truth.schema = build_schema(truth.cases);
    return {std::move(noisy), std::move(truth)};
}

namespace {

std::map<std::string, double> random_distribution(const std::vector<std::string>& support, Rng& rng) {
    std::map<std::string, double> probs;
    double total = 0.0;
    for (const auto& v : support) {
        double w = 0.25 + rng.uniform();  // keep every value observable
        probs[v] = w;
        total += w;
    }
    for (auto& [_, p] : probs) p /= total;
    return probs;
}

const std::vector<std::string>& event_attr_name_pool() {
    static const std::vector<std::string> names = {"User", "Day", "System", "Team", "Org"};
    return names;
}

const std::vector<std::string>& case_attr_name_pool() {
    static const std::vector<std::string> names = {"Region", "Tier", "Channel"};
    return names;
}

}  // namespace

std::pair<LikelihoodGraph, CaseAttributeRule> random_likelihood_graph(const RandomGraphParams& p,
                                                                      Rng& rng) {
    if (p.n_activities < 3) fail("infeasible parameters: need at least 3 activities");
    if (p.breadth < 1 || p.depth < 1) fail("infeasible parameters: breadth and depth must be positive");
    if (p.n_activities < p.depth || p.n_activities > p.breadth * p.depth)
        fail("infeasible parameters: activities do not fit the layer grid");
    if (p.n_case_attrs > 0 && (p.breadth < 2 || p.depth < 3 || p.n_activities < p.depth + 2))
        fail("infeasible parameters: case-attribute dependencies need breadth >= 2 and depth >= 3");
    if (p.n_event_attrs > static_cast<int>(event_attr_name_pool().size()) ||
        p.n_case_attrs > static_cast<int>(case_attr_name_pool().size()))
        fail("infeasible parameters: too many attributes");

    // Layer widths: start at 1, grow random layers until all activities fit.
    std::vector<int> width(p.depth, 1);
    // Guarantee room for a branch right after the first layer and into the last.
    if (p.n_case_attrs > 0) {
        width[1] = 2;
        width[p.depth - 1] = 2;
    }
    int placed = 0;
    for (int w : width) placed += w;
    while (placed < p.n_activities) {
        int layer = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(p.depth)));
        if (width[layer] < p.breadth) {
            ++width[layer];
            ++placed;
        }
    }

    LikelihoodGraph graph;
    CaseAttributeRule rule;
    std::vector<std::vector<int>> layers(p.depth);
    int next_id = 0;
    for (int l = 0; l < p.depth; ++l)
        for (int k = 0; k < width[l]; ++k) layers[l].push_back(next_id++);
    graph.source = next_id++;
    graph.sink = next_id++;
    for (int l = 0; l < p.depth; ++l)
        for (int id : layers[l]) {
            std::ostringstream name;
            name << "Activity " << std::setw(2) << std::setfill('0') << (id + 1);
            graph.nodes.emplace_back(id, name.str());
        }
    graph.nodes.emplace_back(graph.source, "");
    graph.nodes.emplace_back(graph.sink, "");

    // Edges between consecutive layers; every node keeps at least one edge in
    // each direction.
    auto connect = [&](const std::vector<int>& from, const std::vector<int>& to) {
        std::map<int, std::vector<int>> succ;
        for (int u : from) {
            for (int v : to)
                if (rng.uniform() < 0.6) succ[u].push_back(v);
            if (succ[u].empty()) succ[u].push_back(to[rng.uniform_index(to.size())]);
        }
        for (int v : to) {
            bool covered = false;
            for (int u : from)
                if (std::find(succ[u].begin(), succ[u].end(), v) != succ[u].end()) covered = true;
            if (!covered) succ[from[rng.uniform_index(from.size())]].push_back(v);
        }
        for (int u : from) {
            std::sort(succ[u].begin(), succ[u].end());
            std::map<int, double> probs;
            double total = 0.0;
            for (int v : succ[u]) {
                double w = 0.25 + rng.uniform();
                probs[v] = w;
                total += w;
            }
            for (auto& [_, w] : probs) w /= total;
            graph.transitions[u].default_probs = std::move(probs);
        }
    };
    connect({graph.source}, layers[0]);
    for (int l = 0; l + 1 < p.depth; ++l) connect(layers[l], layers[l + 1]);
    connect(layers[p.depth - 1], {graph.sink});

    // Event attribute emissions per activity node.
    std::vector<std::vector<std::string>> attr_pools;
    for (int a = 0; a < p.n_event_attrs; ++a) {
        graph.event_attribute_names.push_back(event_attr_name_pool()[a]);
        std::vector<std::string> pool;
        int pool_size = 2 + static_cast<int>(rng.uniform_index(3));
        for (int v = 0; v < pool_size; ++v) {
            std::string lower = event_attr_name_pool()[a];
            std::transform(lower.begin(), lower.end(), lower.begin(), ::tolower);
            pool.push_back(lower + "_" + std::to_string(v + 1));
        }
        attr_pools.push_back(std::move(pool));
    }
    for (const auto& [id, act] : graph.nodes) {
        if (act.empty()) continue;
        std::vector<NodeEmission> emissions;
        for (int a = 0; a < p.n_event_attrs; ++a) {
            NodeEmission em;
            em.default_probs = random_distribution(attr_pools[a], rng);
            // Occasionally condition this attribute on the first one.
            if (a > 0 && rng.uniform() < 0.5) {
                for (const auto& v0 : attr_pools[0]) {
                    EmissionRule r;
                    r.when[graph.event_attribute_names[0]] = v0;
                    r.probs = random_distribution(attr_pools[a], rng);
                    em.rules.push_back(std::move(r));
                }
            }
            emissions.push_back(std::move(em));
        }
        graph.emissions[id] = std::move(emissions);
    }

    // Case attributes: joint distribution over the value grid.
    std::vector<std::vector<std::string>> case_pools;
    for (int a = 0; a < p.n_case_attrs; ++a) {
        rule.attribute_names.push_back(case_attr_name_pool()[a]);
        std::vector<std::string> pool;
        int pool_size = 2 + static_cast<int>(rng.uniform_index(2));
        for (int v = 0; v < pool_size; ++v) {
            std::string lower = case_attr_name_pool()[a];
            std::transform(lower.begin(), lower.end(), lower.begin(), ::tolower);
            pool.push_back(lower + "_" + std::to_string(v + 1));
        }
        case_pools.push_back(std::move(pool));
    }
    if (p.n_case_attrs > 0) {
        std::vector<std::map<std::string, std::string>> tuples = {{}};
        for (int a = 0; a < p.n_case_attrs; ++a) {
            std::vector<std::map<std::string, std::string>> grown;
            for (const auto& t : tuples)
                for (const auto& v : case_pools[a]) {
                    auto t2 = t;
                    t2[rule.attribute_names[a]] = v;
                    grown.push_back(std::move(t2));
                }
            tuples = std::move(grown);
        }
        double total = 0.0;
        std::vector<double> weights;
        for (std::size_t i = 0; i < tuples.size(); ++i) {
            double w = 0.5 + rng.uniform();
            weights.push_back(w);
            total += w;
        }
        for (std::size_t i = 0; i < tuples.size(); ++i)
            rule.joint.push_back({tuples[i], weights[i] / total});

        // A branch forced by the first case attribute, early and late: the
        // same value always selects the matching successor at both nodes.
        auto add_overrides = [&](int node) {
            const auto& succ = graph.transitions.at(node).default_probs;
            std::vector<int> options;
            for (const auto& [v, _] : succ) options.push_back(v);
            for (std::size_t k = 0; k < case_pools[0].size(); ++k) {
                CaseAttributeRule::Override ov;
                ov.node = node;
                ov.when[rule.attribute_names[0]] = case_pools[0][k];
                ov.probs[options[k % options.size()]] = 1.0;
                rule.overrides.push_back(std::move(ov));
            }
        };
        // Make sure the chosen nodes actually branch.
        auto force_branch = [&](int node, const std::vector<int>& target_layer) {
            auto& probs = graph.transitions.at(node).default_probs;
            if (probs.size() >= 2) return;
            for (int v : target_layer)
                if (!probs.count(v)) {
                    double share = 1.0 / static_cast<double>(probs.size() + 1);
                    for (auto& [_, w] : probs) w *= (1.0 - share);
                    probs[v] = share;
                    break;
                }
        };
        int early = layers[0][rng.uniform_index(layers[0].size())];
        int late = layers[p.depth - 2][rng.uniform_index(layers[p.depth - 2].size())];
        force_branch(early, layers[1]);
        force_branch(late, layers[p.depth - 1]);
        add_overrides(early);
        add_overrides(late);
    }

    validate(graph, rule);
    return {std::move(graph), std::move(rule)};
}

std::pair<LikelihoodGraph, CaseAttributeRule> paper_process() {
    LikelihoodGraph graph;
    CaseAttributeRule rule;

    const std::vector<std::string> activities = {
        "Identify Problem",        // 0
        "Research Related Work",   // 1
        "Develop Hypothesis",      // 2
        "Develop Method",          // 3
        "Experiment",              // 4
        "Conduct Study",           // 5
        "Evaluate",                // 6
        "Conclude",                // 7
        "Submit",                  // 8
        "Review",                  // 9
        "Final Decision",          // 10
        "Minor Revision",          // 11
    };
    for (int i = 0; i < static_cast<int>(activities.size()); ++i)
        graph.nodes.emplace_back(i, activities[i]);
    graph.source = 12;
    graph.sink = 13;
    graph.nodes.emplace_back(graph.source, "");
    graph.nodes.emplace_back(graph.sink, "");

    auto t = [&](int from, std::map<int, double> probs) {
        graph.transitions[from].default_probs = std::move(probs);
    };
    t(graph.source, {{0, 1.0}});
    t(0, {{1, 1.0}});
    t(1, {{2, 0.5}, {3, 0.5}});   // overridden by Topic
    t(2, {{4, 1.0}});
    t(3, {{4, 1.0}});
    t(4, {{5, 0.5}, {6, 0.5}});   // overridden by Topic (long-term dependency)
    t(5, {{7, 1.0}});
    t(6, {{7, 1.0}});
    t(7, {{8, 1.0}});
    t(8, {{9, 1.0}});
    t(9, {{10, 1.0}});
    t(10, {{11, 0.4}, {graph.sink, 0.6}});  // overridden by Decision
    t(11, {{graph.sink, 1.0}});

    graph.event_attribute_names = {"User"};
    auto authored = [&](int node, std::map<std::string, double> probs) {
        NodeEmission em;
        em.default_probs = std::move(probs);
        graph.emissions[node] = {std::move(em)};
    };
    authored(0, {{"Alice", 0.5}, {"Bob", 0.3}, {"Carol", 0.2}});
    authored(1, {{"Alice", 0.3}, {"Bob", 0.4}, {"Carol", 0.3}});
    authored(2, {{"Alice", 0.6}, {"Bob", 0.4}});
    authored(3, {{"Bob", 0.5}, {"Carol", 0.5}});
    authored(4, {{"Alice", 0.4}, {"Bob", 0.3}, {"Carol", 0.3}});
    authored(5, {{"Alice", 0.5}, {"Carol", 0.5}});
    authored(6, {{"Bob", 0.6}, {"Carol", 0.4}});
    authored(7, {{"Alice", 0.4}, {"Bob", 0.6}});
    authored(8, {{"Alice", 0.7}, {"Bob", 0.3}});
    authored(9, {{"Dave", 0.5}, {"Erin", 0.5}});
    authored(10, {{"Dave", 0.6}, {"Erin", 0.4}});
    authored(11, {{"Alice", 0.5}, {"Bob", 0.5}});

    rule.attribute_names = {"Topic", "Decision"};
    const std::vector<std::string> topics = {"Theory", "Engineering"};
    const std::vector<std::pair<std::string, double>> decisions = {
        {"Accept", 0.2},      {"Weak Accept", 0.2}, {"Borderline", 0.2},
        {"Weak Reject", 0.2}, {"Reject", 0.2},
    };
    for (const auto& topic : topics)
        for (const auto& [decision, dp] : decisions)
            rule.joint.push_back({{{"Topic", topic}, {"Decision", decision}}, 0.5 * dp});

    auto force = [&](int node, const std::string& attr, const std::string& value, int succ) {
        CaseAttributeRule::Override ov;
        ov.node = node;
        ov.when[attr] = value;
        ov.probs[succ] = 1.0;
        rule.overrides.push_back(std::move(ov));
    };
    force(1, "Topic", "Theory", 2);        // Develop Hypothesis
    force(1, "Topic", "Engineering", 3);   // Develop Method
    force(4, "Topic", "Theory", 5);        // Conduct Study
    force(4, "Topic", "Engineering", 6);   // Evaluate
    force(10, "Decision", "Accept", 11);
    force(10, "Decision", "Weak Accept", 11);
    force(10, "Decision", "Borderline", graph.sink);
    force(10, "Decision", "Weak Reject", graph.sink);
    force(10, "Decision", "Reject", graph.sink);

    validate(graph, rule);
    return {std::move(graph), std::move(rule)};
}

void write_graph(const LikelihoodGraph& graph, const CaseAttributeRule& rule,
                 const std::string& path) {
    nlohmann::ordered_json j;
    j["nodes"] = nlohmann::ordered_json::array();
    for (const auto& [id, act] : graph.nodes)
        j["nodes"].push_back({{"id", id}, {"activity", act}});
    j["source"] = graph.source;
    j["sink"] = graph.sink;

    j["transitions"] = nlohmann::ordered_json::array();
    for (const auto& [from, trans] : graph.transitions) {
        nlohmann::ordered_json entry;
        entry["from"] = from;
        entry["rules"] = nlohmann::ordered_json::array();
        for (const auto& ov : rule.overrides) {
            if (ov.node != from) continue;
            nlohmann::ordered_json r;
            r["when"] = ov.when;
            for (const auto& [succ, p] : ov.probs) r["probs"][std::to_string(succ)] = p;
            entry["rules"].push_back(std::move(r));
        }
        for (const auto& [succ, p] : trans.default_probs)
            entry["default"][std::to_string(succ)] = p;
        j["transitions"].push_back(std::move(entry));
    }

    j["event_attributes"] = graph.event_attribute_names;
    j["emissions"] = nlohmann::ordered_json::array();
    for (const auto& [node, emissions] : graph.emissions)
        for (std::size_t k = 0; k < emissions.size(); ++k) {
            nlohmann::ordered_json entry;
            entry["node"] = node;
            entry["attr"] = graph.event_attribute_names[k];
            entry["rules"] = nlohmann::ordered_json::array();
            for (const auto& r : emissions[k].rules) {
                nlohmann::ordered_json jr;
                jr["when"] = r.when;
                jr["probs"] = r.probs;
                entry["rules"].push_back(std::move(jr));
            }
            entry["default"] = emissions[k].default_probs;
            j["emissions"].push_back(std::move(entry));
        }

    j["case_attributes"] = nlohmann::ordered_json::object();
    j["case_attributes"]["names"] = rule.attribute_names;
    j["case_attributes"]["joint"] = nlohmann::ordered_json::array();
    for (const auto& tup : rule.joint)
        j["case_attributes"]["joint"].push_back({{"values", tup.values}, {"prob", tup.prob}});

    std::ofstream out(path);
    if (!out) fail("cannot open file for writing: " + path);
    out << j.dump(2) << "\n";
}

std::pair<LikelihoodGraph, CaseAttributeRule> read_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open graph file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(path + ": " + e.what());
    }

    LikelihoodGraph graph;
    CaseAttributeRule rule;
    for (const auto& n : j.at("nodes"))
        graph.nodes.emplace_back(n.at("id").get<int>(), n.at("activity").get<std::string>());
    graph.source = j.at("source").get<int>();
    graph.sink = j.at("sink").get<int>();

    for (const auto& entry : j.at("transitions")) {
        int from = entry.at("from").get<int>();
        NodeTransitions trans;
        for (const auto& [succ, p] : entry.at("default").items())
            trans.default_probs[std::stoi(succ)] = p.get<double>();
        graph.transitions[from] = std::move(trans);
        if (entry.contains("rules"))
            for (const auto& r : entry.at("rules")) {
                CaseAttributeRule::Override ov;
                ov.node = from;
                for (const auto& [k, v] : r.at("when").items()) ov.when[k] = v.get<std::string>();
                for (const auto& [succ, p] : r.at("probs").items())
                    ov.probs[std::stoi(succ)] = p.get<double>();
                rule.overrides.push_back(std::move(ov));
            }
    }

    graph.event_attribute_names = j.at("event_attributes").get<std::vector<std::string>>();
    for (const auto& entry : j.at("emissions")) {
        int node = entry.at("node").get<int>();
        auto& emissions = graph.emissions[node];
        if (emissions.empty()) emissions.resize(graph.event_attribute_names.size());
        const std::string attr = entry.at("attr").get<std::string>();
        auto it = std::find(graph.event_attribute_names.begin(), graph.event_attribute_names.end(), attr);
        if (it == graph.event_attribute_names.end()) fail("emission for unknown attribute: " + attr);
        auto& em = emissions[static_cast<std::size_t>(it - graph.event_attribute_names.begin())];
        for (const auto& [value, p] : entry.at("default").items())
            em.default_probs[value] = p.get<double>();
        if (entry.contains("rules"))
            for (const auto& r : entry.at("rules")) {
                EmissionRule er;
                for (const auto& [k, v] : r.at("when").items()) er.when[k] = v.get<std::string>();
                for (const auto& [value, p] : r.at("probs").items()) er.probs[value] = p.get<double>();
                em.rules.push_back(std::move(er));
            }
    }

    const auto& ca = j.at("case_attributes");
    rule.attribute_names = ca.at("names").get<std::vector<std::string>>();
    for (const auto& tup : ca.at("joint")) {
        CaseAttributeRule::Tuple t;
        for (const auto& [k, v] : tup.at("values").items()) t.values[k] = v.get<std::string>();
        t.prob = tup.at("prob").get<double>();
        rule.joint.push_back(std::move(t));
    }

    validate(graph, rule);
    return {std::move(graph), std::move(rule)};
}

}  // namespace deepalign
