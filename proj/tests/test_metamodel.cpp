#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "sentinel/errors.hpp"
#include "sentinel/metamodel.hpp"
#include "test_support.hpp"

using namespace sentinel;
using namespace testsupport;

namespace {

PayloadRef slice(const std::string& id, std::int64_t begin = 0, std::int64_t end = 300) {
    PayloadRef p;
    p.kind = PayloadRef::Kind::series_slice;
    p.key = id;
    p.begin = begin;
    p.end = end;
    return p;
}

EventOfInterest event_over(const std::set<std::string>& participants, std::int64_t bin,
                           EventKind kind = EventKind::interest) {
    EventOfInterest e;
    e.detection_bin = bin;
    e.peak_bin = bin + 3;
    e.magnitude = static_cast<std::uint32_t>(participants.size());
    e.participants = participants;
    e.kind = kind;
    e.explanation = "scripted";
    return e;
}

std::set<std::string> register_fleet(KnowledgeGraph& graph, std::size_t count) {
    std::set<std::string> ids;
    for (std::size_t i = 0; i < count; ++i) {
        const std::string id = "s" + std::to_string(i);
        graph.register_region(slice(id), id);
        ids.insert(id);
    }
    return ids;
}

}  // namespace

TEST_CASE("levels order and parse") {
    CHECK(Level::l0() < Level::l1());
    CHECK(Level::l1() < Level::l2(0));
    CHECK(Level::l2(0) < Level::l2(1));
    CHECK(Level::l2(7) < Level::lstar());
    CHECK(Level::parse("L2.3") == Level::l2(3));
    CHECK(Level::parse("L*") == Level::lstar());
    CHECK(Level::l2(3).to_string() == "L2.3");
    CHECK(!Level::parse("L9"));
}

TEST_CASE("register_region creates an L0/L1 pair, idempotently") {
    KnowledgeGraph graph;
    const auto handle = graph.register_region(slice("s1"), "s1");
    CHECK(graph.node(handle.l0).level == Level::l0());
    CHECK(graph.node(handle.l1).level == Level::l1());
    CHECK(graph.node(handle.l0).payload.has_value());
    CHECK(!graph.node(handle.l1).payload.has_value());
    CHECK(graph.has_relation(handle.l0, handle.l1, kRelAbstractionOf));

    const std::size_t nodes = graph.node_count();
    const std::size_t edges = graph.edge_count();
    const auto again = graph.register_region(slice("s1"), "s1");
    CHECK(again.l0 == handle.l0);
    CHECK(again.l1 == handle.l1);
    CHECK(graph.node_count() == nodes);
    CHECK(graph.edge_count() == edges);

    // A later slice of the same series feeds the same L1 symbol.
    const auto later = graph.register_region(slice("s1", 300, 600), "s1");
    CHECK(later.l1 == handle.l1);
    CHECK(later.l0 != handle.l0);

    CHECK_THROWS_AS(graph.register_region(slice(""), "x"), DanglingPayload);
}

TEST_CASE("bulk registration: 50 series give 50 L0 + 50 L1 nodes and 50 edges") {
    KnowledgeGraph graph;
    register_fleet(graph, 50);
    std::size_t l0 = 0, l1 = 0;
    for (const KnowledgeNode& n : graph.nodes()) {
        l0 += n.level == Level::l0();
        l1 += n.level == Level::l1();
    }
    CHECK(l0 == 50);
    CHECK(l1 == 50);
    CHECK(graph.edge_count() == 50);
}

TEST_CASE("relations: symmetry closure, anti-symmetry exclusion, level rules") {
    KnowledgeGraph graph;
    const auto a = graph.register_region(slice("a"), "a");
    const auto b = graph.register_region(slice("b"), "b");

    graph.add_relation(a.l1, b.l1, kRelCorrelatesWith, RelationKind::symmetric);
    CHECK(graph.has_relation(a.l1, b.l1, kRelCorrelatesWith));
    CHECK(graph.has_relation(b.l1, a.l1, kRelCorrelatesWith));

    // abstraction_of must climb levels
    CHECK_THROWS_AS(graph.add_relation(a.l1, b.l0, kRelAbstractionOf, RelationKind::anti_symmetric),
                    LevelViolation);
    CHECK_THROWS_AS(graph.add_relation(a.l1, b.l1, kRelAbstractionOf, RelationKind::symmetric),
                    InvalidConfig);

    graph.add_relation(a.l1, b.l1, kRelPrecedes, RelationKind::anti_symmetric);
    CHECK(graph.has_relation(a.l1, b.l1, kRelPrecedes));
    CHECK(!graph.has_relation(b.l1, a.l1, kRelPrecedes));
    CHECK_THROWS_AS(graph.add_relation(b.l1, a.l1, kRelPrecedes, RelationKind::anti_symmetric),
                    AntiSymmetryViolation);

    // one kind per relation label
    CHECK_THROWS_AS(graph.add_relation(a.l0, b.l0, kRelCorrelatesWith, RelationKind::anti_symmetric),
                    InvalidConfig);
}

TEST_CASE("refresh_bottom_up orders touches upward and builds event subgraphs") {
    KnowledgeGraph graph;
    const auto ids = register_fleet(graph, 40);

    CHECK(graph.refresh_bottom_up({}, {}).empty());

    RegimeChange c;
    c.series_id = "s3";
    c.timestamp = 120;
    c.salience = 0.7;
    const auto log = graph.refresh_bottom_up({c}, {});
    REQUIRE(log.size() == 1);
    CHECK(graph.node(log[0]).level == Level::l1());
    CHECK(graph.node(log[0]).freshness == 120);
    CHECK(graph.node(log[0]).evidence_count == 1);

    // Event with 40 participants: one L2 node, 40 participates_in edges.
    const std::size_t edges_before = graph.edge_count();
    const auto ev_log = graph.refresh_bottom_up({}, {event_over(ids, 50)});
    std::size_t l2_nodes = 0;
    for (const KnowledgeNode& n : graph.nodes()) {
        l2_nodes += n.level.tier == Level::Tier::l2;
    }
    CHECK(l2_nodes == 1);
    CHECK(graph.edge_count() == edges_before + 40);

    // The change log never steps down a level.
    for (std::size_t i = 1; i < ev_log.size(); ++i) {
        CHECK(!(graph.node(ev_log[i]).level < graph.node(ev_log[i - 1]).level));
    }

    RegimeChange unknown;
    unknown.series_id = "ghost";
    unknown.timestamp = 5;
    CHECK_THROWS_AS(graph.refresh_bottom_up({unknown}, {}), UnregisteredEvidence);
}

TEST_CASE("symbolize_event links participants, pairs onset/recovery, keeps no_interest") {
    KnowledgeGraph graph;
    const auto ids = register_fleet(graph, 10);

    const NodeId onset = graph.symbolize_event(event_over(ids, 50));
    EventOfInterest rec = event_over(ids, 105, EventKind::recovery);
    const NodeId recovery = graph.symbolize_event(rec, onset);

    CHECK(graph.has_relation(onset, recovery, kRelPrecedes));
    CHECK(!graph.has_relation(recovery, onset, kRelPrecedes));
    CHECK(graph.node(onset).payload->begin == 50);

    // no_interest events stay fully linked
    EventOfInterest firmware = event_over(ids, 400, EventKind::no_interest);
    const NodeId fw = graph.symbolize_event(firmware);
    CHECK(graph.node(fw).label.find("no_interest") != std::string::npos);
    std::size_t fw_edges = 0;
    for (const KnowledgeEdge& e : graph.edges()) {
        fw_edges += e.to == fw && e.relation == kRelParticipatesIn;
    }
    CHECK(fw_edges == 10);

    EventOfInterest unclassified = event_over(ids, 500, EventKind::candidate);
    CHECK_THROWS_AS(graph.symbolize_event(unclassified), InvalidConfig);
}

TEST_CASE("partition_foa splits disjoint evidence clusters under one goal") {
    KnowledgeGraph graph;
    const auto ids = register_fleet(graph, 20);

    std::set<std::string> left(ids.begin(), std::next(ids.begin(), 10));
    std::set<std::string> right(std::next(ids.begin(), 10), ids.end());

    const NodeId ev_left = graph.symbolize_event(event_over(left, 50));
    const NodeId ev_right = graph.symbolize_event(event_over(right, 90));
    const NodeId goal = graph.add_goal("watch-fleet");
    graph.add_relation(ev_left, goal, kRelAbstractionOf, RelationKind::anti_symmetric);
    graph.add_relation(ev_right, goal, kRelAbstractionOf, RelationKind::anti_symmetric);

    const auto partitions = graph.partition_foa(goal);
    REQUIRE(partitions.size() == 2);
    CHECK(partitions[0].goal_node == goal);

    // Disjoint and jointly covering the reachable set: each event node, its
    // 10 L1 participants and their L0 nodes.
    std::set<NodeId> seen;
    std::size_t total = 0;
    for (const auto& foa : partitions) {
        for (NodeId id : foa.member_nodes) {
            CHECK(!seen.count(id));
            seen.insert(id);
        }
        total += foa.member_nodes.size();
        CHECK(foa.member_nodes.size() == 21);
    }
    CHECK(total == 42);

    // A single connected cluster yields one partition with the full set.
    const auto single = graph.partition_foa(ev_left);
    REQUIRE(single.size() == 1);
    CHECK(single[0].member_nodes.size() == 20);  // 10 L1 + 10 L0

    const auto l1 = graph.find_l1_by_label(*left.begin());
    REQUIRE(l1);
    CHECK_THROWS_AS(graph.partition_foa(*l1), GoalTooLow);
}

TEST_CASE("sfoa: spawn validates scope, answering refreshes bottom-up") {
    KnowledgeGraph graph;
    const auto ids = register_fleet(graph, 6);
    const NodeId ev = graph.symbolize_event(event_over(ids, 50));
    auto partitions = graph.partition_foa(ev);
    REQUIRE(partitions.size() == 1);
    FocusOfAttention& foa = partitions[0];

    SfoaNeed need;
    need.kind = SfoaNeed::Kind::subsymbolic_data;
    need.series_ids = {"s1"};
    need.begin = 40;
    need.end = 110;
    SubFocusRequest& request = graph.spawn_sfoa(foa, need);
    CHECK(request.status == SubFocusRequest::Status::pending);

    Series raw;
    raw.series_id = "s1";
    raw.start_timestamp = 40;
    raw.values.assign(70, 1.0);
    const auto log = graph.answer_sfoa(foa, request.request_id, raw);
    CHECK(foa.sub_foci[0].status == SubFocusRequest::Status::answered);
    CHECK(!foa.sub_foci[0].result_ref.empty());
    REQUIRE(!log.empty());
    CHECK(graph.node(log.front()).level == Level::l1());  // L1 touched first
    CHECK(graph.node(log.front()).label == "s1");

    SfoaNeed outside;
    outside.kind = SfoaNeed::Kind::subsymbolic_data;
    outside.series_ids = {"not-a-member"};
    CHECK_THROWS_AS(graph.spawn_sfoa(foa, outside), OutOfScopeNeed);

    SfoaNeed query;
    query.kind = SfoaNeed::Kind::symbolic_query;
    query.node_pattern = "s2";
    SubFocusRequest& symbolic = graph.spawn_sfoa(foa, query);
    graph.answer_sfoa(foa, symbolic.request_id, "s2 participates in one event");
    CHECK(foa.sub_foci[1].status == SubFocusRequest::Status::answered);

    SfoaNeed missing;
    missing.kind = SfoaNeed::Kind::symbolic_query;
    missing.node_pattern = "zebra";
    CHECK_THROWS_AS(graph.spawn_sfoa(foa, missing), OutOfScopeNeed);
}

TEST_CASE("abstraction allocation climbs L2 sub-levels on demand") {
    KnowledgeGraph graph;
    const auto ids = register_fleet(graph, 4);
    const NodeId ev1 = graph.symbolize_event(event_over(ids, 50));
    const NodeId ev2 = graph.symbolize_event(event_over(ids, 400));
    CHECK(graph.node(ev1).level == Level::l2(0));

    const NodeId incident = graph.add_abstraction("correlated-incident", {ev1, ev2});
    CHECK(graph.node(incident).level == Level::l2(1));
    const NodeId campaign = graph.add_abstraction("campaign", {incident});
    CHECK(graph.node(campaign).level == Level::l2(2));
    CHECK(graph.max_l2_sublevel() == 2);

    const NodeId goal = graph.add_goal("stability");
    CHECK_THROWS_AS(graph.add_abstraction("over-goal", {goal}), LevelViolation);
}

TEST_CASE("expert injection is guarded below L2") {
    KnowledgeGraph graph;
    CHECK_THROWS_AS(graph.add_expert_node("too-low", Level::l1()), LevelViolation);
    const NodeId ok = graph.add_expert_node("maintenance-window", Level::l2(0));
    CHECK(graph.node(ok).provenance == Provenance::injected_expert);

    std::istringstream bad(R"({"t":"node","id":1,"label":"x","level":"L1"})");
    CHECK_THROWS_AS(graph.import_expert_jsonl(bad), LevelViolation);

    std::istringstream good(
        R"({"t":"node","id":1,"label":"patch-window","level":"L2.1"}
{"t":"edge","from":1,"to":)" +
        std::to_string(ok) + R"(,"relation":"correlates_with","kind":"symmetric"})");
    graph.import_expert_jsonl(good);
    const NodeId imported = graph.node_count();
    CHECK(graph.node(imported).provenance == Provenance::injected_expert);
    CHECK(graph.has_relation(ok, imported, kRelCorrelatesWith));
}

TEST_CASE("export is deterministic line-oriented JSON") {
    auto build = []() {
        KnowledgeGraph graph;
        std::set<std::string> ids;
        for (std::size_t i = 0; i < 5; ++i) {
            const std::string id = "s" + std::to_string(i);
            KnowledgeGraph::RegionHandle h = graph.register_region(slice(id), id);
            (void)h;
            ids.insert(id);
        }
        EventOfInterest e;
        e.detection_bin = 50;
        e.peak_bin = 53;
        e.magnitude = 5;
        e.participants = ids;
        e.kind = EventKind::interest;
        e.explanation = "x";
        graph.symbolize_event(e);
        std::ostringstream out;
        graph.export_jsonl(out);
        return out.str();
    };
    const std::string a = build();
    CHECK(a == build());
    CHECK(a.find("\"t\":\"node\"") != std::string::npos);
    CHECK(a.find("\"t\":\"edge\"") != std::string::npos);
    CHECK(std::count(a.begin(), a.end(), '\n') >= 16);  // 11 nodes + 10 edges
}

// Randomized property run: a scaled-down AC-style invariant sweep.
TEST_CASE("randomized operations preserve the graph invariants") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        Rng rng(seed * 7919);
        KnowledgeGraph graph;
        std::vector<std::string> labels;
        std::vector<NodeId> goals;

        for (int op = 0; op < 300; ++op) {
            const auto pick = rng.integer(0, 9);
            try {
                if (pick <= 2 || labels.empty()) {
                    const std::string id = "r" + std::to_string(labels.size());
                    graph.register_region(slice(id), id);
                    labels.push_back(id);
                } else if (pick <= 4) {
                    std::set<std::string> member_ids;
                    const std::size_t want = 1 + rng.integer(0, labels.size() - 1);
                    for (std::size_t k = 0; k < want; ++k) {
                        member_ids.insert(labels[rng.integer(0, labels.size() - 1)]);
                    }
                    graph.refresh_bottom_up(
                        {}, {event_over(member_ids, static_cast<std::int64_t>(op))});
                } else if (pick <= 6) {
                    const NodeId a = 1 + rng.integer(0, graph.node_count() - 1);
                    const NodeId b = 1 + rng.integer(0, graph.node_count() - 1);
                    graph.add_relation(a, b,
                                       rng.integer(0, 1) ? kRelCorrelatesWith : kRelPrecedes,
                                       rng.integer(0, 1) ? RelationKind::symmetric
                                                         : RelationKind::anti_symmetric);
                } else if (pick == 7) {
                    goals.push_back(graph.add_goal("goal" + std::to_string(goals.size())));
                    const NodeId child = 1 + rng.integer(0, graph.node_count() - 2);
                    graph.add_relation(child, goals.back(), kRelAbstractionOf,
                                       RelationKind::anti_symmetric);
                } else if (!goals.empty()) {
                    const auto foas = graph.partition_foa(goals[rng.integer(0, goals.size() - 1)]);
                    std::set<NodeId> seen;
                    for (const auto& foa : foas) {
                        for (NodeId id : foa.member_nodes) {
                            CHECK(!seen.count(id));
                            seen.insert(id);
                        }
                    }
                }
            } catch (const Error&) {
                // rejected operations must leave the graph consistent
            }

            if (op % 50 == 0) {
                for (const KnowledgeEdge& e : graph.edges()) {
                    if (e.relation == kRelAbstractionOf) {
                        CHECK(graph.node(e.from).level < graph.node(e.to).level);
                    }
                    if (e.kind == RelationKind::symmetric) {
                        CHECK(graph.has_relation(e.to, e.from, e.relation));
                    }
                }
                for (const KnowledgeNode& n : graph.nodes()) {
                    if (n.provenance == Provenance::injected_expert) {
                        CHECK(!(n.level < Level::l2(0)));
                    }
                    if (n.level == Level::l0()) {
                        CHECK(n.payload.has_value());
                    }
                    if (n.level == Level::lstar()) {
                        CHECK(!n.payload.has_value());
                    }
                }
            }
        }
    }
}
