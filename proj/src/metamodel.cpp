#include "sentinel/metamodel.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "sentinel/errors.hpp"

namespace sentinel {

namespace {

using nlohmann::json;

const char* to_string(Provenance p) {
    return p == Provenance::bottom_up ? "bottom_up" : "injected_expert";
}

const char* to_string(RelationKind k) {
    return k == RelationKind::symmetric ? "symmetric" : "anti_symmetric";
}

const char* to_string(PayloadRef::Kind k) {
    switch (k) {
        case PayloadRef::Kind::series_slice: return "series_slice";
        case PayloadRef::Kind::histogram_range: return "histogram_range";
        case PayloadRef::Kind::event_record: return "event_record";
    }
    return "unknown";
}

struct UnionFind {
    std::map<NodeId, NodeId> parent;

    NodeId find(NodeId x) {
        auto it = parent.find(x);
        if (it == parent.end()) {
            parent[x] = x;
            return x;
        }
        if (it->second != x) {
            it->second = find(it->second);
        }
        return it->second;
    }

    void unite(NodeId a, NodeId b) { parent[find(a)] = find(b); }
};

}  // namespace

std::string Level::to_string() const {
    switch (tier) {
        case Tier::l0: return "L0";
        case Tier::l1: return "L1";
        case Tier::l2: return "L2." + std::to_string(sublevel);
        case Tier::lstar: return "L*";
    }
    return "?";
}

std::optional<Level> Level::parse(const std::string& text) {
    if (text == "L0") return l0();
    if (text == "L1") return l1();
    if (text == "L*") return lstar();
    if (text.rfind("L2", 0) == 0) {
        if (text == "L2") return l2(0);
        if (text.size() > 3 && text[2] == '.') {
            try {
                return l2(static_cast<std::uint32_t>(std::stoul(text.substr(3))));
            } catch (const std::exception&) {
                return std::nullopt;
            }
        }
    }
    return std::nullopt;
}

NodeId KnowledgeGraph::new_node(Level level, std::string label,
                                std::optional<PayloadRef> payload, Provenance provenance) {
    KnowledgeNode node;
    node.id = nodes_.size() + 1;
    node.level = level;
    node.label = std::move(label);
    node.payload = std::move(payload);
    node.provenance = provenance;
    nodes_.push_back(std::move(node));
    return nodes_.back().id;
}

const KnowledgeNode& KnowledgeGraph::node(NodeId id) const {
    if (!has_node(id)) {
        throw IndexOutOfRange("knowledge graph: no node with id " + std::to_string(id));
    }
    return nodes_[id - 1];
}

std::optional<NodeId> KnowledgeGraph::find_l1_by_label(const std::string& label) const {
    auto it = l1_by_label_.find(label);
    if (it == l1_by_label_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::optional<std::uint32_t> KnowledgeGraph::max_l2_sublevel() const {
    std::optional<std::uint32_t> best;
    for (const KnowledgeNode& n : nodes_) {
        if (n.level.tier == Level::Tier::l2 && (!best || n.level.sublevel > *best)) {
            best = n.level.sublevel;
        }
    }
    return best;
}

KnowledgeGraph::RegionHandle KnowledgeGraph::register_region(const PayloadRef& payload_ref,
                                                             const std::string& label) {
    if (payload_ref.key.empty() || payload_ref.end < payload_ref.begin) {
        throw DanglingPayload("register_region: payload '" + payload_ref.key +
                              "' does not resolve to subsymbolic data");
    }
    const auto key = std::make_pair(payload_ref, label);
    auto existing = regions_.find(key);
    if (existing != regions_.end()) {
        return existing->second;
    }

    NodeId l1;
    auto l1_it = l1_by_label_.find(label);
    if (l1_it != l1_by_label_.end()) {
        l1 = l1_it->second;
    } else {
        l1 = new_node(Level::l1(), label, std::nullopt, Provenance::bottom_up);
        l1_by_label_[label] = l1;
    }
    const NodeId l0 = new_node(Level::l0(), label, payload_ref, Provenance::bottom_up);
    add_relation(l0, l1, kRelAbstractionOf, RelationKind::anti_symmetric);

    RegionHandle handle{l0, l1};
    regions_[key] = handle;
    return handle;
}

EdgeId KnowledgeGraph::add_relation(NodeId a, NodeId b, const std::string& relation,
                                    RelationKind kind) {
    if (!has_node(a) || !has_node(b)) {
        throw IndexOutOfRange("add_relation: node does not exist");
    }
    if (relation == kRelAbstractionOf) {
        if (kind != RelationKind::anti_symmetric) {
            throw InvalidConfig("add_relation: abstraction_of must be anti_symmetric");
        }
        if (!(node(a).level < node(b).level)) {
            throw LevelViolation("add_relation: abstraction_of must be strictly " +
                                 std::string("level-increasing: ") + node(a).level.to_string() +
                                 " -> " + node(b).level.to_string());
        }
    }

    // One kind per relation label keeps symmetry queries well defined.
    auto kind_it = relation_kinds_.find(relation);
    if (kind_it == relation_kinds_.end()) {
        relation_kinds_[relation] = kind;
    } else if (kind_it->second != kind) {
        throw InvalidConfig("add_relation: relation '" + relation +
                            "' already registered with the opposite kind");
    }

    auto forward = edges_by_endpoints_.find({a, b});
    if (forward != edges_by_endpoints_.end()) {
        for (EdgeId eid : forward->second) {
            if (edges_[eid - 1].relation == relation) {
                return eid;  // idempotent re-insertion
            }
        }
    }
    auto reverse = edges_by_endpoints_.find({b, a});
    if (reverse != edges_by_endpoints_.end()) {
        for (EdgeId eid : reverse->second) {
            if (edges_[eid - 1].relation != relation) {
                continue;
            }
            if (kind == RelationKind::anti_symmetric && a != b) {
                throw AntiSymmetryViolation("add_relation: reverse '" + relation +
                                            "' already present between " + std::to_string(b) +
                                            " and " + std::to_string(a));
            }
            return eid;  // symmetric: already queryable in both directions
        }
    }

    KnowledgeEdge edge;
    edge.id = edges_.size() + 1;
    edge.from = a;
    edge.to = b;
    edge.relation = relation;
    edge.kind = kind;
    edges_.push_back(edge);
    edges_by_endpoints_[{a, b}].push_back(edge.id);
    edges_by_node_[a].push_back(edge.id);
    if (b != a) {
        edges_by_node_[b].push_back(edge.id);
    }
    return edge.id;
}

bool KnowledgeGraph::has_relation(NodeId a, NodeId b, const std::string& relation) const {
    auto forward = edges_by_endpoints_.find({a, b});
    if (forward != edges_by_endpoints_.end()) {
        for (EdgeId eid : forward->second) {
            if (edges_[eid - 1].relation == relation) {
                return true;
            }
        }
    }
    auto reverse = edges_by_endpoints_.find({b, a});
    if (reverse != edges_by_endpoints_.end()) {
        for (EdgeId eid : reverse->second) {
            const KnowledgeEdge& e = edges_[eid - 1];
            if (e.relation == relation && e.kind == RelationKind::symmetric) {
                return true;
            }
        }
    }
    return false;
}

NodeId KnowledgeGraph::add_abstraction(const std::string& label,
                                       const std::vector<NodeId>& children,
                                       Provenance provenance) {
    if (children.empty()) {
        throw InvalidConfig("add_abstraction: needs at least one child");
    }
    Level highest = Level::l0();
    for (NodeId child : children) {
        highest = std::max(highest, node(child).level);
    }
    if (highest.tier == Level::Tier::lstar) {
        throw LevelViolation("add_abstraction: cannot abstract over an L* goal");
    }
    const Level level = highest.tier == Level::Tier::l2 ? Level::l2(highest.sublevel + 1)
                                                        : Level::l2(0);
    const NodeId id = new_node(level, label, std::nullopt, provenance);
    for (NodeId child : children) {
        add_relation(child, id, kRelAbstractionOf, RelationKind::anti_symmetric);
    }
    return id;
}

NodeId KnowledgeGraph::add_goal(const std::string& label) {
    return new_node(Level::lstar(), label, std::nullopt, Provenance::bottom_up);
}

NodeId KnowledgeGraph::add_expert_node(const std::string& label, Level level) {
    if (level < Level::l2(0)) {
        throw LevelViolation("add_expert_node: expert knowledge enters at L2 or above, got " +
                             level.to_string());
    }
    return new_node(level, label, std::nullopt, Provenance::injected_expert);
}

std::vector<NodeId> KnowledgeGraph::refresh_bottom_up(const std::vector<RegimeChange>& changes,
                                                      const std::vector<EventOfInterest>& events) {
    // Resolve all evidence before any mutation.
    std::map<NodeId, std::pair<std::int64_t, std::uint64_t>> l1_touched;  // ts, count
    for (const RegimeChange& change : changes) {
        const auto l1 = find_l1_by_label(change.series_id);
        if (!l1) {
            throw UnregisteredEvidence("refresh_bottom_up: series '" + change.series_id +
                                       "' has no registered region");
        }
        auto& entry = l1_touched[*l1];
        entry.first = std::max(entry.first, change.timestamp);
        entry.second += 1;
    }
    for (const EventOfInterest& event : events) {
        for (const std::string& id : event.participants) {
            const auto l1 = find_l1_by_label(id);
            if (!l1) {
                throw UnregisteredEvidence("refresh_bottom_up: participant '" + id +
                                           "' has no registered region");
            }
            auto& entry = l1_touched[*l1];
            entry.first = std::max(entry.first, event.detection_bin);
        }
    }

    return do_refresh(l1_touched, events);
}

std::vector<NodeId> KnowledgeGraph::do_refresh(
    const std::map<NodeId, std::pair<std::int64_t, std::uint64_t>>& l1_touched,
    const std::vector<EventOfInterest>& events) {
    std::vector<NodeId> log;

    // L1 first: freshness and evidence summaries, in node-id order.
    std::int64_t max_ts = 0;
    for (const auto& [id, entry] : l1_touched) {
        KnowledgeNode& n = nodes_[id - 1];
        n.freshness = std::max(n.freshness, entry.first);
        n.evidence_count += entry.second;
        max_ts = std::max(max_ts, entry.first);
        log.push_back(id);
    }

    // Then L2: new event nodes in event order, wiring onset -> recovery pairs
    // created within this batch.
    std::vector<NodeId> created(events.size(), 0);
    for (std::size_t i = 0; i < events.size(); ++i) {
        std::optional<NodeId> onset;
        if (events[i].kind == EventKind::recovery && events[i].paired_event &&
            *events[i].paired_event < i) {
            onset = created[*events[i].paired_event];
        }
        created[i] = symbolize_event(events[i], onset);
        max_ts = std::max(max_ts, events[i].detection_bin);
    }

    // Dependent L2 nodes: propagate upward from the touched set through
    // participates_in and abstraction_of, strictly below L*.
    std::set<NodeId> frontier;
    for (const auto& [id, entry] : l1_touched) {
        frontier.insert(id);
    }
    frontier.insert(created.begin(), created.end());
    std::set<NodeId> dependent;
    std::set<NodeId> seen = frontier;
    while (!frontier.empty()) {
        std::set<NodeId> next;
        for (NodeId id : frontier) {
            auto adj = edges_by_node_.find(id);
            if (adj == edges_by_node_.end()) {
                continue;
            }
            for (EdgeId eid : adj->second) {
                const KnowledgeEdge& e = edges_[eid - 1];
                if (e.from != id) {
                    continue;
                }
                if (e.relation != kRelParticipatesIn && e.relation != kRelAbstractionOf) {
                    continue;
                }
                const KnowledgeNode& target = nodes_[e.to - 1];
                if (target.level.tier != Level::Tier::l2) {
                    continue;
                }
                if (seen.insert(e.to).second) {
                    dependent.insert(e.to);
                    next.insert(e.to);
                }
            }
        }
        frontier = std::move(next);
    }

    std::vector<NodeId> l2_log(created.begin(), created.end());
    l2_log.insert(l2_log.end(), dependent.begin(), dependent.end());
    std::sort(l2_log.begin(), l2_log.end(), [this](NodeId a, NodeId b) {
        const Level la = nodes_[a - 1].level;
        const Level lb = nodes_[b - 1].level;
        return la != lb ? la < lb : a < b;
    });
    for (NodeId id : l2_log) {
        KnowledgeNode& n = nodes_[id - 1];
        n.freshness = std::max(n.freshness, max_ts);
        log.push_back(id);
    }
    return log;
}

NodeId KnowledgeGraph::symbolize_event(const EventOfInterest& event,
                                       std::optional<NodeId> paired_onset) {
    if (event.kind == EventKind::candidate) {
        throw InvalidConfig("symbolize_event: event must be classified first");
    }
    std::vector<NodeId> participant_l1;
    participant_l1.reserve(event.participants.size());
    for (const std::string& id : event.participants) {
        const auto l1 = find_l1_by_label(id);
        if (!l1) {
            throw UnregisteredEvidence("symbolize_event: participant '" + id +
                                       "' has no registered region");
        }
        participant_l1.push_back(*l1);
    }

    PayloadRef payload;
    payload.kind = PayloadRef::Kind::histogram_range;
    payload.key = "histogram";
    payload.begin = event.detection_bin;
    payload.end = event.peak_bin;

    const std::string label =
        std::string(sentinel::to_string(event.kind)) + " event: " + event.explanation;
    const NodeId ev = new_node(Level::l2(0), label, payload, Provenance::bottom_up);
    nodes_[ev - 1].freshness = event.detection_bin;

    for (NodeId l1 : participant_l1) {
        add_relation(l1, ev, kRelParticipatesIn, RelationKind::anti_symmetric);
    }
    if (paired_onset) {
        add_relation(*paired_onset, ev, kRelPrecedes, RelationKind::anti_symmetric);
    }
    return ev;
}

void KnowledgeGraph::collect_below(NodeId goal, std::set<NodeId>& out) const {
    std::vector<NodeId> stack{goal};
    while (!stack.empty()) {
        const NodeId u = stack.back();
        stack.pop_back();
        auto adj = edges_by_node_.find(u);
        if (adj == edges_by_node_.end()) {
            continue;
        }
        for (EdgeId eid : adj->second) {
            const KnowledgeEdge& e = edges_[eid - 1];
            if (e.to != u) {
                continue;
            }
            if (e.relation != kRelAbstractionOf && e.relation != kRelParticipatesIn) {
                continue;
            }
            if (e.from == goal) {
                continue;
            }
            if (out.insert(e.from).second) {
                stack.push_back(e.from);
            }
        }
    }
}

std::vector<FocusOfAttention> KnowledgeGraph::partition_foa(NodeId goal_node) const {
    const KnowledgeNode& goal = node(goal_node);
    if (goal.level < Level::l2(0)) {
        throw GoalTooLow("partition_foa: goal '" + goal.label + "' sits at " +
                         goal.level.to_string() + ", needs L2 or above");
    }

    std::set<NodeId> members;
    collect_below(goal_node, members);

    // Connected components of the reachable set. The goal itself is excluded
    // so independent evidence clusters stay separate.
    UnionFind uf;
    for (NodeId id : members) {
        uf.find(id);
    }
    for (const KnowledgeEdge& e : edges_) {
        if (members.count(e.from) && members.count(e.to)) {
            uf.unite(e.from, e.to);
        }
    }

    std::map<NodeId, std::set<NodeId>> components;  // root -> members
    for (NodeId id : members) {
        components[uf.find(id)].insert(id);
    }

    // Deterministic ordering by smallest member id.
    std::vector<std::set<NodeId>> ordered;
    ordered.reserve(components.size());
    for (auto& [root, component] : components) {
        ordered.push_back(std::move(component));
    }
    std::sort(ordered.begin(), ordered.end(),
              [](const std::set<NodeId>& a, const std::set<NodeId>& b) {
                  return *a.begin() < *b.begin();
              });

    std::vector<FocusOfAttention> result;
    result.reserve(ordered.size());
    std::uint64_t ordinal = 1;
    for (auto& component : ordered) {
        FocusOfAttention foa;
        foa.foa_id = ordinal++;
        foa.goal_node = goal_node;
        foa.member_nodes = std::move(component);
        result.push_back(std::move(foa));
    }
    return result;
}

SubFocusRequest& KnowledgeGraph::spawn_sfoa(FocusOfAttention& foa, const SfoaNeed& need) {
    SubFocusRequest request;
    request.request_id = next_request_id_++;

    if (need.kind == SfoaNeed::Kind::subsymbolic_data) {
        if (need.series_ids.empty()) {
            throw OutOfScopeNeed("spawn_sfoa: subsymbolic need names no series");
        }
        for (const std::string& id : need.series_ids) {
            const auto l1 = find_l1_by_label(id);
            if (!l1 || !foa.member_nodes.count(*l1)) {
                throw OutOfScopeNeed("spawn_sfoa: series '" + id +
                                     "' is not a member of this focus of attention");
            }
        }
        request.target = SubFocusRequest::SubsymbolicTarget{need.series_ids, need.begin, need.end};
    } else {
        bool matched = false;
        for (NodeId id : foa.member_nodes) {
            if (node(id).label.find(need.node_pattern) != std::string::npos) {
                matched = true;
                break;
            }
        }
        if (!matched) {
            throw OutOfScopeNeed("spawn_sfoa: pattern '" + need.node_pattern +
                                 "' matches no member node");
        }
        request.target = SubFocusRequest::SymbolicTarget{need.node_pattern};
    }

    foa.sub_foci.push_back(std::move(request));
    return foa.sub_foci.back();
}

namespace {

SubFocusRequest& find_request(FocusOfAttention& foa, std::uint64_t request_id) {
    for (SubFocusRequest& r : foa.sub_foci) {
        if (r.request_id == request_id) {
            return r;
        }
    }
    throw IndexOutOfRange("answer_sfoa: no request with id " + std::to_string(request_id));
}

}  // namespace

std::vector<NodeId> KnowledgeGraph::answer_sfoa(FocusOfAttention& foa, std::uint64_t request_id,
                                                const Series& slice) {
    SubFocusRequest& request = find_request(foa, request_id);
    if (request.status == SubFocusRequest::Status::answered) {
        throw InvalidConfig("answer_sfoa: request already answered");
    }
    auto* target = std::get_if<SubFocusRequest::SubsymbolicTarget>(&request.target);
    if (target == nullptr) {
        throw InvalidConfig("answer_sfoa: request expects a symbolic answer");
    }
    if (std::find(target->series_ids.begin(), target->series_ids.end(), slice.series_id) ==
        target->series_ids.end()) {
        throw OutOfScopeNeed("answer_sfoa: slice of '" + slice.series_id +
                             "' was not requested");
    }

    const std::int64_t last_ts =
        slice.start_timestamp + static_cast<std::int64_t>(slice.size()) - 1;
    request.status = SubFocusRequest::Status::answered;
    request.result_ref = "series:" + slice.series_id + "[" +
                         std::to_string(slice.start_timestamp) + "," +
                         std::to_string(last_ts + 1) + ")";

    // Delivered subsymbolic data re-enters bottom-up.
    const auto l1 = find_l1_by_label(slice.series_id);
    if (!l1) {
        throw UnregisteredEvidence("answer_sfoa: series '" + slice.series_id +
                                   "' has no registered region");
    }
    std::map<NodeId, std::pair<std::int64_t, std::uint64_t>> touched;
    touched[*l1] = {last_ts, 0};
    return do_refresh(touched, {});
}

void KnowledgeGraph::answer_sfoa(FocusOfAttention& foa, std::uint64_t request_id,
                                 const std::string& symbolic_answer) {
    SubFocusRequest& request = find_request(foa, request_id);
    if (request.status == SubFocusRequest::Status::answered) {
        throw InvalidConfig("answer_sfoa: request already answered");
    }
    if (!std::holds_alternative<SubFocusRequest::SymbolicTarget>(request.target)) {
        throw InvalidConfig("answer_sfoa: request expects a subsymbolic slice");
    }
    request.status = SubFocusRequest::Status::answered;
    request.result_ref = symbolic_answer;
}

void KnowledgeGraph::export_jsonl(std::ostream& out) const {
    for (const KnowledgeNode& n : nodes_) {
        json line;
        line["t"] = "node";
        line["id"] = n.id;
        line["level"] = n.level.to_string();
        line["label"] = n.label;
        line["provenance"] = to_string(n.provenance);
        line["freshness"] = n.freshness;
        line["evidence_count"] = n.evidence_count;
        if (n.payload) {
            line["payload"] = {{"kind", to_string(n.payload->kind)},
                               {"key", n.payload->key},
                               {"begin", n.payload->begin},
                               {"end", n.payload->end}};
        } else {
            line["payload"] = nullptr;
        }
        out << line.dump() << '\n';
    }
    for (const KnowledgeEdge& e : edges_) {
        json line;
        line["t"] = "edge";
        line["id"] = e.id;
        line["from"] = e.from;
        line["to"] = e.to;
        line["relation"] = e.relation;
        line["kind"] = to_string(e.kind);
        out << line.dump() << '\n';
    }
}

void KnowledgeGraph::import_expert_jsonl(std::istream& in) {
    std::map<std::uint64_t, NodeId> remap;
    std::string text;
    std::size_t line_no = 0;
    while (std::getline(in, text)) {
        ++line_no;
        if (text.empty()) {
            continue;
        }
        json line;
        try {
            line = json::parse(text);
        } catch (const json::exception& e) {
            throw MalformedRow("expert import line " + std::to_string(line_no) + ": " + e.what());
        }
        const std::string type = line.value("t", "");
        if (type == "node") {
            const auto level = Level::parse(line.value("level", ""));
            if (!level) {
                throw MalformedRow("expert import line " + std::to_string(line_no) +
                                   ": bad level");
            }
            // add_expert_node enforces the >= L2 guard.
            const NodeId id = add_expert_node(line.value("label", ""), *level);
            remap[line.value("id", std::uint64_t{0})] = id;
        } else if (type == "edge") {
            auto resolve = [&](std::uint64_t file_id) -> NodeId {
                auto it = remap.find(file_id);
                if (it != remap.end()) {
                    return it->second;
                }
                if (!has_node(file_id)) {
                    throw IndexOutOfRange("expert import line " + std::to_string(line_no) +
                                          ": unknown node " + std::to_string(file_id));
                }
                return file_id;
            };
            const NodeId from = resolve(line.value("from", std::uint64_t{0}));
            const NodeId to = resolve(line.value("to", std::uint64_t{0}));
            const RelationKind kind = line.value("kind", "anti_symmetric") == "symmetric"
                                          ? RelationKind::symmetric
                                          : RelationKind::anti_symmetric;
            add_relation(from, to, line.value("relation", ""), kind);
        } else {
            throw MalformedRow("expert import line " + std::to_string(line_no) +
                               ": unknown record type '" + type + "'");
        }
    }
}

}  // namespace sentinel
