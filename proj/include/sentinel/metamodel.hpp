#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "sentinel/aggregator.hpp"
#include "sentinel/segmentation.hpp"
#include "sentinel/series.hpp"

namespace sentinel {

/// Abstraction level: L0 < L1 < L2.0 < L2.1 < ... < L*. L2 admits unbounded
/// sub-levels.
struct Level {
    enum class Tier : std::uint8_t { l0 = 0, l1 = 1, l2 = 2, lstar = 3 };

    Tier tier = Tier::l0;
    std::uint32_t sublevel = 0;  // meaningful for l2 only

    static Level l0() { return {Tier::l0, 0}; }
    static Level l1() { return {Tier::l1, 0}; }
    static Level l2(std::uint32_t k) { return {Tier::l2, k}; }
    static Level lstar() { return {Tier::lstar, 0}; }

    friend auto operator<=>(const Level&, const Level&) = default;

    std::string to_string() const;
    static std::optional<Level> parse(const std::string& text);
};

using NodeId = std::uint64_t;
using EdgeId = std::uint64_t;

enum class Provenance { bottom_up, injected_expert };
enum class RelationKind { symmetric, anti_symmetric };

/// Reference into the subsymbolic side: a raw series slice, a histogram bin
/// range, or an event record.
struct PayloadRef {
    enum class Kind { series_slice, histogram_range, event_record };

    Kind kind = Kind::series_slice;
    std::string key;  // series_id, "histogram", or an event tag
    std::int64_t begin = 0;
    std::int64_t end = 0;

    friend bool operator==(const PayloadRef&, const PayloadRef&) = default;
    friend auto operator<=>(const PayloadRef&, const PayloadRef&) = default;
};

struct KnowledgeNode {
    NodeId id = 0;
    Level level;
    std::string label;
    std::optional<PayloadRef> payload;
    Provenance provenance = Provenance::bottom_up;
    std::int64_t freshness = 0;       // timestamp of last bottom-up refresh
    std::uint64_t evidence_count = 0; // regime changes folded into this node
};

struct KnowledgeEdge {
    EdgeId id = 0;
    NodeId from = 0;
    NodeId to = 0;
    std::string relation;
    RelationKind kind = RelationKind::anti_symmetric;
};

inline constexpr const char* kRelAbstractionOf = "abstraction_of";
inline constexpr const char* kRelParticipatesIn = "participates_in";
inline constexpr const char* kRelPrecedes = "precedes";
inline constexpr const char* kRelCorrelatesWith = "correlates_with";

struct SfoaSubsymbolicTarget {
    std::vector<std::string> series_ids;
    std::int64_t begin = 0;
    std::int64_t end = 0;
};
struct SfoaSymbolicTarget {
    std::string node_pattern;  // label substring to match among members
};

/// A partition's request for more data: either raw windows from named series
/// (answered with a series slice, triggering a bottom-up refresh) or a
/// symbolic query over member labels.
struct SubFocusRequest {
    using SubsymbolicTarget = SfoaSubsymbolicTarget;
    using SymbolicTarget = SfoaSymbolicTarget;

    std::uint64_t request_id = 0;
    std::variant<SubsymbolicTarget, SymbolicTarget> target;
    enum class Status { pending, answered } status = Status::pending;
    std::string result_ref;
};

/// One goal-driven partition: the member nodes are a connected component of
/// the subgraph strictly below the goal, so distinct partitions under one
/// goal are disjoint and may be processed in parallel.
struct FocusOfAttention {
    std::uint64_t foa_id = 0;
    NodeId goal_node = 0;
    std::set<NodeId> member_nodes;
    std::vector<SubFocusRequest> sub_foci;
};

/// What a sub-focus-of-attention asks for.
struct SfoaNeed {
    enum class Kind { subsymbolic_data, symbolic_query };

    Kind kind = Kind::subsymbolic_data;
    std::vector<std::string> series_ids;  // subsymbolic_data
    std::int64_t begin = 0;
    std::int64_t end = 0;
    std::string node_pattern;  // symbolic_query
};

/// The leveled knowledge graph with symmetric/anti-symmetric relations, a
/// distinguished abstraction relation, bottom-up refresh, and focus-of-
/// attention partitioning. Single writer; const queries are safe to run
/// concurrently with each other.
class KnowledgeGraph {
public:
    struct RegionHandle {
        NodeId l0 = 0;
        NodeId l1 = 0;
    };

    /// Creates an L0 node carrying payload_ref plus an L1 node labeled
    /// `label`, linked by abstraction_of. Idempotent for an identical
    /// (payload_ref, label) pair; a new payload under an existing label
    /// attaches a fresh L0 node to the same L1 symbol.
    RegionHandle register_region(const PayloadRef& payload_ref, const std::string& label);

    /// Stores a relation. Symmetric relations answer true in both
    /// directions; anti-symmetric relations reject a reverse insertion.
    /// abstraction_of must be anti-symmetric and strictly level-increasing.
    EdgeId add_relation(NodeId a, NodeId b, const std::string& relation, RelationKind kind);

    /// True when (a, b) holds under `relation`, honoring symmetry closure.
    bool has_relation(NodeId a, NodeId b, const std::string& relation) const;

    /// New abstraction node over existing children, linked child ->
    /// abstraction. Children below L2 yield an L2.0 node; children already in
    /// L2 yield sub-level max(k)+1.
    NodeId add_abstraction(const std::string& label, const std::vector<NodeId>& children,
                           Provenance provenance = Provenance::bottom_up);

    /// New L* goal node (never carries a payload).
    NodeId add_goal(const std::string& label);

    /// Expert-provided symbol; level must be L2 or above.
    NodeId add_expert_node(const std::string& label, Level level);

    /// Folds new subsymbolic evidence upward: L1 freshness/summaries first,
    /// then new and dependent L2 nodes in level order. Returns the touched
    /// node ids, non-decreasing in level. Nothing above the evidence is ever
    /// written before the evidence's own level, and L0 payloads are never
    /// mutated.
    std::vector<NodeId> refresh_bottom_up(const std::vector<RegimeChange>& changes,
                                          const std::vector<EventOfInterest>& events);

    /// Creates the L2 subgraph for one classified event: the event node
    /// (label carries kind + explanation), participates_in edges from each
    /// participant's L1 node, a precedes edge from the paired onset when
    /// given, and the detection/peak bins as payload.
    NodeId symbolize_event(const EventOfInterest& event,
                           std::optional<NodeId> paired_onset = std::nullopt);

    /// Splits the subgraph strictly below goal_node (reachable downward via
    /// abstraction_of and participates_in) into connected components; each
    /// becomes one FocusOfAttention. Disjoint by construction, jointly
    /// covering the reachable set.
    std::vector<FocusOfAttention> partition_foa(NodeId goal_node) const;

    /// Creates a pending request scoped to this FoA's members.
    SubFocusRequest& spawn_sfoa(FocusOfAttention& foa, const SfoaNeed& need);

    /// Answers a subsymbolic request with a raw slice; triggers a bottom-up
    /// refresh for the delivered series and returns that change log.
    std::vector<NodeId> answer_sfoa(FocusOfAttention& foa, std::uint64_t request_id,
                                    const Series& slice);

    /// Answers a symbolic request.
    void answer_sfoa(FocusOfAttention& foa, std::uint64_t request_id,
                     const std::string& symbolic_answer);

    /// Line-oriented JSON export: one node or edge object per line, ordered
    /// by id. Deterministic bytes for a fixed graph.
    void export_jsonl(std::ostream& out) const;

    /// Imports expert nodes/relations from the export format. Every imported
    /// node must sit at L2 or above and is marked injected_expert.
    void import_expert_jsonl(std::istream& in);

    const KnowledgeNode& node(NodeId id) const;
    bool has_node(NodeId id) const { return id >= 1 && id <= nodes_.size(); }
    std::optional<NodeId> find_l1_by_label(const std::string& label) const;
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }
    const std::vector<KnowledgeNode>& nodes() const { return nodes_; }
    const std::vector<KnowledgeEdge>& edges() const { return edges_; }

    /// Highest allocated L2 sub-level, or nullopt when L2 is empty.
    std::optional<std::uint32_t> max_l2_sublevel() const;

private:
    NodeId new_node(Level level, std::string label, std::optional<PayloadRef> payload,
                    Provenance provenance);
    // Shared refresh core: (max evidence timestamp, regime-change count) per
    // touched L1 node, plus events to symbolize.
    std::vector<NodeId> do_refresh(
        const std::map<NodeId, std::pair<std::int64_t, std::uint64_t>>& l1_touched,
        const std::vector<EventOfInterest>& events);
    void collect_below(NodeId goal, std::set<NodeId>& out) const;

    std::vector<KnowledgeNode> nodes_;  // id == index + 1
    std::vector<KnowledgeEdge> edges_;  // id == index + 1
    std::map<std::pair<NodeId, NodeId>, std::vector<EdgeId>> edges_by_endpoints_;
    std::map<NodeId, std::vector<EdgeId>> edges_by_node_;
    std::map<std::string, RelationKind> relation_kinds_;
    std::map<std::string, NodeId> l1_by_label_;
    std::map<std::pair<PayloadRef, std::string>, RegionHandle> regions_;
    std::uint64_t next_request_id_ = 1;
};

}  // namespace sentinel
