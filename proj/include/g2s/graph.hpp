// graph.hpp - graph data model and transformations.
//
// LabeledGraph is the raw directed graph with labelled nodes and edges.
// LeviGraph is what the encoder consumes: former edges reified as nodes,
// structural edge tags only, plus root-distance positional indices.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "g2s/error.hpp"

namespace g2s {

using NodeId = int;

// Distances clamp at kMaxPosition; unreachable nodes take the sentinel index
// kMaxPosition + 1, so positional embedding tables have kMaxPosition + 2 rows.
constexpr int kMaxPosition = 20;
constexpr int kUnreachablePosition = kMaxPosition + 1;

enum class EdgeType : std::uint8_t { Default = 0, Reverse, Self, Left, Right };
constexpr int kEdgeTypeCount = 5;

const char* edge_type_name(EdgeType t);
EdgeType edge_type_from_name(const std::string& name);

struct LabeledGraph {
    struct Node {
        NodeId id;
        std::string label;
    };
    struct Edge {
        std::optional<NodeId> src;  // empty = virtual-root edge (dependency ROOT)
        NodeId dst;
        std::string label;
    };
    std::vector<Node> nodes;
    std::vector<Edge> edges;
    NodeId root = 0;

    // Throws ValidationError on duplicate/non-contiguous ids or dangling endpoints.
    void validate() const;
};

enum class NodeOrigin : std::uint8_t { FromNode = 0, FromEdge };

struct LeviGraph {
    struct Node {
        NodeId id;
        std::string label;
        NodeOrigin origin;
    };
    struct Edge {
        NodeId src;
        NodeId dst;
        EdgeType tag;
    };
    std::vector<Node> nodes;
    std::vector<Edge> edges;
    NodeId root = 0;
    std::map<NodeId, int> positions;

    std::size_t count_edges(EdgeType t) const;
    bool has_edge_type(EdgeType t) const { return count_edges(t) > 0; }
};

// Reify every edge as a FromEdge node with two Default edges u->w, w->v.
// Virtual-root edges (null src) contribute only w->v. No Reverse/Self yet.
LeviGraph to_levi(const LabeledGraph& g);

// Add one Reverse edge per Default edge and one Self edge per node. Edges are
// reordered into deterministic blocks: Default, Reverse, Self, Left, Right.
// Left/Right edges are kept as-is (they already form mutual pairs).
// Throws ValidationError if any Reverse/Self edge is already present.
LeviGraph augment(const LeviGraph& g);

// Connect consecutive order entries with Left (w_i -> w_{i+1}) and Right
// (w_{i+1} -> w_i) edges. All ids must refer to FromNode nodes, no duplicates.
LeviGraph add_sequential_edges(const LeviGraph& g, const std::vector<NodeId>& order);

// BFS depth from root over Default edges only, clamped at kMaxPosition;
// unreachable nodes get the sentinel. Result is also stored in g.positions.
std::map<NodeId, int> compute_positions(LeviGraph& g);

// --------------------------------------------------------------- interchange
//
// One JSON object per line: {"nodes":[[id,label,origin],...],
// "edges":[[src,dst,tag],...],"root":id,"positions":{"id":pos,...}}.
// origin is "node"|"edge"; tag is the edge-type name. A null src encodes a
// virtual-root edge (only valid in LabeledGraph lines, where origin is always
// "node" and tag carries the raw edge label).

std::string to_json_line(const LeviGraph& g);
std::string to_json_line(const LabeledGraph& g);
LeviGraph levi_from_json_line(const std::string& line);
std::vector<LeviGraph> read_levi_jsonl(std::istream& in);

}  // namespace g2s
