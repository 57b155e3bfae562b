// penman.hpp - parser and printer for PENMAN-notation AMR graphs.

#pragma once

#include <string>
#include <vector>

#include "g2s/graph.hpp"

namespace g2s {

// An AMR graph: variables become labelled nodes, relations become labelled
// edges (role without the leading colon), constants become leaf nodes with
// is_constant set. Reentrant variable mentions are plain edges back to the
// defining node, so the structure may contain cycles.
struct AmrGraph {
    struct Node {
        NodeId id;
        std::string label;   // concept for variables, token for constants
        std::string var;     // variable name; empty for constants
        bool is_constant = false;
        bool quoted = false;  // constant was a quoted string
    };
    struct Edge {
        NodeId src;
        NodeId dst;
        std::string label;
    };
    std::vector<Node> nodes;
    std::vector<Edge> edges;
    NodeId root = 0;

    LabeledGraph to_labeled() const;
};

// Parses a single well-formed PENMAN expression. Node ids are assigned in
// depth-first definition order (root = 0); constants get ids at their point
// of use. A bare atom that exactly matches a defined variable is a
// reentrancy; an undefined variable-shaped atom (letter followed only by
// digits) is an error; anything else is a constant.
// Throws ParseError with line/column on malformed input.
AmrGraph parse_penman(const std::string& text);

// Inverse of parse_penman up to variable naming: parse(print(g)) is
// isomorphic to g.
std::string print_penman(const AmrGraph& g);

}  // namespace g2s
