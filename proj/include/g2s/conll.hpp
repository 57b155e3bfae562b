// conll.hpp - dependency-tree ingestion and NMT input-graph assembly.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "g2s/graph.hpp"

namespace g2s {

struct DependencySentence {
    struct Token {
        std::string surface;
        std::optional<int> head;  // 0-based token index; empty for the root
        std::string relation;
    };
    std::vector<Token> tokens;

    int root_index() const;
    void validate() const;  // exactly one root, heads form a tree
};

// Column layout of the tabular file (0-based). Defaults follow CoNLL-X:
// ID FORM LEMMA CPOS POS FEATS HEAD DEPREL, head value 0 meaning root.
struct ConllFormat {
    int form_col = 1;
    int head_col = 6;
    int rel_col = 7;
};

// Blocks are separated by blank lines; comment lines start with '#'.
// Throws ParseError with the file line number on malformed rows, multiple
// roots or head cycles.
std::vector<DependencySentence> parse_conll(const std::string& text, ConllFormat fmt = {});
std::vector<DependencySentence> read_conll(std::istream& in, ConllFormat fmt = {});

// Words become nodes and relations labelled edges (the ROOT relation has a
// null source); then to_levi, optional Left/Right sequential connections in
// surface order, augment, compute_positions. The positional BFS is rooted at
// the reified ROOT-relation node.
LeviGraph build_nmt_graph(const DependencySentence& sent, bool with_sequential);

// The unique FromEdge node with no incoming Default edge (the reified
// virtual-root relation), or -1 when absent.
NodeId find_virtual_root(const LeviGraph& g);

}  // namespace g2s
