// amr_prep.hpp - AMR simplification, entity/date anonymisation and the
// inverse deanonymisation applied after decoding.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "g2s/penman.hpp"

namespace g2s {

// Ordered per-sentence record of anonymised tokens and the surface words each
// one stands for. Tokens are unique within a sentence.
struct AnonymizationMap {
    std::vector<std::pair<std::string, std::vector<std::string>>> entries;

    const std::vector<std::string>* find(const std::string& token) const;
    void add(const std::string& token, std::vector<std::string> concepts);

    std::string to_json_line() const;
    static AnonymizationMap from_json_line(const std::string& line);
};

// node id -> [start, end) span over the surface tokens.
using AlignmentTable = std::map<NodeId, std::pair<int, int>>;

// Alignment file lines are JSON arrays of ["node-path", start, end]. A node
// path is "0" for the root and "0.k" for the target of the root's k-th
// outgoing edge (0-based, definition order), recursively.
NodeId resolve_node_path(const AmrGraph& g, const std::string& path);
AlignmentTable alignment_from_json_line(const AmrGraph& g, const std::string& line);

// Entity concept -> coarse type used when anonymising. Defaults cover the
// common AMR entity names with the four types person/loc/org/other.
struct EntityTypeTable {
    std::map<std::string, std::string> mapping;
    static EntityTypeTable defaults();
    std::string coarse_type(const std::string& concept_name) const;
};

// Strips "-NN" sense suffixes from variable concepts and deletes every
// subgraph hanging off a :wiki relation. Node ids are recompacted.
AmrGraph simplify(const AmrGraph& g);

struct AnonymizeResult {
    AmrGraph graph;
    std::vector<std::string> surface;
    AnonymizationMap map;
    std::vector<std::string> warnings;  // e.g. entities without alignment
};

// Collapses each :name subgraph into one coarse-typed, indexed node
// (person_0, loc_1, ...) and anonymises date-entity day/month/year children.
// Aligned surface spans are replaced by the same tokens; dates additionally
// split into *_name/*_number on the surface side depending on what the
// aligned token looks like. With an empty table only the graph side changes
// and the map is built from the graph, which is the test-time behaviour.
AnonymizeResult anonymize(const AmrGraph& g, const AlignmentTable& alignments,
                          const std::vector<std::string>& surface,
                          const EntityTypeTable& types = EntityTypeTable::defaults());

// Replaces every predicted token present in the map by its stored word
// sequence; unknown tokens pass through unchanged.
std::vector<std::string> deanonymize(const std::vector<std::string>& tokens,
                                     const AnonymizationMap& map);

// -------------------------------------------------------------------- corpus

// One sentence of an AMR corpus file: PENMAN block plus optional
// "# ::tok ..." surface line and "# ::align ..." alignment line.
struct AmrInstance {
    std::string penman;
    std::vector<std::string> tokens;
    std::string alignment_json;  // empty when absent
};

std::vector<AmrInstance> read_amr_corpus(std::istream& in);

}  // namespace g2s
