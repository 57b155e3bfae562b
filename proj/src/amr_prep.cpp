#include "g2s/amr_prep.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <istream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace g2s {

// ------------------------------------------------------------ map & alignment

const std::vector<std::string>* AnonymizationMap::find(const std::string& token) const {
    for (const auto& [tok, words] : entries)
        if (tok == token) return &words;
    return nullptr;
}

void AnonymizationMap::add(const std::string& token, std::vector<std::string> concepts) {
    if (find(token)) throw ValidationError("duplicate anonymised token " + token);
    entries.emplace_back(token, std::move(concepts));
}

std::string AnonymizationMap::to_json_line() const {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& [tok, words] : entries) j.push_back({tok, words});
    return j.dump();
}

AnonymizationMap AnonymizationMap::from_json_line(const std::string& line) {
    AnonymizationMap out;
    nlohmann::json j = nlohmann::json::parse(line);
    for (const auto& entry : j)
        out.add(entry.at(0).get<std::string>(), entry.at(1).get<std::vector<std::string>>());
    return out;
}

NodeId resolve_node_path(const AmrGraph& g, const std::string& path) {
    std::vector<std::vector<NodeId>> children(g.nodes.size());
    for (const auto& e : g.edges) children[e.src].push_back(e.dst);
    std::istringstream in(path);
    std::string part;
    if (!std::getline(in, part, '.') || part != "0")
        throw ValidationError("node path must start with 0: " + path);
    NodeId cur = g.root;
    while (std::getline(in, part, '.')) {
        std::size_t k = static_cast<std::size_t>(std::stoul(part));
        if (k >= children[cur].size())
            throw ValidationError("node path " + path + " leaves the graph");
        cur = children[cur][k];
    }
    return cur;
}

AlignmentTable alignment_from_json_line(const AmrGraph& g, const std::string& line) {
    AlignmentTable out;
    nlohmann::json j = nlohmann::json::parse(line);
    for (const auto& entry : j) {
        NodeId id = resolve_node_path(g, entry.at(0).get<std::string>());
        out[id] = {entry.at(1).get<int>(), entry.at(2).get<int>()};
    }
    return out;
}

// ------------------------------------------------------------------ simplify

namespace {

bool has_sense_suffix(const std::string& label, std::size_t* dash_out) {
    std::size_t dash = label.rfind('-');
    if (dash == std::string::npos || dash == 0 || dash + 3 > label.size()) return false;
    if (label.size() - dash - 1 < 2) return false;
    for (std::size_t i = dash + 1; i < label.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(label[i]))) return false;
    *dash_out = dash;
    return true;
}

// Drop the given edges, then garbage-collect nodes no longer reachable from
// the root and recompact ids.
AmrGraph drop_and_compact(const AmrGraph& g, const std::set<std::size_t>& dead_edges) {
    std::vector<std::vector<NodeId>> succ(g.nodes.size());
    for (std::size_t i = 0; i < g.edges.size(); ++i)
        if (!dead_edges.count(i)) succ[g.edges[i].src].push_back(g.edges[i].dst);
    std::vector<bool> alive(g.nodes.size(), false);
    std::deque<NodeId> queue{g.root};
    alive[g.root] = true;
    while (!queue.empty()) {
        NodeId u = queue.front();
        queue.pop_front();
        for (NodeId v : succ[u])
            if (!alive[v]) {
                alive[v] = true;
                queue.push_back(v);
            }
    }
    AmrGraph out;
    std::vector<NodeId> remap(g.nodes.size(), -1);
    for (const auto& n : g.nodes) {
        if (!alive[n.id]) continue;
        NodeId nid = static_cast<NodeId>(out.nodes.size());
        remap[n.id] = nid;
        out.nodes.push_back({nid, n.label, n.var, n.is_constant, n.quoted});
    }
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
        if (dead_edges.count(i)) continue;
        const auto& e = g.edges[i];
        if (remap[e.src] < 0 || remap[e.dst] < 0) continue;
        out.edges.push_back({remap[e.src], remap[e.dst], e.label});
    }
    out.root = remap[g.root];
    return out;
}

}  // namespace

AmrGraph simplify(const AmrGraph& g) {
    std::set<std::size_t> wiki_edges;
    for (std::size_t i = 0; i < g.edges.size(); ++i)
        if (g.edges[i].label == "wiki") wiki_edges.insert(i);
    AmrGraph out = drop_and_compact(g, wiki_edges);
    for (auto& n : out.nodes) {
        if (n.is_constant) continue;
        std::size_t dash = 0;
        if (has_sense_suffix(n.label, &dash)) n.label = n.label.substr(0, dash);
    }
    return out;
}

// ----------------------------------------------------------------- anonymize

namespace {

const char* kMonthNames[] = {"January", "February", "March",     "April",   "May",      "June",
                             "July",    "August",   "September", "October", "November", "December"};

std::string month_name(int m) {
    if (m >= 1 && m <= 12) return kMonthNames[m - 1];
    return std::to_string(m);
}

std::string ordinal(int d) {
    int mod100 = d % 100;
    const char* suffix = "th";
    if (mod100 < 11 || mod100 > 13) {
        switch (d % 10) {
            case 1: suffix = "st"; break;
            case 2: suffix = "nd"; break;
            case 3: suffix = "rd"; break;
        }
    }
    return std::to_string(d) + suffix;
}

bool all_digits(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    return true;
}

struct SpanEdit {
    int start;
    int end;
    std::string replacement;
};

std::vector<std::string> apply_edits(const std::vector<std::string>& tokens,
                                     std::vector<SpanEdit> edits) {
    std::sort(edits.begin(), edits.end(),
              [](const SpanEdit& a, const SpanEdit& b) { return a.start > b.start; });
    std::vector<std::string> out = tokens;
    for (const auto& e : edits) {
        if (e.start < 0 || e.end > static_cast<int>(out.size()) || e.start >= e.end)
            throw ValidationError("alignment span [" + std::to_string(e.start) + "," +
                                  std::to_string(e.end) + ") out of range");
        out.erase(out.begin() + e.start, out.begin() + e.end);
        out.insert(out.begin() + e.start, e.replacement);
    }
    return out;
}

}  // namespace

EntityTypeTable EntityTypeTable::defaults() {
    EntityTypeTable t;
    for (const char* c : {"person", "family", "animal", "language", "nationality",
                          "ethnic-group", "regional-group", "religious-group",
                          "political-movement"})
        t.mapping[c] = "person";
    for (const char* c : {"continent", "country", "state", "province", "territory", "county",
                          "city", "city-district", "district", "town", "village", "island",
                          "ocean", "sea", "lake", "river", "mountain", "peninsula", "valley",
                          "canyon", "forest", "moon", "planet", "star", "world", "local-region",
                          "country-region", "world-region"})
        t.mapping[c] = "loc";
    for (const char* c : {"company", "organization", "government-organization", "military",
                          "criminal-organization", "political-party", "market-sector", "school",
                          "university", "research-institute", "team", "league", "newspaper",
                          "magazine", "journal", "broadcast-program"})
        t.mapping[c] = "org";
    return t;
}

std::string EntityTypeTable::coarse_type(const std::string& concept_name) const {
    auto it = mapping.find(concept_name);
    return it == mapping.end() ? "other" : it->second;
}

AnonymizeResult anonymize(const AmrGraph& g, const AlignmentTable& alignments,
                          const std::vector<std::string>& surface,
                          const EntityTypeTable& types) {
    for (const auto& [id, span] : alignments) {
        (void)span;
        if (id < 0 || static_cast<std::size_t>(id) >= g.nodes.size())
            throw ValidationError("alignment references nonexistent node " + std::to_string(id));
    }

    AnonymizeResult res;
    res.graph = g;
    AmrGraph& out = res.graph;

    std::vector<std::vector<std::size_t>> out_edges(out.nodes.size());
    for (std::size_t i = 0; i < out.edges.size(); ++i)
        out_edges[out.edges[i].src].push_back(i);

    std::set<std::size_t> dead_edges;
    std::vector<SpanEdit> edits;
    std::map<std::string, int> type_counter;
    int date_counter = 0;

    auto aligned_span = [&](NodeId id) -> std::optional<std::pair<int, int>> {
        auto it = alignments.find(id);
        if (it == alignments.end()) return std::nullopt;
        return it->second;
    };

    // Entities: nodes with an outgoing :name edge, in depth-first (= id) order.
    for (const auto& entity : g.nodes) {
        if (entity.is_constant) continue;
        std::size_t name_edge = static_cast<std::size_t>(-1);
        for (std::size_t ei : out_edges[entity.id])
            if (out.edges[ei].label == "name" && !out.nodes[out.edges[ei].dst].is_constant &&
                out.nodes[out.edges[ei].dst].label == "name")
                name_edge = ei;
        if (name_edge == static_cast<std::size_t>(-1)) continue;

        std::string coarse = types.coarse_type(entity.label);
        int index = type_counter[coarse]++;
        std::string token = coarse + "_" + std::to_string(index);

        // Concept names from the name subtree, in definition order.
        std::vector<std::string> concepts;
        NodeId name_node = out.edges[name_edge].dst;
        for (std::size_t ei : out_edges[name_node]) {
            const auto& child = out.nodes[out.edges[ei].dst];
            if (child.is_constant) concepts.push_back(child.label);
        }
        res.map.add(token, concepts);

        out.nodes[entity.id].label = token;
        dead_edges.insert(name_edge);

        if (auto span = aligned_span(entity.id)) {
            edits.push_back({span->first, span->second, token});
        } else if (!alignments.empty()) {
            res.warnings.push_back("entity " + token + " has no alignment; surface untouched");
        }
    }

    // Dates: date-entity children day/month/year become indexed tokens.
    for (const auto& node : g.nodes) {
        if (node.is_constant || node.label != "date-entity") continue;
        int index = date_counter++;
        for (std::size_t ei : out_edges[node.id]) {
            auto& e = out.edges[ei];
            const std::string& rel = e.label;
            if (rel != "day" && rel != "month" && rel != "year") continue;
            auto& child = out.nodes[e.dst];
            if (!child.is_constant) continue;
            std::string value = child.label;
            std::string idx = std::to_string(index);
            child.label = rel + "_" + idx;

            if (rel == "year") {
                std::string render = value;
                if (auto span = aligned_span(e.dst)) {
                    render = surface.at(static_cast<std::size_t>(span->first));
                    edits.push_back({span->first, span->second, "year_" + idx});
                }
                res.map.add("year_" + idx, {render});
            } else {
                // Both render variants go into the map so whichever token the
                // model predicts can be restored.
                int num = all_digits(value) ? std::stoi(value) : 0;
                std::string name_form = rel == "month" ? month_name(num) : ordinal(num);
                std::string number_form = value;
                if (auto span = aligned_span(e.dst)) {
                    std::string aligned_tok = surface.at(static_cast<std::size_t>(span->first));
                    bool numeric = all_digits(aligned_tok);
                    (numeric ? number_form : name_form) = aligned_tok;
                    edits.push_back({span->first, span->second,
                                     rel + (numeric ? "_number_" : "_name_") + idx});
                }
                res.map.add(rel + "_name_" + idx, {name_form});
                res.map.add(rel + "_number_" + idx, {number_form});
            }
        }
    }

    res.surface = apply_edits(surface, std::move(edits));
    if (!dead_edges.empty()) res.graph = drop_and_compact(out, dead_edges);
    return res;
}

std::vector<std::string> deanonymize(const std::vector<std::string>& tokens,
                                     const AnonymizationMap& map) {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& tok : tokens) {
        if (const auto* words = map.find(tok)) {
            out.insert(out.end(), words->begin(), words->end());
        } else {
            out.push_back(tok);
        }
    }
    return out;
}

// -------------------------------------------------------------------- corpus

std::vector<AmrInstance> read_amr_corpus(std::istream& in) {
    std::vector<AmrInstance> out;
    AmrInstance cur;
    bool any = false;
    auto flush = [&] {
        if (any && !cur.penman.empty()) out.push_back(cur);
        cur = AmrInstance{};
        any = false;
    };
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            flush();
            continue;
        }
        any = true;
        if (line.rfind("# ::tok ", 0) == 0) {
            std::istringstream toks(line.substr(8));
            std::string t;
            while (toks >> t) cur.tokens.push_back(t);
        } else if (line.rfind("# ::align ", 0) == 0) {
            cur.alignment_json = line.substr(10);
        } else if (line[0] == '#') {
            // other metadata ignored
        } else {
            if (!cur.penman.empty()) cur.penman += "\n";
            cur.penman += line;
        }
    }
    flush();
    return out;
}

}  // namespace g2s
