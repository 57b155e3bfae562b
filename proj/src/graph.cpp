#include "g2s/graph.hpp"

#include <algorithm>
#include <deque>
#include <istream>
#include <set>
#include <unordered_set>

#include <json.hpp>

namespace g2s {

const char* edge_type_name(EdgeType t) {
    switch (t) {
        case EdgeType::Default: return "default";
        case EdgeType::Reverse: return "reverse";
        case EdgeType::Self: return "self";
        case EdgeType::Left: return "left";
        case EdgeType::Right: return "right";
    }
    return "?";
}

EdgeType edge_type_from_name(const std::string& name) {
    for (int i = 0; i < kEdgeTypeCount; ++i)
        if (name == edge_type_name(static_cast<EdgeType>(i))) return static_cast<EdgeType>(i);
    throw ValidationError("unknown edge type tag: " + name);
}

void LabeledGraph::validate() const {
    std::vector<bool> seen(nodes.size(), false);
    for (const auto& n : nodes) {
        if (n.id < 0 || static_cast<std::size_t>(n.id) >= nodes.size())
            throw ValidationError("node id " + std::to_string(n.id) +
                                  " not contiguous from 0 for " + std::to_string(nodes.size()) +
                                  " nodes");
        if (seen[n.id]) throw ValidationError("duplicate node id " + std::to_string(n.id));
        seen[n.id] = true;
    }
    auto check = [&](NodeId id, const char* what) {
        if (id < 0 || static_cast<std::size_t>(id) >= nodes.size())
            throw ValidationError(std::string(what) + " references missing node " +
                                  std::to_string(id));
    };
    for (const auto& e : edges) {
        if (e.src) check(*e.src, "edge source");
        check(e.dst, "edge target");
    }
    if (nodes.empty()) throw ValidationError("graph has no nodes");
    check(root, "root");
}

std::size_t LeviGraph::count_edges(EdgeType t) const {
    std::size_t n = 0;
    for (const auto& e : edges) n += (e.tag == t) ? 1 : 0;
    return n;
}

LeviGraph to_levi(const LabeledGraph& g) {
    g.validate();
    LeviGraph out;
    out.nodes.reserve(g.nodes.size() + g.edges.size());
    for (const auto& n : g.nodes)
        out.nodes.push_back({n.id, n.label, NodeOrigin::FromNode});
    NodeId next_id = static_cast<NodeId>(g.nodes.size());
    for (const auto& e : g.edges) {
        NodeId w = next_id++;
        out.nodes.push_back({w, e.label, NodeOrigin::FromEdge});
        if (e.src) out.edges.push_back({*e.src, w, EdgeType::Default});
        out.edges.push_back({w, e.dst, EdgeType::Default});
    }
    out.root = g.root;
    return out;
}

LeviGraph augment(const LeviGraph& g) {
    for (const auto& e : g.edges) {
        if (e.tag == EdgeType::Reverse || e.tag == EdgeType::Self)
            throw ValidationError("augment: input already has " +
                                  std::string(edge_type_name(e.tag)) + " edges");
    }
    LeviGraph out;
    out.nodes = g.nodes;
    out.root = g.root;
    out.positions = g.positions;
    std::vector<LeviGraph::Edge> defaults, lefts, rights;
    for (const auto& e : g.edges) {
        switch (e.tag) {
            case EdgeType::Default: defaults.push_back(e); break;
            case EdgeType::Left: lefts.push_back(e); break;
            case EdgeType::Right: rights.push_back(e); break;
            default: break;
        }
    }
    out.edges = defaults;
    for (const auto& e : defaults) out.edges.push_back({e.dst, e.src, EdgeType::Reverse});
    for (const auto& n : out.nodes) out.edges.push_back({n.id, n.id, EdgeType::Self});
    for (const auto& e : lefts) out.edges.push_back(e);
    for (const auto& e : rights) out.edges.push_back(e);
    return out;
}

LeviGraph add_sequential_edges(const LeviGraph& g, const std::vector<NodeId>& order) {
    std::unordered_set<NodeId> seen;
    for (NodeId id : order) {
        auto it = std::find_if(g.nodes.begin(), g.nodes.end(),
                               [id](const LeviGraph::Node& n) { return n.id == id; });
        if (it == g.nodes.end())
            throw ValidationError("sequential edge references missing node " + std::to_string(id));
        if (it->origin == NodeOrigin::FromEdge)
            throw ValidationError("sequential edge on reified-edge node " + std::to_string(id));
        if (!seen.insert(id).second)
            throw ValidationError("duplicate node " + std::to_string(id) + " in surface order");
    }
    LeviGraph out = g;
    for (std::size_t i = 0; i + 1 < order.size(); ++i)
        out.edges.push_back({order[i], order[i + 1], EdgeType::Left});
    for (std::size_t i = 0; i + 1 < order.size(); ++i)
        out.edges.push_back({order[i + 1], order[i], EdgeType::Right});
    return out;
}

std::map<NodeId, int> compute_positions(LeviGraph& g) {
    std::map<NodeId, std::vector<NodeId>> succ;
    for (const auto& e : g.edges)
        if (e.tag == EdgeType::Default) succ[e.src].push_back(e.dst);
    std::map<NodeId, int> pos;
    for (const auto& n : g.nodes) pos[n.id] = kUnreachablePosition;
    std::deque<NodeId> queue{g.root};
    pos[g.root] = 0;
    while (!queue.empty()) {
        NodeId u = queue.front();
        queue.pop_front();
        auto it = succ.find(u);
        if (it == succ.end()) continue;
        for (NodeId v : it->second) {
            if (pos[v] != kUnreachablePosition) continue;
            pos[v] = std::min(pos[u] + 1, kMaxPosition);
            queue.push_back(v);
        }
    }
    g.positions = pos;
    return pos;
}

// --------------------------------------------------------------- interchange

namespace {

nlohmann::ordered_json positions_json(const std::map<NodeId, int>& positions) {
    nlohmann::ordered_json out = nlohmann::ordered_json::object();
    for (const auto& [id, p] : positions) out[std::to_string(id)] = p;
    return out;
}

}  // namespace

std::string to_json_line(const LeviGraph& g) {
    nlohmann::ordered_json j;
    j["nodes"] = nlohmann::ordered_json::array();
    for (const auto& n : g.nodes)
        j["nodes"].push_back({n.id, n.label, n.origin == NodeOrigin::FromNode ? "node" : "edge"});
    j["edges"] = nlohmann::ordered_json::array();
    for (const auto& e : g.edges)
        j["edges"].push_back({e.src, e.dst, edge_type_name(e.tag)});
    j["root"] = g.root;
    j["positions"] = positions_json(g.positions);
    return j.dump();
}

std::string to_json_line(const LabeledGraph& g) {
    nlohmann::ordered_json j;
    j["nodes"] = nlohmann::ordered_json::array();
    for (const auto& n : g.nodes) j["nodes"].push_back({n.id, n.label, "node"});
    j["edges"] = nlohmann::ordered_json::array();
    for (const auto& e : g.edges) {
        nlohmann::ordered_json src;
        if (e.src) src = *e.src;
        j["edges"].push_back({src, e.dst, e.label});
    }
    j["root"] = g.root;
    j["positions"] = nlohmann::ordered_json::object();
    return j.dump();
}

LeviGraph levi_from_json_line(const std::string& line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad graph json: ") + e.what());
    }
    LeviGraph g;
    for (const auto& n : j.at("nodes")) {
        std::string origin = n.at(2).get<std::string>();
        if (origin != "node" && origin != "edge")
            throw ParseError("bad node origin: " + origin);
        g.nodes.push_back({n.at(0).get<NodeId>(), n.at(1).get<std::string>(),
                           origin == "node" ? NodeOrigin::FromNode : NodeOrigin::FromEdge});
    }
    for (const auto& e : j.at("edges")) {
        if (e.at(0).is_null())
            throw ParseError("null src is only valid in LabeledGraph lines");
        g.edges.push_back({e.at(0).get<NodeId>(), e.at(1).get<NodeId>(),
                           edge_type_from_name(e.at(2).get<std::string>())});
    }
    g.root = j.at("root").get<NodeId>();
    for (const auto& [key, value] : j.at("positions").items())
        g.positions[std::stoi(key)] = value.get<int>();
    return g;
}

std::vector<LeviGraph> read_levi_jsonl(std::istream& in) {
    std::vector<LeviGraph> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(levi_from_json_line(line));
        } catch (const Error& e) {
            throw ParseError(std::string(e.what()), lineno);
        }
    }
    return out;
}

}  // namespace g2s
