#include "g2s/conll.hpp"

#include <algorithm>
#include <istream>
#include <sstream>

namespace g2s {

int DependencySentence::root_index() const {
    for (std::size_t i = 0; i < tokens.size(); ++i)
        if (!tokens[i].head) return static_cast<int>(i);
    throw ValidationError("dependency sentence has no root");
}

void DependencySentence::validate() const {
    int roots = 0;
    for (const auto& t : tokens) {
        if (!t.head) {
            ++roots;
            continue;
        }
        if (*t.head < 0 || static_cast<std::size_t>(*t.head) >= tokens.size())
            throw ValidationError("head index " + std::to_string(*t.head) + " out of range");
    }
    if (roots != 1)
        throw ValidationError("expected exactly one root token, found " + std::to_string(roots));
    // Walking up from any token must reach the root without revisiting.
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        std::vector<bool> seen(tokens.size(), false);
        int cur = static_cast<int>(i);
        while (tokens[cur].head) {
            seen[cur] = true;
            cur = *tokens[cur].head;
            if (seen[cur])
                throw ValidationError("head cycle through token " + std::to_string(cur));
        }
    }
}

std::vector<DependencySentence> parse_conll(const std::string& text, ConllFormat fmt) {
    std::istringstream in(text);
    return read_conll(in, fmt);
}

std::vector<DependencySentence> read_conll(std::istream& in, ConllFormat fmt) {
    std::vector<DependencySentence> out;
    DependencySentence cur;
    std::string line;
    int lineno = 0;
    int sentence_start = 1;
    auto flush = [&] {
        if (cur.tokens.empty()) return;
        try {
            cur.validate();
        } catch (const ValidationError& e) {
            throw ParseError(e.what(), sentence_start);
        }
        out.push_back(std::move(cur));
        cur = DependencySentence{};
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            flush();
            sentence_start = lineno + 1;
            continue;
        }
        if (line[0] == '#') continue;
        std::vector<std::string> cols;
        std::stringstream row(line);
        std::string col;
        while (std::getline(row, col, '\t')) cols.push_back(col);
        int max_col = std::max({fmt.form_col, fmt.head_col, fmt.rel_col});
        if (static_cast<int>(cols.size()) <= max_col)
            throw ParseError("expected at least " + std::to_string(max_col + 1) +
                                 " tab-separated columns, got " + std::to_string(cols.size()),
                             lineno);
        DependencySentence::Token tok;
        tok.surface = cols[fmt.form_col];
        tok.relation = cols[fmt.rel_col];
        int head;
        try {
            head = std::stoi(cols[fmt.head_col]);
        } catch (const std::exception&) {
            throw ParseError("bad head index '" + cols[fmt.head_col] + "'", lineno);
        }
        if (head == 0)
            tok.head = std::nullopt;
        else
            tok.head = head - 1;
        cur.tokens.push_back(std::move(tok));
    }
    flush();
    return out;
}

NodeId find_virtual_root(const LeviGraph& g) {
    std::vector<bool> has_in(g.nodes.size(), false);
    for (const auto& e : g.edges)
        if (e.tag == EdgeType::Default) has_in[e.dst] = true;
    for (const auto& n : g.nodes)
        if (n.origin == NodeOrigin::FromEdge && !has_in[n.id]) return n.id;
    return -1;
}

LeviGraph build_nmt_graph(const DependencySentence& sent, bool with_sequential) {
    sent.validate();
    LabeledGraph g;
    for (std::size_t i = 0; i < sent.tokens.size(); ++i)
        g.nodes.push_back({static_cast<NodeId>(i), sent.tokens[i].surface});
    for (std::size_t i = 0; i < sent.tokens.size(); ++i) {
        const auto& t = sent.tokens[i];
        if (t.head)
            g.edges.push_back({*t.head, static_cast<NodeId>(i), t.relation});
        else
            g.edges.push_back({std::nullopt, static_cast<NodeId>(i), t.relation});
    }
    g.root = sent.root_index();

    LeviGraph levi = to_levi(g);
    if (with_sequential) {
        std::vector<NodeId> order;
        for (std::size_t i = 0; i < sent.tokens.size(); ++i)
            order.push_back(static_cast<NodeId>(i));
        levi = add_sequential_edges(levi, order);
    }
    LeviGraph full = augment(levi);
    NodeId vroot = find_virtual_root(full);
    if (vroot >= 0) full.root = vroot;
    compute_positions(full);
    return full;
}

}  // namespace g2s
