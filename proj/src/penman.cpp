#include "g2s/penman.hpp"

#include <cctype>
#include <functional>
#include <map>
#include <sstream>
#include <unordered_map>

namespace g2s {

namespace {

enum class TokKind { LParen, RParen, Slash, Role, Atom, String, End };

struct Token {
    TokKind kind;
    std::string text;
    int line;
    int col;
};

class Lexer {
public:
    explicit Lexer(const std::string& text) : text_(text) {}

    Token next() {
        skip_space();
        int line = line_, col = col_;
        if (pos_ >= text_.size()) return {TokKind::End, "", line, col};
        char c = text_[pos_];
        if (c == '(') { advance(); return {TokKind::LParen, "(", line, col}; }
        if (c == ')') { advance(); return {TokKind::RParen, ")", line, col}; }
        if (c == '/') { advance(); return {TokKind::Slash, "/", line, col}; }
        if (c == ':') {
            advance();
            std::string role;
            while (pos_ < text_.size() && !is_sep(text_[pos_])) {
                role += text_[pos_];
                advance();
            }
            if (role.empty()) throw ParseError("empty relation role", line, col);
            return {TokKind::Role, role, line, col};
        }
        if (c == '"') {
            advance();
            std::string s;
            while (pos_ < text_.size() && text_[pos_] != '"') {
                if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) advance();
                s += text_[pos_];
                advance();
            }
            if (pos_ >= text_.size()) throw ParseError("unterminated string", line, col);
            advance();  // closing quote
            return {TokKind::String, s, line, col};
        }
        std::string atom;
        while (pos_ < text_.size() && !is_sep(text_[pos_])) {
            atom += text_[pos_];
            advance();
        }
        return {TokKind::Atom, atom, line, col};
    }

private:
    static bool is_sep(char c) {
        return std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' || c == '/' ||
               c == '"';
    }
    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            advance();
    }
    void advance() {
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }
    const std::string& text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

bool variable_shaped(const std::string& atom) {
    if (atom.empty() || !std::isalpha(static_cast<unsigned char>(atom[0]))) return false;
    for (std::size_t i = 1; i < atom.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(atom[i]))) return false;
    return true;
}

struct PendingRef {
    NodeId src;
    std::string role;
    std::string atom;
    int line;
    int col;
    std::size_t edge_slot;
};

class Parser {
public:
    explicit Parser(const std::string& text) : lex_(text) { tok_ = lex_.next(); }

    AmrGraph parse() {
        expect(TokKind::LParen, "expected '('");
        parse_node();
        if (tok_.kind != TokKind::End)
            throw ParseError("trailing input after expression: '" + tok_.text + "'", tok_.line,
                             tok_.col);
        resolve();
        g_.root = 0;
        return std::move(g_);
    }

private:
    void expect(TokKind k, const char* msg) {
        if (tok_.kind != k) throw ParseError(msg, tok_.line, tok_.col);
        tok_ = lex_.next();
    }

    // tok_ is just past '('.
    NodeId parse_node() {
        if (tok_.kind != TokKind::Atom)
            throw ParseError("expected a variable name", tok_.line, tok_.col);
        std::string var = tok_.text;
        if (vars_.count(var))
            throw ParseError("duplicate variable definition '" + var + "'", tok_.line, tok_.col);
        tok_ = lex_.next();
        expect(TokKind::Slash, "expected '/' after variable");
        if (tok_.kind != TokKind::Atom && tok_.kind != TokKind::String)
            throw ParseError("expected a concept", tok_.line, tok_.col);
        NodeId id = static_cast<NodeId>(g_.nodes.size());
        g_.nodes.push_back({id, tok_.text, var, false, false});
        vars_[var] = id;
        tok_ = lex_.next();

        while (tok_.kind == TokKind::Role) {
            std::string role = tok_.text;
            tok_ = lex_.next();
            switch (tok_.kind) {
                case TokKind::LParen: {
                    tok_ = lex_.next();
                    NodeId child = parse_node();
                    g_.edges.push_back({id, child, role});
                    break;
                }
                case TokKind::String: {
                    NodeId child = static_cast<NodeId>(g_.nodes.size());
                    g_.nodes.push_back({child, tok_.text, "", true, true});
                    g_.edges.push_back({id, child, role});
                    tok_ = lex_.next();
                    break;
                }
                case TokKind::Atom: {
                    // Variable reference or bare constant; resolved after the
                    // full expression is read so forward references work.
                    pending_.push_back({id, role, tok_.text, tok_.line, tok_.col,
                                        g_.edges.size()});
                    g_.edges.push_back({id, -1, role});
                    tok_ = lex_.next();
                    break;
                }
                default:
                    throw ParseError("expected a relation target", tok_.line, tok_.col);
            }
        }
        expect(TokKind::RParen, "expected ')'");
        return id;
    }

    void resolve() {
        for (const auto& p : pending_) {
            auto it = vars_.find(p.atom);
            if (it != vars_.end()) {
                g_.edges[p.edge_slot].dst = it->second;
            } else if (variable_shaped(p.atom)) {
                throw ParseError("undefined variable mention '" + p.atom + "'", p.line, p.col);
            } else {
                NodeId child = static_cast<NodeId>(g_.nodes.size());
                g_.nodes.push_back({child, p.atom, "", true, false});
                g_.edges[p.edge_slot].dst = child;
            }
        }
    }

    Lexer lex_;
    Token tok_;
    AmrGraph g_;
    std::unordered_map<std::string, NodeId> vars_;
    std::vector<PendingRef> pending_;
};

}  // namespace

AmrGraph parse_penman(const std::string& text) { return Parser(text).parse(); }

LabeledGraph AmrGraph::to_labeled() const {
    LabeledGraph out;
    for (const auto& n : nodes) out.nodes.push_back({n.id, n.label});
    for (const auto& e : edges) out.edges.push_back({e.src, e.dst, e.label});
    out.root = root;
    return out;
}

std::string print_penman(const AmrGraph& g) {
    // First tree-edge visit defines a variable node; later mentions print bare.
    std::vector<std::vector<std::size_t>> out_edges(g.nodes.size());
    for (std::size_t i = 0; i < g.edges.size(); ++i)
        out_edges[g.edges[i].src].push_back(i);

    std::vector<bool> defined(g.nodes.size(), false);
    std::ostringstream os;

    auto quote_needed = [](const AmrGraph::Node& n) { return n.quoted; };

    std::function<void(NodeId)> emit = [&](NodeId id) {
        const auto& n = g.nodes[id];
        defined[id] = true;
        os << "(" << (n.var.empty() ? "x" + std::to_string(id) : n.var) << " / " << n.label;
        for (std::size_t ei : out_edges[id]) {
            const auto& e = g.edges[ei];
            os << " :" << e.label << " ";
            const auto& child = g.nodes[e.dst];
            if (child.is_constant) {
                if (quote_needed(child))
                    os << '"' << child.label << '"';
                else
                    os << child.label;
            } else if (defined[e.dst]) {
                os << (child.var.empty() ? "x" + std::to_string(e.dst) : child.var);
            } else {
                emit(e.dst);
            }
        }
        os << ")";
    };
    emit(g.root);
    return os.str();
}

}  // namespace g2s
