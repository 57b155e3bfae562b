#include "g2s/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "g2s/error.hpp"

namespace g2s {

Vocabulary::Vocabulary() {
    push(pad_token());
    push(unk_token());
    push(bos_token());
    push(eos_token());
}

void Vocabulary::push(const std::string& token) {
    if (index_.count(token)) throw ValidationError("duplicate vocabulary token " + token);
    index_[token] = static_cast<int>(tokens_.size());
    tokens_.push_back(token);
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& corpus, int min_freq) {
    if (corpus.empty()) throw ValidationError("cannot build a vocabulary from an empty corpus");
    std::map<std::string, std::int64_t> counts;  // ordered map: lexicographic ties for free
    for (const auto& sent : corpus)
        for (const auto& tok : sent) ++counts[tok];

    std::vector<std::pair<std::string, std::int64_t>> items(counts.begin(), counts.end());
    std::stable_sort(items.begin(), items.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });

    Vocabulary v;
    for (const auto& [tok, count] : items) {
        if (count < min_freq) continue;
        if (v.index_.count(tok)) continue;  // someone tokenized a literal special
        v.push(tok);
    }
    return v;
}

int Vocabulary::lookup(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
    if (id < 0 || id >= size())
        throw ValidationError("vocabulary id " + std::to_string(id) + " out of range");
    return tokens_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens) const {
    std::vector<int> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(lookup(t));
    return out;
}

std::vector<std::string> Vocabulary::decode(const std::vector<int>& ids) const {
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (int id : ids) out.push_back(token(id));
    return out;
}

std::uint64_t Vocabulary::hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& tok : tokens_) {
        for (char c : tok) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ULL;
        }
        h ^= 0xff;
        h *= 1099511628211ULL;
    }
    return h;
}

void Vocabulary::save(std::ostream& out) const {
    for (const auto& tok : tokens_) out << tok << "\n";
}

Vocabulary Vocabulary::load(std::istream& in) {
    Vocabulary v;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno <= 4) {
            // header must be the fixed specials
            const char* expected[] = {pad_token(), unk_token(), bos_token(), eos_token()};
            if (line != expected[lineno - 1])
                throw ParseError("vocabulary file must start with the special tokens", lineno);
            continue;
        }
        v.push(line);
    }
    if (lineno < 4) throw ParseError("vocabulary file truncated", lineno);
    return v;
}

void Vocabulary::save_file(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write vocabulary " + path);
    save(out);
}

Vocabulary Vocabulary::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open vocabulary " + path);
    return load(in);
}

}  // namespace g2s
