// vocab.hpp - token/index bijection with fixed special tokens.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

namespace g2s {

class Vocabulary {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr int kBos = 2;
    static constexpr int kEos = 3;

    static const char* pad_token() { return "<pad>"; }
    static const char* unk_token() { return "<unk>"; }
    static const char* bos_token() { return "<s>"; }
    static const char* eos_token() { return "</s>"; }

    Vocabulary();

    // Tokens with corpus count >= min_freq, ordered by frequency descending
    // then lexicographically; specials always occupy indices 0-3.
    // Throws ValidationError on an empty corpus.
    static Vocabulary build(const std::vector<std::vector<std::string>>& corpus, int min_freq);

    int lookup(const std::string& token) const;  // kUnk when absent
    const std::string& token(int id) const;
    int size() const { return static_cast<int>(tokens_.size()); }
    bool contains(const std::string& token) const { return index_.count(token) != 0; }

    std::vector<int> encode(const std::vector<std::string>& tokens) const;
    std::vector<std::string> decode(const std::vector<int>& ids) const;

    // FNV-1a over the token list; used to detect checkpoint/vocab mismatches.
    std::uint64_t hash() const;

    void save(std::ostream& out) const;  // one token per line
    static Vocabulary load(std::istream& in);
    void save_file(const std::string& path) const;
    static Vocabulary load_file(const std::string& path);

private:
    void push(const std::string& token);
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
};

}  // namespace g2s
