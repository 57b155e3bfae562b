// metrics.hpp - BLEU, sentence-level chrF++ and significance tests.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "g2s/error.hpp"

namespace g2s {

struct EvalConfig {
    bool case_sensitive = false;  // false for AMR, true for NMT
    int bleu_max_order = 4;
    int chrf_char_order = 6;
    int chrf_word_order = 2;
    double chrf_beta = 2.0;
    int bootstrap_samples = 1000;
    double significance_level = 0.05;

    void validate() const {
        if (bleu_max_order < 1 || chrf_char_order < 1 || chrf_word_order < 1)
            throw ValidationError("metric n-gram orders must be >= 1");
        if (chrf_beta <= 0) throw ValidationError("chrF beta must be positive");
        if (bootstrap_samples < 100)
            throw ValidationError("bootstrap needs at least 100 samples");
    }
};

// Sufficient statistics of one sentence pair; corpus scores and bootstrap
// resamples are sums of these.
struct BleuStats {
    std::vector<std::int64_t> match;
    std::vector<std::int64_t> total;
    std::int64_t hyp_len = 0;
    std::int64_t ref_len = 0;

    void accumulate(const BleuStats& other);
};

struct BleuResult {
    double score = 0.0;  // in [0, 100]
    std::vector<double> precisions;
    double brevity_penalty = 1.0;
};

std::vector<std::string> whitespace_tokens(const std::string& line);

BleuStats bleu_sentence_stats(const std::string& hyp, const std::string& ref,
                              const EvalConfig& cfg);
BleuResult bleu_from_stats(const BleuStats& stats, const EvalConfig& cfg);

// Corpus BLEU: geometric mean of clipped n-gram precisions times the brevity
// penalty. No smoothing: a zero precision at any order gives score 0.
BleuResult bleu(const std::vector<std::string>& hyps, const std::vector<std::string>& refs,
                const EvalConfig& cfg);

// Sentence chrF++: precision/recall averaged over character 1..6-grams (with
// whitespace removed) and word 1..2-grams, then F_beta with beta = 2 so
// recall dominates. Orders absent from both strings are skipped.
double chrf_pp(const std::string& hyp, const std::string& ref, const EvalConfig& cfg);

// Paired bootstrap over sentences: p = fraction of resamples where
// corpus-BLEU(A) <= corpus-BLEU(B), for the one-sided test "A beats B".
// Identical systems therefore give the degenerate p = 1.0.
double bootstrap_significance(const std::vector<std::string>& sys_a,
                              const std::vector<std::string>& sys_b,
                              const std::vector<std::string>& refs, const EvalConfig& cfg,
                              std::uint64_t seed);

struct WilcoxonResult {
    double statistic = 0.0;  // min(W+, W-) over nonzero differences
    double p_value = 1.0;    // two-sided
    int n = 0;               // pairs with nonzero difference
};

// Zero differences dropped, average ranks for ties; exact two-sided p by
// enumeration of the rank-sum distribution for n < 20, normal approximation
// with tie correction (no continuity correction) otherwise. All differences
// zero is the defined result p = 1.
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace g2s
