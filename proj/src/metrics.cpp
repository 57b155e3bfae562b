#include "g2s/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "g2s/rng.hpp"

namespace g2s {

namespace {

std::string lowered(const std::string& s) {
    std::string out = s;
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string cased(const std::string& s, const EvalConfig& cfg) {
    return cfg.case_sensitive ? s : lowered(s);
}

// n-gram multiset as joined keys; '\x01' cannot occur in whitespace tokens.
std::unordered_map<std::string, std::int64_t> ngram_counts(const std::vector<std::string>& toks,
                                                           int n) {
    std::unordered_map<std::string, std::int64_t> counts;
    if (static_cast<int>(toks.size()) < n) return counts;
    for (std::size_t i = 0; i + n <= toks.size(); ++i) {
        std::string key;
        for (int j = 0; j < n; ++j) {
            if (j) key += '\x01';
            key += toks[i + j];
        }
        ++counts[key];
    }
    return counts;
}

std::unordered_map<std::string, std::int64_t> char_ngram_counts(const std::string& text, int n) {
    std::unordered_map<std::string, std::int64_t> counts;
    if (static_cast<int>(text.size()) < n) return counts;
    for (std::size_t i = 0; i + n <= text.size(); ++i) ++counts[text.substr(i, n)];
    return counts;
}

std::int64_t clipped_matches(const std::unordered_map<std::string, std::int64_t>& hyp,
                             const std::unordered_map<std::string, std::int64_t>& ref) {
    std::int64_t m = 0;
    for (const auto& [key, count] : hyp) {
        auto it = ref.find(key);
        if (it != ref.end()) m += std::min(count, it->second);
    }
    return m;
}

std::string strip_whitespace(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s)
        if (!std::isspace(static_cast<unsigned char>(c))) out += c;
    return out;
}

// chrF++ word n-grams treat punctuation characters as separate tokens, the
// way the metric's reference tool does.
std::vector<std::string> punct_split_tokens(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    };
    for (char c : line) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            flush();
        } else if (std::ispunct(static_cast<unsigned char>(c))) {
            flush();
            out.emplace_back(1, c);
        } else {
            cur += c;
        }
    }
    flush();
    return out;
}

}  // namespace

std::vector<std::string> whitespace_tokens(const std::string& line) {
    std::istringstream in(line);
    std::vector<std::string> toks;
    std::string t;
    while (in >> t) toks.push_back(t);
    return toks;
}

void BleuStats::accumulate(const BleuStats& other) {
    if (match.empty()) {
        match.assign(other.match.size(), 0);
        total.assign(other.total.size(), 0);
    }
    for (std::size_t i = 0; i < match.size(); ++i) {
        match[i] += other.match[i];
        total[i] += other.total[i];
    }
    hyp_len += other.hyp_len;
    ref_len += other.ref_len;
}

BleuStats bleu_sentence_stats(const std::string& hyp, const std::string& ref,
                              const EvalConfig& cfg) {
    auto htoks = whitespace_tokens(cased(hyp, cfg));
    auto rtoks = whitespace_tokens(cased(ref, cfg));
    BleuStats st;
    st.match.assign(cfg.bleu_max_order, 0);
    st.total.assign(cfg.bleu_max_order, 0);
    st.hyp_len = static_cast<std::int64_t>(htoks.size());
    st.ref_len = static_cast<std::int64_t>(rtoks.size());
    for (int n = 1; n <= cfg.bleu_max_order; ++n) {
        auto hc = ngram_counts(htoks, n);
        auto rc = ngram_counts(rtoks, n);
        std::int64_t total = std::max<std::int64_t>(
            static_cast<std::int64_t>(htoks.size()) - n + 1, 0);
        st.total[n - 1] = total;
        st.match[n - 1] = clipped_matches(hc, rc);
    }
    return st;
}

BleuResult bleu_from_stats(const BleuStats& stats, const EvalConfig& cfg) {
    BleuResult res;
    res.precisions.assign(cfg.bleu_max_order, 0.0);
    double log_sum = 0.0;
    bool zero = false;
    for (int n = 0; n < cfg.bleu_max_order; ++n) {
        if (stats.total[n] > 0)
            res.precisions[n] =
                static_cast<double>(stats.match[n]) / static_cast<double>(stats.total[n]);
        if (res.precisions[n] <= 0.0)
            zero = true;
        else
            log_sum += std::log(res.precisions[n]);
    }
    if (stats.hyp_len == 0) {
        res.brevity_penalty = 0.0;
        return res;
    }
    res.brevity_penalty =
        stats.hyp_len >= stats.ref_len
            ? 1.0
            : std::exp(1.0 - static_cast<double>(stats.ref_len) /
                                 static_cast<double>(stats.hyp_len));
    if (!zero)
        res.score = 100.0 * res.brevity_penalty *
                    std::exp(log_sum / static_cast<double>(cfg.bleu_max_order));
    return res;
}

BleuResult bleu(const std::vector<std::string>& hyps, const std::vector<std::string>& refs,
                const EvalConfig& cfg) {
    cfg.validate();
    if (hyps.empty()) throw ValidationError("bleu: empty hypothesis set");
    if (hyps.size() != refs.size())
        throw ValidationError("bleu: " + std::to_string(hyps.size()) + " hypotheses vs " +
                              std::to_string(refs.size()) + " references");
    BleuStats corpus;
    for (std::size_t i = 0; i < hyps.size(); ++i)
        corpus.accumulate(bleu_sentence_stats(hyps[i], refs[i], cfg));
    return bleu_from_stats(corpus, cfg);
}

double chrf_pp(const std::string& hyp, const std::string& ref, const EvalConfig& cfg) {
    if (whitespace_tokens(ref).empty()) throw ValidationError("chrF++: empty reference");
    std::string h = cased(hyp, cfg);
    std::string r = cased(ref, cfg);
    std::string h_chars = strip_whitespace(h);
    std::string r_chars = strip_whitespace(r);
    auto h_words = punct_split_tokens(h);
    auto r_words = punct_split_tokens(r);

    double prec_sum = 0.0, rec_sum = 0.0;
    int effective = 0;
    auto add_order = [&](const std::unordered_map<std::string, std::int64_t>& hc,
                         const std::unordered_map<std::string, std::int64_t>& rc) {
        std::int64_t h_total = 0, r_total = 0;
        for (const auto& [k, v] : hc) {
            (void)k;
            h_total += v;
        }
        for (const auto& [k, v] : rc) {
            (void)k;
            r_total += v;
        }
        if (h_total == 0 && r_total == 0) return;  // order not applicable
        std::int64_t m = clipped_matches(hc, rc);
        prec_sum += h_total > 0 ? static_cast<double>(m) / static_cast<double>(h_total) : 0.0;
        rec_sum += r_total > 0 ? static_cast<double>(m) / static_cast<double>(r_total) : 0.0;
        ++effective;
    };
    for (int n = 1; n <= cfg.chrf_char_order; ++n)
        add_order(char_ngram_counts(h_chars, n), char_ngram_counts(r_chars, n));
    for (int n = 1; n <= cfg.chrf_word_order; ++n)
        add_order(ngram_counts(h_words, n), ngram_counts(r_words, n));
    if (effective == 0) return 0.0;
    double prec = prec_sum / effective;
    double rec = rec_sum / effective;
    double b2 = cfg.chrf_beta * cfg.chrf_beta;
    double denom = b2 * prec + rec;
    if (denom <= 0.0) return 0.0;
    return 100.0 * (1.0 + b2) * prec * rec / denom;
}

double bootstrap_significance(const std::vector<std::string>& sys_a,
                              const std::vector<std::string>& sys_b,
                              const std::vector<std::string>& refs, const EvalConfig& cfg,
                              std::uint64_t seed) {
    cfg.validate();
    if (sys_a.size() != sys_b.size() || sys_a.size() != refs.size())
        throw ValidationError("bootstrap: system/reference lengths differ");
    if (sys_a.empty()) throw ValidationError("bootstrap: empty inputs");
    std::vector<BleuStats> stats_a, stats_b;
    stats_a.reserve(sys_a.size());
    stats_b.reserve(sys_b.size());
    for (std::size_t i = 0; i < sys_a.size(); ++i) {
        stats_a.push_back(bleu_sentence_stats(sys_a[i], refs[i], cfg));
        stats_b.push_back(bleu_sentence_stats(sys_b[i], refs[i], cfg));
    }
    std::size_t n = sys_a.size();
    Rng master(seed);
    int a_not_better = 0;
    for (int s = 0; s < cfg.bootstrap_samples; ++s) {
        // per-resample stream, so resamples are order-independent
        Rng rng = master.fork(static_cast<std::uint64_t>(s));
        BleuStats sum_a, sum_b;
        for (std::size_t k = 0; k < n; ++k) {
            std::size_t idx = static_cast<std::size_t>(rng.below(n));
            sum_a.accumulate(stats_a[idx]);
            sum_b.accumulate(stats_b[idx]);
        }
        double score_a = bleu_from_stats(sum_a, cfg).score;
        double score_b = bleu_from_stats(sum_b, cfg).score;
        if (score_a <= score_b) ++a_not_better;
    }
    return static_cast<double>(a_not_better) / static_cast<double>(cfg.bootstrap_samples);
}

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw ValidationError("wilcoxon: paired score lists must have equal length");
    std::vector<double> diffs;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        if (d != 0.0) diffs.push_back(d);
    }
    WilcoxonResult res;
    res.n = static_cast<int>(diffs.size());
    if (diffs.empty()) return res;  // statistic 0, p 1

    // Rank |d| ascending with average ranks for ties.
    std::vector<std::size_t> order(diffs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return std::abs(diffs[x]) < std::abs(diffs[y]);
    });
    std::vector<double> rank(diffs.size(), 0.0);
    std::vector<std::int64_t> tie_sizes;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() &&
               std::abs(diffs[order[j]]) == std::abs(diffs[order[i]]))
            ++j;
        double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) rank[order[k]] = avg;
        tie_sizes.push_back(static_cast<std::int64_t>(j - i));
        i = j;
    }

    double w_plus = 0.0, w_minus = 0.0;
    for (std::size_t i = 0; i < diffs.size(); ++i)
        (diffs[i] > 0 ? w_plus : w_minus) += rank[i];
    res.statistic = std::min(w_plus, w_minus);

    int n = res.n;
    if (n < 20) {
        // Exact: distribution of W+ over all 2^n sign assignments, using the
        // observed (possibly tied) ranks scaled to integers.
        std::vector<std::int64_t> scaled;
        std::int64_t total = 0;
        for (double r : rank) {
            scaled.push_back(static_cast<std::int64_t>(std::llround(2.0 * r)));
            total += scaled.back();
        }
        std::vector<double> count(static_cast<std::size_t>(total) + 1, 0.0);
        count[0] = 1.0;
        for (std::int64_t r : scaled)
            for (std::int64_t w = total; w >= r; --w)
                count[static_cast<std::size_t>(w)] += count[static_cast<std::size_t>(w - r)];
        std::int64_t w_obs = static_cast<std::int64_t>(std::llround(2.0 * res.statistic));
        double tail = 0.0;
        for (std::int64_t w = 0; w <= w_obs; ++w) tail += count[static_cast<std::size_t>(w)];
        double p = 2.0 * tail / std::pow(2.0, n);
        res.p_value = std::min(1.0, p);
    } else {
        double mean = static_cast<double>(n) * (n + 1) / 4.0;
        double var = static_cast<double>(n) * (n + 1) * (2.0 * n + 1) / 24.0;
        for (std::int64_t t : tie_sizes)
            var -= static_cast<double>(t * t * t - t) / 48.0;
        if (var <= 0.0) {
            res.p_value = 1.0;
            return res;
        }
        double z = (res.statistic - mean) / std::sqrt(var);
        res.p_value = std::min(1.0, std::erfc(-z / std::sqrt(2.0)));
    }
    return res;
}

}  // namespace g2s
