// beam.hpp - beam-search decoding over any step model, ensemble scoring by
// log-probability averaging, and attention-based <unk> replacement.
//
// The Session concept keeps the search testable against hand-set step
// distributions:
//   vocab_size();  eos();  allowed(token);
//   State initial_state();
//   StepScores step(state, prev_token) -> {logprobs, state, attention}
// Scores are log-probabilities; hypotheses are ranked by total log-probability
// divided by emitted length, ties broken by the lexicographically smaller
// token sequence.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "g2s/checkpoint.hpp"
#include "g2s/model.hpp"
#include "g2s/vocab.hpp"

namespace g2s {

struct Hypothesis {
    std::vector<int> tokens;           // emitted tokens, </s> excluded
    double score = 0.0;                // sum of chosen step log-probabilities
    std::vector<int> attention_argmax; // one node index per emitted token
    bool finished = false;

    double normalized() const {
        std::size_t len = tokens.size() + (finished ? 1 : 0);  // count the </s> step
        return len == 0 ? score : score / static_cast<double>(len);
    }
};

struct DecodeResult {
    Hypothesis best;
    bool finished_within_limit = true;
};

namespace detail {

inline bool hyp_better(const Hypothesis& a, const Hypothesis& b) {
    if (a.normalized() != b.normalized()) return a.normalized() > b.normalized();
    return a.tokens < b.tokens;
}

// One search pass. Finished hypotheses accumulate over the whole horizon; the
// best unfinished survivor is reported for the no-ending fallback.
template <typename Session>
void beam_pass(Session& session, int beam, int max_len, std::vector<Hypothesis>& finished,
               std::vector<Hypothesis>& unfinished) {
    using State = typename Session::State;
    struct Live {
        Hypothesis hyp;
        State state;
    };
    std::vector<Live> live;
    live.push_back({Hypothesis{}, session.initial_state()});

    for (int step = 0; step < max_len && !live.empty(); ++step) {
        struct Candidate {
            double score;
            std::size_t parent;
            int token;
        };
        std::vector<Candidate> candidates;
        std::vector<typename Session::StepScores> outputs;
        outputs.reserve(live.size());
        for (std::size_t p = 0; p < live.size(); ++p) {
            int prev = live[p].hyp.tokens.empty() ? Vocabulary::kBos : live[p].hyp.tokens.back();
            outputs.push_back(session.step(live[p].state, prev));
            const auto& lp = outputs.back().logprobs;
            for (int tok = 0; tok < static_cast<int>(lp.size()); ++tok) {
                if (!session.allowed(tok)) continue;
                candidates.push_back({live[p].hyp.score + lp[tok], p, tok});
            }
        }
        std::stable_sort(candidates.begin(), candidates.end(),
                         [](const Candidate& a, const Candidate& b) {
                             if (a.score != b.score) return a.score > b.score;
                             if (a.token != b.token) return a.token < b.token;
                             return a.parent < b.parent;
                         });
        std::vector<Live> next;
        int taken = 0;
        for (const auto& c : candidates) {
            if (taken >= beam) break;
            ++taken;  // a finalized ending consumes its beam slot
            const Live& parent = live[c.parent];
            if (c.token == session.eos()) {
                Hypothesis done = parent.hyp;
                done.score = c.score;
                done.finished = true;
                finished.push_back(std::move(done));
                continue;
            }
            Live child;
            child.hyp = parent.hyp;
            child.hyp.score = c.score;
            child.hyp.tokens.push_back(c.token);
            child.hyp.attention_argmax.push_back(outputs[c.parent].attention_argmax);
            child.state = session.advance(outputs[c.parent], c.token);
            next.push_back(std::move(child));
        }
        live = std::move(next);
    }
    for (auto& survivor : live) unfinished.push_back(std::move(survivor.hyp));
}

}  // namespace detail

// Standard beam expansion with the beam-1 path always scored as well, so the
// result never ranks below greedy decoding. Finalized hypotheses are ranked
// by length-normalized log-probability.
template <typename Session>
DecodeResult beam_search(Session& session, int beam, int max_len) {
    if (beam < 1) throw ValidationError("beam size must be >= 1");
    std::vector<Hypothesis> finished, unfinished;
    detail::beam_pass(session, beam, max_len, finished, unfinished);
    if (beam > 1) detail::beam_pass(session, 1, max_len, finished, unfinished);

    DecodeResult res;
    if (!finished.empty()) {
        res.best = *std::min_element(finished.begin(), finished.end(), detail::hyp_better);
        res.finished_within_limit = true;
        return res;
    }
    res.finished_within_limit = false;
    if (!unfinished.empty())
        res.best = *std::min_element(unfinished.begin(), unfinished.end(), detail::hyp_better);
    return res;
}

// Replace every <unk> with the label of the node the decoder attended to
// most at that step (ties fall to the lowest node id, which the argmax scan
// already guarantees).
std::vector<std::string> replace_unk(const std::vector<int>& tokens,
                                     const std::vector<int>& attention_argmax,
                                     const std::vector<std::string>& node_labels,
                                     const Vocabulary& tgt_vocab);

// ---------------------------------------------------------------- model side

// Decoding session over one graph and one or more parameter sets (an
// ensemble). Per-model distributions are combined by averaging
// log-probabilities; attention weights are averaged before the argmax.
class ModelSession {
public:
    ModelSession(const ModelConfig& cfg, const std::vector<const ParamStore<float>*>& stores,
                 const LeviGraph& graph, const Vocabulary& src_vocab);

    struct State {
        std::vector<DecodeState<float>> per_model;
    };
    // The recurrent state after a step does not depend on the token chosen
    // from it (the choice is consumed by the next step), so one next-state
    // serves every continuation.
    struct StepScores {
        std::vector<double> logprobs;
        State next;
        int attention_argmax = 0;
    };

    std::size_t vocab_size() const { return static_cast<std::size_t>(cfg_.tgt_vocab); }
    int eos() const { return Vocabulary::kEos; }
    bool allowed(int token) const {
        return token != Vocabulary::kPad && token != Vocabulary::kBos;
    }

    State initial_state();
    StepScores step(const State& state, int prev_token);
    State advance(const StepScores& scores, int token) {
        (void)token;
        return scores.next;
    }

    const std::vector<std::string>& node_labels() const { return batch_.node_labels; }
    int node_count() const { return batch_.total_nodes; }

private:
    ModelConfig cfg_;
    Graph2Seq<float> model_;
    GraphBatch batch_;
    Tape<float> tape_;
    std::vector<ParamVars<float>> vars_;
    std::vector<Var> h_enc_;
    std::shared_ptr<const std::vector<std::uint8_t>> mask_;
};

// Greedy decoding (identical to beam 1 by construction; kept separate so the
// equivalence is testable).
template <typename Session>
DecodeResult greedy_decode(Session& session, int max_len) {
    DecodeResult res;
    auto state = session.initial_state();
    int prev = Vocabulary::kBos;
    for (int step = 0; step < max_len; ++step) {
        auto out = session.step(state, prev);
        int best = -1;
        double best_score = -std::numeric_limits<double>::infinity();
        for (int tok = 0; tok < static_cast<int>(out.logprobs.size()); ++tok) {
            if (!session.allowed(tok)) continue;
            if (out.logprobs[tok] > best_score) {
                best_score = out.logprobs[tok];
                best = tok;
            }
        }
        res.best.score += best_score;
        if (best == session.eos()) {
            res.best.finished = true;
            return res;
        }
        res.best.tokens.push_back(best);
        res.best.attention_argmax.push_back(out.attention_argmax);
        state = session.advance(out, best);
        prev = best;
    }
    res.finished_within_limit = false;
    return res;
}

int default_max_len(const LeviGraph& g);

}  // namespace g2s
