#include "g2s/beam.hpp"

namespace g2s {

int default_max_len(const LeviGraph& g) {
    int n = static_cast<int>(g.nodes.size());
    return std::min(2 * n + 10, 200);
}

std::vector<std::string> replace_unk(const std::vector<int>& tokens,
                                     const std::vector<int>& attention_argmax,
                                     const std::vector<std::string>& node_labels,
                                     const Vocabulary& tgt_vocab) {
    if (tokens.size() != attention_argmax.size())
        throw ValidationError("replace_unk: attention history length " +
                              std::to_string(attention_argmax.size()) + " for " +
                              std::to_string(tokens.size()) + " tokens");
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i] == Vocabulary::kUnk) {
            int node = attention_argmax[i];
            if (node < 0 || static_cast<std::size_t>(node) >= node_labels.size())
                throw ValidationError("replace_unk: attention points at missing node");
            out.push_back(node_labels[static_cast<std::size_t>(node)]);
        } else {
            out.push_back(tgt_vocab.token(tokens[i]));
        }
    }
    return out;
}

ModelSession::ModelSession(const ModelConfig& cfg,
                           const std::vector<const ParamStore<float>*>& stores,
                           const LeviGraph& graph, const Vocabulary& src_vocab)
    : cfg_(cfg), model_(cfg) {
    if (stores.empty()) throw ValidationError("decode needs at least one parameter set");
    batch_ = GraphBatch::build_one(graph, src_vocab, cfg.enc.edge_types);
    mask_ = batch_.attention_mask();
    for (const auto* store : stores) {
        vars_.push_back(ParamVars<float>{&tape_, const_cast<ParamStore<float>*>(store), {}});
        h_enc_.push_back(model_.encode(tape_, vars_.back(), batch_, false, nullptr));
    }
}

ModelSession::State ModelSession::initial_state() {
    State st;
    for (std::size_t m = 0; m < vars_.size(); ++m)
        st.per_model.push_back(model_.init_state(tape_, vars_[m], h_enc_[m], batch_));
    return st;
}

ModelSession::StepScores ModelSession::step(const State& state, int prev_token) {
    if (prev_token < 0 || prev_token >= cfg_.tgt_vocab)
        throw ValidationError("decode step: token id " + std::to_string(prev_token) +
                              " out of vocabulary range");
    StepScores out;
    std::size_t vocab = vocab_size();
    std::vector<double> avg_logprob(vocab, 0.0);
    std::vector<double> avg_attn(static_cast<std::size_t>(batch_.total_nodes), 0.0);
    State next;
    for (std::size_t m = 0; m < vars_.size(); ++m) {
        auto step = model_.decode_step(tape_, vars_[m], state.per_model[m], {prev_token},
                                       h_enc_[m], mask_);
        next.per_model.push_back(step.state);
        const auto& logits = tape_.value(step.logits);
        // log-softmax in double for stable ensemble averaging
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t v = 0; v < vocab; ++v)
            mx = std::max(mx, static_cast<double>(logits.data[v]));
        double z = 0.0;
        for (std::size_t v = 0; v < vocab; ++v)
            z += std::exp(static_cast<double>(logits.data[v]) - mx);
        double log_z = std::log(z) + mx;
        for (std::size_t v = 0; v < vocab; ++v)
            avg_logprob[v] += static_cast<double>(logits.data[v]) - log_z;
        const auto& attn = tape_.value(step.attention);
        for (std::size_t n = 0; n < avg_attn.size(); ++n)
            avg_attn[n] += static_cast<double>(attn.data[n]);
    }
    double inv = 1.0 / static_cast<double>(vars_.size());
    for (auto& v : avg_logprob) v *= inv;
    out.logprobs = std::move(avg_logprob);
    int argmax = 0;
    for (std::size_t n = 1; n < avg_attn.size(); ++n)
        if (avg_attn[n] > avg_attn[argmax]) argmax = static_cast<int>(n);  // ties keep lowest id
    out.attention_argmax = argmax;
    out.next = std::move(next);
    return out;
}

}  // namespace g2s
