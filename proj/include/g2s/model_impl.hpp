// model_impl.hpp - template bodies for Graph2Seq. Included by model.hpp.

#pragma once

#include "g2s/model.hpp"

namespace g2s {

template <typename T>
void Graph2Seq<T>::register_params(ParamStore<T>& store, Rng& rng) const {
    auto d_h = static_cast<std::size_t>(cfg_.enc.hidden);
    store.add("enc.node_embed",
              xavier_init<T>({static_cast<std::size_t>(cfg_.src_vocab),
                              static_cast<std::size_t>(cfg_.enc.node_dim())}, rng));
    store.add("enc.pos_embed",
              xavier_init<T>({static_cast<std::size_t>(kUnreachablePosition + 1),
                              static_cast<std::size_t>(cfg_.enc.pos_dim)}, rng));
    for (int tag = 0; tag < cfg_.enc.edge_types; ++tag) {
        EdgeType et = static_cast<EdgeType>(tag);
        store.add(ggnn_param_name(et, "Wr"), xavier_init<T>({d_h, d_h}, rng));
        store.add(ggnn_param_name(et, "Wz"), xavier_init<T>({d_h, d_h}, rng));
        store.add(ggnn_param_name(et, "Wh"), xavier_init<T>({d_h, d_h}, rng));
        store.add(ggnn_param_name(et, "br"), xavier_init<T>({d_h}, rng));
        store.add(ggnn_param_name(et, "bz"), xavier_init<T>({d_h}, rng));
        store.add(ggnn_param_name(et, "bh"), xavier_init<T>({d_h}, rng));
    }
    auto dh = static_cast<std::size_t>(cfg_.dec.hidden);
    auto de = static_cast<std::size_t>(cfg_.dec.emb_dim);
    store.add("dec.init.W", xavier_init<T>({d_h, dh}, rng));
    store.add("dec.embed",
              xavier_init<T>({static_cast<std::size_t>(cfg_.tgt_vocab), de}, rng));
    store.add("dec.l1.Wx", xavier_init<T>({de, 4 * dh}, rng));
    store.add("dec.l1.Wh", xavier_init<T>({dh, 4 * dh}, rng));
    store.add("dec.l1.b", xavier_init<T>({4 * dh}, rng));
    store.add("dec.l2.Wx", xavier_init<T>({dh, 4 * dh}, rng));
    store.add("dec.l2.Wh", xavier_init<T>({dh, 4 * dh}, rng));
    store.add("dec.l2.b", xavier_init<T>({4 * dh}, rng));
    store.add("dec.attn.W", xavier_init<T>({d_h, dh}, rng));
    store.add("dec.out.W", xavier_init<T>({dh + d_h, dh}, rng));
    store.add("dec.vocab.W", xavier_init<T>({dh, static_cast<std::size_t>(cfg_.tgt_vocab)}, rng));
}

template <typename T>
std::size_t Graph2Seq<T>::ggnn_param_count() const {
    auto d_h = static_cast<std::size_t>(cfg_.enc.hidden);
    return static_cast<std::size_t>(cfg_.enc.edge_types) * (3 * d_h * d_h + 3 * d_h);
}

template <typename T>
Var Graph2Seq<T>::ggnn_layer(Tape<T>& tape, ParamVars<T>& pv, Var h,
                             const GraphBatch& batch) const {
    for (int v = 0; v < batch.total_nodes; ++v)
        if (batch.in_degree[v] == 0)
            throw ValidationError("node " + std::to_string(v) +
                                  " has no incoming edges; augment the graph first");
    std::vector<T> inv_deg(batch.in_degree.size());
    for (std::size_t v = 0; v < inv_deg.size(); ++v)
        inv_deg[v] = static_cast<T>(1.0 / static_cast<double>(batch.in_degree[v]));

    std::size_t n_nodes = static_cast<std::size_t>(batch.total_nodes);
    // Sum of per-edge messages (W h_u + b) into each receiver, per gate.
    auto aggregate = [&](Var src_states, const char* wpart, const char* bpart) {
        Var sum;
        for (int tag = 0; tag < cfg_.enc.edge_types; ++tag) {
            const auto& [srcs, dsts] = batch.edges[tag];
            if (srcs.empty()) continue;
            EdgeType et = static_cast<EdgeType>(tag);
            Var proj = affine(tape, src_states, pv(ggnn_param_name(et, wpart)),
                              pv(ggnn_param_name(et, bpart)));
            Var acc = edge_accumulate(tape, proj, srcs, dsts, n_nodes);
            sum = sum.valid() ? add(tape, sum, acc) : acc;
        }
        return sum;
    };

    Var reset = sigmoid(tape, row_scale(tape, aggregate(h, "Wr", "br"), inv_deg));
    Var update = sigmoid(tape, row_scale(tape, aggregate(h, "Wz", "bz"), inv_deg));
    Var gated = mul(tape, reset, h);
    Var candidate = tanh_op(tape, row_scale(tape, aggregate(gated, "Wh", "bh"), inv_deg));
    return add(tape, mul(tape, one_minus(tape, update), h), mul(tape, update, candidate));
}

template <typename T>
Var Graph2Seq<T>::encode(Tape<T>& tape, ParamVars<T>& pv, const GraphBatch& batch, bool training,
                         Rng* dropout_rng) const {
    Var labels = embedding_lookup(tape, pv("enc.node_embed"), batch.label_ids);
    Var positions = embedding_lookup(tape, pv("enc.pos_embed"), batch.position_ids);
    Var h = concat_cols(tape, labels, positions);
    if (training && cfg_.dropout > 0.0) {
        if (!dropout_rng) throw ValidationError("training encode needs a dropout stream");
        h = dropout(tape, h, cfg_.dropout, true, *dropout_rng);
    }
    for (int layer = 0; layer < cfg_.enc.layers; ++layer) h = ggnn_layer(tape, pv, h, batch);
    return h;
}

template <typename T>
DecodeState<T> Graph2Seq<T>::init_state(Tape<T>& tape, ParamVars<T>& pv, Var h_enc,
                                        const GraphBatch& batch) const {
    if (batch.batch_size() == 0) throw ValidationError("init_state: empty batch");
    std::vector<int> iota(static_cast<std::size_t>(batch.total_nodes));
    for (int v = 0; v < batch.total_nodes; ++v) iota[static_cast<std::size_t>(v)] = v;
    Var sums = edge_accumulate(tape, h_enc, iota, batch.instance_of,
                               static_cast<std::size_t>(batch.batch_size()));
    std::vector<T> inv_count;
    inv_count.reserve(batch.ranges.size());
    for (const auto& [b, e] : batch.ranges)
        inv_count.push_back(static_cast<T>(1.0 / static_cast<double>(e - b)));
    Var mean = row_scale(tape, sums, inv_count);
    Var s = tanh_op(tape, matmul(tape, mean, pv("dec.init.W")));
    DecodeState<T> st;
    st.h1 = st.c1 = st.h2 = st.c2 = s;
    st.context = tape.constant(Tensor<T>::zeros(
        {static_cast<std::size_t>(batch.batch_size()), static_cast<std::size_t>(cfg_.enc.hidden)}));
    return st;
}

template <typename T>
std::pair<Var, Var> Graph2Seq<T>::attention(
    Tape<T>& tape, ParamVars<T>& pv, Var h_dec, Var h_enc,
    std::shared_ptr<const std::vector<std::uint8_t>> mask) const {
    Var proj = matmul(tape, h_enc, pv("dec.attn.W"));       // N x dec_hidden
    Var scores = matmul(tape, h_dec, proj, false, true);    // B x N
    Var weights = masked_softmax(tape, scores, std::move(mask));
    Var context = matmul(tape, weights, h_enc);              // B x d_h
    return {context, weights};
}

template <typename T>
Var Graph2Seq<T>::lstm_cell(Tape<T>& tape, Var x, Var h_prev, Var c_prev, Var wx, Var wh, Var b,
                            Var* c_out) const {
    std::size_t dh = static_cast<std::size_t>(cfg_.dec.hidden);
    Var gates = add(tape, affine(tape, x, wx, b), matmul(tape, h_prev, wh));
    Var in_gate = sigmoid(tape, slice_cols(tape, gates, 0, dh));
    Var forget = sigmoid(tape, slice_cols(tape, gates, dh, 2 * dh));
    Var out_gate = sigmoid(tape, slice_cols(tape, gates, 2 * dh, 3 * dh));
    Var cand = tanh_op(tape, slice_cols(tape, gates, 3 * dh, 4 * dh));
    Var c_new = add(tape, mul(tape, forget, c_prev), mul(tape, in_gate, cand));
    *c_out = c_new;
    return mul(tape, out_gate, tanh_op(tape, c_new));
}

template <typename T>
StepResult<T> Graph2Seq<T>::decode_step(Tape<T>& tape, ParamVars<T>& pv,
                                        const DecodeState<T>& state,
                                        const std::vector<int>& prev_ids, Var h_enc,
                                        std::shared_ptr<const std::vector<std::uint8_t>> mask) const {
    Var x = embedding_lookup(tape, pv("dec.embed"), prev_ids);
    StepResult<T> out;
    out.state.h1 = lstm_cell(tape, x, state.h1, state.c1, pv("dec.l1.Wx"), pv("dec.l1.Wh"),
                             pv("dec.l1.b"), &out.state.c1);
    out.state.h2 = lstm_cell(tape, out.state.h1, state.h2, state.c2, pv("dec.l2.Wx"),
                             pv("dec.l2.Wh"), pv("dec.l2.b"), &out.state.c2);
    auto [context, weights] = attention(tape, pv, out.state.h2, h_enc, std::move(mask));
    out.state.context = context;
    Var combined = tanh_op(
        tape, matmul(tape, concat_cols(tape, out.state.h2, context), pv("dec.out.W")));
    out.logits = matmul(tape, combined, pv("dec.vocab.W"));
    out.attention = weights;
    return out;
}

template <typename T>
typename Graph2Seq<T>::LossResult Graph2Seq<T>::sequence_loss(Tape<T>& tape, ParamVars<T>& pv,
                                                              const GraphBatch& batch,
                                                              const TargetBatch& targets,
                                                              bool training,
                                                              Rng* dropout_rng) const {
    if (targets.batch != batch.batch_size())
        throw DimensionError("sequence_loss: " + std::to_string(targets.batch) +
                             " targets for " + std::to_string(batch.batch_size()) + " graphs");
    Var h_enc = encode(tape, pv, batch, training, dropout_rng);
    DecodeState<T> state = init_state(tape, pv, h_enc, batch);
    auto mask = batch.attention_mask();

    std::size_t tokens = 0;
    for (auto m : targets.mask) tokens += m ? 1 : 0;
    if (tokens == 0) throw ValidationError("sequence_loss: no unmasked target tokens");

    Var total;
    for (int t = 0; t < targets.steps; ++t) {
        std::vector<int> prev(targets.batch), gold(targets.batch);
        std::vector<std::uint8_t> step_mask(targets.batch);
        bool any = false;
        for (int b = 0; b < targets.batch; ++b) {
            std::size_t idx = static_cast<std::size_t>(b) * targets.steps + t;
            prev[b] = targets.inputs[idx];
            gold[b] = targets.gold[idx];
            step_mask[b] = targets.mask[idx];
            any = any || step_mask[b];
        }
        if (!any) break;  // everything beyond here is padding
        StepResult<T> step = decode_step(tape, pv, state, prev, h_enc, mask);
        state = step.state;
        Var sum = softmax_xent_sum(tape, step.logits, gold, step_mask);
        total = total.valid() ? add(tape, total, sum) : sum;
    }
    LossResult res;
    res.loss = scale(tape, total, static_cast<T>(1.0 / static_cast<double>(tokens)));
    res.value = static_cast<double>(tape.value(res.loss).data[0]);
    res.tokens = tokens;
    return res;
}

}  // namespace g2s
