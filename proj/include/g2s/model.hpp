// model.hpp - the graph-to-sequence network.
//
// Encoder: gated graph network over Levi-graph nodes. Per edge type there is
// one reset/update/candidate weight block, shared across all layers; messages
// are normalised by the receiver's in-degree. Node states start as the
// concatenation of label and root-distance embeddings.
//
// Decoder: 2-layer LSTM with bilinear attention over every node state
// (reified edges included) and a Luong-style output combination.
//
// Everything is templated on the scalar type: float for training, double for
// gradient checking and the scalar-oracle comparisons.

#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "g2s/gradcheck.hpp"
#include "g2s/graph.hpp"
#include "g2s/params.hpp"
#include "g2s/tape.hpp"
#include "g2s/vocab.hpp"

namespace g2s {

struct EncoderConfig {
    int layers = 8;
    int hidden = 576;   // node state width d_h
    int pos_dim = 64;   // positional part; label part is hidden - pos_dim
    int edge_types = 3; // 3 for AMR graphs, 5 with sequential connections

    int node_dim() const { return hidden - pos_dim; }
    void validate() const {
        if (layers < 1) throw ValidationError("encoder layers must be >= 1");
        if (pos_dim <= 0 || pos_dim >= hidden)
            throw ValidationError("positional dim must split the hidden size");
        if (edge_types != 3 && edge_types != 5)
            throw ValidationError("edge type set must be 3 or 5");
    }
};

struct DecoderConfig {
    int hidden = 512;
    int emb_dim = 512;
};

struct ModelConfig {
    EncoderConfig enc;
    DecoderConfig dec;
    int src_vocab = 0;
    int tgt_vocab = 0;
    double dropout = 0.5;

    nlohmann::ordered_json to_json() const;
    static ModelConfig from_json(const nlohmann::json& j);
};

// A batch of graphs packed as one disjoint union: node v of instance b lives
// at row ranges[b].first + v. The encoder is local, so the union encodes each
// graph independently; attention masks per-instance node ranges.
struct GraphBatch {
    int total_nodes = 0;
    std::vector<int> label_ids;
    std::vector<int> position_ids;
    std::vector<int> instance_of;
    std::vector<std::pair<int, int>> ranges;
    std::array<std::pair<std::vector<int>, std::vector<int>>, kEdgeTypeCount> edges;
    std::vector<int> in_degree;
    std::vector<std::string> node_labels;  // for <unk> replacement

    int batch_size() const { return static_cast<int>(ranges.size()); }

    static GraphBatch build(const std::vector<const LeviGraph*>& graphs,
                            const Vocabulary& src_vocab, int edge_types);
    static GraphBatch build_one(const LeviGraph& g, const Vocabulary& src_vocab, int edge_types) {
        return build({&g}, src_vocab, edge_types);
    }

    // B x N validity mask for attention over the node union.
    std::shared_ptr<const std::vector<std::uint8_t>> attention_mask() const;
};

// Teacher-forcing view of a target batch: inputs start with <s>, gold ends
// with </s>, both padded to `steps` with <pad> and a mask.
struct TargetBatch {
    int batch = 0;
    int steps = 0;
    std::vector<int> inputs;          // batch x steps
    std::vector<int> gold;            // batch x steps
    std::vector<std::uint8_t> mask;   // batch x steps

    static TargetBatch build(const std::vector<const std::vector<int>*>& targets, int pad_to = 0);
};

template <typename T>
struct DecodeState {
    Var h1, c1, h2, c2;
    Var context;
};

template <typename T>
struct StepResult {
    Var logits;
    DecodeState<T> state;
    Var attention;
};

template <typename T>
class Graph2Seq {
public:
    explicit Graph2Seq(ModelConfig cfg) : cfg_(std::move(cfg)) {}

    const ModelConfig& config() const { return cfg_; }

    // Xavier matrices, zero biases, in a fixed registration order.
    void register_params(ParamStore<T>& store, Rng& rng) const;

    // Number of parameters in the gated propagation block:
    // edge_types * (3 d_h^2 + 3 d_h).
    std::size_t ggnn_param_count() const;

    // Node states after `layers` gated updates; rows follow the batch union.
    Var encode(Tape<T>& tape, ParamVars<T>& pv, const GraphBatch& batch, bool training,
               Rng* dropout_rng) const;

    // One gated propagation step (exposed for the scalar-oracle tests).
    Var ggnn_layer(Tape<T>& tape, ParamVars<T>& pv, Var h, const GraphBatch& batch) const;

    // Initial decoder state: tanh-projected masked mean of the node states.
    DecodeState<T> init_state(Tape<T>& tape, ParamVars<T>& pv, Var h_enc,
                              const GraphBatch& batch) const;

    // Bilinear attention of h_dec over the node states.
    // Returns {context (B x d_h), weights (B x N)}.
    std::pair<Var, Var> attention(Tape<T>& tape, ParamVars<T>& pv, Var h_dec, Var h_enc,
                                  std::shared_ptr<const std::vector<std::uint8_t>> mask) const;

    StepResult<T> decode_step(Tape<T>& tape, ParamVars<T>& pv, const DecodeState<T>& state,
                              const std::vector<int>& prev_ids, Var h_enc,
                              std::shared_ptr<const std::vector<std::uint8_t>> mask) const;

    struct LossResult {
        Var loss;           // mean over non-padding gold tokens
        double value = 0;   // same, as a plain number
        std::size_t tokens = 0;
    };

    LossResult sequence_loss(Tape<T>& tape, ParamVars<T>& pv, const GraphBatch& batch,
                             const TargetBatch& targets, bool training, Rng* dropout_rng) const;

private:
    Var lstm_cell(Tape<T>& tape, Var x, Var h_prev, Var c_prev, Var wx, Var wh, Var b,
                  Var* c_out) const;

    ModelConfig cfg_;
};

std::string ggnn_param_name(EdgeType tag, const char* part);

}  // namespace g2s

#include "g2s/model_impl.hpp"
