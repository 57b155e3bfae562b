// oracles.hpp - independent reference implementations used only by tests.
//
// Everything here is plain loop arithmetic over nested vectors: no Tensor, no
// Tape, no shared code with the library's forward path. Weight layout matches
// the library convention (row = input index, column = output index).

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<std::vector<double>>;  // [row][col]

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct EdgeRef {
    int src;
    int dst;
    int type;
};

struct GgnnTypeParams {
    Mat Wr, Wz, Wh;  // d x d, input-major
    Vec br, bz, bh;
};

// One gated propagation step, node by node, edge by edge.
inline Mat ggnn_layer(const Mat& h, const std::vector<EdgeRef>& edges,
                      const std::vector<GgnnTypeParams>& params) {
    std::size_t n = h.size();
    std::size_t d = h[0].size();
    std::vector<std::vector<const EdgeRef*>> incoming(n);
    for (const auto& e : edges) incoming[static_cast<std::size_t>(e.dst)].push_back(&e);

    auto matvec_in = [&](const Mat& w, const Vec& x) {
        Vec out(d, 0.0);
        for (std::size_t j = 0; j < d; ++j)
            for (std::size_t i = 0; i < d; ++i) out[j] += x[i] * w[i][j];
        return out;
    };

    // Reset and update gates for every node first.
    Mat reset(n, Vec(d, 0.0)), update(n, Vec(d, 0.0));
    for (std::size_t v = 0; v < n; ++v) {
        double c = 1.0 / static_cast<double>(incoming[v].size());
        Vec r_sum(d, 0.0), z_sum(d, 0.0);
        for (const EdgeRef* e : incoming[v]) {
            const auto& p = params[static_cast<std::size_t>(e->type)];
            Vec mr = matvec_in(p.Wr, h[static_cast<std::size_t>(e->src)]);
            Vec mz = matvec_in(p.Wz, h[static_cast<std::size_t>(e->src)]);
            for (std::size_t j = 0; j < d; ++j) {
                r_sum[j] += mr[j] + p.br[j];
                z_sum[j] += mz[j] + p.bz[j];
            }
        }
        for (std::size_t j = 0; j < d; ++j) {
            reset[v][j] = sigmoid(c * r_sum[j]);
            update[v][j] = sigmoid(c * z_sum[j]);
        }
    }
    // Candidate uses the sender's reset gate applied to the sender's state.
    Mat out(n, Vec(d, 0.0));
    for (std::size_t v = 0; v < n; ++v) {
        double c = 1.0 / static_cast<double>(incoming[v].size());
        Vec cand_sum(d, 0.0);
        for (const EdgeRef* e : incoming[v]) {
            const auto& p = params[static_cast<std::size_t>(e->type)];
            Vec gated(d, 0.0);
            for (std::size_t i = 0; i < d; ++i)
                gated[i] = reset[static_cast<std::size_t>(e->src)][i] *
                           h[static_cast<std::size_t>(e->src)][i];
            Vec mc = matvec_in(p.Wh, gated);
            for (std::size_t j = 0; j < d; ++j) cand_sum[j] += mc[j] + p.bh[j];
        }
        for (std::size_t j = 0; j < d; ++j) {
            double cand = std::tanh(c * cand_sum[j]);
            out[v][j] = (1.0 - update[v][j]) * h[v][j] + update[v][j] * cand;
        }
    }
    return out;
}

// Bilinear attention: score_v = h_dec . (W^T h_v), softmax, weighted sum.
struct AttnOut {
    Vec weights;
    Vec context;
};

inline AttnOut attention(const Vec& h_dec, const Mat& h_enc, const Mat& w) {
    std::size_t n = h_enc.size();
    std::size_t d_enc = h_enc[0].size();
    std::size_t d_dec = h_dec.size();
    Vec scores(n, 0.0);
    for (std::size_t v = 0; v < n; ++v)
        for (std::size_t k = 0; k < d_dec; ++k) {
            double proj = 0.0;
            for (std::size_t i = 0; i < d_enc; ++i) proj += h_enc[v][i] * w[i][k];
            scores[v] += h_dec[k] * proj;
        }
    double mx = scores[0];
    for (double s : scores) mx = std::max(mx, s);
    double z = 0.0;
    AttnOut out;
    out.weights.assign(n, 0.0);
    for (std::size_t v = 0; v < n; ++v) z += std::exp(scores[v] - mx);
    for (std::size_t v = 0; v < n; ++v) out.weights[v] = std::exp(scores[v] - mx) / z;
    out.context.assign(d_enc, 0.0);
    for (std::size_t v = 0; v < n; ++v)
        for (std::size_t i = 0; i < d_enc; ++i) out.context[i] += out.weights[v] * h_enc[v][i];
    return out;
}

struct LstmParams {
    Mat wx;  // in x 4d, gate order [input, forget, output, candidate]
    Mat wh;  // d x 4d
    Vec b;   // 4d
};

struct LstmOut {
    Vec h;
    Vec c;
};

inline LstmOut lstm_step(const Vec& x, const Vec& h_prev, const Vec& c_prev,
                         const LstmParams& p) {
    std::size_t d = h_prev.size();
    Vec gates(4 * d, 0.0);
    for (std::size_t j = 0; j < 4 * d; ++j) {
        double acc = p.b[j];
        for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * p.wx[i][j];
        for (std::size_t i = 0; i < d; ++i) acc += h_prev[i] * p.wh[i][j];
        gates[j] = acc;
    }
    LstmOut out;
    out.h.assign(d, 0.0);
    out.c.assign(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        double in_g = sigmoid(gates[j]);
        double forget = sigmoid(gates[d + j]);
        double out_g = sigmoid(gates[2 * d + j]);
        double cand = std::tanh(gates[3 * d + j]);
        out.c[j] = forget * c_prev[j] + in_g * cand;
        out.h[j] = out_g * std::tanh(out.c[j]);
    }
    return out;
}

struct DecoderStepParams {
    Mat embed;      // vocab x emb
    LstmParams l1;  // emb -> d
    LstmParams l2;  // d -> d
    Mat attn_w;     // d_enc x d
    Mat out_w;      // (d + d_enc) x d
    Mat vocab_w;    // d x vocab
};

struct DecoderStepOut {
    Vec logits;
    Vec h1, c1, h2, c2;
    Vec attention;
};

inline DecoderStepOut decoder_step(int prev_token, const Vec& h1, const Vec& c1, const Vec& h2,
                                   const Vec& c2, const Mat& h_enc,
                                   const DecoderStepParams& p) {
    const Vec& x = p.embed[static_cast<std::size_t>(prev_token)];
    LstmOut l1 = lstm_step(x, h1, c1, p.l1);
    LstmOut l2 = lstm_step(l1.h, h2, c2, p.l2);
    AttnOut attn = attention(l2.h, h_enc, p.attn_w);
    std::size_t d = l2.h.size();
    std::size_t d_enc = attn.context.size();
    Vec concat(d + d_enc);
    for (std::size_t i = 0; i < d; ++i) concat[i] = l2.h[i];
    for (std::size_t i = 0; i < d_enc; ++i) concat[d + i] = attn.context[i];
    Vec combined(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < concat.size(); ++i) acc += concat[i] * p.out_w[i][j];
        combined[j] = std::tanh(acc);
    }
    DecoderStepOut out;
    out.logits.assign(p.vocab_w[0].size(), 0.0);
    for (std::size_t j = 0; j < out.logits.size(); ++j)
        for (std::size_t i = 0; i < d; ++i) out.logits[j] += combined[i] * p.vocab_w[i][j];
    out.h1 = l1.h;
    out.c1 = l1.c;
    out.h2 = l2.h;
    out.c2 = l2.c;
    out.attention = attn.weights;
    return out;
}

inline double cross_entropy(const Vec& logits, int target) {
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double z = 0.0;
    for (double v : logits) z += std::exp(v - mx);
    return std::log(z) + mx - logits[static_cast<std::size_t>(target)];
}

}  // namespace oracle
