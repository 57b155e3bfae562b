// tape.hpp - reverse-mode automatic differentiation.
//
// A Tape records every forward operation together with its gradient rule.
// backward() replays the records once, in reverse topological order (which is
// simply creation order), accumulating gradients into every node that needs
// them. Repeated subexpressions sum their contributions.
//
// Ops are free functions taking the tape as the first argument. All shape
// errors name the operation and the offending shapes.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "g2s/error.hpp"
#include "g2s/rng.hpp"
#include "g2s/tensor.hpp"

namespace g2s {

struct Var {
    std::size_t i = static_cast<std::size_t>(-1);
    bool valid() const { return i != static_cast<std::size_t>(-1); }
};

template <typename T>
class Tape {
public:
    struct Node {
        Tensor<T> value;
        Tensor<T> grad;                // allocated lazily in backward()
        bool needs_grad = false;
        std::function<void(Tape&, std::size_t)> backward;  // null for leaves/constants
    };

    Var leaf(Tensor<T> value, bool requires_grad = false) {
        return push(std::move(value), requires_grad, nullptr);
    }

    Var constant(Tensor<T> value) { return leaf(std::move(value), false); }

    const Tensor<T>& value(Var v) const { return nodes_[v.i].value; }
    Tensor<T>& value(Var v) { return nodes_[v.i].value; }

    // Valid after backward() for nodes on a gradient path.
    const Tensor<T>& grad(Var v) const {
        if (!nodes_[v.i].needs_grad)
            throw Error("grad: node is not on any gradient path");
        return nodes_[v.i].grad;
    }

    bool needs_grad(Var v) const { return nodes_[v.i].needs_grad; }
    std::size_t size() const { return nodes_.size(); }

    void backward(Var loss) {
        Node& top = nodes_[loss.i];
        if (!top.value.is_scalar())
            throw DimensionError("backward: loss must be scalar, got " + top.value.shape_str());
        for (std::size_t i = 0; i <= loss.i; ++i)
            if (nodes_[i].needs_grad && nodes_[i].grad.data.empty())
                nodes_[i].grad = Tensor<T>::zeros(nodes_[i].value.shape);
        if (!top.needs_grad) return;
        top.grad.data[0] = T{1};
        for (std::size_t i = loss.i + 1; i-- > 0;) {
            Node& n = nodes_[i];
            if (n.needs_grad && n.backward) n.backward(*this, i);
        }
    }

    // Test hook: gradient rules whose op name matches get a deliberately wrong
    // scale so the finite-difference harness can prove it catches bad rules.
    void inject_bug(std::string op_name) { bug_ = std::move(op_name); }
    T bug_scale(const char* op) const {
        return (!bug_.empty() && bug_ == op) ? T(1.1) : T(1);
    }

    // When set, every forward op asserts its output is finite.
    bool check_finite = false;

    Var push(Tensor<T> value, bool needs_grad, std::function<void(Tape&, std::size_t)> bw) {
        if (check_finite && !value.all_finite())
            throw Error("non-finite value produced on tape");
        Node n;
        n.value = std::move(value);
        n.needs_grad = needs_grad;
        n.backward = std::move(bw);
        nodes_.push_back(std::move(n));
        return Var{nodes_.size() - 1};
    }

    Tensor<T>& grad_ref(std::size_t i) { return nodes_[i].grad; }
    const Tensor<T>& value_ref(std::size_t i) const { return nodes_[i].value; }
    bool node_needs_grad(std::size_t i) const { return nodes_[i].needs_grad; }

private:
    std::vector<Node> nodes_;
    std::string bug_;
};

namespace detail {

template <typename T>
bool any_needs(const Tape<T>& t, std::initializer_list<Var> vs) {
    for (Var v : vs)
        if (t.needs_grad(v)) return true;
    return false;
}

}  // namespace detail

// ---------------------------------------------------------------- arithmetic

template <typename T>
Var add(Tape<T>& t, Var a, Var b) {
    const auto& av = t.value(a);
    const auto& bv = t.value(b);
    if (!av.same_shape(bv))
        throw DimensionError("add: " + av.shape_str() + " vs " + bv.shape_str());
    Tensor<T> out = av;
    out.add_inplace(bv);
    bool ng = detail::any_needs(t, {a, b});
    return t.push(std::move(out), ng, [a, b](Tape<T>& tp, std::size_t self) {
        const auto& g = tp.grad_ref(self);
        if (tp.node_needs_grad(a.i)) tp.grad_ref(a.i).add_inplace(g);
        if (tp.node_needs_grad(b.i)) tp.grad_ref(b.i).add_inplace(g);
    });
}

// Broadcast-add a length-n bias row to every row of a (m x n).
template <typename T>
Var add_row(Tape<T>& t, Var a, Var bias) {
    const auto& av = t.value(a);
    const auto& bv = t.value(bias);
    if (bv.size() != av.cols())
        throw DimensionError("add_row: " + av.shape_str() + " bias " + bv.shape_str());
    Tensor<T> out = av;
    std::size_t m = av.rows(), n = av.cols();
    for (std::size_t i = 0; i < m; ++i) {
        T* r = out.row_ptr(i);
        for (std::size_t j = 0; j < n; ++j) r[j] += bv.data[j];
    }
    bool ng = detail::any_needs(t, {a, bias});
    return t.push(std::move(out), ng, [a, bias, m, n](Tape<T>& tp, std::size_t self) {
        const auto& g = tp.grad_ref(self);
        if (tp.node_needs_grad(a.i)) tp.grad_ref(a.i).add_inplace(g);
        if (tp.node_needs_grad(bias.i)) {
            auto& bg = tp.grad_ref(bias.i);
            for (std::size_t i = 0; i < m; ++i) {
                const T* r = g.data.data() + i * n;
                for (std::size_t j = 0; j < n; ++j) bg.data[j] += r[j];
            }
        }
    });
}

template <typename T>
Var mul(Tape<T>& t, Var a, Var b) {
    const auto& av = t.value(a);
    const auto& bv = t.value(b);
    if (!av.same_shape(bv))
        throw DimensionError("mul: " + av.shape_str() + " vs " + bv.shape_str());
    Tensor<T> out = av;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= bv.data[i];
    bool ng = detail::any_needs(t, {a, b});
    return t.push(std::move(out), ng, [a, b](Tape<T>& tp, std::size_t self) {
        const auto& g = tp.grad_ref(self);
        if (tp.node_needs_grad(a.i)) {
            auto& ag = tp.grad_ref(a.i);
            const auto& bv2 = tp.value_ref(b.i);
            for (std::size_t i = 0; i < g.size(); ++i) ag.data[i] += g.data[i] * bv2.data[i];
        }
        if (tp.node_needs_grad(b.i)) {
            auto& bg = tp.grad_ref(b.i);
            const auto& av2 = tp.value_ref(a.i);
            for (std::size_t i = 0; i < g.size(); ++i) bg.data[i] += g.data[i] * av2.data[i];
        }
    });
}

// alpha * x + beta, elementwise with scalar constants.
template <typename T>
Var affine_const(Tape<T>& t, Var x, T alpha, T beta) {
    Tensor<T> out = t.value(x);
    for (auto& v : out.data) v = alpha * v + beta;
    return t.push(std::move(out), t.needs_grad(x), [x, alpha](Tape<T>& tp, std::size_t self) {
        if (!tp.node_needs_grad(x.i)) return;
        const auto& g = tp.grad_ref(self);
        auto& xg = tp.grad_ref(x.i);
        for (std::size_t i = 0; i < g.size(); ++i) xg.data[i] += alpha * g.data[i];
    });
}

template <typename T>
Var scale(Tape<T>& t, Var x, T alpha) {
    return affine_const(t, x, alpha, T{0});
}

template <typename T>
Var one_minus(Tape<T>& t, Var x) {
    return affine_const(t, x, T{-1}, T{1});
}

// Scale row i of x by the constant factors[i] (not differentiated w.r.t. factors).
template <typename T>
Var row_scale(Tape<T>& t, Var x, std::vector<T> factors) {
    const auto& xv = t.value(x);
    if (factors.size() != xv.rows())
        throw DimensionError("row_scale: " + xv.shape_str() + " factors " +
                             std::to_string(factors.size()));
    auto f = std::make_shared<const std::vector<T>>(std::move(factors));
    Tensor<T> out = xv;
    std::size_t n = xv.cols();
    for (std::size_t i = 0; i < xv.rows(); ++i) {
        T* r = out.row_ptr(i);
        for (std::size_t j = 0; j < n; ++j) r[j] *= (*f)[i];
    }
    return t.push(std::move(out), t.needs_grad(x), [x, f, n](Tape<T>& tp, std::size_t self) {
        if (!tp.node_needs_grad(x.i)) return;
        const auto& g = tp.grad_ref(self);
        auto& xg = tp.grad_ref(x.i);
        for (std::size_t i = 0; i < f->size(); ++i) {
            const T* gr = g.data.data() + i * n;
            T* xr = xg.data.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) xr[j] += (*f)[i] * gr[j];
        }
    });
}

template <typename T>
Var reduce_sum(Tape<T>& t, Var x) {
    const auto& xv = t.value(x);
    T s{0};
    for (T v : xv.data) s += v;
    return t.push(Tensor<T>::scalar(s), t.needs_grad(x), [x](Tape<T>& tp, std::size_t self) {
        if (!tp.node_needs_grad(x.i)) return;
        T g = tp.grad_ref(self).data[0];
        auto& xg = tp.grad_ref(x.i);
        for (auto& v : xg.data) v += g;
    });
}

// ------------------------------------------------------------------- matmul

// out = op_a(A) * op_b(B) where op is optional transposition. Transposes are
// materialized; the only hot kernel is gemm_nn_acc.
template <typename T>
Var matmul(Tape<T>& t, Var a, Var b, bool trans_a = false, bool trans_b = false) {
    const auto& av = t.value(a);
    const auto& bv = t.value(b);
    std::size_t am = trans_a ? av.cols() : av.rows();
    std::size_t ak = trans_a ? av.rows() : av.cols();
    std::size_t bk = trans_b ? bv.cols() : bv.rows();
    std::size_t bn = trans_b ? bv.rows() : bv.cols();
    if (ak != bk)
        throw DimensionError("matmul: lhs " + av.shape_str() + (trans_a ? "^T" : "") + " rhs " +
                             bv.shape_str() + (trans_b ? "^T" : ""));
    Tensor<T> lhs = trans_a ? transposed(av) : av;
    Tensor<T> rhs = trans_b ? transposed(bv) : bv;
    Tensor<T> out = Tensor<T>::zeros({am, bn});
    gemm_nn_acc(lhs.data.data(), rhs.data.data(), out.data.data(), am, ak, bn);
    bool ng = detail::any_needs(t, {a, b});
    return t.push(std::move(out), ng,
                  [a, b, trans_a, trans_b](Tape<T>& tp, std::size_t self) {
        const auto& g = tp.grad_ref(self);
        T bug = tp.bug_scale("matmul");
        if (tp.node_needs_grad(a.i)) {
            // dA = dC * B^T (or B * dC^T when A was transposed)
            const auto& bv2 = tp.value_ref(b.i);
            Tensor<T> rhs = trans_b ? bv2 : transposed(bv2);
            Tensor<T> da = Tensor<T>::zeros({g.rows(), rhs.cols()});
            gemm_nn_acc(g.data.data(), rhs.data.data(), da.data.data(), g.rows(), g.cols(),
                        rhs.cols());
            auto& ag = tp.grad_ref(a.i);
            if (trans_a) da = transposed(da);
            for (std::size_t i = 0; i < ag.size(); ++i) ag.data[i] += bug * da.data[i];
        }
        if (tp.node_needs_grad(b.i)) {
            // dB = A^T * dC
            const auto& av2 = tp.value_ref(a.i);
            Tensor<T> lhs = trans_a ? av2 : transposed(av2);
            Tensor<T> db = Tensor<T>::zeros({lhs.rows(), g.cols()});
            gemm_nn_acc(lhs.data.data(), g.data.data(), db.data.data(), lhs.rows(), lhs.cols(),
                        g.cols());
            auto& bg = tp.grad_ref(b.i);
            if (trans_b) db = transposed(db);
            for (std::size_t i = 0; i < bg.size(); ++i) bg.data[i] += bug * db.data[i];
        }
    });
}

// x * W + bias row, fused into one record; the form every layer uses.
template <typename T>
Var affine(Tape<T>& t, Var x, Var w, Var bias) {
    const auto& xv = t.value(x);
    const auto& wv = t.value(w);
    const auto& bv = t.value(bias);
    if (xv.cols() != wv.rows() || bv.size() != wv.cols())
        throw DimensionError("affine: x " + xv.shape_str() + " W " + wv.shape_str() + " b " +
                             bv.shape_str());
    std::size_t m = xv.rows(), k = xv.cols(), n = wv.cols();
    Tensor<T> out = Tensor<T>::zeros({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        T* r = out.row_ptr(i);
        for (std::size_t j = 0; j < n; ++j) r[j] = bv.data[j];
    }
    gemm_nn_acc(xv.data.data(), wv.data.data(), out.data.data(), m, k, n);
    bool ng = detail::any_needs(t, {x, w, bias});
    return t.push(std::move(out), ng, [x, w, bias, m, k, n](Tape<T>& tp, std::size_t self) {
        const auto& g = tp.grad_ref(self);
        if (tp.node_needs_grad(x.i)) {
            Tensor<T> wt = transposed(tp.value_ref(w.i));
            auto& xg = tp.grad_ref(x.i);
            gemm_nn_acc(g.data.data(), wt.data.data(), xg.data.data(), m, n, k);
        }
        if (tp.node_needs_grad(w.i)) {
            Tensor<T> xt = transposed(tp.value_ref(x.i));
            auto& wg = tp.grad_ref(w.i);
            gemm_nn_acc(xt.data.data(), g.data.data(), wg.data.data(), k, m, n);
        }
        if (tp.node_needs_grad(bias.i)) {
            auto& bg = tp.grad_ref(bias.i);
            for (std::size_t i = 0; i < m; ++i) {
                const T* gr = g.data.data() + i * n;
                for (std::size_t j = 0; j < n; ++j) bg.data[j] += gr[j];
            }
        }
    });
}

// ------------------------------------------------------------- nonlinearities

template <typename T>
Var sigmoid(Tape<T>& t, Var x) {
    Tensor<T> out = t.value(x);
    for (auto& v : out.data) {
        double e = 1.0 / (1.0 + std::exp(-static_cast<double>(v)));
        v = static_cast<T>(e);
    }
    return t.push(std::move(out), t.needs_grad(x), [x](Tape<T>& tp, std::size_t self) {
        if (!tp.node_needs_grad(x.i)) return;
        const auto& g = tp.grad_ref(self);
        const auto& y = tp.value_ref(self);
        T bug = tp.bug_scale("sigmoid");
        auto& xg = tp.grad_ref(x.i);
        for (std::size_t i = 0; i < g.size(); ++i)
            xg.data[i] += bug * g.data[i] * y.data[i] * (T{1} - y.data[i]);
    });
}

template <typename T>
Var tanh_op(Tape<T>& t, Var x) {
    Tensor<T> out = t.value(x);
    for (auto& v : out.data) v = static_cast<T>(std::tanh(static_cast<double>(v)));
    return t.push(std::move(out), t.needs_grad(x), [x](Tape<T>& tp, std::size_t self) {
        if (!tp.node_needs_grad(x.i)) return;
        const auto& g = tp.grad_ref(self);
        const auto& y = tp.value_ref(self);
        T bug = tp.bug_scale("tanh");
        auto& xg = tp.grad_ref(x.i);
        for (std::size_t i = 0; i < g.size(); ++i)
            xg.data[i] += bug * g.data[i] * (T{1} - y.data[i] * y.data[i]);
    });
}

// --------------------------------------------------------------- structure

template <typename T>
Var concat_cols(Tape<T>& t, Var a, Var b) {
    const auto& av = t.value(a);
    const auto& bv = t.value(b);
    if (av.rows() != bv.rows())
        throw DimensionError("concat: " + av.shape_str() + " vs " + bv.shape_str());
    std::size_t m = av.rows(), na = av.cols(), nb = bv.cols();
    Tensor<T> out = Tensor<T>::zeros({m, na + nb});
    for (std::size_t i = 0; i < m; ++i) {
        T* r = out.row_ptr(i);
        const T* ra = av.row_ptr(i);
        const T* rb = bv.row_ptr(i);
        for (std::size_t j = 0; j < na; ++j) r[j] = ra[j];
        for (std::size_t j = 0; j < nb; ++j) r[na + j] = rb[j];
    }
    bool ng = detail::any_needs(t, {a, b});
    return t.push(std::move(out), ng, [a, b, m, na, nb](Tape<T>& tp, std::size_t self) {
        const auto& g = tp.grad_ref(self);
        if (tp.node_needs_grad(a.i)) {
            auto& ag = tp.grad_ref(a.i);
            for (std::size_t i = 0; i < m; ++i) {
                const T* gr = g.data.data() + i * (na + nb);
                T* ar = ag.data.data() + i * na;
                for (std::size_t j = 0; j < na; ++j) ar[j] += gr[j];
            }
        }
        if (tp.node_needs_grad(b.i)) {
            auto& bg = tp.grad_ref(b.i);
            for (std::size_t i = 0; i < m; ++i) {
                const T* gr = g.data.data() + i * (na + nb) + na;
                T* br = bg.data.data() + i * nb;
                for (std::size_t j = 0; j < nb; ++j) br[j] += gr[j];
            }
        }
    });
}

// Columns [c0, c1) of x.
template <typename T>
Var slice_cols(Tape<T>& t, Var x, std::size_t c0, std::size_t c1) {
    const auto& xv = t.value(x);
    if (c1 > xv.cols() || c0 >= c1)
        throw DimensionError("slice_cols: [" + std::to_string(c0) + "," + std::to_string(c1) +
                             ") of " + xv.shape_str());
    std::size_t m = xv.rows(), n = xv.cols(), w = c1 - c0;
    Tensor<T> out = Tensor<T>::zeros({m, w});
    for (std::size_t i = 0; i < m; ++i) {
        const T* r = xv.row_ptr(i) + c0;
        T* o = out.row_ptr(i);
        for (std::size_t j = 0; j < w; ++j) o[j] = r[j];
    }
    return t.push(std::move(out), t.needs_grad(x), [x, c0, m, n, w](Tape<T>& tp, std::size_t self) {
        if (!tp.node_needs_grad(x.i)) return;
        const auto& g = tp.grad_ref(self);
        auto& xg = tp.grad_ref(x.i);
        for (std::size_t i = 0; i < m; ++i) {
            const T* gr = g.data.data() + i * w;
            T* xr = xg.data.data() + i * n + c0;
            for (std::size_t j = 0; j < w; ++j) xr[j] += gr[j];
        }
    });
}

// Row lookup: out[i] = table[ids[i]]. This is the embedding primitive; the
// gradient scatter-adds, so repeated ids accumulate.
template <typename T>
Var embedding_lookup(Tape<T>& t, Var table, std::vector<int> ids) {
    const auto& tv = t.value(table);
    std::size_t n = tv.cols();
    for (int id : ids)
        if (id < 0 || static_cast<std::size_t>(id) >= tv.rows())
            throw ValidationError("embedding_lookup: id " + std::to_string(id) +
                                  " out of range for table " + tv.shape_str());
    auto ids_p = std::make_shared<const std::vector<int>>(std::move(ids));
    Tensor<T> out = Tensor<T>::zeros({ids_p->size(), n});
    for (std::size_t i = 0; i < ids_p->size(); ++i) {
        const T* src = tv.row_ptr(static_cast<std::size_t>((*ids_p)[i]));
        T* dst = out.row_ptr(i);
        for (std::size_t j = 0; j < n; ++j) dst[j] = src[j];
    }
    return t.push(std::move(out), t.needs_grad(table),
                  [table, ids_p, n](Tape<T>& tp, std::size_t self) {
        if (!tp.node_needs_grad(table.i)) return;
        const auto& g = tp.grad_ref(self);
        auto& tg = tp.grad_ref(table.i);
        for (std::size_t i = 0; i < ids_p->size(); ++i) {
            const T* gr = g.data.data() + i * n;
            T* dst = tg.data.data() + static_cast<std::size_t>((*ids_p)[i]) * n;
            for (std::size_t j = 0; j < n; ++j) dst[j] += gr[j];
        }
    });
}

// Message aggregation: out[dst[e]] += x[src[e]] for every edge e.
// The forward loop order is the edge order, which is deterministic.
template <typename T>
Var edge_accumulate(Tape<T>& t, Var x, std::vector<int> srcs, std::vector<int> dsts,
                    std::size_t n_out) {
    const auto& xv = t.value(x);
    if (srcs.size() != dsts.size())
        throw DimensionError("edge_accumulate: " + std::to_string(srcs.size()) + " srcs vs " +
                             std::to_string(dsts.size()) + " dsts");
    std::size_t n = xv.cols();
    auto sp = std::make_shared<const std::vector<int>>(std::move(srcs));
    auto dp = std::make_shared<const std::vector<int>>(std::move(dsts));
    Tensor<T> out = Tensor<T>::zeros({n_out, n});
    for (std::size_t e = 0; e < sp->size(); ++e) {
        const T* src = xv.row_ptr(static_cast<std::size_t>((*sp)[e]));
        T* dst = out.row_ptr(static_cast<std::size_t>((*dp)[e]));
        for (std::size_t j = 0; j < n; ++j) dst[j] += src[j];
    }
    return t.push(std::move(out), t.needs_grad(x), [x, sp, dp, n](Tape<T>& tp, std::size_t self) {
        if (!tp.node_needs_grad(x.i)) return;
        const auto& g = tp.grad_ref(self);
        auto& xg = tp.grad_ref(x.i);
        for (std::size_t e = 0; e < sp->size(); ++e) {
            const T* gr = g.data.data() + static_cast<std::size_t>((*dp)[e]) * n;
            T* dst = xg.data.data() + static_cast<std::size_t>((*sp)[e]) * n;
            for (std::size_t j = 0; j < n; ++j) dst[j] += gr[j];
        }
    });
}

// Softmax over each row, restricted to positions where mask != 0. Masked
// positions are exactly zero in the output. A fully masked row is an error.
template <typename T>
Var masked_softmax(Tape<T>& t, Var x, std::shared_ptr<const std::vector<std::uint8_t>> mask) {
    const auto& xv = t.value(x);
    if (mask->size() != xv.size())
        throw DimensionError("masked_softmax: mask size " + std::to_string(mask->size()) +
                             " vs " + xv.shape_str());
    std::size_t m = xv.rows(), n = xv.cols();
    Tensor<T> out = Tensor<T>::zeros({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        const T* r = xv.row_ptr(i);
        const std::uint8_t* mk = mask->data() + i * n;
        T* o = out.row_ptr(i);
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j)
            if (mk[j] && static_cast<double>(r[j]) > mx) mx = static_cast<double>(r[j]);
        if (mx == -std::numeric_limits<double>::infinity())
            throw ValidationError("masked_softmax: fully masked row " + std::to_string(i));
        double z = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (mk[j]) z += std::exp(static_cast<double>(r[j]) - mx);
        for (std::size_t j = 0; j < n; ++j)
            o[j] = mk[j] ? static_cast<T>(std::exp(static_cast<double>(r[j]) - mx) / z) : T{0};
    }
    return t.push(std::move(out), t.needs_grad(x), [x, mask, m, n](Tape<T>& tp, std::size_t self) {
        if (!tp.node_needs_grad(x.i)) return;
        const auto& g = tp.grad_ref(self);
        const auto& y = tp.value_ref(self);
        auto& xg = tp.grad_ref(x.i);
        T bug = tp.bug_scale("masked_softmax");
        for (std::size_t i = 0; i < m; ++i) {
            const T* gr = g.data.data() + i * n;
            const T* yr = y.data.data() + i * n;
            const std::uint8_t* mk = mask->data() + i * n;
            T dot{0};
            for (std::size_t j = 0; j < n; ++j)
                if (mk[j]) dot += gr[j] * yr[j];
            T* xr = xg.data.data() + i * n;
            for (std::size_t j = 0; j < n; ++j)
                if (mk[j]) xr[j] += bug * yr[j] * (gr[j] - dot);
        }
    });
}

// Sum over unmasked rows of -log softmax(logits)[target]. Pair with a 1/count
// scale for the mean the loss uses.
template <typename T>
Var softmax_xent_sum(Tape<T>& t, Var logits, std::vector<int> targets,
                     std::vector<std::uint8_t> row_mask) {
    const auto& lv = t.value(logits);
    std::size_t m = lv.rows(), n = lv.cols();
    if (targets.size() != m || row_mask.size() != m)
        throw DimensionError("cross_entropy: " + std::to_string(targets.size()) +
                             " targets for logits " + lv.shape_str());
    auto tg = std::make_shared<const std::vector<int>>(std::move(targets));
    auto mk = std::make_shared<const std::vector<std::uint8_t>>(std::move(row_mask));
    // Keep softmax rows for the backward pass.
    auto probs = std::make_shared<Tensor<T>>(Tensor<T>::zeros({m, n}));
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        if (!(*mk)[i]) continue;
        int tgt = (*tg)[i];
        if (tgt < 0 || static_cast<std::size_t>(tgt) >= n)
            throw ValidationError("cross_entropy: target " + std::to_string(tgt) +
                                  " out of range for " + std::to_string(n) + " classes");
        const T* r = lv.row_ptr(i);
        double mx = static_cast<double>(r[0]);
        for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, static_cast<double>(r[j]));
        double z = 0.0;
        for (std::size_t j = 0; j < n; ++j) z += std::exp(static_cast<double>(r[j]) - mx);
        T* pr = probs->row_ptr(i);
        for (std::size_t j = 0; j < n; ++j)
            pr[j] = static_cast<T>(std::exp(static_cast<double>(r[j]) - mx) / z);
        total += std::log(z) + mx - static_cast<double>(r[tgt]);
    }
    return t.push(Tensor<T>::scalar(static_cast<T>(total)), t.needs_grad(logits),
                  [logits, tg, mk, probs, m, n](Tape<T>& tp, std::size_t self) {
        if (!tp.node_needs_grad(logits.i)) return;
        T g = tp.grad_ref(self).data[0] * tp.bug_scale("cross_entropy");
        auto& lg = tp.grad_ref(logits.i);
        for (std::size_t i = 0; i < m; ++i) {
            if (!(*mk)[i]) continue;
            const T* pr = probs->row_ptr(i);
            T* gr = lg.data.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) gr[j] += g * pr[j];
            gr[static_cast<std::size_t>((*tg)[i])] -= g;
        }
    });
}

// Mean cross-entropy over unmasked rows.
template <typename T>
Var cross_entropy(Tape<T>& t, Var logits, const std::vector<int>& targets,
                  const std::vector<std::uint8_t>& row_mask) {
    std::size_t count = 0;
    for (auto m : row_mask) count += m ? 1 : 0;
    if (count == 0) throw ValidationError("cross_entropy: no unmasked rows");
    Var s = softmax_xent_sum(t, logits, targets, row_mask);
    return scale(t, s, static_cast<T>(1.0 / static_cast<double>(count)));
}

// Inverted dropout: retained units scale by 1/(1-p); evaluation mode is the
// identity. The mask is drawn from the supplied stream, so a fixed seed
// reproduces the same mask.
template <typename T>
Var dropout(Tape<T>& t, Var x, double p, bool training, Rng& rng) {
    if (!training || p <= 0.0) return x;
    if (p >= 1.0) throw ValidationError("dropout: rate must be < 1");
    const auto& xv = t.value(x);
    auto mask = std::make_shared<std::vector<T>>(xv.size());
    T keep_scale = static_cast<T>(1.0 / (1.0 - p));
    for (std::size_t i = 0; i < xv.size(); ++i)
        (*mask)[i] = (rng.uniform() >= p) ? keep_scale : T{0};
    Tensor<T> out = xv;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= (*mask)[i];
    return t.push(std::move(out), t.needs_grad(x), [x, mask](Tape<T>& tp, std::size_t self) {
        if (!tp.node_needs_grad(x.i)) return;
        const auto& g = tp.grad_ref(self);
        auto& xg = tp.grad_ref(x.i);
        for (std::size_t i = 0; i < g.size(); ++i) xg.data[i] += g.data[i] * (*mask)[i];
    });
}

}  // namespace g2s
