// params.hpp - named parameter collection with optimizer state.
//
// Iteration order is the registration order, never a hash order, so updates,
// gradient clipping and checkpoints are reproducible.

#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "g2s/error.hpp"
#include "g2s/rng.hpp"
#include "g2s/tensor.hpp"

namespace g2s {

// Uniform Xavier/Glorot init on +-sqrt(6/(fan_in+fan_out)) for matrices;
// vectors (biases, including LSTM forget biases) are zero.
template <typename T>
Tensor<T> xavier_init(const std::vector<std::size_t>& shape, Rng& rng) {
    if (shape.empty() || shape.size() > 2)
        throw DimensionError("xavier_init: need a 1-d or 2-d shape, got " +
                             Tensor<T>::shape_str(shape));
    Tensor<T> out = Tensor<T>::zeros(shape);
    if (shape.size() == 1) return out;
    double bound = std::sqrt(6.0 / static_cast<double>(shape[0] + shape[1]));
    for (auto& v : out.data) v = static_cast<T>(rng.uniform(-bound, bound));
    return out;
}

template <typename T>
struct ParamStore {
    std::vector<std::string> order;
    std::unordered_map<std::string, Tensor<T>> values;

    bool has(const std::string& name) const { return values.count(name) != 0; }

    Tensor<T>& add(const std::string& name, Tensor<T> value) {
        if (has(name)) throw ValidationError("ParamStore: duplicate parameter " + name);
        order.push_back(name);
        return values.emplace(name, std::move(value)).first->second;
    }

    Tensor<T>& get(const std::string& name) {
        auto it = values.find(name);
        if (it == values.end()) throw ValidationError("ParamStore: unknown parameter " + name);
        return it->second;
    }
    const Tensor<T>& get(const std::string& name) const {
        auto it = values.find(name);
        if (it == values.end()) throw ValidationError("ParamStore: unknown parameter " + name);
        return it->second;
    }

    std::size_t total_size() const {
        std::size_t n = 0;
        for (const auto& name : order) n += values.at(name).size();
        return n;
    }

    template <typename U>
    ParamStore<U> cast() const {
        ParamStore<U> out;
        for (const auto& name : order) out.add(name, values.at(name).template cast<U>());
        return out;
    }
};

// Named gradients, aligned with a ParamStore by name.
template <typename T>
using GradMap = std::unordered_map<std::string, Tensor<T>>;

// If the global L2 norm of all gradients exceeds threshold, scale every
// gradient by threshold/norm. Norm accumulates in double, in order.
template <typename T>
double clip_global_norm(const std::vector<std::string>& order, GradMap<T>& grads,
                        double threshold) {
    double sq = 0.0;
    for (const auto& name : order) {
        auto it = grads.find(name);
        if (it == grads.end()) continue;
        for (T v : it->second.data) sq += static_cast<double>(v) * static_cast<double>(v);
    }
    double norm = std::sqrt(sq);
    if (norm > threshold && norm > 0.0) {
        T s = static_cast<T>(threshold / norm);
        for (const auto& name : order) {
            auto it = grads.find(name);
            if (it == grads.end()) continue;
            for (T& v : it->second.data) v *= s;
        }
    }
    return norm;
}

// Adam with bias correction. Moments live here, keyed like the parameters.
template <typename T>
struct AdamState {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t step = 0;
    std::unordered_map<std::string, Tensor<T>> m;
    std::unordered_map<std::string, Tensor<T>> v;
};

template <typename T>
void adam_step(ParamStore<T>& params, const GradMap<T>& grads, AdamState<T>& state) {
    state.step += 1;
    double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (const auto& name : params.order) {
        auto git = grads.find(name);
        if (git == grads.end())
            throw ValidationError("adam_step: missing gradient for " + name);
        Tensor<T>& p = params.get(name);
        const Tensor<T>& g = git->second;
        if (!p.same_shape(g))
            throw DimensionError("adam_step: " + name + " param " + p.shape_str() + " grad " +
                                 g.shape_str());
        auto& m = state.m.try_emplace(name, Tensor<T>::zeros(p.shape)).first->second;
        auto& v = state.v.try_emplace(name, Tensor<T>::zeros(p.shape)).first->second;
        for (std::size_t i = 0; i < p.size(); ++i) {
            double gi = static_cast<double>(g.data[i]);
            double mi = state.beta1 * static_cast<double>(m.data[i]) + (1.0 - state.beta1) * gi;
            double vi = state.beta2 * static_cast<double>(v.data[i]) + (1.0 - state.beta2) * gi * gi;
            m.data[i] = static_cast<T>(mi);
            v.data[i] = static_cast<T>(vi);
            double update = state.lr * (mi / bc1) / (std::sqrt(vi / bc2) + state.eps);
            p.data[i] = static_cast<T>(static_cast<double>(p.data[i]) - update);
        }
    }
}

}  // namespace g2s
