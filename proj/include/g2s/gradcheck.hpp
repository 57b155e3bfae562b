// gradcheck.hpp - central finite differences against tape gradients.
//
// The harness is the oracle for every differentiable component: it re-runs a
// deterministic loss closure with perturbed parameters and compares the slope
// with what backward() produced. Always run in 64-bit.

#pragma once

#include <algorithm>
#include <cstring>
#include <map>
#include <set>
#include <string>
#include <utility>

#include "g2s/params.hpp"
#include "g2s/tape.hpp"

namespace g2s {

// Binds store tensors onto a tape as differentiable leaves, once per name.
template <typename T>
struct ParamVars {
    Tape<T>* tape;
    ParamStore<T>* store;
    std::map<std::string, Var> bound;

    Var operator()(const std::string& name) {
        auto it = bound.find(name);
        if (it != bound.end()) return it->second;
        Var v = tape->leaf(store->get(name), true);
        bound.emplace(name, v);
        return v;
    }
};

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::string worst_param;
    std::size_t worst_coord = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
    std::size_t coords_checked = 0;
};

// build(tape, vars) must rebuild the same scalar loss every call (fixed data,
// dropout off). Two initial evaluations must agree bitwise or the closure is
// rejected as nondeterministic.
template <typename BuildFn>
GradCheckReport finite_difference_check(ParamStore<double>& params, BuildFn&& build,
                                        double eps = 1e-5, std::size_t coords_per_param = 200,
                                        std::uint64_t seed = 917) {
    auto eval = [&]() -> double {
        Tape<double> tape;
        ParamVars<double> vars{&tape, &params, {}};
        Var loss = build(tape, vars);
        return tape.value(loss).data[0];
    };
    double f0 = eval();
    double f1 = eval();
    if (std::memcmp(&f0, &f1, sizeof(double)) != 0)
        throw Error("finite_difference_check: closure is nondeterministic (" +
                    std::to_string(f0) + " vs " + std::to_string(f1) + ")");

    // Analytic pass.
    Tape<double> tape;
    ParamVars<double> vars{&tape, &params, {}};
    Var loss = build(tape, vars);
    tape.backward(loss);
    std::map<std::string, Tensor<double>> analytic;
    for (const auto& [name, var] : vars.bound) analytic.emplace(name, tape.grad(var));

    GradCheckReport report;
    Rng rng(seed);
    for (const auto& name : params.order) {
        Tensor<double>& p = params.get(name);
        const Tensor<double>* grad = nullptr;
        auto it = analytic.find(name);
        if (it != analytic.end()) grad = &it->second;

        std::set<std::size_t> coords;
        if (p.size() <= coords_per_param) {
            for (std::size_t i = 0; i < p.size(); ++i) coords.insert(i);
        } else {
            while (coords.size() < coords_per_param)
                coords.insert(static_cast<std::size_t>(rng.below(p.size())));
        }
        for (std::size_t c : coords) {
            double saved = p.data[c];
            p.data[c] = saved + eps;
            double fp = eval();
            p.data[c] = saved - eps;
            double fm = eval();
            p.data[c] = saved;
            double numeric = (fp - fm) / (2.0 * eps);
            double an = grad ? grad->data[c] : 0.0;
            double rel = std::abs(numeric - an) /
                         std::max({1.0, std::abs(numeric), std::abs(an)});
            ++report.coords_checked;
            if (rel > report.max_rel_err) {
                report.max_rel_err = rel;
                report.worst_param = name;
                report.worst_coord = c;
                report.worst_analytic = an;
                report.worst_numeric = numeric;
            }
        }
    }
    return report;
}

}  // namespace g2s
