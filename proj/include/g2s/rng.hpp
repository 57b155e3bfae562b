// rng.hpp - deterministic pseudo-random numbers.
//
// We roll our own splitmix64-based generator instead of <random> distributions:
// the standard distributions are implementation-defined, and golden files plus
// byte-identical checkpoints require the same stream everywhere.

#pragma once

#include <cstdint>
#include <vector>

namespace g2s {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

    // Derive an independent stream for a named purpose (shuffle epoch k, dropout, ...).
    // Hashing the tag keeps streams stable when new consumers are added.
    Rng fork(std::uint64_t tag) const {
        std::uint64_t s = state_ ^ (0x9e3779b97f4a7c15ULL * (tag + 1));
        splitmix64(s);
        return Rng(splitmix64(s));
    }

    std::uint64_t next_u64() { return splitmix64(state_); }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    // Fisher-Yates, identical order on every platform.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    std::uint64_t state() const { return state_; }
    void set_state(std::uint64_t s) { state_ = s; }

private:
    std::uint64_t state_;
};

}  // namespace g2s
