#pragma once

#include <cstdint>

#include "valnet/instance.hpp"

namespace valnet {

// SplitMix64: the documented stream generator behind instance generation.
// next(state) = mix(state += 0x9E3779B97F4A7C15); bounded draws use the
// remainder of next() so streams are portable across implementations.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    // Uniform integer in [lo, hi].
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(next() % static_cast<std::uint64_t>(hi - lo + 1));
    }
    // Uniform real in [0, 1).
    double uniform01() { return static_cast<double>(next() >> 11) * (1.0 / 9007199254740992.0); }

private:
    std::uint64_t state_;
};

struct GeneratorConfig {
    int n_leader = 25;
    int n_follower = -1;  // -1: defaults to n_leader
    int m = 1;
    int alpha = 1;        // coefficient diversity, entries 5 * U(0, alpha)
    double beta = 0.1;    // constraint tightness
    std::uint64_t seed = 0;
    int m_leader = -1;    // -1: defaults to m
};

// Structured random instance: B, Gy ~ U(0,100); A, Gx zero with probability
// 0.8 else 5*U(0,alpha); b = floor(beta * (row sums of A and B)), h likewise;
// c, p ~ U(-100,-1); d ~ U(-50,50). Deterministic per (config, seed).
BilevelInstance generate_structured(const GeneratorConfig& cfg);

// Per-layer node budget schedule by leader dimension.
std::size_t budget_schedule(int n_leader);

}  // namespace valnet
