#pragma once

#include <optional>
#include <unordered_map>
#include <vector>

#include "valnet/instance.hpp"

namespace valnet {

struct OracleResult {
    bool feasible = false;
    double value = 0.0;
    std::vector<int> x;
    std::vector<int> y;
    // Optional dump: phi value per leader decision (bitmask order).
    std::vector<double> phi_table;
};

// Exhaustive bilevel solve under the optimistic convention: for every x the
// follower value is found by full y enumeration, then the leader objective is
// minimized over bilevel-feasible pairs. Independent of the MILP engine.
// Throws std::runtime_error when 2^(n_l+n_f) exceeds the cap.
OracleResult brute_force_bilevel(const BilevelInstance& inst, std::uint64_t cap = (1ULL << 26),
                                 bool dump_phi = false);

}  // namespace valnet
