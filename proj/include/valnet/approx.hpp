#pragma once

#include <cstddef>
#include <limits>

#include "valnet/network.hpp"

namespace valnet {

constexpr std::size_t kUnlimitedBudget = std::numeric_limits<std::size_t>::max();

// Layer-merge selection. LongestPathOrder sorts a layer by decreasing longest
// root-to-node path length (label-1 arcs cost c_j, label-0 arcs cost 0, ties
// by lexicographically decreasing box) and repeatedly merges the adjacent pair
// with the smallest pair key, leftmost on ties. FirstPair always merges the
// two front nodes.
struct MergePolicy {
    enum class Strategy { LongestPathOrder, FirstPair };
    Strategy strategy = Strategy::LongestPathOrder;
    std::size_t budget = kUnlimitedBudget;  // max nodes per layer
    bool prune_infeasible = true;
};

// Budgeted approximate value network over hyperrectangle state aggregations.
// Terminal values are phibar(lo); boxes that provably contain no feasible
// state are dropped during construction. Terminals whose corner state is
// infeasible but whose box may hold feasible states fall back to a safe upper
// bound on the follower value. The output is not reduced.
ValueNetwork build_approx(const FollowerOracle& oracle, const MergePolicy& policy);

// Componentwise minimum value each state coordinate can need:
// V_i = min_y (b_i - (B y)_i).
std::vector<StateInt> feasibility_floor(const BilevelInstance& inst);

// True only when no state inside r admits a feasible follower subproblem
// (hi_i < V_i for some i).
bool prune_infeasible_rect(const BilevelInstance& inst, const Hyperrectangle& r);
bool prune_infeasible_rect(const std::vector<StateInt>& floor_v, const Hyperrectangle& r);

// Trivial upper bound on any finite follower value: sum of positive d entries.
double follower_value_upper_bound(const BilevelInstance& inst);

}  // namespace valnet
