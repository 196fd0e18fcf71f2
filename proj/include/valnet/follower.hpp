#pragma once

#include <optional>
#include <shared_mutex>
#include <unordered_map>
#include <vector>

#include "valnet/instance.hpp"
#include "valnet/milp.hpp"

namespace valnet {

// Follower value with optional optimal response. An absent argmin means the
// follower subproblem is infeasible and the value reads +infinity.
struct FollowerResult {
    bool feasible = false;
    double value = kInf;
    std::vector<int> argmin_y;
};

// Evaluates the follower value function phi(x) and its right-hand-side form
// phibar(s). Results are memoized by state; ties among optimal responses are
// broken toward the lexicographically smallest y.
class FollowerOracle {
public:
    explicit FollowerOracle(const BilevelInstance& inst) : inst_(inst) {}

    const BilevelInstance& instance() const { return inst_; }

    FollowerResult eval_phibar(const StateVector& s) const;
    FollowerResult eval_phi(const std::vector<int>& x) const;
    bool phi_identity_check(const std::vector<int>& x1, const std::vector<int>& x2) const;

    std::size_t cache_size() const;

private:
    FollowerResult solve_state(const StateVector& s) const;

    const BilevelInstance& inst_;
    mutable std::shared_mutex mutex_;
    mutable std::unordered_map<StateVector, FollowerResult, StateVectorHash> cache_;
};

double dot(const std::vector<double>& coeffs, const std::vector<int>& x);

}  // namespace valnet
