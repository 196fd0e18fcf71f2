#pragma once

#include <optional>
#include <string>
#include <vector>

#include "valnet/approx.hpp"
#include "valnet/follower.hpp"
#include "valnet/milp.hpp"
#include "valnet/network.hpp"
#include "valnet/strengthen.hpp"

namespace valnet {

enum class RelaxationVariant { HPR, DD, DDMaxMin };

struct SolverPolicy {
    std::size_t budget = kUnlimitedBudget;  // per-layer node budget; unlimited = exact network
    MergePolicy::Strategy merge_strategy = MergePolicy::Strategy::LongestPathOrder;
    bool strengthen = false;  // strengthen terminal values in solve_exact
    int max_strengthen_iterations = 5;
    StrengthenMode strengthen_mode = StrengthenMode::HyperrectangleRelax;
    int iteration_cap = 500;  // cutting-plane iterations
    double time_cap_seconds = kInf;
    SolveLimits milp_limits;
    std::optional<double> known_optimum;  // for gap reporting
};

struct PhaseTimings {
    double build = 0.0;
    double reduce = 0.0;
    double strengthen = 0.0;
    double separation = 0.0;
    double milp = 0.0;
};

struct NetworkStats {
    std::vector<int> widths;
    int nodes_before_reduce = 0;
    int nodes_after_reduce = 0;
    int terminals = 0;
    double reduction_ratio = 1.0;
};

struct SolveReport {
    SolveStatus status = SolveStatus::NumericalFailure;
    std::vector<int> x;
    std::vector<int> y;
    double objective = kInf;     // incumbent value (bilevel feasible)
    double lower_bound = -kInf;  // relaxation value
    double phi_at_incumbent = kInf;
    std::optional<double> gap;  // vs known optimum when given, else vs incumbent
    bool gap_vs_incumbent = false;
    int iterations = 0;
    PhaseTimings timings;
    NetworkStats network;
    std::vector<std::string> log;  // one tab-separated line per iteration

    std::string to_json() const;
};

// True iff x, y satisfy every leader and interaction row and d*y <= phi(x)+tol.
bool check_bilevel_feasible(const FollowerOracle& oracle, const std::vector<int>& x, const std::vector<int>& y,
                            double tol = 1e-6);

// Builds the network dictated by the policy (exact when the budget is
// unlimited), optionally strengthened, then reduced.
ValueNetwork build_policy_network(const FollowerOracle& oracle, const SolverPolicy& policy, bool strengthen,
                                  NetworkStats* stats = nullptr, PhaseTimings* timings = nullptr);

// The MILP behind a relaxation variant, for solving or LP-format export.
// Empty optional: the policy network has no feasible terminal.
std::optional<MilpModel> build_relaxation_model(const FollowerOracle& oracle, RelaxationVariant variant,
                                                const SolverPolicy& policy, struct ModelVars* vars = nullptr,
                                                NetworkStats* stats = nullptr, PhaseTimings* timings = nullptr);

// MILP optimum of the chosen relaxation; a lower bound on the bilevel value.
SolveReport solve_relaxation(const FollowerOracle& oracle, RelaxationVariant variant,
                             const SolverPolicy& policy = {});

// Exact cutting-plane solver: solve the strengthened relaxation, separate
// bilevel-infeasible points with blocking cuts, repeat until the incumbent is
// follower-optimal.
SolveReport solve_exact(const FollowerOracle& oracle, const SolverPolicy& policy = {});

}  // namespace valnet
