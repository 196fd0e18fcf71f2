#pragma once

#include <vector>

#include "valnet/follower.hpp"
#include "valnet/milp.hpp"
#include "valnet/network.hpp"

namespace valnet {

// Variable/row bookkeeping for models assembled over a network or instance.
struct ModelVars {
    std::vector<int> x;  // leader binaries
    std::vector<int> y;  // follower binaries
    int z = -1;          // value-function variable
};

struct FlowPolytope {
    std::vector<int> omega;  // one flow variable per network edge
    int coupling_rows = 0;   // root + conservation + sinks + label coupling + value row
    int edge_count = 0;
};

// Appends the network-flow convex-hull fragment for (x, z): unit root
// outflow, flow conservation, per-terminal sink caps, label-1 coupling to
// x_j, and the terminal-value coupling to z.
FlowPolytope build_flow_polytope(MilpModel& model, const ValueNetwork& net, const std::vector<int>& x_vars,
                                 int z_var);

// Leader/follower binaries plus the shared rows of model (interaction and
// leader constraints) with the bilevel objective.
ModelVars add_base_model(MilpModel& model, const BilevelInstance& inst);

MilpModel build_hpr(const BilevelInstance& inst, ModelVars* vars = nullptr);

// High-point relaxation strengthened by the network: d*y <= z with (x, z)
// ranging over the flow polytope of net.
MilpModel build_strengthened(const BilevelInstance& inst, const ValueNetwork& net, ModelVars* vars = nullptr,
                             FlowPolytope* flow = nullptr);

// State-indicator encoding of the value-function graph.
MilpModel build_indicator_model(const FollowerOracle& oracle, ModelVars* vars = nullptr,
                                std::vector<int>* gamma_vars = nullptr);

struct BigMResult {
    double M = 0.0;
    std::vector<std::vector<int>> samples;  // distinct follower argmins encountered
    int iterations = 0;
};

// Upper bound on max_x phi(x) via the sampled max-min cutting-plane loop over
// the unconstrained box, collecting every distinct follower response.
BigMResult compute_big_m(const FollowerOracle& oracle, int iteration_cap = 50);

// Registered blocking-cut bookkeeping for one model.
struct BlockingCutState {
    std::vector<std::vector<int>> registered;  // follower responses with cuts in place
    double big_M = 0.0;
    double epsilon = 1.0;
};

// Blocking cut for follower response y_hat: whenever y_hat stays feasible for
// the chosen x, the follower objective cannot exceed d*y_hat. Returns false
// (no-op) when y_hat is already registered.
bool add_blocking_cut(MilpModel& model, BlockingCutState& state, const BilevelInstance& inst,
                      const std::vector<int>& y_hat, const ModelVars& vars);

}  // namespace valnet
