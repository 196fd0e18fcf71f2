#pragma once

#include <optional>
#include <string>
#include <vector>

#include "valnet/follower.hpp"
#include "valnet/instance.hpp"

namespace valnet {

// Axis-aligned box of states [lo, hi].
struct Hyperrectangle {
    StateVector lo;
    StateVector hi;

    bool contains(const StateVector& s) const { return lo.all_leq(s) && s.all_leq(hi); }
    bool is_point() const { return lo == hi; }
    bool operator==(const Hyperrectangle& o) const { return lo == o.lo && hi == o.hi; }
    bool operator<(const Hyperrectangle& o) const { return lo < o.lo || (lo == o.lo && hi < o.hi); }
    std::string str() const { return lo.str() + ".." + hi.str(); }
};

Hyperrectangle shift_rect(const Hyperrectangle& r, const std::vector<StateInt>& column, int label);
Hyperrectangle merge_rects(const Hyperrectangle& r1, const Hyperrectangle& r2);

// Layered multi-terminal decision diagram. Layer 0 holds the single root,
// layer n_leader holds the terminals. Each node has at most one outgoing edge
// per label {0,1}; terminal nodes carry a value. Nodes optionally carry a
// state box annotation (a point box for exact networks).
struct ValueNetwork {
    struct Node {
        int out[2] = {-1, -1};  // node index in the next layer, -1 = absent
        double value = 0.0;     // terminal layer only
        bool has_rect = false;
        Hyperrectangle rect;
    };

    int n_vars = 0;  // number of layers minus one
    std::vector<std::vector<Node>> layers;

    int num_nodes() const;
    int num_edges() const;
    int num_terminals() const { return layers.empty() ? 0 : static_cast<int>(layers.back().size()); }
    std::vector<int> layer_widths() const;
    bool empty() const;

    // Terminal value along the path labelled x, +infinity when the path is missing.
    double lookup_value(const std::vector<int>& x) const;

    std::string to_dot(const std::string& name = "valuenetwork") const;
};

struct BuildOptions {
    std::size_t node_cap = 5'000'000;
    // When set, variables are processed in decreasing column-coefficient-sum
    // order of A instead of native order.
    bool order_by_coefficient_sum = false;
};

// Thrown when the exact network would exceed the node cap.
struct NetworkTooLarge : std::runtime_error {
    explicit NetworkTooLarge(const std::string& what) : std::runtime_error(what) {}
};

// Layered reachable-state sets S_1..S_{n+1}: forward sums pruned backward so
// every state reaches a terminal with a feasible follower subproblem.
std::vector<std::vector<StateVector>> enumerate_state_layers(const FollowerOracle& oracle,
                                                             const BuildOptions& opts = {});

ValueNetwork build_state_network(const FollowerOracle& oracle, const BuildOptions& opts = {});

// Removes all symmetric nodes: terminals with equal values first, then nodes
// whose labelled edges target the same nodes, sweeping from the last layer to
// the root. Lookup values are unchanged.
ValueNetwork reduce(const ValueNetwork& net);

// Exhaustive symmetry certificate. Returns a (layer, node, node) triple
// violating the symmetry-freeness of the network, if any. Exponential in the
// worst case; intended for tests.
std::optional<std::tuple<int, int, int>> find_symmetric_pair(const ValueNetwork& net);

std::uint64_t canonical_hash(const ValueNetwork& net);
bool isomorphic(const ValueNetwork& a, const ValueNetwork& b);

}  // namespace valnet
