#include "doctest.h"

#include <algorithm>
#include <map>
#include <set>

#include "valnet/generator.hpp"
#include "valnet/network.hpp"
#include "worked_instances.hpp"

using namespace valnet;

namespace {

std::vector<int> bits_of(std::uint64_t mask, int n) {
    std::vector<int> x(n);
    for (int j = 0; j < n; ++j) x[j] = (mask >> j) & 1ULL ? 1 : 0;
    return x;
}

// Independent reference for the layered state sets: every prefix sum of a
// leader decision whose completion has a feasible follower subproblem.
std::vector<std::set<std::vector<StateInt>>> brute_state_layers(const FollowerOracle& oracle) {
    const BilevelInstance& inst = oracle.instance();
    int n = inst.n_leader;
    std::vector<std::set<std::vector<StateInt>>> layers(n + 1);
    for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask) {
        std::vector<int> x = bits_of(mask, n);
        if (!oracle.eval_phi(x).feasible) continue;
        StateVector s(static_cast<std::size_t>(inst.m));
        layers[0].insert(s.components());
        for (int j = 0; j < n; ++j) {
            s.add_in_place(inst.a_column(j), x[j]);
            layers[j + 1].insert(s.components());
        }
    }
    return layers;
}

// Complete decision tree over the feasible leader decisions; an alternative
// (unreduced) value network for the same function.
ValueNetwork brute_tree_network(const FollowerOracle& oracle) {
    const BilevelInstance& inst = oracle.instance();
    int n = inst.n_leader;
    ValueNetwork net;
    net.n_vars = n;
    net.layers.resize(n + 1);

    // prefix -> node index per layer, only prefixes with a feasible completion.
    std::map<std::vector<int>, int> prev;
    auto completable = [&](const std::vector<int>& prefix) {
        int rest = n - static_cast<int>(prefix.size());
        for (std::uint64_t mask = 0; mask < (1ULL << rest); ++mask) {
            std::vector<int> x = prefix;
            for (int j = 0; j < rest; ++j) x.push_back((mask >> j) & 1ULL ? 1 : 0);
            if (oracle.eval_phi(x).feasible) return true;
        }
        return false;
    };
    if (!completable({})) return net;
    prev[{}] = 0;
    net.layers[0].resize(1);
    for (int j = 0; j < n; ++j) {
        std::map<std::vector<int>, int> cur;
        for (const auto& [prefix, u] : prev) {
            for (int label = 0; label < 2; ++label) {
                std::vector<int> child = prefix;
                child.push_back(label);
                if (!completable(child)) continue;
                int idx = static_cast<int>(net.layers[j + 1].size());
                net.layers[j + 1].emplace_back();
                cur[child] = idx;
                net.layers[j][u].out[label] = idx;
            }
        }
        prev = std::move(cur);
    }
    for (const auto& [x, u] : prev) {
        net.layers[n][u].value = oracle.eval_phi(x).value;
    }
    return net;
}

ValueNetwork partially_reduced_network() {
    // Terminal-layer reduction already applied: three terminals, two
    // symmetric nodes remain in the previous layer.
    ValueNetwork net;
    net.n_vars = 3;
    net.layers.resize(4);
    net.layers[0].resize(1);
    net.layers[1].resize(2);
    net.layers[2].resize(3);
    net.layers[3].resize(3);
    net.layers[3][0].value = -5.0;
    net.layers[3][1].value = -2.0;
    net.layers[3][2].value = 0.0;
    net.layers[0][0].out[0] = 0;
    net.layers[0][0].out[1] = 1;
    net.layers[1][0].out[0] = 0;
    net.layers[1][0].out[1] = 1;
    net.layers[1][1].out[0] = 1;
    net.layers[1][1].out[1] = 2;
    net.layers[2][0].out[0] = 0;
    net.layers[2][0].out[1] = 1;
    net.layers[2][1].out[0] = 0;
    net.layers[2][1].out[1] = 2;
    net.layers[2][2].out[0] = 0;
    net.layers[2][2].out[1] = 2;
    return net;
}

}  // namespace

TEST_SUITE_BEGIN("network");

TEST_CASE("layered states of the knapsack pair match the worked layout") {
    BilevelInstance inst = testing::example_knapsack_pair();
    FollowerOracle oracle(inst);
    auto layers = enumerate_state_layers(oracle);
    REQUIRE(layers.size() == 4);
    CHECK(layers[0].size() == 1);
    CHECK(layers[1].size() == 2);
    CHECK(layers[2].size() == 3);
    CHECK(layers[3].size() == 6);

    std::set<std::vector<StateInt>> terminals;
    for (const auto& s : layers[3]) terminals.insert(s.components());
    std::set<std::vector<StateInt>> expect{{0, 0}, {-1, -2}, {-1, 0}, {-2, -2}, {-2, 0}, {-3, -2}};
    CHECK(terminals == expect);
}

TEST_CASE("a zero column collapses to a single state") {
    BilevelInstance inst;
    inst.n_leader = 1;
    inst.n_follower = 1;
    inst.m = 1;
    inst.m_leader = 0;
    inst.c = {0};
    inst.p = {0};
    inst.d = {1};
    inst.A = {{0}};
    inst.B = {{1}};
    inst.b = {0};
    FollowerOracle oracle(inst);
    auto layers = enumerate_state_layers(oracle);
    REQUIRE(layers.size() == 2);
    CHECK(layers[1].size() == 1);
    CHECK(layers[1][0][0] == 0);
}

TEST_CASE("random layered states match prefix enumeration") {
    GeneratorConfig cfg;
    cfg.n_leader = 6;
    cfg.n_follower = 4;
    cfg.m = 2;
    cfg.alpha = 3;
    cfg.beta = 0.3;
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        cfg.seed = seed + 40;
        BilevelInstance inst = generate_structured(cfg);
        FollowerOracle oracle(inst);
        auto got = enumerate_state_layers(oracle);
        auto expect = brute_state_layers(oracle);
        REQUIRE(got.size() == expect.size());
        for (std::size_t j = 0; j < got.size(); ++j) {
            std::set<std::vector<StateInt>> states;
            for (const auto& s : got[j]) states.insert(s.components());
            CHECK(states == expect[j]);
        }
    }
}

TEST_CASE("state network of the knapsack pair has the twelve-node layout") {
    BilevelInstance inst = testing::example_knapsack_pair();
    FollowerOracle oracle(inst);
    ValueNetwork net = build_state_network(oracle);
    CHECK(net.num_nodes() == 12);
    CHECK(net.layer_widths() == std::vector<int>{1, 2, 3, 6});

    std::map<std::vector<StateInt>, double> values;
    for (const auto& node : net.layers[3]) values[node.rect.lo.components()] = node.value;
    CHECK(values[{0, 0}] == -5.0);
    CHECK(values[{-1, -2}] == -2.0);
    CHECK(values[{-1, 0}] == -5.0);
    CHECK(values[{-2, -2}] == 0.0);
    CHECK(values[{-2, 0}] == -5.0);
    CHECK(values[{-3, -2}] == 0.0);
}

TEST_CASE("state network of the continuous-gap encoding") {
    BilevelInstance inst = testing::example_continuous_gap();
    FollowerOracle oracle(inst);
    ValueNetwork net = build_state_network(oracle);
    REQUIRE(net.layer_widths() == std::vector<int>{1, 2, 3});
    std::multiset<double> values;
    for (const auto& node : net.layers[2]) values.insert(node.value);
    CHECK(values == std::multiset<double>{-100.0, -1.0, 0.0});
}

TEST_CASE("knapsack follower keeps at most b+1 terminal states") {
    SplitMix64 rng(77);
    for (int trial = 0; trial < 10; ++trial) {
        int n_l = 6, n_f = 4;
        StateInt cap = rng.uniform_int(5, 15);
        BilevelInstance inst;
        inst.n_leader = n_l;
        inst.n_follower = n_f;
        inst.m = 1;
        inst.m_leader = 0;
        inst.c.assign(n_l, 0.0);
        inst.p.assign(n_f, 0.0);
        inst.d.assign(n_f, 0.0);
        inst.A.assign(1, std::vector<double>(n_l));
        inst.B.assign(1, std::vector<double>(n_f));
        for (int j = 0; j < n_l; ++j) inst.A[0][j] = -static_cast<double>(rng.uniform_int(1, 4));
        for (int j = 0; j < n_f; ++j) {
            inst.B[0][j] = -static_cast<double>(rng.uniform_int(1, 4));
            inst.d[j] = -static_cast<double>(rng.uniform_int(1, 5));  // maximize value
        }
        inst.b = {-static_cast<double>(cap)};
        FollowerOracle oracle(inst);
        ValueNetwork net = build_state_network(oracle);
        CHECK(net.num_terminals() <= static_cast<int>(cap) + 1);
    }
}

TEST_CASE("reduction shrinks the knapsack-pair network to eight nodes") {
    BilevelInstance inst = testing::example_knapsack_pair();
    FollowerOracle oracle(inst);
    ValueNetwork net = build_state_network(oracle);
    ValueNetwork red = reduce(net);
    CHECK(red.num_nodes() == 8);
    CHECK(red.layer_widths() == std::vector<int>{1, 2, 2, 3});
    std::multiset<double> values;
    for (const auto& node : red.layers[3]) values.insert(node.value);
    CHECK(values == std::multiset<double>{-5.0, -2.0, 0.0});

    // Lookup is preserved and reduction is a fixed point.
    for (std::uint64_t mask = 0; mask < 8; ++mask) {
        std::vector<int> x = bits_of(mask, 3);
        CHECK(red.lookup_value(x) == net.lookup_value(x));
    }
    ValueNetwork again = reduce(red);
    CHECK(isomorphic(red, again));
    CHECK(canonical_hash(red) == canonical_hash(again));
}

TEST_CASE("reduced network is the unique symmetry-free form") {
    // The reduction of any value network for the same function must be
    // isomorphic, starting from the complete decision tree in particular.
    std::vector<BilevelInstance> instances{testing::example_knapsack_pair(),
                                           testing::example_budget_merge()};
    GeneratorConfig cfg;
    cfg.n_leader = 5;
    cfg.n_follower = 4;
    cfg.m = 2;
    cfg.alpha = 3;
    cfg.beta = 0.3;
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        cfg.seed = seed + 60;
        instances.push_back(generate_structured(cfg));
    }
    for (const BilevelInstance& inst : instances) {
        FollowerOracle oracle(inst);
        ValueNetwork a = reduce(build_state_network(oracle));
        ValueNetwork tree = brute_tree_network(oracle);
        if (tree.empty()) continue;
        ValueNetwork b = reduce(tree);
        CHECK(isomorphic(a, b));
        CHECK(canonical_hash(a) == canonical_hash(b));
        CHECK(a.num_nodes() <= tree.num_nodes());
    }
}

TEST_CASE("lookup follows the labelled path") {
    BilevelInstance inst = testing::example_knapsack_pair();
    FollowerOracle oracle(inst);
    ValueNetwork net = build_state_network(oracle);
    CHECK(net.lookup_value({1, 1, 0}) == -5.0);
    for (std::uint64_t mask = 0; mask < 8; ++mask) {
        std::vector<int> x = bits_of(mask, 3);
        CHECK(net.lookup_value(x) == oracle.eval_phi(x).value);
    }
}

TEST_CASE("a missing edge reads as infeasible") {
    BilevelInstance inst;
    inst.n_leader = 1;
    inst.n_follower = 1;
    inst.m = 1;
    inst.m_leader = 0;
    inst.c = {0};
    inst.p = {0};
    inst.d = {0};
    inst.A = {{-1}};
    inst.B = {{0}};
    inst.b = {0};
    FollowerOracle oracle(inst);
    ValueNetwork net = build_state_network(oracle);
    CHECK(net.lookup_value({0}) == 0.0);
    CHECK(net.lookup_value({1}) == kInf);
}

TEST_CASE("symmetric pair is found before reduction and gone after") {
    ValueNetwork partial = partially_reduced_network();
    auto pair = find_symmetric_pair(partial);
    REQUIRE(pair.has_value());
    CHECK(std::get<0>(*pair) == 2);
    CHECK(std::get<1>(*pair) == 1);
    CHECK(std::get<2>(*pair) == 2);

    ValueNetwork red = reduce(partial);
    CHECK(!find_symmetric_pair(red).has_value());
    CHECK(red.num_nodes() == 8);

    // Same outcome as reducing the raw state network.
    BilevelInstance inst = testing::example_knapsack_pair();
    FollowerOracle oracle(inst);
    CHECK(isomorphic(red, reduce(build_state_network(oracle))));
}

TEST_CASE("random reduced networks carry no symmetric pair") {
    GeneratorConfig cfg;
    cfg.n_leader = 6;
    cfg.n_follower = 4;
    cfg.m = 2;
    cfg.alpha = 3;
    cfg.beta = 0.3;
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        cfg.seed = seed + 200;
        BilevelInstance inst = generate_structured(cfg);
        FollowerOracle oracle(inst);
        ValueNetwork red = reduce(build_state_network(oracle));
        CHECK(!find_symmetric_pair(red).has_value());
    }
}

TEST_CASE("node order inside layers does not change the reduced form") {
    BilevelInstance inst = testing::example_knapsack_pair();
    FollowerOracle oracle(inst);
    ValueNetwork net = build_state_network(oracle);
    ValueNetwork base = reduce(net);

    SplitMix64 rng(31);
    for (int trial = 0; trial < 5; ++trial) {
        ValueNetwork shuffled = net;
        for (int j = 1; j <= shuffled.n_vars; ++j) {
            std::vector<int> perm(shuffled.layers[j].size());
            for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
            for (std::size_t i = perm.size(); i > 1; --i) {
                std::swap(perm[i - 1], perm[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);
            }
            std::vector<ValueNetwork::Node> moved(shuffled.layers[j].size());
            for (std::size_t i = 0; i < perm.size(); ++i) moved[perm[i]] = shuffled.layers[j][i];
            shuffled.layers[j] = moved;
            for (auto& node : shuffled.layers[j - 1]) {
                for (int label = 0; label < 2; ++label) {
                    if (node.out[label] >= 0) node.out[label] = perm[node.out[label]];
                }
            }
        }
        for (std::uint64_t mask = 0; mask < 8; ++mask) {
            REQUIRE(shuffled.lookup_value(bits_of(mask, 3)) == net.lookup_value(bits_of(mask, 3)));
        }
        ValueNetwork red = reduce(shuffled);
        CHECK(isomorphic(red, base));
        CHECK(canonical_hash(red) == canonical_hash(base));
    }
}

TEST_CASE("nonnegative interaction keeps layers within the terminal width") {
    GeneratorConfig cfg;  // generator draws A >= 0
    cfg.n_leader = 8;
    cfg.n_follower = 5;
    cfg.m = 2;
    cfg.alpha = 3;
    cfg.beta = 0.3;
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        cfg.seed = seed + 400;
        BilevelInstance inst = generate_structured(cfg);
        FollowerOracle oracle(inst);
        ValueNetwork net = build_state_network(oracle);
        if (net.empty()) continue;
        int terminal_width = net.num_terminals();
        for (int w : net.layer_widths()) CHECK(w <= terminal_width);
    }
}

TEST_CASE("coefficient-sum compilation order preserves the function") {
    BilevelInstance inst = testing::example_knapsack_pair();
    std::vector<int> perm = coefficient_sum_order(inst);
    // Column sums are -1, -1, -3: the third column moves last... it is the
    // most negative, so the stable order keeps (0, 1, 2) with x3 last.
    CHECK(perm == std::vector<int>{0, 1, 2});

    BilevelInstance flipped = inst;
    flipped.A = {{-3, -1, -1}, {-2, 0, 0}};  // make the first column heaviest-negative
    std::vector<int> perm2 = coefficient_sum_order(flipped);
    CHECK(perm2 == std::vector<int>{1, 2, 0});

    BilevelInstance ordered = permute_leader_variables(flipped, perm2);
    FollowerOracle base(flipped), reord(ordered);
    ValueNetwork net = reduce(build_state_network(reord));
    for (std::uint64_t mask = 0; mask < 8; ++mask) {
        std::vector<int> x = bits_of(mask, 3);
        std::vector<int> xp(3);
        for (int k = 0; k < 3; ++k) xp[k] = x[perm2[k]];
        CHECK(net.lookup_value(xp) == base.eval_phi(x).value);
    }
}

TEST_CASE("exactness by full enumeration at fourteen variables") {
    GeneratorConfig cfg;
    cfg.n_leader = 14;
    cfg.n_follower = 4;
    cfg.m = 2;
    cfg.alpha = 1;
    cfg.beta = 0.3;
    cfg.seed = 321;
    BilevelInstance inst = generate_structured(cfg);
    FollowerOracle oracle(inst);
    ValueNetwork net = reduce(build_state_network(oracle));

    // Follower values by direct enumeration, independent of the MILP engine.
    const int n_f = inst.n_follower;
    std::vector<double> dy(1ULL << n_f);
    std::vector<std::vector<double>> by(inst.m, std::vector<double>(1ULL << n_f));
    for (std::uint64_t ym = 0; ym < (1ULL << n_f); ++ym) {
        for (int j = 0; j < n_f; ++j) {
            if (ym & (1ULL << j)) {
                dy[ym] += inst.d[j];
                for (int i = 0; i < inst.m; ++i) by[i][ym] += inst.B[i][j];
            }
        }
    }
    for (std::uint64_t mask = 0; mask < (1ULL << 14); ++mask) {
        std::vector<int> x = bits_of(mask, 14);
        StateVector s = inst.state_of(x);
        double phi = kInf;
        for (std::uint64_t ym = 0; ym < (1ULL << n_f); ++ym) {
            bool ok = true;
            for (int i = 0; i < inst.m && ok; ++i) {
                if (by[i][ym] < inst.b[i] - static_cast<double>(s[i]) - 1e-9) ok = false;
            }
            if (ok) phi = std::min(phi, dy[ym]);
        }
        REQUIRE(net.lookup_value(x) == phi);
    }
}

TEST_CASE("node cap aborts oversized builds") {
    GeneratorConfig cfg;
    cfg.n_leader = 12;
    cfg.n_follower = 4;
    cfg.m = 3;
    cfg.alpha = 5;
    cfg.beta = 0.3;
    cfg.seed = 3;
    BilevelInstance inst = generate_structured(cfg);
    FollowerOracle oracle(inst);
    BuildOptions opts;
    opts.node_cap = 10;
    CHECK_THROWS_AS(build_state_network(oracle, opts), NetworkTooLarge);
}

TEST_CASE("DOT export uses dashed zero arcs") {
    BilevelInstance inst = testing::example_knapsack_pair();
    FollowerOracle oracle(inst);
    ValueNetwork net = reduce(build_state_network(oracle));
    std::string dot = net.to_dot();
    CHECK(dot.find("digraph") != std::string::npos);
    CHECK(dot.find("style=dashed") != std::string::npos);
    CHECK(dot.find("->") != std::string::npos);
}

TEST_SUITE_END();
