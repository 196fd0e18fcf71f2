#include "doctest.h"

#include <algorithm>
#include <set>

#include "valnet/approx.hpp"
#include "valnet/generator.hpp"
#include "worked_instances.hpp"

using namespace valnet;

namespace {

StateVector sv(std::vector<StateInt> v) { return StateVector(std::move(v)); }

Hyperrectangle rect(std::vector<StateInt> lo, std::vector<StateInt> hi) {
    return Hyperrectangle{sv(std::move(lo)), sv(std::move(hi))};
}

std::vector<int> bits_of(std::uint64_t mask, int n) {
    std::vector<int> x(n);
    for (int j = 0; j < n; ++j) x[j] = (mask >> j) & 1ULL ? 1 : 0;
    return x;
}

}  // namespace

TEST_SUITE_BEGIN("approx");

TEST_CASE("shift moves both corners by the labelled column") {
    Hyperrectangle r = rect({0, 0}, {0, 0});
    std::vector<StateInt> col{-1, -3};
    Hyperrectangle shifted = shift_rect(r, col, 1);
    CHECK(shifted == rect({-1, -3}, {-1, -3}));
    CHECK(shift_rect(r, col, 0) == r);

    SplitMix64 rng(5);
    for (int trial = 0; trial < 1000; ++trial) {
        Hyperrectangle box = rect({rng.uniform_int(-9, 0), rng.uniform_int(-9, 0)},
                                  {rng.uniform_int(0, 9), rng.uniform_int(0, 9)});
        StateVector s(2);
        s[0] = rng.uniform_int(box.lo[0], box.hi[0]);
        s[1] = rng.uniform_int(box.lo[1], box.hi[1]);
        std::vector<StateInt> column{rng.uniform_int(-5, 5), rng.uniform_int(-5, 5)};
        int label = static_cast<int>(rng.uniform_int(0, 1));
        REQUIRE(box.contains(s));
        CHECK(shift_rect(box, column, label).contains(s.plus(column, label)));
    }
}

TEST_CASE("merging rectangles keeps the union") {
    Hyperrectangle m = merge_rects(merge_rects(rect({0, 0}, {0, 0}), rect({-2, -2}, {-2, -2})),
                                   rect({-1, -3}, {-1, -3}));
    CHECK(m.lo == sv({-2, -3}));
    CHECK(m.hi == sv({0, 0}));

    Hyperrectangle r = rect({-3, 1}, {4, 2});
    CHECK(merge_rects(r, r) == r);

    SplitMix64 rng(6);
    for (int trial = 0; trial < 1000; ++trial) {
        Hyperrectangle a = rect({rng.uniform_int(-9, 0), rng.uniform_int(-9, 0)},
                                {rng.uniform_int(0, 9), rng.uniform_int(0, 9)});
        Hyperrectangle b = rect({rng.uniform_int(-9, 0), rng.uniform_int(-9, 0)},
                                {rng.uniform_int(0, 9), rng.uniform_int(0, 9)});
        Hyperrectangle u = merge_rects(a, b);
        StateVector s(2);
        const Hyperrectangle& src = rng.uniform_int(0, 1) ? a : b;
        s[0] = rng.uniform_int(src.lo[0], src.hi[0]);
        s[1] = rng.uniform_int(src.lo[1], src.hi[1]);
        CHECK(u.contains(s));
    }
}

TEST_CASE("budget two merges into the expected boxes") {
    BilevelInstance inst = testing::example_budget_merge();
    FollowerOracle oracle(inst);
    MergePolicy policy;
    policy.budget = 2;
    ValueNetwork net = build_approx(oracle, policy);

    CHECK(net.layer_widths() == std::vector<int>{1, 2, 2, 2});

    // The three shallow second-layer boxes collapse into lo (-2,-3).
    bool merged_found = false;
    for (const auto& node : net.layers[2]) {
        if (node.rect.lo == sv({-2, -3}) && node.rect.hi == sv({0, 0})) merged_found = true;
    }
    CHECK(merged_found);

    // Two terminals: corner (-5,-4) and corner (-6,-6), both valued 0.
    REQUIRE(net.num_terminals() == 2);
    bool t_main = false, t_deep = false;
    for (const auto& node : net.layers[3]) {
        if (node.rect.lo == sv({-5, -4})) {
            t_main = true;
            CHECK(node.rect.hi == sv({0, 0}));
            CHECK(node.value == 0.0);
        }
        if (node.rect.lo == sv({-6, -6})) {
            t_deep = true;
            CHECK(node.value == 0.0);
        }
    }
    CHECK(t_main);
    CHECK(t_deep);
}

TEST_CASE("slack budget matches the exact network on every decision") {
    BilevelInstance inst = testing::example_knapsack_pair();
    FollowerOracle oracle(inst);
    MergePolicy policy;
    policy.budget = 100;
    ValueNetwork approx = build_approx(oracle, policy);
    ValueNetwork exact = reduce(build_state_network(oracle));
    for (std::uint64_t mask = 0; mask < 8; ++mask) {
        std::vector<int> x = bits_of(mask, 3);
        CHECK(approx.lookup_value(x) == exact.lookup_value(x));
    }
}

TEST_CASE("path and objective feasibility hold for every budget") {
    GeneratorConfig cfg;
    cfg.n_follower = 5;
    cfg.m = 2;
    cfg.beta = 0.3;
    SplitMix64 rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        cfg.n_leader = static_cast<int>(rng.uniform_int(5, 9));
        cfg.alpha = static_cast<int>(rng.uniform_int(1, 5));
        cfg.seed = 1000 + static_cast<std::uint64_t>(trial);
        BilevelInstance inst = generate_structured(cfg);
        FollowerOracle oracle(inst);
        MergePolicy policy;
        policy.budget = static_cast<std::size_t>(rng.uniform_int(1, 4));
        policy.strategy = rng.uniform_int(0, 1) ? MergePolicy::Strategy::LongestPathOrder
                                                : MergePolicy::Strategy::FirstPair;
        ValueNetwork net = build_approx(oracle, policy);
        for (int w : net.layer_widths()) CHECK(w <= static_cast<int>(policy.budget));
        for (std::uint64_t mask = 0; mask < (1ULL << inst.n_leader); ++mask) {
            std::vector<int> x = bits_of(mask, inst.n_leader);
            FollowerResult phi = oracle.eval_phi(x);
            if (!phi.feasible) continue;
            double v = net.lookup_value(x);
            REQUIRE(v < kInf);      // (D1) the path exists
            CHECK(v >= phi.value);  // (D2) the terminal value bounds phi
        }
    }
}

TEST_CASE("reduce keeps approximate lookups intact") {
    GeneratorConfig cfg;
    cfg.n_leader = 7;
    cfg.n_follower = 4;
    cfg.m = 2;
    cfg.alpha = 3;
    cfg.beta = 0.3;
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        cfg.seed = 500 + seed;
        BilevelInstance inst = generate_structured(cfg);
        FollowerOracle oracle(inst);
        MergePolicy policy;
        policy.budget = 2;
        ValueNetwork net = build_approx(oracle, policy);
        ValueNetwork red = reduce(net);
        for (std::uint64_t mask = 0; mask < (1ULL << inst.n_leader); ++mask) {
            std::vector<int> x = bits_of(mask, inst.n_leader);
            CHECK(red.lookup_value(x) == net.lookup_value(x));
        }
    }
}

TEST_CASE("infeasible-box test fires only on provably dead boxes") {
    // Follower with no slack at all: B = 0, b = 1 gives V = 1.
    BilevelInstance tiny;
    tiny.n_leader = 1;
    tiny.n_follower = 1;
    tiny.m = 1;
    tiny.m_leader = 0;
    tiny.c = {0};
    tiny.p = {0};
    tiny.d = {0};
    tiny.A = {{1}};
    tiny.B = {{0}};
    tiny.b = {1};
    CHECK(feasibility_floor(tiny) == std::vector<StateInt>{1});
    CHECK(prune_infeasible_rect(tiny, rect({0}, {0})));
    CHECK(!prune_infeasible_rect(tiny, rect({0}, {1})));

    BilevelInstance inst = testing::example_budget_merge();
    CHECK(!prune_infeasible_rect(inst, rect({-5, -4}, {-5, -4})));  // y = (0,0) feasible
}

TEST_CASE("pruned boxes never hide a feasible leader decision") {
    GeneratorConfig cfg;
    cfg.n_leader = 7;
    cfg.n_follower = 4;
    cfg.m = 2;
    cfg.alpha = 3;
    cfg.beta = 0.5;
    SplitMix64 rng(123);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        cfg.seed = 700 + seed;
        BilevelInstance inst = generate_structured(cfg);
        FollowerOracle oracle(inst);
        auto floor_v = feasibility_floor(inst);
        for (int trial = 0; trial < 20; ++trial) {
            Hyperrectangle box = rect({rng.uniform_int(-40, 20), rng.uniform_int(-40, 20)}, {0, 0});
            box.hi[0] = box.lo[0] + rng.uniform_int(0, 30);
            box.hi[1] = box.lo[1] + rng.uniform_int(0, 30);
            if (!prune_infeasible_rect(floor_v, box)) continue;
            for (std::uint64_t mask = 0; mask < (1ULL << inst.n_leader); ++mask) {
                std::vector<int> x = bits_of(mask, inst.n_leader);
                if (!box.contains(inst.state_of(x))) continue;
                CHECK(!oracle.eval_phi(x).feasible);
            }
        }
    }
}

TEST_CASE("budget one still yields a valid relaxation network") {
    BilevelInstance inst = testing::example_budget_merge();
    FollowerOracle oracle(inst);
    MergePolicy policy;
    policy.budget = 1;
    ValueNetwork net = build_approx(oracle, policy);
    REQUIRE(!net.empty());
    CHECK(net.num_terminals() == 1);
    for (std::uint64_t mask = 0; mask < 8; ++mask) {
        std::vector<int> x = bits_of(mask, 3);
        FollowerResult phi = oracle.eval_phi(x);
        if (phi.feasible) CHECK(net.lookup_value(x) >= phi.value);
    }
}

TEST_SUITE_END();
