#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "valnet/approx.hpp"
#include "valnet/generator.hpp"
#include "valnet/oracle.hpp"
#include "valnet/reformulate.hpp"
#include "valnet/solver.hpp"
#include "worked_instances.hpp"

using namespace valnet;

namespace {

std::vector<int> bits_of(std::uint64_t mask, int n) {
    std::vector<int> x(n);
    for (int j = 0; j < n; ++j) x[j] = (mask >> j) & 1ULL ? 1 : 0;
    return x;
}

// P(N) fragment alone: x relaxed to [0,1], z coupled through the flow rows.
MilpModel flow_only_model(const ValueNetwork& net, ModelVars& vars, FlowPolytope& fp) {
    MilpModel model;
    int n = net.n_vars;
    for (int j = 0; j < n; ++j) vars.x.push_back(model.add_var("x" + std::to_string(j), 0.0, 1.0));
    double lo = kInf, hi = -kInf;
    for (const auto& node : net.layers.back()) {
        lo = std::min(lo, node.value);
        hi = std::max(hi, node.value);
    }
    vars.z = model.add_var("z", lo, hi);
    fp = build_flow_polytope(model, net, vars.x, vars.z);
    return model;
}

}  // namespace

TEST_SUITE_BEGIN("reformulate");

TEST_CASE("flow fragment size matches the counting formula") {
    GeneratorConfig cfg;
    cfg.n_follower = 4;
    cfg.m = 2;
    cfg.beta = 0.3;
    SplitMix64 rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        cfg.n_leader = static_cast<int>(rng.uniform_int(4, 8));
        cfg.alpha = static_cast<int>(rng.uniform_int(1, 5));
        cfg.seed = 2000 + static_cast<std::uint64_t>(trial);
        BilevelInstance inst = generate_structured(cfg);
        FollowerOracle oracle(inst);
        ValueNetwork net = reduce(build_state_network(oracle));
        if (net.empty()) continue;
        ModelVars vars;
        FlowPolytope fp;
        MilpModel model = flow_only_model(net, vars, fp);
        CHECK(fp.edge_count == net.num_edges());
        CHECK(static_cast<int>(fp.omega.size()) == net.num_edges());
        CHECK(fp.coupling_rows == net.num_nodes() + net.n_vars + 1);
        CHECK(model.num_rows() == fp.coupling_rows);
    }
}

TEST_CASE("single-path network pins z to its terminal value") {
    ValueNetwork net;
    net.n_vars = 1;
    net.layers.resize(2);
    net.layers[0].resize(1);
    net.layers[1].resize(1);
    net.layers[0][0].out[1] = 0;  // only the label-1 edge exists
    net.layers[1][0].value = 7.0;
    ModelVars vars;
    FlowPolytope fp;
    MilpModel model = flow_only_model(net, vars, fp);
    model.fix_var(vars.x[0], 1.0);
    MilpSolution sol = solve_lp(model);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.values[vars.z] == doctest::Approx(7.0));
}

TEST_CASE("LP over the fragment with fixed x reproduces every lookup") {
    GeneratorConfig cfg;
    cfg.n_leader = 6;
    cfg.n_follower = 4;
    cfg.m = 2;
    cfg.alpha = 3;
    cfg.beta = 0.3;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        cfg.seed = 2100 + seed;
        BilevelInstance inst = generate_structured(cfg);
        FollowerOracle oracle(inst);
        ValueNetwork net = reduce(build_state_network(oracle));
        if (net.empty()) continue;
        for (std::uint64_t mask = 0; mask < (1ULL << inst.n_leader); ++mask) {
            std::vector<int> x = bits_of(mask, inst.n_leader);
            ModelVars vars;
            FlowPolytope fp;
            MilpModel model = flow_only_model(net, vars, fp);
            for (int j = 0; j < inst.n_leader; ++j) model.fix_var(vars.x[j], x[j]);
            model.set_objective(vars.z, 1.0);
            MilpSolution sol = solve_lp(model);
            double expect = net.lookup_value(x);
            if (expect == kInf) {
                CHECK(sol.status == SolveStatus::Infeasible);
            } else {
                REQUIRE(sol.status == SolveStatus::Optimal);
                CHECK(sol.objective == doctest::Approx(expect).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("every fragment vertex lies on the value-function graph") {
    // Vertices of the lifted polytope carry integral path flows, so any LP
    // optimum must land on an (x, phi(x)) pair.
    GeneratorConfig cfg;
    cfg.n_leader = 6;
    cfg.n_follower = 4;
    cfg.m = 2;
    cfg.alpha = 3;
    cfg.beta = 0.3;
    cfg.seed = 2200;
    BilevelInstance inst = generate_structured(cfg);
    FollowerOracle oracle(inst);
    ValueNetwork net = reduce(build_state_network(oracle));
    REQUIRE(!net.empty());
    SplitMix64 rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        ModelVars vars;
        FlowPolytope fp;
        MilpModel model = flow_only_model(net, vars, fp);
        for (int j = 0; j < inst.n_leader; ++j) {
            model.set_objective(vars.x[j], static_cast<double>(rng.uniform_int(-20, 20)));
        }
        model.set_objective(vars.z, static_cast<double>(rng.uniform_int(-3, 3)));
        MilpSolution sol = solve_lp(model);
        REQUIRE(sol.status == SolveStatus::Optimal);
        std::vector<int> x(inst.n_leader);
        for (int j = 0; j < inst.n_leader; ++j) {
            double v = sol.values[vars.x[j]];
            CHECK(std::abs(v - std::round(v)) <= 1e-6);
            x[j] = static_cast<int>(std::round(v));
        }
        CHECK(sol.values[vars.z] == doctest::Approx(net.lookup_value(x)).epsilon(1e-6));
        CHECK(net.lookup_value(x) == oracle.eval_phi(x).value);
    }
}

TEST_CASE("indicator model of the continuous-gap instance") {
    BilevelInstance inst = testing::example_continuous_gap();
    FollowerOracle oracle(inst);
    ModelVars vars;
    std::vector<int> gamma;
    MilpModel model = build_indicator_model(oracle, &vars, &gamma);
    CHECK(gamma.size() == 3);

    MilpSolution lp = solve_lp(model);
    REQUIRE(lp.status == SolveStatus::Optimal);
    CHECK(lp.objective == doctest::Approx(0.5).epsilon(1e-6));

    MilpSolution ip = solve_milp(model);
    REQUIRE(ip.status == SolveStatus::Optimal);
    CHECK(ip.objective == doctest::Approx(100.0).epsilon(1e-6));
}

TEST_CASE("indicator model with a single state forces its pick") {
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
    std::vector<int> gamma;
    MilpModel model = build_indicator_model(oracle, nullptr, &gamma);
    REQUIRE(gamma.size() == 1);
    MilpSolution sol = solve_milp(model);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.values[gamma[0]] == doctest::Approx(1.0));
}

TEST_CASE("indicator and flow models agree at integrality") {
    GeneratorConfig cfg;
    cfg.n_leader = 6;
    cfg.n_follower = 4;
    cfg.m = 2;
    cfg.alpha = 1;
    cfg.beta = 0.3;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        cfg.seed = 2300 + seed;
        BilevelInstance inst = generate_structured(cfg);
        FollowerOracle oracle(inst);
        ValueNetwork net = reduce(build_state_network(oracle));
        if (net.empty()) continue;
        MilpSolution a = solve_milp(build_indicator_model(oracle));
        MilpSolution b = solve_milp(build_strengthened(inst, net));
        CHECK(a.status == b.status);
        if (a.status == SolveStatus::Optimal) {
            CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-9));
        }
    }
}

TEST_CASE("relaxation chain against the brute-force optimum") {
    GeneratorConfig cfg;
    cfg.n_leader = 7;
    cfg.n_follower = 5;
    cfg.m = 2;
    cfg.alpha = 3;
    cfg.beta = 0.3;
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        cfg.seed = 2400 + seed;
        BilevelInstance inst = generate_structured(cfg);
        FollowerOracle oracle(inst);
        OracleResult truth = brute_force_bilevel(inst);
        if (!truth.feasible) continue;
        MilpSolution hpr = solve_milp(build_hpr(inst));
        REQUIRE(hpr.status == SolveStatus::Optimal);
        CHECK(hpr.objective <= truth.value + 1e-9);

        ValueNetwork exact = reduce(build_state_network(oracle));
        MilpSolution strong = solve_milp(build_strengthened(inst, exact));
        REQUIRE(strong.status == SolveStatus::Optimal);
        CHECK(strong.objective == doctest::Approx(truth.value).epsilon(1e-9));
        CHECK(hpr.objective <= strong.objective + 1e-9);

        MergePolicy mp;
        mp.budget = 1;
        ValueNetwork narrow = reduce(build_approx(oracle, mp));
        MilpSolution weak = solve_milp(build_strengthened(inst, narrow));
        REQUIRE(weak.status == SolveStatus::Optimal);
        CHECK(weak.objective <= truth.value + 1e-9);
        CHECK(hpr.objective <= weak.objective + 1e-9);
    }
}

TEST_CASE("strengthened model solves the continuous-gap instance") {
    BilevelInstance inst = testing::example_continuous_gap();
    FollowerOracle oracle(inst);
    ValueNetwork net = reduce(build_state_network(oracle));
    ModelVars vars;
    MilpModel model = build_strengthened(inst, net, &vars);
    MilpSolution sol = solve_milp(model);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(100.0).epsilon(1e-6));
    CHECK(sol.values[vars.x[0]] == doctest::Approx(0.0));
    CHECK(sol.values[vars.x[1]] == doctest::Approx(1.0));
}

TEST_CASE("big-M upper-bounds phi everywhere") {
    {
        BilevelInstance inst = testing::example_knapsack_pair();
        FollowerOracle oracle(inst);
        BigMResult res = compute_big_m(oracle);
        CHECK(res.M >= 0.0);  // max phi over all eight decisions is 0
    }
    {
        // d >= 0 and y = 0 always feasible: any valid M is nonnegative.
        BilevelInstance inst;
        inst.n_leader = 2;
        inst.n_follower = 2;
        inst.m = 1;
        inst.m_leader = 0;
        inst.c = {0, 0};
        inst.p = {0, 0};
        inst.d = {3, 4};
        inst.A = {{0, 0}};
        inst.B = {{1, 1}};
        inst.b = {0};
        FollowerOracle oracle(inst);
        CHECK(compute_big_m(oracle).M >= 0.0);
    }
    GeneratorConfig cfg;
    cfg.n_leader = 6;
    cfg.n_follower = 4;
    cfg.m = 2;
    cfg.alpha = 3;
    cfg.beta = 0.3;
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        cfg.seed = 2500 + seed;
        BilevelInstance inst = generate_structured(cfg);
        FollowerOracle oracle(inst);
        BigMResult res = compute_big_m(oracle);
        OracleResult truth = brute_force_bilevel(inst, 1ULL << 26, true);
        double max_phi = -kInf;
        for (double v : truth.phi_table) {
            if (v < kInf) max_phi = std::max(max_phi, v);
        }
        if (max_phi > -kInf) CHECK(res.M >= max_phi - 1e-9);
        for (std::size_t i = 0; i < res.samples.size(); ++i) {
            for (std::size_t k = i + 1; k < res.samples.size(); ++k) {
                CHECK(res.samples[i] != res.samples[k]);
            }
        }
    }
}

TEST_CASE("blocking cut caps the follower value where the response stays feasible") {
    BilevelInstance inst = testing::example_knapsack_pair();
    FollowerOracle oracle(inst);
    ValueNetwork net = reduce(build_state_network(oracle));
    ModelVars vars;
    MilpModel model = build_strengthened(inst, net, &vars);

    BlockingCutState cuts;
    cuts.big_M = 9.0;
    cuts.epsilon = 1.0;
    REQUIRE(add_blocking_cut(model, cuts, inst, {1, 0}, vars));
    CHECK(!add_blocking_cut(model, cuts, inst, {1, 0}, vars));  // duplicate: no-op

    // At x = (1,1,0) the response (1,0) stays feasible, so d*y <= -5.
    MilpModel fixed = model;
    for (int j = 0; j < 3; ++j) fixed.fix_var(vars.x[j], j < 2 ? 1.0 : 0.0);
    std::vector<std::pair<int, double>> dy{{vars.y[0], -5.0}, {vars.y[1], 3.0}};
    fixed.add_row("probe", dy, RowSense::GE, -4.9);  // demand d*y > -5
    CHECK(solve_milp(fixed).status == SolveStatus::Infeasible);
}

TEST_CASE("blocking cuts never exclude bilevel-feasible points") {
    GeneratorConfig cfg;
    cfg.n_leader = 5;
    cfg.n_follower = 4;
    cfg.m = 2;
    cfg.alpha = 3;
    cfg.beta = 0.3;
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        cfg.seed = 2600 + seed;
        BilevelInstance inst = generate_structured(cfg);
        FollowerOracle oracle(inst);
        ValueNetwork net = reduce(build_state_network(oracle));
        if (net.empty()) continue;
        ModelVars vars;
        MilpModel model = build_strengthened(inst, net, &vars);
        BlockingCutState cuts;
        double abs_d = 0.0;
        for (double v : inst.d) abs_d += std::abs(v);
        cuts.big_M = abs_d + 1.0;
        cuts.epsilon = 1.0;
        for (std::uint64_t ym = 0; ym < (1ULL << inst.n_follower) && cuts.registered.size() < 3; ++ym) {
            add_blocking_cut(model, cuts, inst, bits_of(ym, inst.n_follower), vars);
        }
        // Every bilevel-feasible pair must remain feasible for some w completion.
        for (std::uint64_t xm = 0; xm < (1ULL << inst.n_leader); ++xm) {
            std::vector<int> x = bits_of(xm, inst.n_leader);
            for (std::uint64_t ym = 0; ym < (1ULL << inst.n_follower); ++ym) {
                std::vector<int> y = bits_of(ym, inst.n_follower);
                if (!check_bilevel_feasible(oracle, x, y)) continue;
                MilpModel fixed = model;
                for (int j = 0; j < inst.n_leader; ++j) fixed.fix_var(vars.x[j], x[j]);
                for (int j = 0; j < inst.n_follower; ++j) fixed.fix_var(vars.y[j], y[j]);
                CHECK(solve_milp(fixed).status == SolveStatus::Optimal);
            }
        }
    }
}

TEST_SUITE_END();
