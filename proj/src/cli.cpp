#include "valnet/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "CLI11.hpp"

#include "valnet/generator.hpp"
#include "valnet/io.hpp"
#include "valnet/oracle.hpp"
#include "valnet/solver.hpp"

namespace valnet {

namespace {

BilevelInstance load_checked(const std::string& path) {
    BilevelInstance inst = load_instance_file(path);
    auto report = validate_instance(inst);
    if (!report.empty()) throw std::runtime_error(path + ": " + report.front());
    if (!inst.interaction_integral()) inst = scale_to_integer(inst);
    return inst;
}

struct SweepStats {
    std::vector<double> values;
    void add(double v) { values.push_back(v); }
    double mean() const {
        if (values.empty()) return 0.0;
        return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    }
    double stddev() const {
        if (values.size() < 2) return 0.0;
        double m = mean(), acc = 0.0;
        for (double v : values) acc += (v - m) * (v - m);
        return std::sqrt(acc / static_cast<double>(values.size() - 1));
    }
    std::string summary() const {
        std::ostringstream os;
        os.precision(4);
        os << mean() << " [" << stddev() << "]";
        return os.str();
    }
};

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Bilevel value-network toolkit"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "Write a structured random instance as native JSON");
    GeneratorConfig cfg;
    std::string gen_out = "instance.json";
    gen->add_option("--n-leader", cfg.n_leader, "Leader variable count");
    gen->add_option("--n-follower", cfg.n_follower, "Follower variable count (default: n-leader)");
    gen->add_option("--m", cfg.m, "Interaction row count");
    gen->add_option("--alpha", cfg.alpha, "Coefficient diversity");
    gen->add_option("--beta", cfg.beta, "Constraint tightness");
    gen->add_option("--seed", cfg.seed, "Seed");
    gen->add_option("--m-leader", cfg.m_leader, "Leader row count (default: m)");
    gen->add_option("-o,--output", gen_out, "Output path");

    // convert
    auto* conv = app.add_subcommand("convert", "Convert between native JSON and MPS/AUX");
    std::string conv_in, conv_out;
    conv->add_option("input", conv_in, "Input instance (.json or .mps with .aux)")->required();
    conv->add_option("output", conv_out, "Output path (.json or .mps)")->required();

    // network
    auto* netcmd = app.add_subcommand("network", "Build a value network and report its statistics");
    std::string net_in, dot_out;
    bool net_exact = false;
    std::size_t net_budget = 0;
    bool net_strengthen = false;
    bool net_coeff_order = false;
    netcmd->add_option("input", net_in, "Instance file")->required();
    netcmd->add_flag("--exact", net_exact, "Exact state network (default when no budget given)");
    netcmd->add_option("--budget", net_budget, "Per-layer node budget for the approximate builder");
    netcmd->add_flag("--strengthen", net_strengthen, "Strengthen terminal values before reduction");
    netcmd->add_flag("--order-coeff-sum", net_coeff_order,
                     "Compile variables by decreasing coefficient sum in A");
    netcmd->add_option("--dot", dot_out, "Write DOT output to this path");

    // bound
    auto* bound = app.add_subcommand("bound", "Solve a relaxation and print its lower bound");
    std::string bound_in, bound_variant = "dd", bound_lp;
    std::size_t bound_budget = 0;
    double bound_known = std::nan("");
    bound->add_option("input", bound_in, "Instance file")->required();
    bound->add_option("--variant", bound_variant, "hpr | dd | ddmaxmin");
    bound->add_option("--budget", bound_budget, "Per-layer node budget (0 = exact network)");
    bound->add_option("--known-optimum", bound_known, "Known bilevel optimum for gap reporting");
    bound->add_option("--lp", bound_lp, "Write the relaxation model in LP format to this path");

    // solve
    auto* solve = app.add_subcommand("solve", "Exact cutting-plane solve; prints a JSON report");
    std::string solve_in, solve_report;
    std::size_t solve_budget = 0;
    bool solve_strengthen = false;
    int solve_maxiter = 500, solve_strength_iters = 5;
    double solve_time_cap = kInf;
    solve->add_option("input", solve_in, "Instance file")->required();
    solve->add_option("--budget", solve_budget, "Per-layer node budget (0 = exact network)");
    solve->add_flag("--strengthen", solve_strengthen, "Strengthen terminal values");
    solve->add_option("--max-strengthen-iters", solve_strength_iters, "Strengthening iterations per terminal");
    solve->add_option("--max-iters", solve_maxiter, "Cutting-plane iteration cap");
    solve->add_option("--time-cap", solve_time_cap, "Wall-clock cap in seconds");
    solve->add_option("--report", solve_report, "Write the JSON report to this path");

    // oracle
    auto* orc = app.add_subcommand("oracle", "Brute-force bilevel solve (small instances)");
    std::string orc_in;
    std::uint64_t orc_cap = 1ULL << 26;
    orc->add_option("input", orc_in, "Instance file")->required();
    orc->add_option("--cap", orc_cap, "Maximum 2^(n_l+n_f) enumeration size");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Grid of generated instances; TSV of bounds and gaps");
    std::vector<int> sw_n{25}, sw_m{1}, sw_alpha{1};
    std::vector<double> sw_beta{0.1};
    int sw_seeds = 5, sw_nf = 8;
    std::size_t sw_budget = 50;
    bool sw_oracle = false;
    sweep->add_option("--n-leader", sw_n, "Leader sizes");
    sweep->add_option("--n-follower", sw_nf, "Follower size");
    sweep->add_option("--m", sw_m, "Interaction row counts");
    sweep->add_option("--alpha", sw_alpha, "Alpha values");
    sweep->add_option("--beta", sw_beta, "Beta values");
    sweep->add_option("--seeds", sw_seeds, "Seeds per configuration");
    sweep->add_option("--budget", sw_budget, "Node budget");
    sweep->add_flag("--oracle", sw_oracle, "Also run the brute-force oracle (small sizes only)");

    try {
        app.parse(argc, const_cast<char**>(argv));
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*gen) {
            BilevelInstance inst = generate_structured(cfg);
            save_instance_file(inst, gen_out);
            std::cout << "wrote " << gen_out << " (" << inst.name << ")\n";
            return 0;
        }
        if (*conv) {
            BilevelInstance inst = load_checked(conv_in);
            save_instance_file(inst, conv_out);
            std::cout << "wrote " << conv_out << "\n";
            return 0;
        }
        if (*netcmd) {
            BilevelInstance inst = load_checked(net_in);
            if (net_coeff_order) inst = permute_leader_variables(inst, coefficient_sum_order(inst));
            FollowerOracle oracle(inst);
            SolverPolicy policy;
            if (net_budget > 0 && !net_exact) policy.budget = net_budget;
            NetworkStats stats;
            PhaseTimings timings;
            ValueNetwork net = build_policy_network(oracle, policy, net_strengthen, &stats, &timings);
            std::cout << "layer widths:";
            for (int w : stats.widths) std::cout << " " << w;
            std::cout << "\nterminals: " << stats.terminals << "\nnodes before reduce: " << stats.nodes_before_reduce
                      << "\nnodes after reduce: " << stats.nodes_after_reduce
                      << "\nreduction ratio: " << stats.reduction_ratio << "\n";
            if (!dot_out.empty()) {
                std::ofstream f(dot_out);
                if (!f) throw std::runtime_error("cannot write " + dot_out);
                f << net.to_dot();
                std::cout << "wrote " << dot_out << "\n";
            }
            return 0;
        }
        if (*bound) {
            BilevelInstance inst = load_checked(bound_in);
            FollowerOracle oracle(inst);
            SolverPolicy policy;
            if (bound_budget > 0) policy.budget = bound_budget;
            if (!std::isnan(bound_known)) policy.known_optimum = bound_known;
            RelaxationVariant variant;
            if (bound_variant == "hpr") {
                variant = RelaxationVariant::HPR;
            } else if (bound_variant == "dd") {
                variant = RelaxationVariant::DD;
            } else if (bound_variant == "ddmaxmin") {
                variant = RelaxationVariant::DDMaxMin;
            } else {
                std::cerr << "unknown variant: " << bound_variant << "\n";
                return 1;
            }
            if (!bound_lp.empty()) {
                auto model = build_relaxation_model(oracle, variant, policy);
                if (model.has_value()) {
                    std::ofstream f(bound_lp);
                    if (!f) throw std::runtime_error("cannot write " + bound_lp);
                    f << model->to_lp_format(bound_variant);
                    std::cout << "wrote " << bound_lp << "\n";
                }
            }
            SolveReport rep = solve_relaxation(oracle, variant, policy);
            std::cout << "status: " << to_string(rep.status) << "\nlower bound: " << rep.lower_bound << "\n";
            if (rep.gap.has_value()) {
                std::cout << "gap: " << *rep.gap << (rep.gap_vs_incumbent ? " (vs incumbent)" : "") << "\n";
            }
            return rep.status == SolveStatus::LimitReached ? 3 : 0;
        }
        if (*solve) {
            BilevelInstance inst = load_checked(solve_in);
            FollowerOracle oracle(inst);
            SolverPolicy policy;
            if (solve_budget > 0) policy.budget = solve_budget;
            policy.iteration_cap = solve_maxiter;
            policy.time_cap_seconds = solve_time_cap;
            policy.strengthen = solve_strengthen;
            policy.max_strengthen_iterations = solve_strength_iters;
            SolveReport rep = solve_exact(oracle, policy);
            std::string json = rep.to_json();
            if (!solve_report.empty()) {
                std::ofstream f(solve_report);
                if (!f) throw std::runtime_error("cannot write " + solve_report);
                f << json << "\n";
            }
            std::cout << json << "\n";
            for (const std::string& line : rep.log) std::cerr << line << "\n";
            return rep.status == SolveStatus::LimitReached ? 3 : 0;
        }
        if (*orc) {
            BilevelInstance inst = load_checked(orc_in);
            OracleResult res = brute_force_bilevel(inst, orc_cap);
            if (!res.feasible) {
                std::cout << "infeasible\n";
                return 0;
            }
            std::cout << "optimum: " << res.value << "\nx:";
            for (int v : res.x) std::cout << " " << v;
            std::cout << "\ny:";
            for (int v : res.y) std::cout << " " << v;
            std::cout << "\n";
            return 0;
        }
        if (*sweep) {
            std::cout << "n_l\tm\talpha\tbeta\tseed\thpr\tdd\tddmaxmin\toracle\tdd_gap\twidth\treduction\n";
            SweepStats gap_stats, red_stats;
            for (int n : sw_n) {
                for (int m : sw_m) {
                    for (int a : sw_alpha) {
                        for (double beta : sw_beta) {
                            for (int s = 0; s < sw_seeds; ++s) {
                                GeneratorConfig gcfg;
                                gcfg.n_leader = n;
                                gcfg.n_follower = sw_nf;
                                gcfg.m = m;
                                gcfg.alpha = a;
                                gcfg.beta = beta;
                                gcfg.seed = static_cast<std::uint64_t>(s);
                                BilevelInstance inst = generate_structured(gcfg);
                                FollowerOracle oracle(inst);
                                SolverPolicy policy;
                                policy.budget = sw_budget;
                                SolveReport hpr = solve_relaxation(oracle, RelaxationVariant::HPR, policy);
                                SolveReport dd = solve_relaxation(oracle, RelaxationVariant::DD, policy);
                                SolveReport ddm = solve_relaxation(oracle, RelaxationVariant::DDMaxMin, policy);
                                double oracle_val = std::nan("");
                                double gap = std::nan("");
                                if (sw_oracle) {
                                    OracleResult res = brute_force_bilevel(inst);
                                    if (res.feasible) {
                                        oracle_val = res.value;
                                        gap = oracle_val != 0.0 ? (oracle_val - dd.lower_bound) / std::abs(oracle_val)
                                                                : 0.0;
                                        gap_stats.add(gap);
                                    }
                                }
                                red_stats.add(dd.network.reduction_ratio);
                                std::cout << n << "\t" << m << "\t" << a << "\t" << beta << "\t" << s << "\t"
                                          << hpr.lower_bound << "\t" << dd.lower_bound << "\t" << ddm.lower_bound
                                          << "\t" << oracle_val << "\t" << gap << "\t"
                                          << (dd.network.widths.empty()
                                                  ? 0
                                                  : *std::max_element(dd.network.widths.begin(),
                                                                      dd.network.widths.end()))
                                          << "\t" << dd.network.reduction_ratio << "\n";
                            }
                        }
                    }
                }
            }
            std::cout << "# dd gap mean [stddev]: " << gap_stats.summary() << "\n";
            std::cout << "# reduction ratio mean [stddev]: " << red_stats.summary() << "\n";
            return 0;
        }
    } catch (const NetworkTooLarge& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

}  // namespace valnet
