#include "valnet/solver.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "valnet/reformulate.hpp"

#include "json.hpp"

namespace valnet {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::vector<int> round_binary(const std::vector<double>& values, const std::vector<int>& ids) {
    std::vector<int> out(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) out[i] = static_cast<int>(std::llround(values[ids[i]]));
    return out;
}

void fill_gap(SolveReport& rep, const SolverPolicy& policy) {
    double vstar;
    if (policy.known_optimum.has_value()) {
        vstar = *policy.known_optimum;
        rep.gap_vs_incumbent = false;
    } else if (std::isfinite(rep.objective)) {
        vstar = rep.objective;
        rep.gap_vs_incumbent = true;
    } else {
        return;
    }
    if (vstar == 0.0) {
        rep.gap = std::abs(vstar - rep.lower_bound) <= 1e-9 ? 0.0 : kInf;
    } else {
        rep.gap = (vstar - rep.lower_bound) / std::abs(vstar);
    }
}

}  // namespace

bool check_bilevel_feasible(const FollowerOracle& oracle, const std::vector<int>& x, const std::vector<int>& y,
                            double tol) {
    const BilevelInstance& inst = oracle.instance();
    for (int i = 0; i < inst.m; ++i) {
        double a = 0.0;
        for (int j = 0; j < inst.n_leader; ++j) a += inst.A[i][j] * x[j];
        for (int j = 0; j < inst.n_follower; ++j) a += inst.B[i][j] * y[j];
        if (a < inst.b[i] - tol * std::max(1.0, std::abs(inst.b[i]))) return false;
    }
    for (int i = 0; i < inst.m_leader; ++i) {
        double a = 0.0;
        for (int j = 0; j < inst.n_leader; ++j) a += inst.Gx[i][j] * x[j];
        for (int j = 0; j < inst.n_follower; ++j) a += inst.Gy[i][j] * y[j];
        if (a < inst.h[i] - tol * std::max(1.0, std::abs(inst.h[i]))) return false;
    }
    FollowerResult phi = oracle.eval_phi(x);
    if (!phi.feasible) return false;
    return dot(inst.d, y) <= phi.value + tol;
}

ValueNetwork build_policy_network(const FollowerOracle& oracle, const SolverPolicy& policy, bool strengthen,
                                  NetworkStats* stats, PhaseTimings* timings) {
    auto t0 = Clock::now();
    ValueNetwork net;
    if (policy.budget == kUnlimitedBudget) {
        net = build_state_network(oracle);
    } else {
        MergePolicy mp;
        mp.budget = policy.budget;
        mp.strategy = policy.merge_strategy;
        net = build_approx(oracle, mp);
    }
    if (timings) timings->build += seconds_since(t0);

    if (strengthen && !net.empty()) {
        t0 = Clock::now();
        StrengthenSetup setup = prepare_strengthening(oracle);
        setup.params.max_iterations = policy.max_strengthen_iterations;
        setup.params.mode = policy.strengthen_mode;
        strengthen_network(oracle, net, setup.params, &setup.samples);
        if (timings) timings->strengthen += seconds_since(t0);
    }

    int before = net.num_nodes();
    t0 = Clock::now();
    ValueNetwork reduced = reduce(net);
    if (timings) timings->reduce += seconds_since(t0);

    if (stats) {
        stats->widths = reduced.layer_widths();
        stats->nodes_before_reduce = before;
        stats->nodes_after_reduce = reduced.num_nodes();
        stats->terminals = reduced.num_terminals();
        stats->reduction_ratio =
            reduced.num_nodes() > 0 ? static_cast<double>(before) / reduced.num_nodes() : 1.0;
    }
    return reduced;
}

std::optional<MilpModel> build_relaxation_model(const FollowerOracle& oracle, RelaxationVariant variant,
                                                const SolverPolicy& policy, ModelVars* vars,
                                                NetworkStats* stats, PhaseTimings* timings) {
    const BilevelInstance& inst = oracle.instance();
    if (variant == RelaxationVariant::HPR) {
        return build_hpr(inst, vars);
    }
    ValueNetwork net =
        build_policy_network(oracle, policy, variant == RelaxationVariant::DDMaxMin, stats, timings);
    if (net.empty()) return std::nullopt;
    return build_strengthened(inst, net, vars);
}

SolveReport solve_relaxation(const FollowerOracle& oracle, RelaxationVariant variant,
                             const SolverPolicy& policy) {
    const BilevelInstance& inst = oracle.instance();
    SolveReport rep;

    ModelVars vars;
    std::optional<MilpModel> built =
        build_relaxation_model(oracle, variant, policy, &vars, &rep.network, &rep.timings);
    if (!built.has_value()) {
        rep.status = SolveStatus::Infeasible;
        return rep;
    }
    MilpModel& model = *built;

    auto t0 = Clock::now();
    MilpSolution sol = solve_milp(model, policy.milp_limits);
    rep.timings.milp += seconds_since(t0);

    rep.status = sol.status;
    if (sol.status == SolveStatus::Optimal || sol.status == SolveStatus::LimitReached) {
        rep.lower_bound = sol.status == SolveStatus::Optimal ? sol.objective : sol.best_bound;
        if (!sol.values.empty()) {
            rep.x = round_binary(sol.values, vars.x);
            rep.y = round_binary(sol.values, vars.y);
            rep.objective = dot(inst.c, rep.x) + dot(inst.p, rep.y);
            FollowerResult phi = oracle.eval_phi(rep.x);
            rep.phi_at_incumbent = phi.feasible ? phi.value : kInf;
        }
    }
    fill_gap(rep, policy);
    return rep;
}

SolveReport solve_exact(const FollowerOracle& oracle, const SolverPolicy& policy) {
    const BilevelInstance& inst = oracle.instance();
    auto start = Clock::now();
    SolveReport rep;

    ValueNetwork net = build_policy_network(oracle, policy, policy.strengthen, &rep.network, &rep.timings);
    if (net.empty()) {
        rep.status = SolveStatus::Infeasible;
        return rep;
    }

    ModelVars vars;
    MilpModel model = build_strengthened(inst, net, &vars);

    BlockingCutState cuts;
    cuts.epsilon = inst.interaction_integral() ? 1.0 : 1e-4;
    {
        double abs_d = 0.0;
        for (double v : inst.d) abs_d += std::abs(v);
        cuts.big_M = abs_d + 1.0;
    }

    double best_upper = kInf;
    std::vector<int> best_x, best_y;
    rep.lower_bound = -kInf;

    for (int iter = 0; iter <= policy.iteration_cap; ++iter) {
        if (seconds_since(start) > policy.time_cap_seconds) {
            rep.status = SolveStatus::LimitReached;
            break;
        }
        auto t0 = Clock::now();
        MilpSolution sol = solve_milp(model, policy.milp_limits);
        rep.timings.milp += seconds_since(t0);

        if (sol.status == SolveStatus::Infeasible) {
            // Relaxation exhausted: the best incumbent (if any) is optimal.
            rep.status = std::isfinite(best_upper) ? SolveStatus::Optimal : SolveStatus::Infeasible;
            if (std::isfinite(best_upper)) rep.lower_bound = best_upper;
            break;
        }
        if (sol.status != SolveStatus::Optimal) {
            rep.status = sol.status;
            break;
        }
        rep.lower_bound = std::max(rep.lower_bound, sol.objective);

        std::vector<int> x = round_binary(sol.values, vars.x);
        std::vector<int> y = round_binary(sol.values, vars.y);
        double dy = dot(inst.d, y);

        t0 = Clock::now();
        FollowerResult phi = oracle.eval_phi(x);

        std::ostringstream line;
        line << iter << "\t" << sol.objective << "\t" << (std::isfinite(best_upper) ? best_upper : kInf) << "\t"
             << (phi.feasible ? phi.value : kInf) << "\t";

        if (!phi.feasible) {
            // No feasible follower response: exclude this leader decision.
            std::vector<std::pair<int, double>> row;
            double rhs = 1.0;
            for (int j = 0; j < inst.n_leader; ++j) {
                if (x[j]) {
                    row.emplace_back(vars.x[j], -1.0);
                    rhs -= 1.0;
                } else {
                    row.emplace_back(vars.x[j], 1.0);
                }
            }
            model.add_row("nogood" + std::to_string(iter), std::move(row), RowSense::GE, rhs);
            rep.timings.separation += seconds_since(t0);
            line << "nogood";
            rep.log.push_back(line.str());
            rep.iterations = iter + 1;
            continue;
        }

        if (dy <= phi.value + 1e-6) {
            // Bilevel feasible, hence optimal for the relaxation value.
            // Optimistic re-solve: keep x, pick the leader-best follower optimum.
            MilpModel fix = model;
            for (int j = 0; j < inst.n_leader; ++j) fix.fix_var(vars.x[j], x[j]);
            std::vector<std::pair<int, double>> opt_row;
            for (int j = 0; j < inst.n_follower; ++j) {
                if (inst.d[j] != 0.0) opt_row.emplace_back(vars.y[j], inst.d[j]);
            }
            fix.add_row("follower_opt", std::move(opt_row), RowSense::LE, phi.value + 1e-6);
            MilpSolution re = solve_milp(fix, policy.milp_limits);
            if (re.status == SolveStatus::Optimal) {
                y = round_binary(re.values, vars.y);
            }
            rep.timings.separation += seconds_since(t0);
            best_upper = dot(inst.c, x) + dot(inst.p, y);
            best_x = x;
            best_y = y;
            rep.status = SolveStatus::Optimal;
            line << "accept";
            rep.log.push_back(line.str());
            rep.iterations = iter;  // accepted without needing this round's cut
            break;
        }

        // Track the best bilevel-feasible completion of x as an incumbent.
        {
            MilpModel fix = model;
            for (int j = 0; j < inst.n_leader; ++j) fix.fix_var(vars.x[j], x[j]);
            std::vector<std::pair<int, double>> opt_row;
            for (int j = 0; j < inst.n_follower; ++j) {
                if (inst.d[j] != 0.0) opt_row.emplace_back(vars.y[j], inst.d[j]);
            }
            fix.add_row("follower_opt", std::move(opt_row), RowSense::LE, phi.value + 1e-6);
            MilpSolution re = solve_milp(fix, policy.milp_limits);
            if (re.status == SolveStatus::Optimal) {
                std::vector<int> yy = round_binary(re.values, vars.y);
                double val = dot(inst.c, x) + dot(inst.p, yy);
                if (val < best_upper) {
                    best_upper = val;
                    best_x = x;
                    best_y = yy;
                }
            }
        }

        if (iter == policy.iteration_cap) {
            rep.status = SolveStatus::LimitReached;
            rep.timings.separation += seconds_since(t0);
            rep.log.push_back(line.str() + "cap");
            break;
        }
        bool added = add_blocking_cut(model, cuts, inst, phi.argmin_y, vars);
        if (!added) {
            // Same response separated twice: numerically stuck, fall back to
            // excluding the leader point outright.
            std::vector<std::pair<int, double>> row;
            double rhs = 1.0;
            for (int j = 0; j < inst.n_leader; ++j) {
                if (x[j]) {
                    row.emplace_back(vars.x[j], -1.0);
                    rhs -= 1.0;
                } else {
                    row.emplace_back(vars.x[j], 1.0);
                }
            }
            model.add_row("nogood" + std::to_string(iter), std::move(row), RowSense::GE, rhs);
        }
        rep.timings.separation += seconds_since(t0);
        line << (added ? "cut" : "nogood");
        rep.log.push_back(line.str());
        rep.iterations = iter + 1;
    }

    if (std::isfinite(best_upper)) {
        rep.x = best_x;
        rep.y = best_y;
        rep.objective = best_upper;
        FollowerResult phi = oracle.eval_phi(best_x);
        rep.phi_at_incumbent = phi.feasible ? phi.value : kInf;
    }
    fill_gap(rep, policy);
    return rep;
}

std::string SolveReport::to_json() const {
    nlohmann::json j;
    j["status"] = to_string(status);
    j["objective"] = objective;
    j["lower_bound"] = lower_bound;
    j["phi_at_incumbent"] = phi_at_incumbent;
    j["x"] = x;
    j["y"] = y;
    if (gap.has_value()) {
        j["gap"] = *gap;
        j["gap_vs"] = gap_vs_incumbent ? "incumbent" : "known_optimum";
    }
    j["iterations"] = iterations;
    j["timings"] = {{"build", timings.build},
                    {"reduce", timings.reduce},
                    {"strengthen", timings.strengthen},
                    {"separation", timings.separation},
                    {"milp", timings.milp}};
    j["network"] = {{"widths", network.widths},
                    {"nodes_before_reduce", network.nodes_before_reduce},
                    {"nodes_after_reduce", network.nodes_after_reduce},
                    {"terminals", network.terminals},
                    {"reduction_ratio", network.reduction_ratio}};
    j["log"] = log;
    return j.dump(2);
}

}  // namespace valnet
