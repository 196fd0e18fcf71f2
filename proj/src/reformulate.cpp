#include "valnet/reformulate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "valnet/approx.hpp"
#include "valnet/strengthen.hpp"

namespace valnet {

FlowPolytope build_flow_polytope(MilpModel& model, const ValueNetwork& net, const std::vector<int>& x_vars,
                                 int z_var) {
    if (net.empty() || net.num_terminals() < 1) {
        throw std::runtime_error("flow polytope over an empty network is infeasible");
    }
    const int n = net.n_vars;
    FlowPolytope fp;

    // omega_e per edge, indexed per (layer, node, label).
    std::vector<std::vector<std::array<int, 2>>> edge_var(n);
    for (int j = 0; j < n; ++j) {
        edge_var[j].assign(net.layers[j].size(), {-1, -1});
        for (std::size_t u = 0; u < net.layers[j].size(); ++u) {
            for (int label = 0; label < 2; ++label) {
                if (net.layers[j][u].out[label] < 0) continue;
                int v = model.add_var(
                    "w_" + std::to_string(j) + "_" + std::to_string(u) + "_" + std::to_string(label), 0.0, 1.0);
                edge_var[j][u][label] = v;
                fp.omega.push_back(v);
            }
        }
    }
    fp.edge_count = static_cast<int>(fp.omega.size());

    auto in_edges = [&](int layer, int node) {
        std::vector<int> vars;
        for (std::size_t u = 0; u < net.layers[layer - 1].size(); ++u) {
            for (int label = 0; label < 2; ++label) {
                if (net.layers[layer - 1][u].out[label] == node && edge_var[layer - 1][u][label] >= 0) {
                    vars.push_back(edge_var[layer - 1][u][label]);
                }
            }
        }
        return vars;
    };

    int rows = 0;
    {
        std::vector<std::pair<int, double>> coeffs;
        for (int label = 0; label < 2; ++label) {
            if (edge_var[0][0][label] >= 0) coeffs.emplace_back(edge_var[0][0][label], 1.0);
        }
        model.add_row("flow_root", std::move(coeffs), RowSense::EQ, 1.0);
        ++rows;
    }
    for (int j = 1; j < n; ++j) {
        for (std::size_t u = 0; u < net.layers[j].size(); ++u) {
            std::vector<std::pair<int, double>> coeffs;
            for (int label = 0; label < 2; ++label) {
                if (edge_var[j][u][label] >= 0) coeffs.emplace_back(edge_var[j][u][label], 1.0);
            }
            for (int v : in_edges(j, static_cast<int>(u))) coeffs.emplace_back(v, -1.0);
            model.add_row("flow_cons_" + std::to_string(j) + "_" + std::to_string(u), std::move(coeffs),
                          RowSense::EQ, 0.0);
            ++rows;
        }
    }
    for (std::size_t u = 0; u < net.layers[n].size(); ++u) {
        std::vector<std::pair<int, double>> coeffs;
        for (int v : in_edges(n, static_cast<int>(u))) coeffs.emplace_back(v, 1.0);
        model.add_row("flow_sink_" + std::to_string(u), std::move(coeffs), RowSense::LE, 1.0);
        ++rows;
    }
    for (int j = 0; j < n; ++j) {
        std::vector<std::pair<int, double>> coeffs;
        for (std::size_t u = 0; u < net.layers[j].size(); ++u) {
            if (edge_var[j][u][1] >= 0) coeffs.emplace_back(edge_var[j][u][1], 1.0);
        }
        coeffs.emplace_back(x_vars[j], -1.0);
        model.add_row("flow_label_" + std::to_string(j), std::move(coeffs), RowSense::EQ, 0.0);
        ++rows;
    }
    {
        std::vector<std::pair<int, double>> coeffs;
        coeffs.emplace_back(z_var, 1.0);
        for (std::size_t u = 0; u < net.layers[n].size(); ++u) {
            double nu = net.layers[n][u].value;
            for (int v : in_edges(n, static_cast<int>(u))) coeffs.emplace_back(v, -nu);
        }
        model.add_row("flow_value", std::move(coeffs), RowSense::EQ, 0.0);
        ++rows;
    }
    fp.coupling_rows = rows;
    return fp;
}

ModelVars add_base_model(MilpModel& model, const BilevelInstance& inst) {
    ModelVars vars;
    for (int j = 0; j < inst.n_leader; ++j) {
        int v = model.add_binary("x" + std::to_string(j));
        model.set_objective(v, inst.c[j]);
        vars.x.push_back(v);
    }
    for (int j = 0; j < inst.n_follower; ++j) {
        int v = model.add_binary("y" + std::to_string(j));
        model.set_objective(v, inst.p[j]);
        vars.y.push_back(v);
    }
    for (int i = 0; i < inst.m; ++i) {
        std::vector<std::pair<int, double>> coeffs;
        for (int j = 0; j < inst.n_leader; ++j) {
            if (inst.A[i][j] != 0.0) coeffs.emplace_back(vars.x[j], inst.A[i][j]);
        }
        for (int j = 0; j < inst.n_follower; ++j) {
            if (inst.B[i][j] != 0.0) coeffs.emplace_back(vars.y[j], inst.B[i][j]);
        }
        model.add_row("link" + std::to_string(i), std::move(coeffs), RowSense::GE, inst.b[i]);
    }
    for (int i = 0; i < inst.m_leader; ++i) {
        std::vector<std::pair<int, double>> coeffs;
        for (int j = 0; j < inst.n_leader; ++j) {
            if (inst.Gx[i][j] != 0.0) coeffs.emplace_back(vars.x[j], inst.Gx[i][j]);
        }
        for (int j = 0; j < inst.n_follower; ++j) {
            if (inst.Gy[i][j] != 0.0) coeffs.emplace_back(vars.y[j], inst.Gy[i][j]);
        }
        model.add_row("leader" + std::to_string(i), std::move(coeffs), RowSense::GE, inst.h[i]);
    }
    return vars;
}

MilpModel build_hpr(const BilevelInstance& inst, ModelVars* vars) {
    MilpModel model;
    ModelVars v = add_base_model(model, inst);
    if (vars) *vars = v;
    return model;
}

MilpModel build_strengthened(const BilevelInstance& inst, const ValueNetwork& net, ModelVars* vars,
                             FlowPolytope* flow) {
    MilpModel model;
    ModelVars v = add_base_model(model, inst);

    double lo = kInf, hi = -kInf;
    for (const auto& node : net.layers.back()) {
        lo = std::min(lo, node.value);
        hi = std::max(hi, node.value);
    }
    v.z = model.add_var("z", lo, hi);

    FlowPolytope fp = build_flow_polytope(model, net, v.x, v.z);

    // Follower optimality surrogate: d*y <= z.
    std::vector<std::pair<int, double>> coeffs;
    for (int j = 0; j < inst.n_follower; ++j) {
        if (inst.d[j] != 0.0) coeffs.emplace_back(v.y[j], inst.d[j]);
    }
    coeffs.emplace_back(v.z, -1.0);
    model.add_row("value_bound", std::move(coeffs), RowSense::LE, 0.0);

    if (vars) *vars = v;
    if (flow) *flow = fp;
    return model;
}

MilpModel build_indicator_model(const FollowerOracle& oracle, ModelVars* vars, std::vector<int>* gamma_vars) {
    const BilevelInstance& inst = oracle.instance();
    auto layers = enumerate_state_layers(oracle);
    const auto& terminals = layers.back();
    if (terminals.empty()) throw std::runtime_error("no feasible follower state; indicator model is empty");

    MilpModel model;
    ModelVars v = add_base_model(model, inst);

    double lo = kInf, hi = -kInf;
    std::vector<double> values(terminals.size());
    for (std::size_t s = 0; s < terminals.size(); ++s) {
        values[s] = oracle.eval_phibar(terminals[s]).value;
        lo = std::min(lo, values[s]);
        hi = std::max(hi, values[s]);
    }
    v.z = model.add_var("z", lo, hi);

    std::vector<int> gamma;
    for (std::size_t s = 0; s < terminals.size(); ++s) {
        gamma.push_back(model.add_binary("g" + std::to_string(s)));
    }
    for (int i = 0; i < inst.m; ++i) {
        std::vector<std::pair<int, double>> coeffs;
        for (int j = 0; j < inst.n_leader; ++j) {
            if (inst.A[i][j] != 0.0) coeffs.emplace_back(v.x[j], inst.A[i][j]);
        }
        for (std::size_t s = 0; s < terminals.size(); ++s) {
            if (terminals[s][i] != 0) coeffs.emplace_back(gamma[s], -static_cast<double>(terminals[s][i]));
        }
        model.add_row("state" + std::to_string(i), std::move(coeffs), RowSense::EQ, 0.0);
    }
    {
        std::vector<std::pair<int, double>> coeffs;
        for (int g : gamma) coeffs.emplace_back(g, 1.0);
        model.add_row("state_pick", std::move(coeffs), RowSense::EQ, 1.0);
    }
    {
        std::vector<std::pair<int, double>> coeffs;
        coeffs.emplace_back(v.z, 1.0);
        for (std::size_t s = 0; s < terminals.size(); ++s) {
            if (values[s] != 0.0) coeffs.emplace_back(gamma[s], -values[s]);
        }
        model.add_row("state_value", std::move(coeffs), RowSense::EQ, 0.0);
    }
    {
        std::vector<std::pair<int, double>> coeffs;
        for (int j = 0; j < inst.n_follower; ++j) {
            if (inst.d[j] != 0.0) coeffs.emplace_back(v.y[j], inst.d[j]);
        }
        coeffs.emplace_back(v.z, -1.0);
        model.add_row("value_bound", std::move(coeffs), RowSense::LE, 0.0);
    }

    if (vars) *vars = v;
    if (gamma_vars) *gamma_vars = gamma;
    return model;
}

BigMResult compute_big_m(const FollowerOracle& oracle, int iteration_cap) {
    const BilevelInstance& inst = oracle.instance();
    BigMResult out;

    // Seed sample: the follower response at x = 0, else the zero vector.
    {
        FollowerResult r0 = oracle.eval_phi(std::vector<int>(inst.n_leader, 0));
        if (r0.feasible) {
            out.samples.push_back(r0.argmin_y);
        } else {
            out.samples.push_back(std::vector<int>(inst.n_follower, 0));
        }
    }

    SampleMaxMin problem(oracle);
    double best_phi = -kInf;
    std::vector<std::vector<int>> excluded;
    double delta_final = -kInf;

    for (int iter = 0; iter < iteration_cap; ++iter) {
        out.iterations = iter + 1;
        auto res = problem.solve(MaxMinRegion::everything(inst), out.samples, excluded);
        if (!res.has_value()) break;  // every leader point excluded
        delta_final = res->value;
        FollowerResult fr = oracle.eval_phi(res->argmax_x);
        if (!fr.feasible) {
            excluded.push_back(res->argmax_x);
            continue;
        }
        best_phi = std::max(best_phi, fr.value);
        if (std::find(out.samples.begin(), out.samples.end(), fr.argmin_y) != out.samples.end()) {
            excluded.push_back(res->argmax_x);
            continue;
        }
        out.samples.push_back(fr.argmin_y);
    }

    // Valid upper bound: points still inside the final model are covered by
    // its optimum; excluded points were evaluated exactly.
    double m = std::max(best_phi, delta_final);
    if (!std::isfinite(m)) m = follower_value_upper_bound(inst);
    out.M = std::min(m, follower_value_upper_bound(inst));
    return out;
}

bool add_blocking_cut(MilpModel& model, BlockingCutState& state, const BilevelInstance& inst,
                      const std::vector<int>& y_hat, const ModelVars& vars) {
    if (std::find(state.registered.begin(), state.registered.end(), y_hat) != state.registered.end()) {
        return false;
    }
    const std::size_t k = state.registered.size();
    state.registered.push_back(y_hat);

    std::vector<int> w(inst.m);
    for (int i = 0; i < inst.m; ++i) {
        w[i] = model.add_binary("blk" + std::to_string(k) + "_w" + std::to_string(i));
    }

    // d*y <= d*y_hat + M * sum_i w_i
    {
        std::vector<std::pair<int, double>> coeffs;
        for (int j = 0; j < inst.n_follower; ++j) {
            if (inst.d[j] != 0.0) coeffs.emplace_back(vars.y[j], inst.d[j]);
        }
        for (int i = 0; i < inst.m; ++i) coeffs.emplace_back(w[i], -state.big_M);
        model.add_row("blk" + std::to_string(k) + "_obj", std::move(coeffs), RowSense::LE, dot(inst.d, y_hat));
    }
    // a_i*x + b_i*y_hat <= b_i - eps*w_i + (1 - w_i)*abar_i
    for (int i = 0; i < inst.m; ++i) {
        double max_ax = 0.0;
        for (int j = 0; j < inst.n_leader; ++j) max_ax += std::max(inst.A[i][j], 0.0);
        double by = 0.0;
        for (int j = 0; j < inst.n_follower; ++j) {
            if (y_hat[j]) by += inst.B[i][j];
        }
        double abar = max_ax + by - inst.b[i];
        std::vector<std::pair<int, double>> coeffs;
        for (int j = 0; j < inst.n_leader; ++j) {
            if (inst.A[i][j] != 0.0) coeffs.emplace_back(vars.x[j], inst.A[i][j]);
        }
        coeffs.emplace_back(w[i], state.epsilon + abar);
        model.add_row("blk" + std::to_string(k) + "_r" + std::to_string(i), std::move(coeffs), RowSense::LE,
                      inst.b[i] - by + abar);
    }
    return true;
}

}  // namespace valnet
