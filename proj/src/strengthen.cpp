#include "valnet/strengthen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "valnet/approx.hpp"
#include "valnet/reformulate.hpp"

namespace valnet {

bool SampleSet::contains(const std::vector<int>& y) const {
    return std::find(members.begin(), members.end(), y) != members.end();
}

bool SampleSet::insert(const std::vector<int>& y) {
    if (contains(y)) return false;
    members.push_back(y);
    return true;
}

SampleMaxMin::SampleMaxMin(const FollowerOracle& oracle, RobustModelParams params)
    : oracle_(oracle), params_(params) {
    const BilevelInstance& inst = oracle.instance();
    if (params_.epsilon <= 0.0) {
        if (inst.interaction_integral()) {
            params_.epsilon = 1.0;
        } else {
            double scale = 1.0;
            for (int i = 0; i < inst.m; ++i) {
                for (double v : inst.A[i]) scale = std::max(scale, std::abs(v));
                for (double v : inst.B[i]) scale = std::max(scale, std::abs(v));
            }
            params_.epsilon = 1e-4 * scale;
        }
    }
    if (params_.big_M <= 0.0) {
        double abs_d = 0.0;
        for (double v : inst.d) abs_d += std::abs(v);
        params_.big_M = follower_value_upper_bound(inst) + abs_d + 1.0;
    }
}

std::optional<MaxMinResult> SampleMaxMin::solve(const MaxMinRegion& region,
                                                const std::vector<std::vector<int>>& samples,
                                                const std::vector<std::vector<int>>& excluded_x) const {
    const BilevelInstance& inst = oracle_.instance();
    const double M = params_.big_M;
    const double eps = params_.epsilon;

    MilpModel model;
    std::vector<int> x_vars;
    for (int j = 0; j < inst.n_leader; ++j) x_vars.push_back(model.add_binary("x" + std::to_string(j)));

    double min_g = 0.0, max_g = 0.0;
    for (const auto& y : samples) {
        double g = dot(inst.d, y);
        min_g = std::min(min_g, g);
        max_g = std::max(max_g, g);
    }
    double delta_hi = max_g + M * inst.m + 1.0;
    int delta = model.add_var("delta", min_g - 1.0, delta_hi);
    model.set_objective(delta, -1.0);  // maximize delta

    std::vector<double> max_ax(inst.m, 0.0);
    for (int i = 0; i < inst.m; ++i) {
        for (int j = 0; j < inst.n_leader; ++j) max_ax[i] += std::max(inst.A[i][j], 0.0);
    }

    for (std::size_t k = 0; k < samples.size(); ++k) {
        const auto& y = samples[k];
        std::vector<int> gamma(inst.m);
        for (int i = 0; i < inst.m; ++i) {
            gamma[i] = model.add_binary("g" + std::to_string(k) + "_" + std::to_string(i));
        }
        // delta <= d*y_k + M * sum_i gamma_ki
        std::vector<std::pair<int, double>> coeffs;
        coeffs.emplace_back(delta, 1.0);
        for (int i = 0; i < inst.m; ++i) coeffs.emplace_back(gamma[i], -M);
        model.add_row("bound" + std::to_string(k), std::move(coeffs), RowSense::LE, dot(inst.d, y));
        // gamma_ki = 1 -> sample k strictly violates interaction row i
        for (int i = 0; i < inst.m; ++i) {
            double by = 0.0;
            for (int j = 0; j < inst.n_follower; ++j) {
                if (y[j]) by += inst.B[i][j];
            }
            double abar = max_ax[i] + by - inst.b[i];
            std::vector<std::pair<int, double>> row;
            for (int j = 0; j < inst.n_leader; ++j) {
                if (inst.A[i][j] != 0.0) row.emplace_back(x_vars[j], inst.A[i][j]);
            }
            row.emplace_back(gamma[i], eps + abar);
            model.add_row("block" + std::to_string(k) + "_" + std::to_string(i), std::move(row), RowSense::LE,
                          inst.b[i] - by + abar);
        }
    }

    switch (region.kind) {
        case MaxMinRegion::Kind::FreeBinary:
            break;
        case MaxMinRegion::Kind::Box: {
            for (int i = 0; i < inst.m; ++i) {
                std::vector<std::pair<int, double>> row;
                for (int j = 0; j < inst.n_leader; ++j) {
                    if (inst.A[i][j] != 0.0) row.emplace_back(x_vars[j], inst.A[i][j]);
                }
                model.add_row("box_lo" + std::to_string(i), row, RowSense::GE,
                              static_cast<double>(region.box.lo[i]));
                model.add_row("box_hi" + std::to_string(i), row, RowSense::LE,
                              static_cast<double>(region.box.hi[i]));
            }
            break;
        }
        case MaxMinRegion::Kind::SubNetwork: {
            const ValueNetwork& net = *region.net;
            const int n = net.n_vars;
            // Nodes on some root-to-terminal path.
            std::vector<std::vector<char>> keep(n + 1);
            for (int j = 0; j <= n; ++j) keep[j].assign(net.layers[j].size(), 0);
            keep[n][region.terminal] = 1;
            for (int j = n - 1; j >= 0; --j) {
                for (std::size_t u = 0; u < net.layers[j].size(); ++u) {
                    for (int label = 0; label < 2; ++label) {
                        int t = net.layers[j][u].out[label];
                        if (t >= 0 && keep[j + 1][t]) keep[j][u] = 1;
                    }
                }
            }
            if (!keep[0][0]) return std::nullopt;

            std::vector<std::vector<std::array<int, 2>>> evar(n);
            for (int j = 0; j < n; ++j) {
                evar[j].assign(net.layers[j].size(), {-1, -1});
                for (std::size_t u = 0; u < net.layers[j].size(); ++u) {
                    if (!keep[j][u]) continue;
                    for (int label = 0; label < 2; ++label) {
                        int t = net.layers[j][u].out[label];
                        if (t >= 0 && keep[j + 1][t]) {
                            evar[j][u][label] = model.add_var(
                                "f" + std::to_string(j) + "_" + std::to_string(u) + "_" + std::to_string(label),
                                0.0, 1.0);
                        }
                    }
                }
            }
            {
                std::vector<std::pair<int, double>> row;
                for (int label = 0; label < 2; ++label) {
                    if (evar[0][0][label] >= 0) row.emplace_back(evar[0][0][label], 1.0);
                }
                model.add_row("sub_root", std::move(row), RowSense::EQ, 1.0);
            }
            for (int j = 1; j < n; ++j) {
                for (std::size_t u = 0; u < net.layers[j].size(); ++u) {
                    if (!keep[j][u]) continue;
                    std::vector<std::pair<int, double>> row;
                    for (int label = 0; label < 2; ++label) {
                        if (evar[j][u][label] >= 0) row.emplace_back(evar[j][u][label], 1.0);
                    }
                    for (std::size_t v = 0; v < net.layers[j - 1].size(); ++v) {
                        for (int label = 0; label < 2; ++label) {
                            if (net.layers[j - 1][v].out[label] == static_cast<int>(u) &&
                                evar[j - 1][v][label] >= 0) {
                                row.emplace_back(evar[j - 1][v][label], -1.0);
                            }
                        }
                    }
                    model.add_row("sub_cons" + std::to_string(j) + "_" + std::to_string(u), std::move(row),
                                  RowSense::EQ, 0.0);
                }
            }
            for (int j = 0; j < n; ++j) {
                std::vector<std::pair<int, double>> row;
                for (std::size_t u = 0; u < net.layers[j].size(); ++u) {
                    if (evar[j][u][1] >= 0) row.emplace_back(evar[j][u][1], 1.0);
                }
                row.emplace_back(x_vars[j], -1.0);
                model.add_row("sub_label" + std::to_string(j), std::move(row), RowSense::EQ, 0.0);
            }
            break;
        }
    }

    if (params_.outer_leader_rows) {
        // Outer relaxation of the leader rows: Gx*x >= h - max_y Gy*y.
        for (int i = 0; i < inst.m_leader; ++i) {
            double gy_max = 0.0;
            for (int j = 0; j < inst.n_follower; ++j) gy_max += std::max(inst.Gy[i][j], 0.0);
            std::vector<std::pair<int, double>> row;
            for (int j = 0; j < inst.n_leader; ++j) {
                if (inst.Gx[i][j] != 0.0) row.emplace_back(x_vars[j], inst.Gx[i][j]);
            }
            model.add_row("outer_leader" + std::to_string(i), std::move(row), RowSense::GE, inst.h[i] - gy_max);
        }
    }

    for (const auto& ex : excluded_x) {
        std::vector<std::pair<int, double>> row;
        double rhs = 1.0;
        for (int j = 0; j < inst.n_leader; ++j) {
            if (ex[j]) {
                row.emplace_back(x_vars[j], -1.0);
                rhs -= 1.0;
            } else {
                row.emplace_back(x_vars[j], 1.0);
            }
        }
        model.add_row("nogood", std::move(row), RowSense::GE, rhs);
    }

    MilpSolution sol = solve_milp(model);
    if (sol.status == SolveStatus::Infeasible) return std::nullopt;
    if (sol.status != SolveStatus::Optimal) {
        throw std::runtime_error("sampled max-min solve failed: " + to_string(sol.status));
    }

    MaxMinResult out;
    out.value = sol.values[delta];
    out.all_samples_blocked = out.value > max_g + 1e-6;

    // Lexicographically largest maximizer: ties prefer x_j = 1 in index order.
    std::vector<bool> prefer;
    for (int j = 0; j < model.num_vars(); ++j) {
        if (model.vars()[j].is_binary) prefer.push_back(j < inst.n_leader);
    }
    std::vector<double> lex =
        lex_extreme_binary(model, -out.value + 1e-7 * (1.0 + std::abs(out.value)), prefer);
    const std::vector<double>& pick = lex.empty() ? sol.values : lex;
    out.argmax_x.resize(inst.n_leader);
    for (int j = 0; j < inst.n_leader; ++j) out.argmax_x[j] = static_cast<int>(std::llround(pick[j]));
    return out;
}

SampleSet init_samples(const FollowerOracle& oracle) {
    BigMResult big = compute_big_m(oracle);
    SampleSet s;
    for (const auto& y : big.samples) s.insert(y);
    if (s.members.empty()) s.insert(std::vector<int>(oracle.instance().n_follower, 0));
    return s;
}

RobustModelParams default_params(const FollowerOracle& oracle) {
    return prepare_strengthening(oracle).params;
}

StrengthenSetup prepare_strengthening(const FollowerOracle& oracle) {
    const BilevelInstance& inst = oracle.instance();
    BigMResult big = compute_big_m(oracle);

    StrengthenSetup setup;
    double abs_min_d = 0.0;
    for (double v : inst.d) abs_min_d += std::min(v, 0.0);
    setup.params.big_M = big.M + std::abs(abs_min_d) + 1.0;
    for (const auto& y : big.samples) setup.samples.insert(y);
    if (setup.samples.members.empty()) {
        setup.samples.insert(std::vector<int>(inst.n_follower, 0));
    }
    return setup;
}

StrengthenOutcome strengthen_terminal(const FollowerOracle& oracle, ValueNetwork& net, int terminal,
                                      const RobustModelParams& params, SampleSet& samples) {
    StrengthenOutcome out;
    ValueNetwork::Node& node = net.layers[net.n_vars][terminal];
    out.old_value = node.value;
    out.new_value = node.value;

    // A point box is already tight: the sampled bound cannot fall below
    // phibar(lo).
    if (node.has_rect && node.rect.is_point()) {
        FollowerResult r = oracle.eval_phibar(node.rect.lo);
        if (r.feasible && r.value == node.value) return out;
    }
    if (samples.members.empty()) samples = init_samples(oracle);

    SampleMaxMin problem(oracle, params);
    MaxMinRegion region = params.mode == StrengthenMode::HyperrectangleRelax && node.has_rect
                              ? MaxMinRegion::in_box(node.rect)
                              : MaxMinRegion::paths_to(net, terminal);

    for (int iter = 0; iter < params.max_iterations; ++iter) {
        out.iterations = iter + 1;
        auto res = problem.solve(region, samples.members);
        if (!res.has_value()) {
            out.unreachable = true;
            return out;
        }
        out.last_x = res->argmax_x;
        if (res->value < out.new_value) {
            out.new_value = res->value;
            node.value = res->value;
        }
        FollowerResult fr = oracle.eval_phi(res->argmax_x);
        if (!fr.feasible) break;
        if (!samples.insert(fr.argmin_y)) break;  // repeat: bound is tight
    }
    return out;
}

void strengthen_network(const FollowerOracle& oracle, ValueNetwork& net, const RobustModelParams& params,
                        SampleSet* samples) {
    if (net.empty()) return;
    bool all_tight = true;
    for (const auto& node : net.layers[net.n_vars]) {
        if (!node.has_rect || !node.rect.is_point()) {
            all_tight = false;
            break;
        }
        FollowerResult r = oracle.eval_phibar(node.rect.lo);
        if (!r.feasible || r.value != node.value) {
            all_tight = false;
            break;
        }
    }
    if (all_tight) return;  // exact terminals cannot improve
    SampleSet local;
    SampleSet& pool = samples ? *samples : local;
    if (pool.members.empty()) pool = init_samples(oracle);

    std::vector<int> order(net.layers[net.n_vars].size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return net.layers[net.n_vars][a].value > net.layers[net.n_vars][b].value;
    });
    for (int t : order) {
        strengthen_terminal(oracle, net, t, params, pool);
    }
}

}  // namespace valnet
