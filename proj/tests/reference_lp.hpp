#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "valnet/milp.hpp"

namespace valnet::testing {

// Independent dense big-M simplex used only to cross-check the engine.
// Standard form: split free parts, slack every row, penalize artificials.
inline std::optional<double> reference_lp_value(const MilpModel& model) {
    const int n = model.num_vars();
    // Columns: x_j shifted by lb (x = lb + u, u >= 0); one extra row per
    // finite upper bound; slack/surplus per row; artificial per row.
    std::vector<double> shift(n);
    for (int j = 0; j < n; ++j) shift[j] = model.vars()[j].lb;

    struct DenseRow {
        std::vector<double> a;
        double rhs;
    };
    std::vector<DenseRow> rows;
    auto push_row = [&](const std::vector<std::pair<int, double>>& coeffs, RowSense sense, double rhs) {
        std::vector<double> a(n, 0.0);
        double r = rhs;
        for (auto [v, coef] : coeffs) {
            a[v] += coef;
            r -= coef * shift[v];
        }
        if (sense == RowSense::LE) {
            rows.push_back(DenseRow{a, r});
        } else if (sense == RowSense::GE) {
            for (double& x : a) x = -x;
            rows.push_back(DenseRow{a, -r});
        } else {
            rows.push_back(DenseRow{a, r});
            for (double& x : a) x = -x;
            rows.push_back(DenseRow{a, -r});
        }
    };
    for (const auto& row : model.rows()) push_row(row.coeffs, row.sense, row.rhs);
    for (int j = 0; j < n; ++j) {
        if (std::isfinite(model.vars()[j].ub)) {
            push_row({{j, 1.0}}, RowSense::LE, model.vars()[j].ub);
        }
    }

    const int m = static_cast<int>(rows.size());
    const int total = n + m + m;  // structural + slack + artificial
    const double big = 1e9;
    std::vector<std::vector<double>> T(m, std::vector<double>(total + 1, 0.0));
    std::vector<double> cost(total, 0.0);
    for (int j = 0; j < n; ++j) cost[j] = model.objective()[j];
    for (int i = 0; i < m; ++i) cost[n + m + i] = big;

    std::vector<int> basis(m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) T[i][j] = rows[i].a[j];
        double rhs = rows[i].rhs;
        double slack_sign = 1.0;
        if (rhs < 0) {
            for (int j = 0; j < n; ++j) T[i][j] = -T[i][j];
            rhs = -rhs;
            slack_sign = -1.0;
        }
        T[i][n + i] = slack_sign;
        T[i][n + m + i] = 1.0;
        T[i][total] = rhs;
        basis[i] = n + m + i;
    }

    for (long iter = 0; iter < 200000; ++iter) {
        // Reduced costs under the current basis.
        int q = -1;
        double best = -1e-7;
        for (int j = 0; j < total; ++j) {
            double dj = cost[j];
            for (int i = 0; i < m; ++i) dj -= cost[basis[i]] * T[i][j];
            if (dj < best) {
                best = dj;
                q = j;
            }
        }
        if (q < 0) break;
        int r = -1;
        double ratio = 0.0;
        for (int i = 0; i < m; ++i) {
            if (T[i][q] > 1e-9) {
                double t = T[i][total] / T[i][q];
                if (r < 0 || t < ratio - 1e-12) {
                    r = i;
                    ratio = t;
                }
            }
        }
        if (r < 0) return std::nullopt;  // unbounded
        double piv = T[r][q];
        for (int j = 0; j <= total; ++j) T[r][j] /= piv;
        for (int i = 0; i < m; ++i) {
            if (i == r) continue;
            double f = T[i][q];
            if (f == 0.0) continue;
            for (int j = 0; j <= total; ++j) T[i][j] -= f * T[r][j];
        }
        basis[r] = q;
    }

    double art = 0.0;
    for (int i = 0; i < m; ++i) {
        if (basis[i] >= n + m) art += T[i][total];
    }
    if (art > 1e-6) return std::nullopt;  // infeasible

    std::vector<double> u(n, 0.0);
    for (int i = 0; i < m; ++i) {
        if (basis[i] < n) u[basis[i]] = T[i][total];
    }
    double value = 0.0;
    for (int j = 0; j < n; ++j) value += model.objective()[j] * (shift[j] + u[j]);
    return value;
}

}  // namespace valnet::testing
