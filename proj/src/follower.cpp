#include "valnet/follower.hpp"

#include <cmath>
#include <mutex>
#include <stdexcept>

namespace valnet {

double dot(const std::vector<double>& coeffs, const std::vector<int>& x) {
    double v = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (x[j]) v += coeffs[j];
    }
    return v;
}

FollowerResult FollowerOracle::eval_phibar(const StateVector& s) const {
    if (static_cast<int>(s.dim()) != inst_.m) throw std::invalid_argument("state dimension mismatch");
    {
        std::shared_lock lock(mutex_);
        auto it = cache_.find(s);
        if (it != cache_.end()) return it->second;
    }
    FollowerResult res = solve_state(s);
    {
        std::unique_lock lock(mutex_);
        cache_.emplace(s, res);
    }
    return res;
}

FollowerResult FollowerOracle::eval_phi(const std::vector<int>& x) const {
    if (static_cast<int>(x.size()) != inst_.n_leader) throw std::invalid_argument("leader vector length mismatch");
    return eval_phibar(inst_.state_of(x));
}

bool FollowerOracle::phi_identity_check(const std::vector<int>& x1, const std::vector<int>& x2) const {
    return inst_.state_of(x1) == inst_.state_of(x2);
}

std::size_t FollowerOracle::cache_size() const {
    std::shared_lock lock(mutex_);
    return cache_.size();
}

// min d*y s.t. B*y >= b - s, y binary.
FollowerResult FollowerOracle::solve_state(const StateVector& s) const {
    MilpModel model;
    for (int j = 0; j < inst_.n_follower; ++j) {
        int v = model.add_binary("y" + std::to_string(j));
        model.set_objective(v, inst_.d[j]);
    }
    for (int i = 0; i < inst_.m; ++i) {
        std::vector<std::pair<int, double>> coeffs;
        for (int j = 0; j < inst_.n_follower; ++j) {
            if (inst_.B[i][j] != 0.0) coeffs.emplace_back(j, inst_.B[i][j]);
        }
        model.add_row("r" + std::to_string(i), std::move(coeffs), RowSense::GE,
                      inst_.b[i] - static_cast<double>(s[i]));
    }

    MilpSolution sol = solve_milp(model);
    FollowerResult res;
    if (sol.status == SolveStatus::Infeasible) {
        return res;  // value = +inf
    }
    if (sol.status != SolveStatus::Optimal) {
        throw std::runtime_error("follower subproblem solve failed: " + to_string(sol.status));
    }

    std::vector<bool> prefer(inst_.n_follower, false);  // prefer y_j = 0
    std::vector<double> lex = lex_extreme_binary(model, sol.objective + 1e-7 * (1.0 + std::abs(sol.objective)),
                                                 prefer);
    res.feasible = true;
    res.argmin_y.resize(inst_.n_follower);
    const std::vector<double>& pick = lex.empty() ? sol.values : lex;
    for (int j = 0; j < inst_.n_follower; ++j) res.argmin_y[j] = static_cast<int>(std::llround(pick[j]));
    res.value = dot(inst_.d, res.argmin_y);
    return res;
}

}  // namespace valnet
