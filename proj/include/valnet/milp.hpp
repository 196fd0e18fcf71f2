#pragma once

#include <limits>
#include <string>
#include <vector>

namespace valnet {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class RowSense { LE, GE, EQ };

enum class SolveStatus { Optimal, Infeasible, Unbounded, LimitReached, NumericalFailure };

std::string to_string(SolveStatus s);

// Generic linear model, minimization. Rows reference declared variables.
class MilpModel {
public:
    struct Variable {
        std::string name;
        double lb = 0.0;
        double ub = 0.0;
        bool is_binary = false;
    };
    struct Row {
        std::string name;
        std::vector<std::pair<int, double>> coeffs;
        RowSense sense = RowSense::GE;
        double rhs = 0.0;
    };

    int add_var(const std::string& name, double lb, double ub, bool binary = false);
    int add_binary(const std::string& name) { return add_var(name, 0.0, 1.0, true); }
    void add_row(const std::string& name, std::vector<std::pair<int, double>> coeffs, RowSense sense, double rhs);
    void set_objective(int var, double coeff);
    void fix_var(int var, double value);

    int num_vars() const { return static_cast<int>(vars_.size()); }
    int num_rows() const { return static_cast<int>(rows_.size()); }
    const std::vector<Variable>& vars() const { return vars_; }
    const std::vector<Row>& rows() const { return rows_; }
    const std::vector<double>& objective() const { return objective_; }
    Variable& var(int i) { return vars_[i]; }

    double row_activity(const Row& row, const std::vector<double>& x) const;
    bool is_feasible(const std::vector<double>& x, double tol = 1e-6) const;
    double objective_value(const std::vector<double>& x) const;

    // Standard LP-file text (Minimize / Subject To / Bounds / Binaries / End).
    std::string to_lp_format(const std::string& name = "model") const;

private:
    std::vector<Variable> vars_;
    std::vector<Row> rows_;
    std::vector<double> objective_;
};

struct MilpSolution {
    SolveStatus status = SolveStatus::NumericalFailure;
    double objective = 0.0;
    std::vector<double> values;
    double best_bound = -kInf;
    long node_count = 0;
};

struct SolveLimits {
    long max_nodes = 50'000'000;
    double max_seconds = kInf;
};

// Two-phase bounded-variable primal simplex. Integrality flags are ignored.
MilpSolution solve_lp(const MilpModel& model);

// Best-bound branch and bound over the binary variables.
MilpSolution solve_milp(const MilpModel& model, const SolveLimits& limits = {});

// Lexicographic extreme point of the optimal face: among assignments of the
// binary variables that keep the model feasible with objective <= value_bound,
// returns the one preferring prefer_one[j] at each index in order.
// Continuous variables are completed by an LP solve. Empty result = infeasible.
std::vector<double> lex_extreme_binary(const MilpModel& model, double value_bound,
                                       const std::vector<bool>& prefer_one);

}  // namespace valnet
