#include "valnet/milp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace valnet {

std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "Optimal";
        case SolveStatus::Infeasible: return "Infeasible";
        case SolveStatus::Unbounded: return "Unbounded";
        case SolveStatus::LimitReached: return "LimitReached";
        case SolveStatus::NumericalFailure: return "NumericalFailure";
    }
    return "Unknown";
}

int MilpModel::add_var(const std::string& name, double lb, double ub, bool binary) {
    if (lb > ub) throw std::invalid_argument("variable " + name + ": lb > ub");
    vars_.push_back(Variable{name, lb, ub, binary});
    objective_.push_back(0.0);
    return static_cast<int>(vars_.size()) - 1;
}

void MilpModel::add_row(const std::string& name, std::vector<std::pair<int, double>> coeffs, RowSense sense,
                        double rhs) {
    for (const auto& [v, coef] : coeffs) {
        (void)coef;
        if (v < 0 || v >= num_vars()) throw std::invalid_argument("row " + name + " references unknown variable");
    }
    rows_.push_back(Row{name, std::move(coeffs), sense, rhs});
}

void MilpModel::set_objective(int var, double coeff) { objective_[var] = coeff; }

void MilpModel::fix_var(int var, double value) {
    vars_[var].lb = value;
    vars_[var].ub = value;
}

double MilpModel::row_activity(const Row& row, const std::vector<double>& x) const {
    double a = 0.0;
    for (const auto& [v, coef] : row.coeffs) a += coef * x[v];
    return a;
}

bool MilpModel::is_feasible(const std::vector<double>& x, double tol) const {
    for (int j = 0; j < num_vars(); ++j) {
        if (x[j] < vars_[j].lb - tol || x[j] > vars_[j].ub + tol) return false;
    }
    for (const Row& row : rows_) {
        double a = row_activity(row, x);
        double scale = std::max(1.0, std::abs(row.rhs));
        switch (row.sense) {
            case RowSense::LE:
                if (a > row.rhs + tol * scale) return false;
                break;
            case RowSense::GE:
                if (a < row.rhs - tol * scale) return false;
                break;
            case RowSense::EQ:
                if (std::abs(a - row.rhs) > tol * scale) return false;
                break;
        }
    }
    return true;
}

double MilpModel::objective_value(const std::vector<double>& x) const {
    double v = 0.0;
    for (int j = 0; j < num_vars(); ++j) v += objective_[j] * x[j];
    return v;
}

std::string MilpModel::to_lp_format(const std::string& name) const {
    std::ostringstream os;
    os << "\\ " << name << "\n";
    os << "Minimize\n obj:";
    bool first = true;
    for (int j = 0; j < num_vars(); ++j) {
        if (objective_[j] == 0.0) continue;
        os << (objective_[j] >= 0 && !first ? " +" : " ") << objective_[j] << " " << vars_[j].name;
        first = false;
    }
    if (first) os << " 0 " << vars_[0].name;
    os << "\nSubject To\n";
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        const Row& r = rows_[i];
        os << " " << (r.name.empty() ? "r" + std::to_string(i) : r.name) << ":";
        bool f2 = true;
        for (const auto& [v, coef] : r.coeffs) {
            if (coef == 0.0) continue;
            os << (coef >= 0 && !f2 ? " +" : " ") << coef << " " << vars_[v].name;
            f2 = false;
        }
        if (f2) os << " 0 " << vars_[0].name;
        const char* op = r.sense == RowSense::LE ? "<=" : (r.sense == RowSense::GE ? ">=" : "=");
        os << " " << op << " " << r.rhs << "\n";
    }
    os << "Bounds\n";
    for (const Variable& v : vars_) {
        if (v.is_binary) continue;
        os << " " << v.lb << " <= " << v.name << " <= " << v.ub << "\n";
    }
    bool any_bin = false;
    for (const Variable& v : vars_) {
        if (v.is_binary) {
            if (!any_bin) os << "Binaries\n";
            any_bin = true;
            os << " " << v.name << "\n";
        }
    }
    os << "End\n";
    return os.str();
}

namespace {

constexpr double kPivTol = 1e-9;
constexpr double kCostTol = 1e-9;
constexpr double kFeasTol = 1e-7;

enum class ColStatus { Basic, AtLower, AtUpper };

// Dense bounded-variable two-phase primal simplex working on equality form
// rows + slack columns + artificial columns.
class Simplex {
public:
    Simplex(const MilpModel& model, const std::vector<double>& lb_over, const std::vector<double>& ub_over)
        : model_(model) {
        n_struct_ = model.num_vars();
        m_ = model.num_rows();
        n_total_ = n_struct_ + m_ /*slacks*/ + m_ /*artificials*/;

        lb_.assign(n_total_, 0.0);
        ub_.assign(n_total_, 0.0);
        for (int j = 0; j < n_struct_; ++j) {
            lb_[j] = lb_over[j];
            ub_[j] = ub_over[j];
        }
        for (int i = 0; i < m_; ++i) {
            int s = n_struct_ + i;
            switch (model.rows()[i].sense) {
                case RowSense::LE: lb_[s] = 0.0; ub_[s] = kInf; break;
                case RowSense::GE: lb_[s] = -kInf; ub_[s] = 0.0; break;
                case RowSense::EQ: lb_[s] = 0.0; ub_[s] = 0.0; break;
            }
        }

        tab_.assign(m_, std::vector<double>(n_total_, 0.0));
        rhs_.assign(m_, 0.0);
        for (int i = 0; i < m_; ++i) {
            const auto& row = model.rows()[i];
            for (const auto& [v, coef] : row.coeffs) tab_[i][v] += coef;
            tab_[i][n_struct_ + i] = 1.0;
            rhs_[i] = row.rhs;
        }

        status_.assign(n_total_, ColStatus::AtLower);
        value_.assign(n_total_, 0.0);
        for (int j = 0; j < n_struct_ + m_; ++j) {
            if (std::isfinite(lb_[j])) {
                status_[j] = ColStatus::AtLower;
                value_[j] = lb_[j];
            } else if (std::isfinite(ub_[j])) {
                status_[j] = ColStatus::AtUpper;
                value_[j] = ub_[j];
            } else {
                infeasible_setup_ = true;  // free column unsupported
                return;
            }
        }
        for (int j = 0; j < n_struct_; ++j) {
            if (lb_[j] > ub_[j] + 1e-12) {
                box_empty_ = true;
                return;
            }
        }

        basis_.assign(m_, -1);
        xb_.assign(m_, 0.0);
        for (int i = 0; i < m_; ++i) {
            double resid = rhs_[i];
            for (int j = 0; j < n_struct_ + m_; ++j) {
                if (value_[j] != 0.0) resid -= tab_[i][j] * value_[j];
            }
            int a = n_struct_ + m_ + i;
            lb_[a] = 0.0;
            ub_[a] = kInf;
            if (resid >= 0) {
                tab_[i][a] = 1.0;
            } else {
                tab_[i][a] = -1.0;
                resid = -resid;
            }
            basis_[i] = a;
            xb_[i] = resid;
            status_[a] = ColStatus::Basic;
            // Row is stored pre-divided so that the basic column is +1.
            if (tab_[i][a] < 0) {
                for (int j = 0; j < n_total_; ++j) tab_[i][j] = -tab_[i][j];
            }
        }
    }

    SolveStatus run(const std::vector<double>& objective) {
        if (box_empty_) return SolveStatus::Infeasible;
        if (infeasible_setup_) return SolveStatus::NumericalFailure;

        // Phase 1: minimize sum of artificials.
        std::vector<double> art_cost(n_total_, 0.0);
        for (int i = 0; i < m_; ++i) art_cost[n_struct_ + m_ + i] = 1.0;
        SolveStatus ph1 = optimize(art_cost, true);
        if (ph1 != SolveStatus::Optimal) return ph1;
        double art_sum = 0.0;
        for (int i = 0; i < m_; ++i) {
            if (basis_[i] >= n_struct_ + m_) art_sum += xb_[i];
        }
        if (art_sum > kFeasTol * std::max(1.0, rhs_scale())) return SolveStatus::Infeasible;

        // Drive leftover artificials out of the basis where possible.
        for (int i = 0; i < m_; ++i) {
            if (basis_[i] < n_struct_ + m_) continue;
            int q = -1;
            for (int j = 0; j < n_struct_ + m_; ++j) {
                if (status_[j] != ColStatus::Basic && std::abs(tab_[i][j]) > 1e-7) {
                    q = j;
                    break;
                }
            }
            if (q >= 0) {
                int art = basis_[i];
                pivot(i, q, value_at(q));
                status_[art] = ColStatus::AtLower;
            }
        }
        // Any artificial still basic sits on a redundant row; freeze it at zero.
        for (int j = n_struct_ + m_; j < n_total_; ++j) ub_[j] = 0.0;

        std::vector<double> cost(n_total_, 0.0);
        for (int j = 0; j < n_struct_; ++j) cost[j] = objective[j];
        return optimize(cost, false);
    }

    std::vector<double> extract() const {
        std::vector<double> x(n_struct_, 0.0);
        for (int j = 0; j < n_struct_; ++j) x[j] = value_at(j);
        for (int i = 0; i < m_; ++i) {
            if (basis_[i] < n_struct_) x[basis_[i]] = xb_[i];
        }
        return x;
    }

private:
    double rhs_scale() const {
        double s = 1.0;
        for (double v : rhs_) s = std::max(s, std::abs(v));
        return s;
    }

    double value_at(int j) const {
        if (status_[j] == ColStatus::AtLower) return lb_[j];
        if (status_[j] == ColStatus::AtUpper) return ub_[j];
        for (int i = 0; i < m_; ++i) {
            if (basis_[i] == j) return xb_[i];
        }
        return 0.0;
    }

    void pivot(int r, int q, double enter_value) {
        double piv = tab_[r][q];
        for (int j = 0; j < n_total_; ++j) tab_[r][j] /= piv;
        for (int i = 0; i < m_; ++i) {
            if (i == r) continue;
            double f = tab_[i][q];
            if (f == 0.0) continue;
            for (int j = 0; j < n_total_; ++j) tab_[i][j] -= f * tab_[r][j];
        }
        basis_[r] = q;
        status_[q] = ColStatus::Basic;
        xb_[r] = enter_value;
    }

    // Minimize cost over the current basis. phase1 restricts artificials.
    SolveStatus optimize(const std::vector<double>& cost, bool phase1) {
        long degenerate = 0;
        bool bland = false;
        for (long iter = 0;; ++iter) {
            if (iter > 20000L + 200L * static_cast<long>(n_total_)) return SolveStatus::NumericalFailure;

            // Reduced costs: d_j = c_j - c_B * tab[:,j].
            std::vector<double> cb(m_);
            for (int i = 0; i < m_; ++i) cb[i] = cost[basis_[i]];

            int q = -1;
            double best = 0.0;
            bool enter_from_lower = true;
            for (int j = 0; j < n_total_; ++j) {
                if (status_[j] == ColStatus::Basic) continue;
                if (!phase1 && j >= n_struct_ + m_) continue;  // artificials frozen
                if (lb_[j] == ub_[j]) continue;                // fixed column
                double dj = cost[j];
                for (int i = 0; i < m_; ++i) {
                    double t = tab_[i][j];
                    if (t != 0.0) dj -= cb[i] * t;
                }
                bool eligible_low = status_[j] == ColStatus::AtLower && dj < -kCostTol;
                bool eligible_up = status_[j] == ColStatus::AtUpper && dj > kCostTol;
                if (!eligible_low && !eligible_up) continue;
                double score = std::abs(dj);
                if (bland) {
                    q = j;
                    enter_from_lower = eligible_low;
                    break;
                }
                if (score > best + 1e-15) {
                    best = score;
                    q = j;
                    enter_from_lower = eligible_low;
                }
            }
            if (q < 0) return SolveStatus::Optimal;

            // Ratio test. Entering from lower increases x_q by t; from upper
            // decreases by t. Basic values move by -t*col or +t*col.
            double sign = enter_from_lower ? 1.0 : -1.0;
            double t_max = kInf;
            int r = -1;
            bool leave_at_lower = true;
            for (int i = 0; i < m_; ++i) {
                double alpha = sign * tab_[i][q];
                int bj = basis_[i];
                if (alpha > kPivTol) {
                    if (!std::isfinite(lb_[bj])) continue;
                    double t = (xb_[i] - lb_[bj]) / alpha;
                    if (t < t_max - 1e-12 || (t < t_max + 1e-12 && (r < 0 || (bland && bj < basis_[r])))) {
                        t_max = std::max(t, 0.0);
                        r = i;
                        leave_at_lower = true;
                    }
                } else if (alpha < -kPivTol) {
                    if (!std::isfinite(ub_[bj])) continue;
                    double t = (ub_[bj] - xb_[i]) / (-alpha);
                    if (t < t_max - 1e-12 || (t < t_max + 1e-12 && (r < 0 || (bland && bj < basis_[r])))) {
                        t_max = std::max(t, 0.0);
                        r = i;
                        leave_at_lower = false;
                    }
                }
            }
            double flip = std::isfinite(lb_[q]) && std::isfinite(ub_[q]) ? ub_[q] - lb_[q] : kInf;
            if (flip < t_max - 1e-12) {
                // Bound flip, no basis change.
                for (int i = 0; i < m_; ++i) xb_[i] -= sign * flip * tab_[i][q];
                status_[q] = enter_from_lower ? ColStatus::AtUpper : ColStatus::AtLower;
                continue;
            }
            if (r < 0) return SolveStatus::Unbounded;

            if (t_max <= 1e-12) {
                if (++degenerate > 1000) bland = true;
            } else {
                degenerate = 0;
            }

            int leaving = basis_[r];
            double enter_value = (enter_from_lower ? lb_[q] : ub_[q]) + sign * t_max;
            for (int i = 0; i < m_; ++i) {
                if (i != r) xb_[i] -= sign * t_max * tab_[i][q];
            }
            pivot(r, q, enter_value);
            status_[leaving] = leave_at_lower ? ColStatus::AtLower : ColStatus::AtUpper;
            // Snap basic values drifting marginally outside their bounds.
            for (int i = 0; i < m_; ++i) {
                int bj = basis_[i];
                if (std::isfinite(lb_[bj]) && xb_[i] < lb_[bj] && xb_[i] > lb_[bj] - 1e-9) xb_[i] = lb_[bj];
                if (std::isfinite(ub_[bj]) && xb_[i] > ub_[bj] && xb_[i] < ub_[bj] + 1e-9) xb_[i] = ub_[bj];
            }
        }
    }

    const MilpModel& model_;
    int n_struct_ = 0, m_ = 0, n_total_ = 0;
    std::vector<std::vector<double>> tab_;
    std::vector<double> rhs_;
    std::vector<double> lb_, ub_;
    std::vector<ColStatus> status_;
    std::vector<double> value_;  // initial nonbasic values
    std::vector<int> basis_;
    std::vector<double> xb_;
    bool infeasible_setup_ = false;
    bool box_empty_ = false;
};

MilpSolution solve_lp_bounds(const MilpModel& model, const std::vector<double>& lb, const std::vector<double>& ub) {
    MilpSolution sol;
    if (model.num_vars() == 0) {
        sol.status = SolveStatus::Optimal;
        sol.objective = 0.0;
        return sol;
    }
    Simplex spx(model, lb, ub);
    SolveStatus st = spx.run(model.objective());
    sol.status = st;
    if (st == SolveStatus::Optimal) {
        sol.values = spx.extract();
        sol.objective = model.objective_value(sol.values);
        sol.best_bound = sol.objective;
        // Internal audit: never hand back an infeasible "optimum".
        if (!model.is_feasible(sol.values, 1e-5)) {
            sol.status = SolveStatus::NumericalFailure;
        }
        for (int j = 0; j < model.num_vars() && sol.status == SolveStatus::Optimal; ++j) {
            if (sol.values[j] < lb[j] - 1e-5 || sol.values[j] > ub[j] + 1e-5) {
                sol.status = SolveStatus::NumericalFailure;
            }
        }
    }
    return sol;
}

}  // namespace

MilpSolution solve_lp(const MilpModel& model) {
    std::vector<double> lb(model.num_vars()), ub(model.num_vars());
    for (int j = 0; j < model.num_vars(); ++j) {
        lb[j] = model.vars()[j].lb;
        ub[j] = model.vars()[j].ub;
    }
    return solve_lp_bounds(model, lb, ub);
}

namespace {

struct BnbNode {
    double bound;
    long id;
    std::vector<std::pair<int, int>> fixes;
};
struct BnbNodeCmp {
    bool operator()(const BnbNode& a, const BnbNode& b) const {
        if (a.bound != b.bound) return a.bound > b.bound;  // min-heap on bound
        return a.id > b.id;
    }
};

}  // namespace

MilpSolution solve_milp(const MilpModel& model, const SolveLimits& limits) {
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&t0]() {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    std::vector<double> lb0(model.num_vars()), ub0(model.num_vars());
    std::vector<int> binaries;
    for (int j = 0; j < model.num_vars(); ++j) {
        lb0[j] = model.vars()[j].lb;
        ub0[j] = model.vars()[j].ub;
        if (model.vars()[j].is_binary) binaries.push_back(j);
    }

    MilpSolution out;
    out.status = SolveStatus::Infeasible;
    out.best_bound = -kInf;

    double incumbent = kInf;
    std::vector<double> incumbent_values;

    std::priority_queue<BnbNode, std::vector<BnbNode>, BnbNodeCmp> open;
    long next_id = 0;
    open.push(BnbNode{-kInf, next_id++, {}});
    long nodes = 0;
    bool limit_hit = false;

    while (!open.empty()) {
        if (nodes >= limits.max_nodes || elapsed() > limits.max_seconds) {
            limit_hit = true;
            break;
        }
        BnbNode node = open.top();
        open.pop();
        if (node.bound > incumbent - 1e-9 * (1.0 + std::abs(incumbent)) && std::isfinite(incumbent)) continue;
        ++nodes;

        std::vector<double> lb = lb0, ub = ub0;
        for (const auto& [v, val] : node.fixes) {
            lb[v] = val;
            ub[v] = val;
        }
        MilpSolution rel = solve_lp_bounds(model, lb, ub);
        if (rel.status == SolveStatus::Infeasible) continue;
        if (rel.status == SolveStatus::Unbounded) {
            out.status = SolveStatus::Unbounded;
            out.node_count = nodes;
            return out;
        }
        if (rel.status != SolveStatus::Optimal) {
            out.status = SolveStatus::NumericalFailure;
            out.node_count = nodes;
            return out;
        }
        if (rel.objective > incumbent - 1e-9 * (1.0 + std::abs(incumbent)) && std::isfinite(incumbent)) continue;

        int branch_var = -1;
        double most_frac = 1e-6;
        for (int j : binaries) {
            double f = rel.values[j] - std::floor(rel.values[j]);
            double score = std::min(f, 1.0 - f);
            if (score > most_frac) {
                most_frac = score;
                branch_var = j;
            }
        }
        if (branch_var < 0) {
            // Integral candidate: round and re-verify exactly.
            std::vector<double> cand = rel.values;
            for (int j : binaries) cand[j] = std::round(cand[j]);
            if (model.is_feasible(cand, 1e-6)) {
                double obj = model.objective_value(cand);
                if (obj < incumbent - 1e-12) {
                    incumbent = obj;
                    incumbent_values = cand;
                }
            }
            continue;
        }
        for (int val : {0, 1}) {
            BnbNode child;
            child.bound = rel.objective;
            child.id = next_id++;
            child.fixes = node.fixes;
            child.fixes.emplace_back(branch_var, val);
            open.push(child);
        }
    }

    out.node_count = nodes;
    if (limit_hit) {
        out.status = SolveStatus::LimitReached;
        double bound = std::isfinite(incumbent) ? incumbent : kInf;
        std::priority_queue<BnbNode, std::vector<BnbNode>, BnbNodeCmp> rest = std::move(open);
        if (!rest.empty()) bound = std::min(bound, rest.top().bound);
        out.best_bound = bound;
        if (std::isfinite(incumbent)) {
            out.objective = incumbent;
            out.values = incumbent_values;
        }
        return out;
    }
    if (std::isfinite(incumbent)) {
        out.status = SolveStatus::Optimal;
        out.objective = incumbent;
        out.values = incumbent_values;
        out.best_bound = incumbent;
    }
    return out;
}

namespace {

bool lex_dfs(const MilpModel& probe, const std::vector<int>& binaries, std::size_t depth,
             std::vector<double>& lb, std::vector<double>& ub, const std::vector<bool>& prefer_one,
             std::vector<double>& result) {
    if (depth == binaries.size()) {
        MilpSolution fin = solve_lp_bounds(probe, lb, ub);
        if (fin.status != SolveStatus::Optimal) return false;
        result = fin.values;
        for (int j : binaries) result[j] = std::round(result[j]);
        return probe.is_feasible(result, 1e-6);
    }
    int v = binaries[depth];
    int first = prefer_one[depth] ? 1 : 0;
    for (int attempt = 0; attempt < 2; ++attempt) {
        int val = attempt == 0 ? first : 1 - first;
        double save_lb = lb[v], save_ub = ub[v];
        if (val < save_lb - 1e-9 || val > save_ub + 1e-9) continue;
        lb[v] = val;
        ub[v] = val;
        MilpSolution rel = solve_lp_bounds(probe, lb, ub);
        if (rel.status == SolveStatus::Optimal) {
            if (lex_dfs(probe, binaries, depth + 1, lb, ub, prefer_one, result)) return true;
        }
        lb[v] = save_lb;
        ub[v] = save_ub;
    }
    return false;
}

}  // namespace

std::vector<double> lex_extreme_binary(const MilpModel& model, double value_bound,
                                       const std::vector<bool>& prefer_one) {
    MilpModel probe = model;
    std::vector<std::pair<int, double>> obj_row;
    for (int j = 0; j < model.num_vars(); ++j) {
        if (model.objective()[j] != 0.0) obj_row.emplace_back(j, model.objective()[j]);
    }
    if (!obj_row.empty()) {
        probe.add_row("lex_value_bound", obj_row, RowSense::LE, value_bound);
    }

    std::vector<int> binaries;
    for (int j = 0; j < probe.num_vars(); ++j) {
        if (probe.vars()[j].is_binary) binaries.push_back(j);
    }
    if (prefer_one.size() != binaries.size()) {
        throw std::invalid_argument("lex_extreme_binary: one preference per binary variable required");
    }
    std::vector<double> lb(probe.num_vars()), ub(probe.num_vars());
    for (int j = 0; j < probe.num_vars(); ++j) {
        lb[j] = probe.vars()[j].lb;
        ub[j] = probe.vars()[j].ub;
    }
    std::vector<double> result;
    if (!lex_dfs(probe, binaries, 0, lb, ub, prefer_one, result)) return {};
    return result;
}

}  // namespace valnet
