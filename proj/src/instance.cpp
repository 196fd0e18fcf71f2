#include "valnet/instance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace valnet {

namespace {

StateInt checked_add(StateInt a, StateInt b) {
    StateInt out;
    if (__builtin_add_overflow(a, b, &out)) {
        throw std::overflow_error("state arithmetic overflow");
    }
    return out;
}

bool near_integer(double v, double tol) { return std::abs(v - std::llround(v)) <= tol; }

// Continued-fraction rational approximation with bounded denominator.
// Returns false when v is not close to any p/q with q <= max_den.
bool to_rational(double v, std::int64_t max_den, std::int64_t& num, std::int64_t& den) {
    if (!std::isfinite(v)) return false;
    double x = v;
    std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    for (int iter = 0; iter < 64; ++iter) {
        double fl = std::floor(x);
        if (fl > 9.2e18 || fl < -9.2e18) return false;
        std::int64_t a = static_cast<std::int64_t>(fl);
        std::int64_t p2, q2;
        if (__builtin_mul_overflow(a, p1, &p2) || __builtin_add_overflow(p2, p0, &p2)) return false;
        if (__builtin_mul_overflow(a, q1, &q2) || __builtin_add_overflow(q2, q0, &q2)) return false;
        if (q2 > max_den) break;
        p0 = p1; q0 = q1; p1 = p2; q1 = q2;
        double rem = x - static_cast<double>(a);
        if (std::abs(static_cast<double>(p1) / static_cast<double>(q1) - v) <= 1e-9 * std::max(1.0, std::abs(v))) {
            num = p1; den = q1;
            return true;
        }
        if (rem < 1e-12) break;
        x = 1.0 / rem;
    }
    if (q1 >= 1 && std::abs(static_cast<double>(p1) / static_cast<double>(q1) - v) <= 1e-9 * std::max(1.0, std::abs(v))) {
        num = p1; den = q1;
        return true;
    }
    return false;
}

std::int64_t lcm_checked(std::int64_t a, std::int64_t b) {
    std::int64_t g = std::gcd(a, b);
    std::int64_t out;
    if (__builtin_mul_overflow(a / g, b, &out)) throw std::overflow_error("lcm overflow");
    return out;
}

}  // namespace

StateVector StateVector::plus(const std::vector<StateInt>& column, int label) const {
    StateVector out = *this;
    out.add_in_place(column, label);
    return out;
}

void StateVector::add_in_place(const std::vector<StateInt>& column, int label) {
    if (label == 0) return;
    for (std::size_t i = 0; i < comps_.size(); ++i) {
        comps_[i] = checked_add(comps_[i], column[i]);
    }
}

bool StateVector::all_leq(const StateVector& o) const {
    for (std::size_t i = 0; i < comps_.size(); ++i) {
        if (comps_[i] > o.comps_[i]) return false;
    }
    return true;
}

std::string StateVector::str() const {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < comps_.size(); ++i) {
        if (i) os << ",";
        os << comps_[i];
    }
    os << ")";
    return os.str();
}

std::vector<StateInt> BilevelInstance::a_column(int j) const {
    std::vector<StateInt> col(m);
    for (int i = 0; i < m; ++i) {
        double v = A[i][j];
        if (!near_integer(v, 1e-9)) {
            throw std::runtime_error("interaction matrix A is not integral; run scale_to_integer first");
        }
        col[i] = std::llround(v);
    }
    return col;
}

std::vector<StateInt> BilevelInstance::b_int() const {
    std::vector<StateInt> out(m);
    for (int i = 0; i < m; ++i) out[i] = std::llround(b[i]);
    return out;
}

std::vector<std::vector<StateInt>> BilevelInstance::B_int() const {
    std::vector<std::vector<StateInt>> out(m, std::vector<StateInt>(n_follower));
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n_follower; ++j) out[i][j] = std::llround(B[i][j]);
    }
    return out;
}

StateVector BilevelInstance::state_of(const std::vector<int>& x) const {
    StateVector s(static_cast<std::size_t>(m));
    for (int j = 0; j < n_leader; ++j) {
        if (x[j]) s.add_in_place(a_column(j), 1);
    }
    return s;
}

bool BilevelInstance::interaction_integral(double tol) const {
    for (int i = 0; i < m; ++i) {
        for (double v : A[i]) {
            if (!near_integer(v, tol)) return false;
        }
        for (double v : B[i]) {
            if (!near_integer(v, tol)) return false;
        }
        if (!near_integer(b[i], tol)) return false;
    }
    return true;
}

std::vector<std::string> validate_instance(const BilevelInstance& inst) {
    std::vector<std::string> report;
    auto bad = [&report](const std::string& msg) { report.push_back(msg); };

    if (inst.n_leader < 1) bad("n_leader must be >= 1");
    if (inst.n_follower < 1) bad("n_follower must be >= 1");
    if (inst.m < 1) bad("m must be >= 1");
    if (inst.m_leader < 0) bad("m_leader must be >= 0");

    auto check_matrix = [&bad](const std::vector<std::vector<double>>& M, int rows, int cols, const std::string& name) {
        if (static_cast<int>(M.size()) != rows) {
            bad(name + ": expected " + std::to_string(rows) + " rows, got " + std::to_string(M.size()));
            return;
        }
        for (std::size_t i = 0; i < M.size(); ++i) {
            if (static_cast<int>(M[i].size()) != cols) {
                bad(name + " row " + std::to_string(i) + ": expected " + std::to_string(cols) +
                    " columns, got " + std::to_string(M[i].size()));
            }
        }
    };
    auto check_vector = [&bad](const std::vector<double>& v, int len, const std::string& name) {
        if (static_cast<int>(v.size()) != len) {
            bad(name + ": expected length " + std::to_string(len) + ", got " + std::to_string(v.size()));
        }
    };

    check_vector(inst.c, inst.n_leader, "c");
    check_vector(inst.p, inst.n_follower, "p");
    check_vector(inst.d, inst.n_follower, "d");
    check_matrix(inst.A, inst.m, inst.n_leader, "A");
    check_matrix(inst.B, inst.m, inst.n_follower, "B");
    check_vector(inst.b, inst.m, "b");
    check_matrix(inst.Gx, inst.m_leader, inst.n_leader, "Gx");
    check_matrix(inst.Gy, inst.m_leader, inst.n_follower, "Gy");
    check_vector(inst.h, inst.m_leader, "h");

    if (report.empty() && !inst.interaction_integral()) {
        bad("interaction data (A, B, b) is not integral; apply scale_to_integer");
    }
    return report;
}

BilevelInstance scale_to_integer(const BilevelInstance& inst) {
    BilevelInstance out = inst;
    out.row_scale.assign(inst.m, 1.0);
    for (int i = 0; i < inst.m; ++i) {
        std::vector<double> row = inst.A[i];
        row.insert(row.end(), inst.B[i].begin(), inst.B[i].end());
        row.push_back(inst.b[i]);

        std::int64_t factor = 1;
        for (double v : row) {
            std::int64_t num = 0, den = 1;
            if (!to_rational(v, 1000000, num, den)) {
                throw std::runtime_error("interaction row " + std::to_string(i) +
                                         " has an entry with no small rational form");
            }
            try {
                factor = lcm_checked(factor, den);
            } catch (const std::overflow_error&) {
                throw std::runtime_error("interaction row " + std::to_string(i) +
                                         " needs a scaling factor beyond the integer range");
            }
        }
        if (factor == 1) continue;

        auto scale = [&](double v) {
            double s = v * static_cast<double>(factor);
            double r = std::llround(s);
            if (std::abs(s - r) > 1e-6 * std::max(1.0, std::abs(s))) {
                throw std::runtime_error("interaction row " + std::to_string(i) + " did not scale to integers");
            }
            if (std::abs(r) > 9.0e15) {
                throw std::runtime_error("interaction row " + std::to_string(i) + " overflows after scaling");
            }
            return r;
        };
        for (int j = 0; j < inst.n_leader; ++j) out.A[i][j] = scale(inst.A[i][j]);
        for (int j = 0; j < inst.n_follower; ++j) out.B[i][j] = scale(inst.B[i][j]);
        out.b[i] = scale(inst.b[i]);
        out.row_scale[i] = static_cast<double>(factor);
    }
    return out;
}

BilevelInstance permute_leader_variables(const BilevelInstance& inst, const std::vector<int>& perm) {
    if (static_cast<int>(perm.size()) != inst.n_leader) {
        throw std::invalid_argument("permutation length must equal n_leader");
    }
    BilevelInstance out = inst;
    for (int k = 0; k < inst.n_leader; ++k) {
        int j = perm[k];
        out.c[k] = inst.c[j];
        for (int i = 0; i < inst.m; ++i) out.A[i][k] = inst.A[i][j];
        for (int i = 0; i < inst.m_leader; ++i) out.Gx[i][k] = inst.Gx[i][j];
    }
    return out;
}

std::vector<int> coefficient_sum_order(const BilevelInstance& inst) {
    std::vector<double> sums(inst.n_leader, 0.0);
    for (int i = 0; i < inst.m; ++i) {
        for (int j = 0; j < inst.n_leader; ++j) sums[j] += inst.A[i][j];
    }
    std::vector<int> order(inst.n_leader);
    for (int j = 0; j < inst.n_leader; ++j) order[j] = j;
    std::stable_sort(order.begin(), order.end(), [&sums](int a, int b) { return sums[a] > sums[b]; });
    return order;
}

InteractionStats interaction_stats(const BilevelInstance& inst, std::size_t sum_cap) {
    InteractionStats stats;
    std::set<double> values;
    std::size_t nnz = 0;
    for (int i = 0; i < inst.m; ++i) {
        for (int j = 0; j < inst.n_leader; ++j) {
            if (inst.A[i][j] != 0.0) {
                values.insert(inst.A[i][j]);
                ++nnz;
            }
        }
    }
    stats.alpha = static_cast<int>(values.size());
    stats.tau = static_cast<double>(nnz) / (static_cast<double>(inst.m) * static_cast<double>(inst.n_leader));

    stats.subset_sums.reserve(inst.m);
    for (int i = 0; i < inst.m; ++i) {
        std::set<StateInt> sums{0};
        for (int j = 0; j < inst.n_leader; ++j) {
            StateInt a = std::llround(inst.A[i][j]);
            if (a == 0) continue;
            std::set<StateInt> next = sums;
            for (StateInt s : sums) next.insert(s + a);
            sums.swap(next);
            if (sums.size() > sum_cap) break;
        }
        stats.subset_sums.push_back(std::min(sums.size(), sum_cap));
    }
    return stats;
}

}  // namespace valnet
