#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace valnet {

using StateInt = std::int64_t;

// m-dimensional integer state s = A*x. Arithmetic is exact and overflow-checked.
class StateVector {
public:
    StateVector() = default;
    explicit StateVector(std::size_t dim) : comps_(dim, 0) {}
    explicit StateVector(std::vector<StateInt> comps) : comps_(std::move(comps)) {}

    std::size_t dim() const { return comps_.size(); }
    StateInt operator[](std::size_t i) const { return comps_[i]; }
    StateInt& operator[](std::size_t i) { return comps_[i]; }
    const std::vector<StateInt>& components() const { return comps_; }

    // s + column*label, checked. Throws std::overflow_error on wrap.
    StateVector plus(const std::vector<StateInt>& column, int label) const;
    void add_in_place(const std::vector<StateInt>& column, int label);

    bool operator==(const StateVector& o) const { return comps_ == o.comps_; }
    bool operator!=(const StateVector& o) const { return comps_ != o.comps_; }
    bool operator<(const StateVector& o) const { return comps_ < o.comps_; }
    bool all_leq(const StateVector& o) const;

    std::string str() const;

private:
    std::vector<StateInt> comps_;
};

struct StateVectorHash {
    std::size_t operator()(const StateVector& s) const {
        std::size_t h = 0x9e3779b97f4a7c15ULL;
        for (StateInt v : s.components()) {
            h ^= std::hash<StateInt>()(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        }
        return h;
    }
};

// A bilevel instance in the internal convention: both objectives minimize and
// every constraint row reads ">= rhs". Interaction data (A, B, b) is expected
// to be integral; scale_to_integer() brings rational rows to that form.
struct BilevelInstance {
    std::string name;
    int n_leader = 0;    // leader binaries x
    int n_follower = 0;  // follower binaries y
    int m = 0;           // interaction rows
    int m_leader = 0;    // leader-only rows

    std::vector<double> c;  // leader objective on x
    std::vector<double> p;  // leader objective on y
    std::vector<double> d;  // follower objective on y

    std::vector<std::vector<double>> A;  // m x n_leader
    std::vector<std::vector<double>> B;  // m x n_follower
    std::vector<double> b;               // m

    std::vector<std::vector<double>> Gx;  // m_leader x n_leader
    std::vector<std::vector<double>> Gy;  // m_leader x n_follower
    std::vector<double> h;                // m_leader

    // Row factors applied by scale_to_integer (1.0 when untouched).
    std::vector<double> row_scale;

    // j-th column of A as exact integers. Requires integral interaction data.
    std::vector<StateInt> a_column(int j) const;
    std::vector<StateInt> b_int() const;
    std::vector<std::vector<StateInt>> B_int() const;

    StateVector state_of(const std::vector<int>& x) const;

    bool interaction_integral(double tol = 1e-9) const;
};

struct InteractionStats {
    int alpha = 0;                       // distinct nonzero coefficient values of A
    double tau = 0.0;                    // nnz(A) / (m * n_leader)
    std::vector<std::size_t> subset_sums;  // per row: distinct subset-sum count (capped)
};

std::vector<std::string> validate_instance(const BilevelInstance& inst);

// Scales each interaction row by the least common multiple of its entries'
// denominators so that A, B, b become integral. The feasible set is unchanged.
// Throws std::runtime_error naming the row when no safe factor exists.
BilevelInstance scale_to_integer(const BilevelInstance& inst);

InteractionStats interaction_stats(const BilevelInstance& inst, std::size_t sum_cap = 1000000);

// Permutes the leader variables (columns of A and Gx, entries of c).
// perm[k] is the original index placed at position k.
BilevelInstance permute_leader_variables(const BilevelInstance& inst, const std::vector<int>& perm);

// Leader order by decreasing column-coefficient sum of A (ties keep the
// native order); an alternative compilation order for network builders.
std::vector<int> coefficient_sum_order(const BilevelInstance& inst);

}  // namespace valnet
