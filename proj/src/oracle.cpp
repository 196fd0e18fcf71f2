#include "valnet/oracle.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace valnet {

namespace {

constexpr double kOracleInf = std::numeric_limits<double>::infinity();

double row_value(const std::vector<double>& row, std::uint64_t mask, int n) {
    double v = 0.0;
    for (int j = 0; j < n; ++j) {
        if (mask & (1ULL << j)) v += row[j];
    }
    return v;
}

}  // namespace

OracleResult brute_force_bilevel(const BilevelInstance& inst, std::uint64_t cap, bool dump_phi) {
    const int n_l = inst.n_leader;
    const int n_f = inst.n_follower;
    if (n_l + n_f >= 63 || (1ULL << (n_l + n_f)) > cap) {
        throw std::runtime_error("brute_force_bilevel: 2^(n_l+n_f) exceeds the enumeration cap");
    }
    const std::uint64_t nx = 1ULL << n_l;
    const std::uint64_t ny = 1ULL << n_f;

    // Precompute follower row activities per y mask.
    std::vector<std::vector<double>> by(inst.m, std::vector<double>(ny));
    std::vector<std::vector<double>> gy(inst.m_leader, std::vector<double>(ny));
    std::vector<double> dy(ny), py(ny);
    for (std::uint64_t ym = 0; ym < ny; ++ym) {
        for (int i = 0; i < inst.m; ++i) by[i][ym] = row_value(inst.B[i], ym, n_f);
        for (int i = 0; i < inst.m_leader; ++i) gy[i][ym] = row_value(inst.Gy[i], ym, n_f);
        dy[ym] = row_value(inst.d, ym, n_f);
        py[ym] = row_value(inst.p, ym, n_f);
    }

    OracleResult out;
    double best = kOracleInf;
    std::uint64_t best_x = 0, best_y = 0;
    if (dump_phi) out.phi_table.assign(nx, kOracleInf);

    for (std::uint64_t xm = 0; xm < nx; ++xm) {
        std::vector<double> ax(inst.m), gx(inst.m_leader);
        for (int i = 0; i < inst.m; ++i) ax[i] = row_value(inst.A[i], xm, n_l);
        for (int i = 0; i < inst.m_leader; ++i) gx[i] = row_value(inst.Gx[i], xm, n_l);

        // phi(x): only the interaction rows constrain the follower.
        double phi = kOracleInf;
        for (std::uint64_t ym = 0; ym < ny; ++ym) {
            bool ok = true;
            for (int i = 0; i < inst.m && ok; ++i) {
                if (ax[i] + by[i][ym] < inst.b[i] - 1e-9) ok = false;
            }
            if (ok && dy[ym] < phi) phi = dy[ym];
        }
        if (dump_phi) out.phi_table[xm] = phi;
        if (phi == kOracleInf) continue;

        double cx = row_value(inst.c, xm, n_l);
        for (std::uint64_t ym = 0; ym < ny; ++ym) {
            if (dy[ym] > phi + 1e-9) continue;  // follower optimality
            bool ok = true;
            for (int i = 0; i < inst.m && ok; ++i) {
                if (ax[i] + by[i][ym] < inst.b[i] - 1e-9) ok = false;
            }
            for (int i = 0; i < inst.m_leader && ok; ++i) {
                if (gx[i] + gy[i][ym] < inst.h[i] - 1e-9) ok = false;
            }
            if (!ok) continue;
            double val = cx + py[ym];
            if (val < best - 1e-12) {
                best = val;
                best_x = xm;
                best_y = ym;
            }
        }
    }

    if (best == kOracleInf) return out;  // infeasible bilevel instance
    out.feasible = true;
    out.value = best;
    out.x.resize(n_l);
    out.y.resize(n_f);
    for (int j = 0; j < n_l; ++j) out.x[j] = (best_x >> j) & 1ULL ? 1 : 0;
    for (int j = 0; j < n_f; ++j) out.y[j] = (best_y >> j) & 1ULL ? 1 : 0;
    return out;
}

}  // namespace valnet
