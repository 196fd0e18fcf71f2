#include "valnet/generator.hpp"

#include <cmath>
#include <string>

namespace valnet {

BilevelInstance generate_structured(const GeneratorConfig& cfg) {
    const int n_l = cfg.n_leader;
    const int n_f = cfg.n_follower < 0 ? cfg.n_leader : cfg.n_follower;
    const int m = cfg.m;
    const int m_l = cfg.m_leader < 0 ? cfg.m : cfg.m_leader;

    SplitMix64 rng(cfg.seed);
    BilevelInstance inst;
    inst.name = "structured_n" + std::to_string(n_l) + "_m" + std::to_string(m) + "_a" +
                std::to_string(cfg.alpha) + "_b" + std::to_string(cfg.beta).substr(0, 4) + "_s" +
                std::to_string(cfg.seed);
    inst.n_leader = n_l;
    inst.n_follower = n_f;
    inst.m = m;
    inst.m_leader = m_l;

    // Draw order is part of the format: c, p, d, A, B, b, Gx, Gy, h.
    inst.c.resize(n_l);
    for (int j = 0; j < n_l; ++j) inst.c[j] = static_cast<double>(rng.uniform_int(-100, -1));
    inst.p.resize(n_f);
    for (int j = 0; j < n_f; ++j) inst.p[j] = static_cast<double>(rng.uniform_int(-100, -1));
    inst.d.resize(n_f);
    for (int j = 0; j < n_f; ++j) inst.d[j] = static_cast<double>(rng.uniform_int(-50, 50));

    auto sparse_entry = [&rng, &cfg]() {
        if (rng.uniform01() < 0.8) return 0.0;
        return 5.0 * static_cast<double>(rng.uniform_int(0, cfg.alpha));
    };

    inst.A.assign(m, std::vector<double>(n_l, 0.0));
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n_l; ++j) inst.A[i][j] = sparse_entry();
    }
    inst.B.assign(m, std::vector<double>(n_f, 0.0));
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n_f; ++j) inst.B[i][j] = static_cast<double>(rng.uniform_int(0, 100));
    }
    inst.b.resize(m);
    for (int i = 0; i < m; ++i) {
        double row = 0.0;
        for (int j = 0; j < n_l; ++j) row += inst.A[i][j];
        for (int j = 0; j < n_f; ++j) row += inst.B[i][j];
        inst.b[i] = std::floor(cfg.beta * row);
    }

    inst.Gx.assign(m_l, std::vector<double>(n_l, 0.0));
    for (int i = 0; i < m_l; ++i) {
        for (int j = 0; j < n_l; ++j) inst.Gx[i][j] = sparse_entry();
    }
    inst.Gy.assign(m_l, std::vector<double>(n_f, 0.0));
    for (int i = 0; i < m_l; ++i) {
        for (int j = 0; j < n_f; ++j) inst.Gy[i][j] = static_cast<double>(rng.uniform_int(0, 100));
    }
    inst.h.resize(m_l);
    for (int i = 0; i < m_l; ++i) {
        double row = 0.0;
        for (int j = 0; j < n_l; ++j) row += inst.Gx[i][j];
        for (int j = 0; j < n_f; ++j) row += inst.Gy[i][j];
        inst.h[i] = std::floor(cfg.beta * row);
    }

    inst.row_scale.assign(m, 1.0);
    return inst;
}

std::size_t budget_schedule(int n_leader) {
    if (n_leader <= 150) return 50;
    if (n_leader <= 300) return 25;
    if (n_leader <= 500) return 16;
    if (n_leader <= 1000) return 8;
    return 4;
}

}  // namespace valnet
