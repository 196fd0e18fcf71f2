#include "valnet/approx.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace valnet {

std::vector<StateInt> feasibility_floor(const BilevelInstance& inst) {
    std::vector<StateInt> v(inst.m, 0);
    auto b_int = inst.b_int();
    auto B = inst.B_int();
    for (int i = 0; i < inst.m; ++i) {
        StateInt max_row = 0;
        for (int j = 0; j < inst.n_follower; ++j) max_row += std::max<StateInt>(B[i][j], 0);
        v[i] = b_int[i] - max_row;
    }
    return v;
}

bool prune_infeasible_rect(const std::vector<StateInt>& floor_v, const Hyperrectangle& r) {
    for (std::size_t i = 0; i < floor_v.size(); ++i) {
        if (r.hi[i] < floor_v[i]) return true;
    }
    return false;
}

bool prune_infeasible_rect(const BilevelInstance& inst, const Hyperrectangle& r) {
    return prune_infeasible_rect(feasibility_floor(inst), r);
}

double follower_value_upper_bound(const BilevelInstance& inst) {
    double m = 0.0;
    for (double v : inst.d) m += std::max(v, 0.0);
    return m + 1.0;
}

namespace {

struct Cand {
    Hyperrectangle rect;
    double lp = 0.0;  // longest root path under leader-objective arc lengths
    int parent = -1;  // union-find alias after merges
};

int find_rep(std::vector<Cand>& cands, int i) {
    while (cands[i].parent >= 0) {
        if (cands[cands[i].parent].parent >= 0) cands[i].parent = cands[cands[i].parent].parent;
        i = cands[i].parent;
    }
    return i;
}

bool rect_lex_greater(const Hyperrectangle& a, const Hyperrectangle& b) {
    if (a.lo.components() != b.lo.components()) return b.lo < a.lo;
    return b.hi < a.hi;
}

// Merge the layer down to the budget, returning the surviving candidate ids
// in final order. Products alias their members via Cand::parent.
std::vector<int> merge_layer(std::vector<Cand>& cands, std::vector<int> live, const MergePolicy& policy) {
    if (live.size() <= policy.budget) return live;

    if (policy.strategy == MergePolicy::Strategy::LongestPathOrder) {
        std::stable_sort(live.begin(), live.end(), [&](int a, int b) {
            if (cands[a].lp != cands[b].lp) return cands[a].lp > cands[b].lp;
            return rect_lex_greater(cands[a].rect, cands[b].rect);
        });
    }

    while (live.size() > policy.budget) {
        std::size_t pick = 0;
        if (policy.strategy == MergePolicy::Strategy::LongestPathOrder) {
            double best = kInf;
            for (std::size_t i = 0; i + 1 < live.size(); ++i) {
                double key = std::max(cands[live[i]].lp, cands[live[i + 1]].lp);
                if (key < best - 1e-12) {
                    best = key;
                    pick = i;
                }
            }
        }
        int a = live[pick], b = live[pick + 1];
        Cand merged;
        merged.rect = merge_rects(cands[a].rect, cands[b].rect);
        merged.lp = std::max(cands[a].lp, cands[b].lp);
        int id = static_cast<int>(cands.size());
        cands.push_back(merged);
        cands[a].parent = id;
        cands[b].parent = id;
        live[pick] = id;
        live.erase(live.begin() + static_cast<long>(pick) + 1);
    }
    return live;
}

}  // namespace

ValueNetwork build_approx(const FollowerOracle& oracle, const MergePolicy& policy) {
    const BilevelInstance& inst = oracle.instance();
    const int n = inst.n_leader;
    if (policy.budget < 1) throw std::invalid_argument("merge budget must be >= 1");

    const std::vector<StateInt> floor_v = feasibility_floor(inst);

    // Suffix sums of the positive parts of A's columns: the most any
    // remaining choice can still add to a state component.
    std::vector<std::vector<StateInt>> pos_slack(n + 1, std::vector<StateInt>(inst.m, 0));
    for (int j = n - 1; j >= 0; --j) {
        auto col = inst.a_column(j);
        for (int i = 0; i < inst.m; ++i) {
            pos_slack[j][i] = pos_slack[j + 1][i] + std::max<StateInt>(col[i], 0);
        }
    }
    auto provably_infeasible = [&](const Hyperrectangle& r, int layer) {
        if (!policy.prune_infeasible) return false;
        for (int i = 0; i < inst.m; ++i) {
            if (r.hi[i] + pos_slack[layer][i] < floor_v[i]) return true;
        }
        return false;
    };

    struct LayerData {
        std::vector<int> nodes;                        // candidate ids in final order
        std::vector<std::array<int, 2>> out_cand;      // per node: child candidate id or -1
    };
    std::vector<Cand> cands;
    std::vector<LayerData> layers(n + 1);

    StateVector zero(static_cast<std::size_t>(inst.m));
    cands.push_back(Cand{Hyperrectangle{zero, zero}, 0.0, -1});
    layers[0].nodes = {0};

    for (int j = 0; j < n; ++j) {
        auto col = inst.a_column(j);
        std::map<std::pair<std::vector<StateInt>, std::vector<StateInt>>, int> dedup;
        std::vector<int> live;
        layers[j].out_cand.assign(layers[j].nodes.size(), {-1, -1});
        for (std::size_t u = 0; u < layers[j].nodes.size(); ++u) {
            const int pid = layers[j].nodes[u];
            for (int label = 0; label < 2; ++label) {
                Hyperrectangle child = shift_rect(cands[pid].rect, col, label);
                if (provably_infeasible(child, j + 1)) continue;
                double lp = cands[pid].lp + (label ? inst.c[j] : 0.0);
                auto key = std::make_pair(child.lo.components(), child.hi.components());
                auto it = dedup.find(key);
                int cid;
                if (it == dedup.end()) {
                    cid = static_cast<int>(cands.size());
                    cands.push_back(Cand{child, lp, -1});
                    dedup.emplace(key, cid);
                    live.push_back(cid);
                } else {
                    cid = it->second;
                    cands[cid].lp = std::max(cands[cid].lp, lp);
                }
                layers[j].out_cand[u][label] = cid;
            }
        }
        layers[j + 1].nodes = merge_layer(cands, std::move(live), policy);
    }

    // Assemble, resolving merge aliases; then drop dead-end nodes backwards.
    std::vector<std::vector<int>> final_index(n + 1);
    ValueNetwork net;
    net.n_vars = n;
    net.layers.resize(n + 1);
    for (int j = 0; j <= n; ++j) {
        for (std::size_t u = 0; u < layers[j].nodes.size(); ++u) {
            int cid = find_rep(cands, layers[j].nodes[u]);
            ValueNetwork::Node node;
            node.has_rect = true;
            node.rect = cands[cid].rect;
            final_index[j].push_back(cid);
            net.layers[j].push_back(node);
        }
    }
    for (int j = 0; j < n; ++j) {
        for (std::size_t u = 0; u < layers[j].nodes.size(); ++u) {
            for (int label = 0; label < 2; ++label) {
                int cid = layers[j].out_cand[u][label];
                if (cid < 0) continue;
                int rep = find_rep(cands, cid);
                auto& idx = final_index[j + 1];
                auto it = std::find(idx.begin(), idx.end(), rep);
                net.layers[j][u].out[label] = static_cast<int>(it - idx.begin());
            }
        }
    }

    // Terminal values: phibar at the box corner, with a safe fallback when
    // the corner itself is infeasible.
    const double fallback = follower_value_upper_bound(inst);
    for (auto& node : net.layers[n]) {
        FollowerResult r = oracle.eval_phibar(node.rect.lo);
        node.value = r.feasible ? r.value : fallback;
    }

    // Reverse sweep: every kept node must still reach a terminal.
    std::vector<std::vector<char>> alive(n + 1);
    alive[n].assign(net.layers[n].size(), 1);
    for (int j = n - 1; j >= 0; --j) {
        alive[j].assign(net.layers[j].size(), 0);
        for (std::size_t u = 0; u < net.layers[j].size(); ++u) {
            for (int label = 0; label < 2; ++label) {
                int t = net.layers[j][u].out[label];
                if (t >= 0 && alive[j + 1][t]) alive[j][u] = 1;
            }
        }
    }
    ValueNetwork out;
    out.n_vars = n;
    out.layers.resize(n + 1);
    std::vector<std::vector<int>> remap(n + 1);
    for (int j = 0; j <= n; ++j) {
        remap[j].assign(net.layers[j].size(), -1);
        for (std::size_t u = 0; u < net.layers[j].size(); ++u) {
            if (!alive[j][u]) continue;
            remap[j][u] = static_cast<int>(out.layers[j].size());
            out.layers[j].push_back(net.layers[j][u]);
        }
    }
    for (int j = 0; j < n; ++j) {
        for (std::size_t u = 0; u < net.layers[j].size(); ++u) {
            if (remap[j][u] < 0) continue;
            for (int label = 0; label < 2; ++label) {
                int t = net.layers[j][u].out[label];
                out.layers[j][remap[j][u]].out[label] = (t >= 0 && remap[j + 1][t] >= 0) ? remap[j + 1][t] : -1;
            }
        }
    }
    return out;
}

}  // namespace valnet
