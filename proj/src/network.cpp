#include "valnet/network.hpp"

#include <algorithm>
#include <cstring>
#include <map>
#include <sstream>
#include <unordered_map>

namespace valnet {

Hyperrectangle shift_rect(const Hyperrectangle& r, const std::vector<StateInt>& column, int label) {
    return Hyperrectangle{r.lo.plus(column, label), r.hi.plus(column, label)};
}

Hyperrectangle merge_rects(const Hyperrectangle& r1, const Hyperrectangle& r2) {
    Hyperrectangle out{StateVector(r1.lo.dim()), StateVector(r1.hi.dim())};
    for (std::size_t i = 0; i < r1.lo.dim(); ++i) {
        out.lo[i] = std::min(r1.lo[i], r2.lo[i]);
        out.hi[i] = std::max(r1.hi[i], r2.hi[i]);
    }
    return out;
}

int ValueNetwork::num_nodes() const {
    int n = 0;
    for (const auto& layer : layers) n += static_cast<int>(layer.size());
    return n;
}

int ValueNetwork::num_edges() const {
    int n = 0;
    for (const auto& layer : layers) {
        for (const Node& node : layer) {
            if (node.out[0] >= 0) ++n;
            if (node.out[1] >= 0) ++n;
        }
    }
    return n;
}

std::vector<int> ValueNetwork::layer_widths() const {
    std::vector<int> w;
    w.reserve(layers.size());
    for (const auto& layer : layers) w.push_back(static_cast<int>(layer.size()));
    return w;
}

bool ValueNetwork::empty() const {
    return layers.empty() || layers.front().empty() || layers.back().empty();
}

double ValueNetwork::lookup_value(const std::vector<int>& x) const {
    if (empty()) return kInf;
    int node = 0;
    for (int j = 0; j < n_vars; ++j) {
        int next = layers[j][node].out[x[j] ? 1 : 0];
        if (next < 0) return kInf;
        node = next;
    }
    return layers[n_vars][node].value;
}

std::string ValueNetwork::to_dot(const std::string& name) const {
    std::ostringstream os;
    os << "digraph " << name << " {\n  rankdir=TB;\n  node [shape=circle, fontsize=10];\n";
    for (std::size_t j = 0; j < layers.size(); ++j) {
        for (std::size_t i = 0; i < layers[j].size(); ++i) {
            os << "  n" << j << "_" << i << " [label=\"";
            if (static_cast<int>(j) == n_vars) {
                os << layers[j][i].value;
                if (layers[j][i].has_rect) os << "\\n" << layers[j][i].rect.lo.str();
            } else if (layers[j][i].has_rect) {
                const Hyperrectangle& r = layers[j][i].rect;
                os << (r.is_point() ? r.lo.str() : r.lo.str() + ".." + r.hi.str());
            }
            os << "\"];\n";
        }
    }
    for (std::size_t j = 0; j + 1 < layers.size(); ++j) {
        for (std::size_t i = 0; i < layers[j].size(); ++i) {
            // Dashed = label 0, solid = label 1.
            if (layers[j][i].out[0] >= 0) {
                os << "  n" << j << "_" << i << " -> n" << j + 1 << "_" << layers[j][i].out[0]
                   << " [style=dashed];\n";
            }
            if (layers[j][i].out[1] >= 0) {
                os << "  n" << j << "_" << i << " -> n" << j + 1 << "_" << layers[j][i].out[1] << ";\n";
            }
        }
    }
    os << "}\n";
    return os.str();
}

namespace {

struct StateLayers {
    // Per layer, states in first-seen order plus labelled transitions.
    std::vector<std::vector<StateVector>> states;
    std::vector<std::vector<std::array<int, 2>>> edges;  // per layer < n: target index or -1
    std::vector<double> terminal_values;
};

StateLayers expand_and_prune(const FollowerOracle& oracle, const BuildOptions& opts) {
    const BilevelInstance& inst = oracle.instance();
    int n = inst.n_leader;

    StateLayers out;
    out.states.resize(n + 1);
    out.edges.resize(n);
    out.states[0].push_back(StateVector(static_cast<std::size_t>(inst.m)));

    std::size_t total = 1;
    for (int j = 0; j < n; ++j) {
        std::vector<StateInt> col = inst.a_column(j);
        bool zero_col = std::all_of(col.begin(), col.end(), [](StateInt v) { return v == 0; });
        std::unordered_map<StateVector, int, StateVectorHash> index;
        out.edges[j].assign(out.states[j].size(), {-1, -1});
        for (std::size_t u = 0; u < out.states[j].size(); ++u) {
            for (int label = 0; label < 2; ++label) {
                if (label == 1 && zero_col) {
                    // Identical transition; reuse the label-0 target.
                    out.edges[j][u][1] = out.edges[j][u][0];
                    continue;
                }
                StateVector child = out.states[j][u].plus(col, label);
                auto [it, inserted] = index.emplace(child, static_cast<int>(out.states[j + 1].size()));
                if (inserted) {
                    out.states[j + 1].push_back(child);
                    if (++total > opts.node_cap) {
                        throw NetworkTooLarge(
                            "exact network exceeds the node cap (" + std::to_string(opts.node_cap) +
                            "); use the budgeted approximate builder");
                    }
                }
                out.edges[j][u][label] = it->second;
            }
        }
    }

    // Terminal feasibility, then one reverse sweep keeping states that can
    // still reach a feasible terminal.
    std::vector<std::vector<char>> alive(n + 1);
    alive[n].assign(out.states[n].size(), 0);
    out.terminal_values.assign(out.states[n].size(), kInf);
    for (std::size_t t = 0; t < out.states[n].size(); ++t) {
        FollowerResult r = oracle.eval_phibar(out.states[n][t]);
        if (r.feasible) {
            alive[n][t] = 1;
            out.terminal_values[t] = r.value;
        }
    }
    for (int j = n - 1; j >= 0; --j) {
        alive[j].assign(out.states[j].size(), 0);
        for (std::size_t u = 0; u < out.states[j].size(); ++u) {
            for (int label = 0; label < 2; ++label) {
                int t = out.edges[j][u][label];
                if (t >= 0 && alive[j + 1][t]) alive[j][u] = 1;
            }
        }
    }

    // Compact each layer to surviving states.
    StateLayers pruned;
    pruned.states.resize(n + 1);
    pruned.edges.resize(n);
    std::vector<std::vector<int>> remap(n + 1);
    for (int j = 0; j <= n; ++j) {
        remap[j].assign(out.states[j].size(), -1);
        for (std::size_t u = 0; u < out.states[j].size(); ++u) {
            if (alive[j][u]) {
                remap[j][u] = static_cast<int>(pruned.states[j].size());
                pruned.states[j].push_back(out.states[j][u]);
                if (j == n) pruned.terminal_values.push_back(out.terminal_values[u]);
            }
        }
    }
    for (int j = 0; j < n; ++j) {
        pruned.edges[j].assign(pruned.states[j].size(), {-1, -1});
        for (std::size_t u = 0; u < out.states[j].size(); ++u) {
            if (remap[j][u] < 0) continue;
            for (int label = 0; label < 2; ++label) {
                int t = out.edges[j][u][label];
                pruned.edges[j][remap[j][u]][label] = (t >= 0 && remap[j + 1][t] >= 0) ? remap[j + 1][t] : -1;
            }
        }
    }
    return pruned;
}

}  // namespace

std::vector<std::vector<StateVector>> enumerate_state_layers(const FollowerOracle& oracle,
                                                             const BuildOptions& opts) {
    return expand_and_prune(oracle, opts).states;
}

ValueNetwork build_state_network(const FollowerOracle& oracle, const BuildOptions& opts) {
    StateLayers sl = expand_and_prune(oracle, opts);
    int n = oracle.instance().n_leader;

    ValueNetwork net;
    net.n_vars = n;
    net.layers.resize(n + 1);
    for (int j = 0; j <= n; ++j) {
        net.layers[j].resize(sl.states[j].size());
        for (std::size_t u = 0; u < sl.states[j].size(); ++u) {
            ValueNetwork::Node& node = net.layers[j][u];
            node.has_rect = true;
            node.rect = Hyperrectangle{sl.states[j][u], sl.states[j][u]};
            if (j < n) {
                node.out[0] = sl.edges[j][u][0];
                node.out[1] = sl.edges[j][u][1];
            } else {
                node.value = sl.terminal_values[u];
            }
        }
    }
    return net;
}

ValueNetwork reduce(const ValueNetwork& net) {
    if (net.empty()) return net;
    int n = net.n_vars;

    // rep[j][u]: surviving node index (within the old indexing) node u merges into.
    std::vector<std::vector<int>> rep(n + 1);
    for (int j = 0; j <= n; ++j) {
        rep[j].resize(net.layers[j].size());
        for (std::size_t u = 0; u < rep[j].size(); ++u) rep[j][u] = static_cast<int>(u);
    }

    // Merged box annotation per representative.
    std::vector<std::vector<ValueNetwork::Node>> work = net.layers;

    // (R1) terminals with equal values are symmetric.
    {
        std::map<double, int> by_value;
        for (std::size_t u = 0; u < work[n].size(); ++u) {
            auto [it, inserted] = by_value.emplace(work[n][u].value, static_cast<int>(u));
            if (!inserted) {
                int r = it->second;
                rep[n][u] = r;
                if (work[n][r].has_rect && work[n][u].has_rect) {
                    work[n][r].rect = merge_rects(work[n][r].rect, work[n][u].rect);
                } else {
                    work[n][r].has_rect = false;
                }
            }
        }
    }

    // (R2) same labelled targets, last layer towards the root.
    for (int j = n - 1; j >= 0; --j) {
        std::map<std::pair<int, int>, int> by_signature;
        for (std::size_t u = 0; u < work[j].size(); ++u) {
            int t0 = work[j][u].out[0];
            int t1 = work[j][u].out[1];
            std::pair<int, int> sig{t0 >= 0 ? rep[j + 1][t0] : -1, t1 >= 0 ? rep[j + 1][t1] : -1};
            auto [it, inserted] = by_signature.emplace(sig, static_cast<int>(u));
            if (!inserted) {
                int r = it->second;
                rep[j][u] = r;
                if (work[j][r].has_rect && work[j][u].has_rect) {
                    work[j][r].rect = merge_rects(work[j][r].rect, work[j][u].rect);
                } else {
                    work[j][r].has_rect = false;
                }
            }
        }
    }

    // Rebuild from the root, keeping representatives that stay reachable.
    ValueNetwork out;
    out.n_vars = n;
    out.layers.resize(n + 1);
    std::vector<std::vector<int>> new_index(n + 1);
    for (int j = 0; j <= n; ++j) new_index[j].assign(net.layers[j].size(), -1);

    new_index[0][rep[0][0]] = 0;
    out.layers[0].push_back(work[0][rep[0][0]]);
    for (int j = 0; j < n; ++j) {
        for (std::size_t u = 0; u < net.layers[j].size(); ++u) {
            int r = rep[j][u];
            if (static_cast<int>(u) != r || new_index[j][r] < 0) continue;
            for (int label = 0; label < 2; ++label) {
                int t = work[j][r].out[label];
                if (t < 0) continue;
                int rt = rep[j + 1][t];
                if (new_index[j + 1][rt] < 0) {
                    new_index[j + 1][rt] = static_cast<int>(out.layers[j + 1].size());
                    out.layers[j + 1].push_back(work[j + 1][rt]);
                }
                out.layers[j][new_index[j][r]].out[label] = new_index[j + 1][rt];
            }
        }
    }
    return out;
}

namespace {

// Completion signature: labels of every node-to-terminal path with the
// reached terminal value. Exact equality on both.
using Signature = std::map<std::string, double>;

Signature completion_signature(const ValueNetwork& net, int layer, int node) {
    if (layer == net.n_vars) {
        return Signature{{"", net.layers[layer][node].value}};
    }
    Signature sig;
    for (int label = 0; label < 2; ++label) {
        int t = net.layers[layer][node].out[label];
        if (t < 0) continue;
        Signature child = completion_signature(net, layer + 1, t);
        for (auto& [labels, value] : child) {
            sig.emplace(std::string(1, static_cast<char>('0' + label)) + labels, value);
        }
    }
    return sig;
}

}  // namespace

std::optional<std::tuple<int, int, int>> find_symmetric_pair(const ValueNetwork& net) {
    for (int j = 0; j <= net.n_vars; ++j) {
        std::vector<Signature> sigs(net.layers[j].size());
        for (std::size_t u = 0; u < net.layers[j].size(); ++u) {
            sigs[u] = completion_signature(net, j, static_cast<int>(u));
        }
        for (std::size_t u = 0; u < sigs.size(); ++u) {
            for (std::size_t v = u + 1; v < sigs.size(); ++v) {
                if (sigs[u] == sigs[v]) return std::make_tuple(j, static_cast<int>(u), static_cast<int>(v));
            }
        }
    }
    return std::nullopt;
}

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t h = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
    return h;
}

}  // namespace

std::uint64_t canonical_hash(const ValueNetwork& net) {
    if (net.empty()) return 0;
    int n = net.n_vars;
    std::vector<std::uint64_t> below(net.layers[n].size());
    for (std::size_t u = 0; u < below.size(); ++u) {
        std::uint64_t bits;
        double v = net.layers[n][u].value;
        std::memcpy(&bits, &v, sizeof(bits));
        below[u] = mix(0x7e57ab1eULL, bits);
    }
    for (int j = n - 1; j >= 0; --j) {
        std::vector<std::uint64_t> cur(net.layers[j].size());
        for (std::size_t u = 0; u < cur.size(); ++u) {
            std::uint64_t h0 = net.layers[j][u].out[0] >= 0 ? below[net.layers[j][u].out[0]] : 0x51eafULL;
            std::uint64_t h1 = net.layers[j][u].out[1] >= 0 ? below[net.layers[j][u].out[1]] : 0xdeadULL;
            cur[u] = mix(mix(0xabcdULL, h0), h1);
        }
        below = std::move(cur);
    }
    return mix(below[0], static_cast<std::uint64_t>(n));
}

bool isomorphic(const ValueNetwork& a, const ValueNetwork& b) {
    if (a.n_vars != b.n_vars) return false;
    if (a.layer_widths() != b.layer_widths()) return false;
    if (a.empty() && b.empty()) return true;
    int n = a.n_vars;
    // Out-edges are labelled and unique, so a root pairing forces the rest.
    std::vector<std::vector<int>> map_ab(n + 1);
    for (int j = 0; j <= n; ++j) map_ab[j].assign(a.layers[j].size(), -1);
    map_ab[0][0] = 0;
    for (int j = 0; j <= n; ++j) {
        for (std::size_t u = 0; u < a.layers[j].size(); ++u) {
            int v = map_ab[j][u];
            if (v < 0) return false;  // node unreachable, not a reduced network
            if (j == n) {
                if (a.layers[j][u].value != b.layers[j][v].value) return false;
                continue;
            }
            for (int label = 0; label < 2; ++label) {
                int ta = a.layers[j][u].out[label];
                int tb = b.layers[j][v].out[label];
                if ((ta < 0) != (tb < 0)) return false;
                if (ta < 0) continue;
                if (map_ab[j + 1][ta] < 0) {
                    map_ab[j + 1][ta] = tb;
                } else if (map_ab[j + 1][ta] != tb) {
                    return false;
                }
            }
        }
    }
    for (int j = 0; j <= n; ++j) {
        std::vector<int> seen = map_ab[j];
        std::sort(seen.begin(), seen.end());
        if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) return false;
    }
    return true;
}

}  // namespace valnet
