#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "circuit.hpp"

namespace bpscope {

using Path = std::vector<int>;

struct PathSet {
    std::vector<Path> paths;

    std::set<std::pair<int, int>> edges() const {
        std::set<std::pair<int, int>> e;
        for (const auto& p : paths)
            for (std::size_t i = 1; i < p.size(); ++i) e.emplace(p[i - 1], p[i]);
        return e;
    }
    std::set<int> heads() const {
        std::set<int> h;
        for (const auto& p : paths)
            if (!p.empty()) h.insert(p.front());
        return h;
    }
    std::set<int> nodes() const {
        std::set<int> n;
        for (const auto& p : paths) n.insert(p.begin(), p.end());
        return n;
    }
    // Paths sorted and de-duplicated, so equal sets compare equal.
    PathSet canonical() const {
        PathSet c = *this;
        std::sort(c.paths.begin(), c.paths.end());
        c.paths.erase(std::unique(c.paths.begin(), c.paths.end()), c.paths.end());
        return c;
    }
    friend bool operator==(const PathSet& a, const PathSet& b) { return a.paths == b.paths; }
};

inline double log4(double v) { return std::log2(v) / 2.0; }

inline double pow4m1(int k) { return std::ldexp(1.0, 2 * k) - 1.0; }

inline double edge_length(const Circuit& c, int k, int k2) {
    if (k >= k2) throw IndexError("edge_length needs k < k2");
    QubitSet sc = connecting_support(c, k, k2);
    if (!sc) throw Error("blocks " + std::to_string(k) + " and " + std::to_string(k2) + " are not connected");
    return log4(pow4m1(set_size(c.block(k2).support)) / pow4m1(set_size(sc)));
}

// Edge from the initial state into head block k.
inline double head_edge_length(const Circuit& c, int k) {
    QubitSet sf = forward_residual_support(c, k);
    if (!sf) throw Error("block " + std::to_string(k) + " is not a head block");
    return log4(pow4m1(set_size(c.block(k).support)) / pow4m1(set_size(sf)));
}

inline double head_width(const Circuit& c, int k) {
    QubitSet sf = forward_residual_support(c, k);
    if (!sf) throw Error("block " + std::to_string(k) + " is not a head block");
    int m = set_size(sf);
    return std::log2(pow4m1(m) / (std::ldexp(1.0, m) - 1.0));
}

inline double path_set_length(const Circuit& c, const PathSet& p) {
    double l = 0.0;
    for (auto [a, b] : p.edges()) l += edge_length(c, a, b);
    for (int h : p.heads()) l += head_edge_length(c, h);
    return l;
}

inline double path_set_width(const Circuit& c, const PathSet& p) {
    double w = 0.0;
    for (int h : p.heads()) w += head_width(c, h);
    return w;
}

inline double path_set_exponent(const Circuit& c, const PathSet& p) {
    return 2.0 * path_set_length(c, p) + path_set_width(c, p);
}

// Returns an empty string when P is legal for (differential block, observable support),
// otherwise a description of the first violated rule.
inline std::string path_set_violation(const Circuit& c, const PathSet& p, int differential_block, QubitSet obs) {
    if (p.paths.empty()) return "empty path set";
    bool through = false;
    QubitSet tails = 0;
    for (const auto& path : p.paths) {
        if (path.empty()) return "empty path";
        for (int k : path)
            if (k < 0 || k >= c.block_count()) return "block index out of range";
        for (std::size_t i = 1; i < path.size(); ++i) {
            if (path[i] <= path[i - 1]) return "path not strictly time ordered";
            if (!connecting_support(c, path[i - 1], path[i])) return "consecutive blocks not connected";
        }
        if (!forward_residual_support(c, path.front())) return "path head is not a head block";
        if (!backward_residual_support(c, path.back())) return "path tail is not a tail block";
        // the backward evolution of every path starts from a piece of the observable
        if (!(backward_residual_support(c, path.back()) & obs)) return "path tail does not touch the observable";
        if (std::find(path.begin(), path.end(), differential_block) != path.end()) through = true;
        for (int k : path) tails |= backward_residual_support(c, k);
    }
    if (!through) return "no path passes the differential block";
    if ((tails & obs) != obs) return "observable support not covered by backward residual supports";
    return {};
}

inline bool is_legal_path_set(const Circuit& c, const PathSet& p, int differential_block, QubitSet obs) {
    return path_set_violation(c, p, differential_block, obs).empty();
}

namespace detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct PathGraph {
    int m = 0;
    std::vector<double> head_cost;               // 2*l0 + w, or inf
    std::vector<std::vector<double>> edge_cost;  // 2*l, or inf

    explicit PathGraph(const Circuit& c) : m(c.block_count()) {
        head_cost.assign(static_cast<std::size_t>(m), kInf);
        edge_cost.assign(static_cast<std::size_t>(m), std::vector<double>(static_cast<std::size_t>(m), kInf));
        for (int k = 0; k < m; ++k) {
            if (forward_residual_support(c, k))
                head_cost[static_cast<std::size_t>(k)] = 2.0 * head_edge_length(c, k) + head_width(c, k);
            for (int j = 0; j < k; ++j)
                if (connecting_support(c, j, k))
                    edge_cost[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] = 2.0 * edge_length(c, j, k);
        }
    }
};

struct Discount {
    std::set<std::pair<int, int>> edges;
    std::set<int> heads;

    void absorb(const Path& p) {
        heads.insert(p.front());
        for (std::size_t i = 1; i < p.size(); ++i) edges.emplace(p[i - 1], p[i]);
    }
};

// Cheapest path ending at target. If src >= 0 the path must start at src
// (src itself then carries no head cost); otherwise it starts at any head block.
inline std::optional<Path> cheapest_path(const PathGraph& g, const Discount& d, int src, int target) {
    std::size_t n = static_cast<std::size_t>(g.m);
    std::vector<double> dist(n, kInf);
    std::vector<int> pred(n, -1);
    int lo = src >= 0 ? src : 0;
    for (int k = lo; k <= target; ++k) {
        auto ku = static_cast<std::size_t>(k);
        if (src >= 0 && k == src) {
            dist[ku] = 0.0;
            continue;
        }
        if (src < 0 && g.head_cost[ku] < kInf) dist[ku] = d.heads.count(k) ? 0.0 : g.head_cost[ku];
        for (int j = lo; j < k; ++j) {
            auto ju = static_cast<std::size_t>(j);
            if (dist[ju] == kInf || g.edge_cost[ju][ku] == kInf) continue;
            double cand = dist[ju] + (d.edges.count({j, k}) ? 0.0 : g.edge_cost[ju][ku]);
            if (cand < dist[ku] - 1e-12) {
                dist[ku] = cand;
                pred[ku] = j;
            }
        }
    }
    if (dist[static_cast<std::size_t>(target)] == kInf) return std::nullopt;
    Path p;
    for (int k = target; k != -1; k = pred[static_cast<std::size_t>(k)]) {
        p.push_back(k);
        if (src >= 0 && k == src) break;
    }
    std::reverse(p.begin(), p.end());
    return p;
}

inline bool better(double e1, const PathSet& p1, double e2, const PathSet& p2) {
    if (e1 < e2 - 1e-12) return true;
    if (e2 < e1 - 1e-12) return false;
    return p1.paths < p2.paths;
}

}  // namespace detail

namespace detail {

// Greedy fallback for many terminals: for each choice of which observable qubit's final
// block the differential path ends at, and each ordering of the remaining qubits, add the
// cheapest path reaching each uncovered final block, with chosen edges and heads free.
inline void greedy_candidates(const PathGraph& g, int differential_block, const std::vector<int>& tail_of,
                              const std::function<void(PathSet)>& consider) {
    auto to_mu = cheapest_path(g, {}, -1, differential_block);
    for (std::size_t i = 0; i < tail_of.size() && to_mu; ++i) {
        int t = tail_of[i];
        if (t < differential_block) continue;
        auto from_mu = cheapest_path(g, {}, differential_block, t);
        if (!from_mu) continue;
        Path main = *to_mu;
        main.insert(main.end(), from_mu->begin() + 1, from_mu->end());
        std::vector<std::size_t> rest;
        for (std::size_t j = 0; j < tail_of.size(); ++j)
            if (j != i) rest.push_back(j);
        bool permute = rest.size() <= 5;
        do {
            PathSet ps;
            ps.paths.push_back(main);
            Discount d;
            d.absorb(main);
            std::set<int> nodes(main.begin(), main.end());
            bool ok = true;
            for (std::size_t j : rest) {
                int tj = tail_of[j];
                if (nodes.count(tj)) continue;
                auto p = cheapest_path(g, d, -1, tj);
                if (!p) {
                    ok = false;
                    break;
                }
                d.absorb(*p);
                nodes.insert(p->begin(), p->end());
                ps.paths.push_back(*p);
            }
            if (ok) consider(ps);
        } while (permute && std::next_permutation(rest.begin(), rest.end()));
    }
}

inline constexpr int kMaxExactTerminals = 10;

// Exact minimum of 2l + w. The union of a minimal legal path set can be reduced to an
// arborescence rooted at the initial state whose leaves are all final blocks of observable
// qubits and which contains every terminal (the differential block and those final blocks). S[X][v] is the cheapest such tree hanging from v that spans terminal subset X,
// computed Dreyfus-Wagner style over the time-ordered DAG.
inline std::optional<PathSet> steiner_path_set(const PathGraph& g, const std::vector<int>& terminals, const std::vector<int>& obs_tails) {
    const int m = g.m;
    const int t = static_cast<int>(terminals.size());
    const std::size_t full = (std::size_t{1} << t) - 1;
    std::vector<int> term_bit(static_cast<std::size_t>(m), -1);
    for (int i = 0; i < t; ++i) term_bit[static_cast<std::size_t>(terminals[static_cast<std::size_t>(i)])] = i;
    std::vector<bool> tail(static_cast<std::size_t>(m));
    for (int k : obs_tails) tail[static_cast<std::size_t>(k)] = true;

    // choice: 0 none, 1 stop at tail, 2 terminal at v, 3 split, 4 edge to node
    struct Cell {
        double cost = kInf;
        int kind = 0;
        std::size_t arg = 0;
    };
    std::vector<std::vector<Cell>> S(full + 1, std::vector<Cell>(static_cast<std::size_t>(m)));
    for (int v = m - 1; v >= 0; --v) {
        auto vu = static_cast<std::size_t>(v);
        for (std::size_t mask = 0; mask <= full; ++mask) {
            Cell best;
            if (mask == 0 && tail[vu]) best = {0.0, 1, 0};
            int tb = term_bit[vu];
            if (tb >= 0 && ((mask >> tb) & 1U)) {
                double cand = S[mask ^ (std::size_t{1} << tb)][vu].cost;
                if (cand < best.cost) best = {cand, 2, 0};
            }
            for (std::size_t sub = (mask - 1) & mask; sub > 0; sub = (sub - 1) & mask) {
                if (sub < (mask ^ sub)) continue;
                double cand = S[sub][vu].cost + S[mask ^ sub][vu].cost;
                if (cand < best.cost - 1e-12) best = {cand, 3, sub};
            }
            for (int u = v + 1; u < m; ++u) {
                double e = g.edge_cost[vu][static_cast<std::size_t>(u)];
                if (e == kInf) continue;
                double cand = e + S[mask][static_cast<std::size_t>(u)].cost;
                if (cand < best.cost - 1e-12) best = {cand, 4, static_cast<std::size_t>(u)};
            }
            S[mask][vu] = best;
        }
    }
    // root: the initial state, which may feed several head blocks
    std::vector<Cell> R(full + 1);
    R[0].cost = 0.0;
    for (std::size_t mask = 1; mask <= full; ++mask) {
        Cell best;
        for (int h = 0; h < m; ++h) {
            double hc = g.head_cost[static_cast<std::size_t>(h)];
            if (hc == kInf) continue;
            double cand = hc + S[mask][static_cast<std::size_t>(h)].cost;
            if (cand < best.cost - 1e-12) best = {cand, 4, static_cast<std::size_t>(h)};
        }
        for (std::size_t sub = (mask - 1) & mask; sub > 0; sub = (sub - 1) & mask) {
            if (sub < (mask ^ sub)) continue;
            double cand = R[sub].cost + R[mask ^ sub].cost;
            if (cand < best.cost - 1e-12) best = {cand, 3, sub};
        }
        R[mask] = best;
    }
    if (R[full].cost == kInf) return std::nullopt;

    std::set<int> heads;
    std::set<std::pair<int, int>> edges;
    auto expand = [&](auto&& self, std::size_t mask, int v) -> void {
        const Cell& cell = S[mask][static_cast<std::size_t>(v)];
        switch (cell.kind) {
            case 2: self(self, mask ^ (std::size_t{1} << term_bit[static_cast<std::size_t>(v)]), v); break;
            case 3:
                self(self, cell.arg, v);
                self(self, mask ^ cell.arg, v);
                break;
            case 4:
                edges.emplace(v, static_cast<int>(cell.arg));
                self(self, mask, static_cast<int>(cell.arg));
                break;
            default: break;
        }
    };
    auto expand_root = [&](auto&& self, std::size_t mask) -> void {
        const Cell& cell = R[mask];
        if (cell.kind == 3) {
            self(self, cell.arg);
            self(self, mask ^ cell.arg);
        } else {
            heads.insert(static_cast<int>(cell.arg));
            expand(expand, mask, static_cast<int>(cell.arg));
        }
    };
    expand_root(expand_root, full);

    // every root-to-leaf walk of the chosen edges is one path
    std::map<int, std::vector<int>> out;
    for (auto [a, b] : edges) out[a].push_back(b);
    PathSet ps;
    Path cur;
    auto walk = [&](auto&& self, int v) -> void {
        cur.push_back(v);
        auto it = out.find(v);
        if (it == out.end()) ps.paths.push_back(cur);
        if (it != out.end())
            for (int w : it->second) self(self, w);
        cur.pop_back();
    };
    for (int h : heads) walk(walk, h);
    return ps;
}

}  // namespace detail

// Legal path set of minimum exponent 2l + w. Exact (Steiner arborescence over the block
// DAG) for up to kMaxExactTerminals terminals; beyond that a greedy search and the
// straight-wire set are compared and the better one is kept.
inline std::optional<PathSet> find_path_set(const Circuit& c, int differential_block, QubitSet obs) {
    c.check_block(differential_block);
    if (!obs) return std::nullopt;
    if (!in_cone(c, obs, differential_block)) return std::nullopt;
    std::vector<int> qubits = set_members(obs);
    std::vector<int> tail_of;
    for (int q : qubits) {
        int t = last_block_on(c, q);
        if (t < 0) return std::nullopt;
        tail_of.push_back(t);
    }

    detail::PathGraph g(c);
    std::optional<PathSet> best;
    double best_e = detail::kInf;
    auto consider = [&](PathSet p) {
        p = p.canonical();
        if (!is_legal_path_set(c, p, differential_block, obs)) return;
        double e = path_set_exponent(c, p);
        if (!best || detail::better(e, p, best_e, *best)) {
            best = p;
            best_e = e;
        }
    };

    std::vector<int> terminals = tail_of;
    terminals.push_back(differential_block);
    std::sort(terminals.begin(), terminals.end());
    terminals.erase(std::unique(terminals.begin(), terminals.end()), terminals.end());
    if (static_cast<int>(terminals.size()) <= detail::kMaxExactTerminals) {
        if (auto p = detail::steiner_path_set(g, terminals, tail_of)) consider(*p);
    } else {
        detail::greedy_candidates(g, differential_block, tail_of, consider);
    }

    PathSet wires;
    for (int q : qubits) {
        Path w;
        for (int k = 0; k < c.block_count(); ++k)
            if ((c.block(k).support >> q) & 1U) w.push_back(k);
        wires.paths.push_back(w);
    }
    consider(wires);
    return best;
}

}  // namespace bpscope
