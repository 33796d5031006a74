#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "pauli.hpp"

namespace bpscope {

// A rotation exp(-i * theta * generator). Either trainable (param) or frozen (fixed_angle).
struct Gate {
    PauliString generator;
    std::optional<int> param;
    std::optional<double> fixed_angle;
};

enum class BlockKind { design2, structured };

inline const char* kind_name(BlockKind k) { return k == BlockKind::design2 ? "design2" : "structured"; }

struct Block {
    BlockKind kind = BlockKind::design2;
    std::vector<Gate> gates;
    QubitSet support = 0;
};

class Circuit {
public:
    Circuit() = default;
    explicit Circuit(int n) : n_(n) {
        if (n < 0 || n > kMaxQubits) throw DimensionError("qubit count out of range");
    }

    // Appends a block; the support is recomputed from the gates.
    int add_block(BlockKind kind, std::vector<Gate> gates) {
        Block b;
        b.kind = kind;
        for (auto& g : gates) {
            if (g.generator.size() != n_) throw DimensionError("gate generator length differs from circuit width");
            if (g.generator.phase() != 0) throw ConfigError("gate generator must carry phase +1");
            if (g.param.has_value() == g.fixed_angle.has_value())
                throw ConfigError("gate needs exactly one of param / fixed_angle");
            if (g.generator.is_identity()) throw ConfigError("gate generator is the identity");
            b.support |= support(g.generator);
        }
        if (b.support == 0) throw ConfigError("block has empty support");
        b.gates = std::move(gates);
        blocks_.push_back(std::move(b));
        rebuild_param_map();
        return static_cast<int>(blocks_.size()) - 1;
    }

    int qubit_count() const { return n_; }
    int block_count() const { return static_cast<int>(blocks_.size()); }
    int param_count() const { return static_cast<int>(param_block_.size()); }
    const std::vector<Block>& blocks() const { return blocks_; }
    const Block& block(int k) const {
        check_block(k);
        return blocks_[static_cast<std::size_t>(k)];
    }

    // Block index holding trainable parameter mu.
    int block_of_param(int mu) const {
        if (mu < 0 || mu >= param_count()) throw IndexError("parameter index out of range: " + std::to_string(mu));
        return param_block_[static_cast<std::size_t>(mu)];
    }

    const Gate& gate_of_param(int mu) const {
        const Block& b = block(block_of_param(mu));
        for (const auto& g : b.gates)
            if (g.param == mu) return g;
        throw IndexError("parameter not found");
    }

    QubitSet support_all() const {
        QubitSet s = 0;
        for (const auto& b : blocks_) s |= b.support;
        return s;
    }

    // Throws unless parameter indices are exactly 0..M-1, each used once.
    void validate() const {
        std::vector<int> seen;
        for (const auto& b : blocks_)
            for (const auto& g : b.gates)
                if (g.param) seen.push_back(*g.param);
        std::sort(seen.begin(), seen.end());
        for (std::size_t i = 0; i < seen.size(); ++i)
            if (seen[i] != static_cast<int>(i))
                throw ConfigError("parameter indices must be 0..M-1 without gaps or repeats");
    }

    void check_block(int k) const {
        if (k < 0 || k >= block_count()) throw IndexError("block index out of range: " + std::to_string(k));
    }

private:
    void rebuild_param_map() {
        int maxp = -1;
        for (const auto& b : blocks_)
            for (const auto& g : b.gates)
                if (g.param) {
                    if (*g.param < 0) throw ConfigError("negative parameter index");
                    maxp = std::max(maxp, *g.param);
                }
        param_block_.assign(static_cast<std::size_t>(maxp + 1), -1);
        for (std::size_t k = 0; k < blocks_.size(); ++k)
            for (const auto& g : blocks_[k].gates)
                if (g.param) param_block_[static_cast<std::size_t>(*g.param)] = static_cast<int>(k);
    }

    int n_ = 0;
    std::vector<Block> blocks_;
    std::vector<int> param_block_;
};

inline int local_depth(const Circuit& c, int q) {
    if (q < 0 || q >= c.qubit_count()) throw IndexError("qubit index out of range: " + std::to_string(q));
    int d = 0;
    for (const auto& b : c.blocks())
        if ((b.support >> q) & 1U) ++d;
    return d;
}

inline int max_local_depth(const Circuit& c) {
    int chi = 0;
    for (int q = 0; q < c.qubit_count(); ++q) chi = std::max(chi, local_depth(c, q));
    return chi;
}

inline int max_block_size(const Circuit& c) {
    int beta = 0;
    for (const auto& b : c.blocks()) beta = std::max(beta, set_size(b.support));
    return beta;
}

// Greedy layering: each block goes one layer after the latest earlier block it overlaps.
// Layers therefore hold support-disjoint blocks, which is the commutation notion used here.
inline int global_depth(const Circuit& c) {
    std::vector<int> layer(static_cast<std::size_t>(c.qubit_count()), 0);
    int depth = 0;
    for (const auto& b : c.blocks()) {
        int l = 0;
        for (int q : set_members(b.support)) l = std::max(l, layer[static_cast<std::size_t>(q)]);
        for (int q : set_members(b.support)) layer[static_cast<std::size_t>(q)] = l + 1;
        depth = std::max(depth, l + 1);
    }
    return depth;
}

inline QubitSet connecting_support(const Circuit& c, int k, int k2) {
    c.check_block(k);
    c.check_block(k2);
    if (k == k2) throw IndexError("connecting_support needs two distinct blocks");
    if (k > k2) std::swap(k, k2);
    QubitSet s = c.block(k).support & c.block(k2).support;
    for (int j = k + 1; j < k2 && s; ++j) s &= ~c.block(j).support;
    return s;
}

inline QubitSet forward_residual_support(const Circuit& c, int k) {
    c.check_block(k);
    QubitSet s = c.block(k).support;
    for (int j = 0; j < k; ++j) s &= ~c.block(j).support;
    return s;
}

inline QubitSet backward_residual_support(const Circuit& c, int k) {
    c.check_block(k);
    QubitSet s = c.block(k).support;
    for (int j = k + 1; j < c.block_count(); ++j) s &= ~c.block(j).support;
    return s;
}

// Last block acting on qubit q, or -1.
inline int last_block_on(const Circuit& c, int q) {
    for (int k = c.block_count() - 1; k >= 0; --k)
        if ((c.block(k).support >> q) & 1U) return k;
    return -1;
}

inline std::vector<int> causal_cone_blocks(const Circuit& c, QubitSet observable_support) {
    if (observable_support & ~full_set(c.qubit_count())) throw IndexError("observable support exceeds qubit count");
    std::vector<int> cone;
    QubitSet active = observable_support;
    for (int k = c.block_count() - 1; k >= 0; --k) {
        if (c.block(k).support & active) {
            cone.push_back(k);
            active |= c.block(k).support;
        }
    }
    std::reverse(cone.begin(), cone.end());
    return cone;
}

inline bool in_cone(const Circuit& c, QubitSet observable_support, int k) {
    auto cone = causal_cone_blocks(c, observable_support);
    return std::binary_search(cone.begin(), cone.end(), k);
}

inline void require_design2(const Circuit& c) {
    for (int k = 0; k < c.block_count(); ++k)
        if (c.block(k).kind != BlockKind::design2)
            throw AssumptionViolation("block " + std::to_string(k) +
                                      " is structured; this analysis requires every block to be a local 2-design");
}

}  // namespace bpscope
