#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "geometry.hpp"
#include "hamiltonian.hpp"
#include "twirl.hpp"

namespace bpscope {

enum class BoundKind { theorem1, theorem2, ladder };

inline const char* bound_name(BoundKind k) {
    switch (k) {
        case BoundKind::theorem1: return "theorem1";
        case BoundKind::theorem2: return "theorem2";
        case BoundKind::ladder: return "ladder";
    }
    return "?";
}

struct TermBound {
    int term_index = 0;
    std::optional<PathSet> path_set;
    double contribution = 0.0;
};

struct BoundReport {
    BoundKind kind = BoundKind::theorem1;
    std::vector<TermBound> per_term;
    double total = 0.0;
    // The bounds assume the differentiated gate sits strictly inside a 2-design sandwich.
    // Gates on block borders may violate that, and the report does not check it.
    bool sandwich_assumed = true;
};

namespace detail {
inline void check_bound_inputs(const Circuit& c, const Hamiltonian& H, int param_index) {
    if (H.qubit_count() != c.qubit_count()) throw DimensionError("Hamiltonian width differs from circuit width");
    require_design2(c);
    c.block_of_param(param_index);
    require_coverage(c, H.support_all());
}
}  // namespace detail

inline BoundReport theorem1_bound(const Circuit& c, const Hamiltonian& H, int param_index) {
    detail::check_bound_inputs(c, H, param_index);
    int kmu = c.block_of_param(param_index);
    BoundReport r;
    r.kind = BoundKind::theorem1;
    for (std::size_t j = 0; j < H.terms().size(); ++j) {
        const Term& t = H.terms()[j];
        TermBound tb;
        tb.term_index = static_cast<int>(j);
        tb.path_set = find_path_set(c, kmu, support(t.pauli));
        if (tb.path_set) tb.contribution = t.coeff * t.coeff * std::exp2(1.0 - path_set_exponent(c, *tb.path_set));
        r.total += tb.contribution;
        r.per_term.push_back(std::move(tb));
    }
    return r;
}

inline BoundReport theorem2_bound(const Circuit& c, const Hamiltonian& H, int param_index) {
    detail::check_bound_inputs(c, H, param_index);
    QubitSet sk = c.block(c.block_of_param(param_index)).support;
    const double prefactor = std::pow(4.0, -static_cast<double>(H.range()) * max_local_depth(c) * max_block_size(c));
    BoundReport r;
    r.kind = BoundKind::theorem2;
    for (std::size_t j = 0; j < H.terms().size(); ++j) {
        const Term& t = H.terms()[j];
        TermBound tb;
        tb.term_index = static_cast<int>(j);
        if (support(t.pauli) & sk) tb.contribution = prefactor * 2.0 * t.coeff * t.coeff;
        r.total += tb.contribution;
        r.per_term.push_back(std::move(tb));
    }
    return r;
}

// Each block overlaps its immediate neighbours and nothing else.
inline bool is_ladder_layout(const Circuit& c) {
    int m = c.block_count();
    if (m == 0) return false;
    for (int k = 0; k < m; ++k)
        for (int j = k + 1; j < m; ++j) {
            bool overlap = (c.block(k).support & c.block(j).support) != 0;
            if ((j == k + 1) != overlap) return false;
        }
    return true;
}

inline BoundReport ladder_bound(const Circuit& c, const Hamiltonian& H, int param_index) {
    detail::check_bound_inputs(c, H, param_index);
    if (!is_ladder_layout(c)) throw Error("ladder_bound: circuit is not a ladder layout");
    int kmu = c.block_of_param(param_index);
    const double beta = max_block_size(c);
    const double r_range = H.range();
    BoundReport r;
    r.kind = BoundKind::ladder;
    for (std::size_t j = 0; j < H.terms().size(); ++j) {
        const Term& t = H.terms()[j];
        TermBound tb;
        tb.term_index = static_cast<int>(j);
        int klast = -1;
        for (int q : set_members(support(t.pauli))) klast = std::max(klast, last_block_on(c, q));
        if (klast >= kmu) {
            double delta = klast - kmu;
            tb.contribution = t.coeff * t.coeff * std::exp2(1.0 - 2.0 * beta * (delta + r_range));
        }
        r.total += tb.contribution;
        r.per_term.push_back(std::move(tb));
    }
    return r;
}

}  // namespace bpscope
