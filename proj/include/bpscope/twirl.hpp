#pragma once

#include <cmath>
#include <map>
#include <vector>

#include "circuit.hpp"
#include "hamiltonian.hpp"

namespace bpscope {

// Weights over support patterns. A pattern T stands for the uniform mixture of all
// 3^|T| doubled Pauli strings whose support is exactly T; the twirling channels keep
// every class uniform, so the pattern weight is all the state the engine needs.
struct SupportDistribution {
    std::map<QubitSet, double> weights;
    double pruned_mass = 0.0;

    double total() const {
        double t = 0.0;
        for (const auto& [p, w] : weights) t += w;
        return t;
    }
};

inline constexpr double kDefaultPruneThreshold = 1e-15;

inline void prune(SupportDistribution& d, double threshold) {
    if (threshold <= 0.0) return;
    for (auto it = d.weights.begin(); it != d.weights.end();) {
        if (it->second < threshold) {
            d.pruned_mass += it->second;
            it = d.weights.erase(it);
        } else {
            ++it;
        }
    }
}

inline SupportDistribution twirl_step(const SupportDistribution& d, QubitSet s, double prune_threshold = 0.0) {
    if (!s) throw Error("twirl_step: empty block support");
    SupportDistribution out;
    out.pruned_mass = d.pruned_mass;
    const double norm = std::ldexp(1.0, 2 * set_size(s)) - 1.0;
    for (const auto& [t, w] : d.weights) {
        if (!(t & s)) {
            out.weights[t] += w;
            continue;
        }
        QubitSet rest = t & ~s;
        // every nonempty sub-pattern of s, weighted by its class size 3^|sub|
        for (QubitSet sub = s; sub; sub = (sub - 1) & s)
            out.weights[rest | sub] += w * std::pow(3.0, set_size(sub)) / norm;
    }
    prune(out, prune_threshold);
    return out;
}

// Twirl, differentiate, twirl on the block holding the differentiated gate.
// Patterns that miss the block are annihilated; the rest gain 2*4^|s|/(4^|s|-1).
inline SupportDistribution differential_step(const SupportDistribution& d, QubitSet block_support,
                                             double prune_threshold = 0.0) {
    SupportDistribution hit;
    hit.pruned_mass = d.pruned_mass;
    for (const auto& [t, w] : d.weights)
        if (t & block_support) hit.weights[t] = w;
    SupportDistribution out = twirl_step(hit, block_support, 0.0);
    const double f4 = std::ldexp(1.0, 2 * set_size(block_support));
    const double factor = 2.0 * f4 / (f4 - 1.0);
    for (auto& [t, w] : out.weights) w *= factor;
    prune(out, prune_threshold);
    return out;
}

struct TermVariance {
    double variance = 0.0;
    double pruned_mass = 0.0;
    bool trivial = false;  // identity observable: the derivative vanishes identically
};

inline void require_coverage(const Circuit& c, QubitSet obs) {
    if (obs & ~c.support_all())
        throw AssumptionViolation("observable support is not covered by the circuit support");
}

inline TermVariance exact_term_variance(const Circuit& c, const PauliString& h, int param_index,
                                        double prune_threshold = kDefaultPruneThreshold) {
    if (h.size() != c.qubit_count()) throw DimensionError("observable width differs from circuit width");
    require_design2(c);
    int kmu = c.block_of_param(param_index);
    TermVariance r;
    if (h.is_identity()) {
        r.trivial = true;
        return r;
    }
    require_coverage(c, support(h));
    SupportDistribution d;
    d.weights[support(h)] = 1.0;
    for (int k = c.block_count() - 1; k >= 0; --k) {
        QubitSet s = c.block(k).support;
        d = (k == kmu) ? differential_step(d, s, prune_threshold) : twirl_step(d, s, prune_threshold);
    }
    // fraction of each class made of Z/I letters only, the strings with <0|sigma|0>^2 = 1
    for (const auto& [t, w] : d.weights) r.variance += w * std::pow(3.0, -set_size(t));
    r.pruned_mass = d.pruned_mass;
    return r;
}

struct VarianceResult {
    double variance = 0.0;
    double pruned_mass = 0.0;
    std::vector<TermVariance> per_term;
};

// Cross terms between distinct Pauli strings vanish under coverage, so the variance
// is the lambda^2-weighted sum of single-term variances. The mean is zero and not computed.
inline VarianceResult exact_variance(const Circuit& c, const Hamiltonian& H, int param_index,
                                     double prune_threshold = kDefaultPruneThreshold) {
    if (H.qubit_count() != c.qubit_count()) throw DimensionError("Hamiltonian width differs from circuit width");
    require_design2(c);
    require_coverage(c, H.support_all());
    VarianceResult r;
    for (const auto& t : H.terms()) {
        TermVariance tv = exact_term_variance(c, t.pauli, param_index, prune_threshold);
        r.variance += t.coeff * t.coeff * tv.variance;
        r.pruned_mass += t.coeff * t.coeff * tv.pruned_mass;
        r.per_term.push_back(tv);
    }
    return r;
}

}  // namespace bpscope
