#pragma once

#include <numbers>
#include <random>
#include <vector>

#include "bpscope/ansatz.hpp"
#include "bpscope/circuit.hpp"
#include "bpscope/hamiltonian.hpp"
#include "bpscope/rng.hpp"
#include "bpscope/simulator.hpp"

namespace testing_support {

using namespace bpscope;

inline PauliString random_pauli_on(int n, QubitSet s, Rng& rng, bool nontrivial = true) {
    std::uniform_int_distribution<int> let(nontrivial ? 1 : 0, 3);
    for (;;) {
        PauliString p(n);
        for (int q : set_members(s)) p.set(q, static_cast<Letter>(let(rng)));
        if (!nontrivial || !p.is_identity()) return p;
        if (!s) return p;
    }
}

inline QubitSet random_subset(int n, Rng& rng) {
    std::uniform_int_distribution<QubitSet> d(1, full_set(n));
    return d(rng);
}

// Design2 circuit on n qubits with `blocks` blocks of random support, each holding 1-3
// parametrized Pauli rotations that jointly span the support.
inline Circuit random_circuit(int n, int blocks, Rng& rng) {
    Circuit c(n);
    std::uniform_int_distribution<int> extra(0, 2);
    for (int b = 0; b < blocks; ++b) {
        QubitSet s = random_subset(n, rng);
        std::vector<Gate> gates;
        int p = c.param_count();
        QubitSet covered = 0;
        for (int q : set_members(s)) {
            if ((covered >> q) & 1U) continue;
            PauliString g = random_pauli_on(n, s & ~covered, rng);
            g.set(q, static_cast<Letter>(1 + extra(rng)));
            covered |= support(g);
            gates.push_back({g, p++, std::nullopt});
        }
        for (int e = extra(rng); e > 0; --e) gates.push_back({random_pauli_on(n, s, rng), p++, std::nullopt});
        c.add_block(BlockKind::design2, gates);
    }
    return c;
}

inline ParameterVector random_params(const Circuit& c, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
    ParameterVector t(static_cast<std::size_t>(c.param_count()));
    for (auto& x : t) x = u(rng);
    return t;
}

inline Hamiltonian random_hamiltonian(const Circuit& c, int terms, int max_range, Rng& rng) {
    const int n = c.qubit_count();
    std::vector<int> qs = set_members(c.support_all());
    std::uniform_int_distribution<std::size_t> pick(0, qs.size() - 1);
    std::uniform_int_distribution<int> range(1, max_range);
    std::uniform_real_distribution<double> coeff(-1.5, 1.5);
    Hamiltonian H(n);
    while (static_cast<int>(H.size()) < terms) {
        QubitSet s = 0;
        for (int r = range(rng); r > 0; --r) s |= QubitSet{1} << qs[pick(rng)];
        H.add(coeff(rng), random_pauli_on(n, s, rng));
    }
    return H;
}

}  // namespace testing_support
