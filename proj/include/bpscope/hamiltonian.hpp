#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "pauli.hpp"

namespace bpscope {

struct Term {
    double coeff = 0.0;
    PauliString pauli;
};

// Weighted sum of Hermitian Pauli strings. Terms with identical letters are merged
// on insertion and a -1 phase is folded into the coefficient.
class Hamiltonian {
public:
    Hamiltonian() = default;
    explicit Hamiltonian(int n) : n_(n) {}

    void add(double coeff, const PauliString& p) {
        if (p.size() != n_) throw DimensionError("term width differs from Hamiltonian width");
        if (p.phase() % 2 != 0) throw ConfigError("Hamiltonian term " + p.str() + " is not Hermitian");
        if (p.phase() == 2) coeff = -coeff;
        PauliString q = p.with_phase(0);
        for (auto& t : terms_)
            if (t.pauli.same_letters(q)) {
                t.coeff += coeff;
                return;
            }
        terms_.push_back({coeff, q});
        r_ = std::max(r_, set_size(support(q)));
    }

    void add(double coeff, std::string_view text) { add(coeff, PauliString::parse(text)); }

    int qubit_count() const { return n_; }
    const std::vector<Term>& terms() const { return terms_; }
    std::size_t size() const { return terms_.size(); }
    // maximum interaction range r = max |s(h_j)|
    int range() const { return r_; }

    QubitSet support_all() const {
        QubitSet s = 0;
        for (const auto& t : terms_) s |= support(t.pauli);
        return s;
    }

    Hamiltonian scaled(double c) const {
        Hamiltonian h = *this;
        for (auto& t : h.terms_) t.coeff *= c;
        return h;
    }

private:
    int n_ = 0;
    int r_ = 0;
    std::vector<Term> terms_;
};

}  // namespace bpscope
