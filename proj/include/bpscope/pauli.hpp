#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"

namespace bpscope {

// Qubit subsets are bitmasks; bit q set means qubit q is in the subset.
// This caps every circuit at 64 qubits, far above what a dense simulator reaches.
using QubitSet = std::uint64_t;

inline constexpr int kMaxQubits = 64;

inline int set_size(QubitSet s) { return std::popcount(s); }

inline QubitSet make_set(const std::vector<int>& qubits) {
    QubitSet s = 0;
    for (int q : qubits) {
        if (q < 0 || q >= kMaxQubits) throw IndexError("qubit index out of range: " + std::to_string(q));
        s |= QubitSet{1} << q;
    }
    return s;
}

inline std::vector<int> set_members(QubitSet s) {
    std::vector<int> out;
    while (s) {
        out.push_back(std::countr_zero(s));
        s &= s - 1;
    }
    return out;
}

inline QubitSet full_set(int n) { return n >= 64 ? ~QubitSet{0} : (QubitSet{1} << n) - 1; }

enum class Letter : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

// Pauli string i^phase * P_0 (x) P_1 (x) ... with letters kept as two bit planes:
// X sets the x bit, Z sets the z bit, Y sets both. The phase is an exact exponent of i.
class PauliString {
public:
    PauliString() = default;
    explicit PauliString(int n) : n_(n) {
        if (n < 0 || n > kMaxQubits) throw DimensionError("qubit count out of range: " + std::to_string(n));
    }

    static PauliString from_masks(int n, QubitSet x, QubitSet z, int phase = 0) {
        PauliString p(n);
        QubitSet all = full_set(n);
        if ((x | z) & ~all) throw IndexError("Pauli mask exceeds qubit count");
        p.x_ = x;
        p.z_ = z;
        p.phase_ = static_cast<std::uint8_t>(((phase % 4) + 4) % 4);
        return p;
    }

    static PauliString single(int n, int q, Letter l) {
        PauliString p(n);
        p.set(q, l);
        return p;
    }

    // Parses "ZIXY" with an optional phase prefix: "+", "-", "+i", "-i", "i", "+1", "-1".
    static PauliString parse(std::string_view text) {
        int phase = 0;
        std::size_t pos = 0;
        if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
            if (text[pos] == '-') phase = 2;
            ++pos;
        }
        if (pos < text.size() && text[pos] == 'i') {
            phase += 1;
            ++pos;
        } else if (pos < text.size() && text[pos] == '1') {
            ++pos;
        }
        std::string_view body = text.substr(pos);
        PauliString p(static_cast<int>(body.size()));
        for (std::size_t q = 0; q < body.size(); ++q) {
            switch (body[q]) {
                case 'I': case '_': break;
                case 'X': p.set(static_cast<int>(q), Letter::X); break;
                case 'Y': p.set(static_cast<int>(q), Letter::Y); break;
                case 'Z': p.set(static_cast<int>(q), Letter::Z); break;
                default:
                    throw ConfigError("invalid Pauli letter '" + std::string(1, body[q]) + "' in \"" +
                                      std::string(text) + "\"");
            }
        }
        p.phase_ = static_cast<std::uint8_t>(phase % 4);
        return p;
    }

    // Letters only when the phase is +1, otherwise prefixed with "-1", "+i" or "-i".
    std::string str() const {
        static const char* prefix[4] = {"", "+i", "-1", "-i"};
        std::string s = prefix[phase_];
        for (int q = 0; q < n_; ++q) s += "IXYZ"[static_cast<int>(letter(q))];
        return s;
    }

    int size() const { return n_; }
    QubitSet x_mask() const { return x_; }
    QubitSet z_mask() const { return z_; }
    int phase() const { return phase_; }

    Letter letter(int q) const {
        check_index(q);
        bool xb = (x_ >> q) & 1U, zb = (z_ >> q) & 1U;
        if (xb && zb) return Letter::Y;
        if (xb) return Letter::X;
        if (zb) return Letter::Z;
        return Letter::I;
    }

    void set(int q, Letter l) {
        check_index(q);
        QubitSet bit = QubitSet{1} << q;
        x_ &= ~bit;
        z_ &= ~bit;
        if (l == Letter::X || l == Letter::Y) x_ |= bit;
        if (l == Letter::Z || l == Letter::Y) z_ |= bit;
    }

    PauliString with_phase(int phase) const {
        PauliString p = *this;
        p.phase_ = static_cast<std::uint8_t>(((phase % 4) + 4) % 4);
        return p;
    }

    bool is_identity() const { return (x_ | z_) == 0; }
    int y_count() const { return std::popcount(x_ & z_); }

    friend bool operator==(const PauliString& a, const PauliString& b) {
        return a.n_ == b.n_ && a.x_ == b.x_ && a.z_ == b.z_ && a.phase_ == b.phase_;
    }
    bool same_letters(const PauliString& b) const { return n_ == b.n_ && x_ == b.x_ && z_ == b.z_; }

private:
    void check_index(int q) const {
        if (q < 0 || q >= n_) throw IndexError("qubit " + std::to_string(q) + " outside Pauli string of length " + std::to_string(n_));
    }

    int n_ = 0;
    QubitSet x_ = 0;
    QubitSet z_ = 0;
    std::uint8_t phase_ = 0;
};

inline QubitSet support(const PauliString& a) { return a.x_mask() | a.z_mask(); }

inline bool commutes(const PauliString& a, const PauliString& b) {
    if (a.size() != b.size()) throw DimensionError("commutes: length mismatch");
    // symplectic form: parity of sites where the two letters anticommute
    int anti = std::popcount((a.x_mask() & b.z_mask()) ^ (a.z_mask() & b.x_mask()));
    return anti % 2 == 0;
}

inline PauliString multiply(const PauliString& a, const PauliString& b) {
    if (a.size() != b.size()) throw DimensionError("multiply: length mismatch");
    // Single-site products: XY=iZ, YZ=iX, ZX=iY and the reversed orders give -i.
    static const int table[4][4] = {
        {0, 0, 0, 0},
        {0, 0, 1, 3},
        {0, 3, 0, 1},
        {0, 1, 3, 0},
    };
    int phase = a.phase() + b.phase();
    QubitSet both = support(a) & support(b);
    for (int q : set_members(both)) phase += table[static_cast<int>(a.letter(q))][static_cast<int>(b.letter(q))];
    return PauliString::from_masks(a.size(), a.x_mask() ^ b.x_mask(), a.z_mask() ^ b.z_mask(), phase);
}

inline PauliString restrict(const PauliString& a, QubitSet s) {
    if (s & ~full_set(a.size())) throw IndexError("restrict: subset exceeds qubit count");
    std::vector<int> qs = set_members(s);
    PauliString r(static_cast<int>(qs.size()));
    for (std::size_t i = 0; i < qs.size(); ++i) r.set(static_cast<int>(i), a.letter(qs[i]));
    return r;
}

// "ZZ@[3,4]"-style placement of a short Pauli word onto chosen qubits of an n-qubit register.
inline PauliString place(int n, std::string_view word, const std::vector<int>& qubits) {
    if (word.size() != qubits.size())
        throw ConfigError("generator letters and qubit list differ in length: " + std::string(word));
    PauliString p(n);
    QubitSet seen = 0;
    for (std::size_t i = 0; i < word.size(); ++i) {
        int q = qubits[i];
        if (q < 0 || q >= n) throw ConfigError("generator qubit " + std::to_string(q) + " out of range");
        if ((seen >> q) & 1U) throw ConfigError("generator repeats qubit " + std::to_string(q));
        seen |= QubitSet{1} << q;
        switch (word[i]) {
            case 'I': break;
            case 'X': p.set(q, Letter::X); break;
            case 'Y': p.set(q, Letter::Y); break;
            case 'Z': p.set(q, Letter::Z); break;
            default: throw ConfigError("invalid Pauli letter in generator " + std::string(word));
        }
    }
    return p;
}

}  // namespace bpscope
