#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "circuit.hpp"
#include "hamiltonian.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace bpscope {

using cplx = std::complex<double>;

inline constexpr int kMaxSimQubits = 26;

struct StateVector {
    int n = 0;
    std::vector<cplx> amp;

    static StateVector zero(int n) {
        if (n < 0 || n > kMaxSimQubits) throw DimensionError("statevector qubit count out of range");
        StateVector s;
        s.n = n;
        s.amp.assign(std::size_t{1} << n, cplx{0.0, 0.0});
        s.amp[0] = 1.0;
        return s;
    }

    double norm() const {
        double t = 0.0;
        for (const auto& a : amp) t += std::norm(a);
        return std::sqrt(t);
    }
};

using ParameterVector = std::vector<double>;

namespace detail {

inline cplx ipow(int k) {
    switch (((k % 4) + 4) % 4) {
        case 0: return {1.0, 0.0};
        case 1: return {0.0, 1.0};
        case 2: return {-1.0, 0.0};
        default: return {0.0, -1.0};
    }
}

// P|b> = i^(phase + #Y) (-1)^popcount(b & z) |b ^ x>
struct PauliAction {
    std::uint64_t x, z;
    cplx base;
    explicit PauliAction(const PauliString& p)
        : x(p.x_mask()), z(p.z_mask()), base(ipow(p.phase() + p.y_count())) {}
    double sign(std::uint64_t b) const { return (std::popcount(b & z) & 1) ? -1.0 : 1.0; }
};

inline std::size_t insert_zero_bit(std::size_t i, int bit) {
    std::size_t low = i & ((std::size_t{1} << bit) - 1);
    return ((i >> bit) << (bit + 1)) | low;
}

}  // namespace detail

inline void check_width(const StateVector& s, int n) {
    if (s.n != n) throw DimensionError("statevector width differs from operator width");
}

// psi <- exp(-i theta P) psi = cos(theta) psi - i sin(theta) P psi
// For a pair (b, b ^ x) the sign of the partner differs from sign(b) by the fixed
// parity of popcount(x & z), so one popcount per pair suffices.
inline void apply_rotation(StateVector& s, const PauliString& p, double theta) {
    check_width(s, p.size());
    const double c = std::cos(theta), sn = std::sin(theta);
    detail::PauliAction pa(p);
    const cplx mis = cplx{0.0, -sn} * pa.base;
    const double mr = mis.real(), mi = mis.imag();
    cplx* a = s.amp.data();
    const std::size_t size = s.amp.size();
    if (pa.x == 0) {
        const double fr[2] = {c + mr, c - mr}, fi[2] = {mi, -mi};
        for (std::size_t b = 0; b < size; ++b) {
            const int odd = std::popcount(b & pa.z) & 1;
            const double ar = a[b].real(), ai = a[b].imag();
            a[b] = cplx{fr[odd] * ar - fi[odd] * ai, fr[odd] * ai + fi[odd] * ar};
        }
        return;
    }
    const double flip = (std::popcount(pa.x & pa.z) & 1) ? -1.0 : 1.0;
    const int hb = 63 - std::countl_zero(pa.x);
    const std::size_t stride = std::size_t{1} << hb;
    const std::uint64_t zlow = pa.z & ~std::uint64_t(stride);
    for (std::size_t hi = 0; hi < size; hi += 2 * stride) {
        for (std::size_t b = hi; b < hi + stride; ++b) {
            const std::size_t b2 = b ^ pa.x;
            const double sb = (std::popcount(b & zlow) & 1) ? -1.0 : 1.0, sb2 = sb * flip;
            const double xr = a[b].real(), xi = a[b].imag(), yr = a[b2].real(), yi = a[b2].imag();
            // a[b] = c x + mis sb2 y ; a[b2] = c y + mis sb x
            const double pr = mr * sb2, pi = mi * sb2, qr = mr * sb, qi = mi * sb;
            a[b] = cplx{c * xr + pr * yr - pi * yi, c * xi + pr * yi + pi * yr};
            a[b2] = cplx{c * yr + qr * xr - qi * xi, c * yi + qr * xi + qi * xr};
        }
    }
}

inline std::vector<cplx> apply_pauli(const StateVector& s, const PauliString& p) {
    check_width(s, p.size());
    detail::PauliAction pa(p);
    std::vector<cplx> out(s.amp.size());
    for (std::size_t b = 0; b < s.amp.size(); ++b) out[b ^ pa.x] = pa.base * pa.sign(b) * s.amp[b];
    return out;
}

// <phi| P |psi>
inline cplx pauli_matrix_element(const std::vector<cplx>& phi, const std::vector<cplx>& psi, const PauliString& p) {
    detail::PauliAction pa(p);
    double re = 0.0, im = 0.0;
    for (std::size_t b = 0; b < psi.size(); ++b) {
        const cplx u = phi[b ^ pa.x], v = psi[b];
        const double sg = pa.sign(b);
        re += sg * (u.real() * v.real() + u.imag() * v.imag());
        im += sg * (u.real() * v.imag() - u.imag() * v.real());
    }
    return pa.base * cplx{re, im};
}

// Applies a dense 2^k x 2^k unitary on the qubits of s; local bit i is the i-th smallest qubit of s.
inline void apply_matrix(StateVector& st, QubitSet s, const Eigen::MatrixXcd& u) {
    std::vector<int> qs = set_members(s);
    const std::size_t dim = std::size_t{1} << qs.size();
    if (static_cast<std::size_t>(u.rows()) != dim || static_cast<std::size_t>(u.cols()) != dim)
        throw DimensionError("matrix size does not match its qubit subset");
    if (s & ~full_set(st.n)) throw IndexError("matrix acts outside the register");
    std::vector<std::size_t> offset(dim, 0);
    for (std::size_t l = 0; l < dim; ++l)
        for (std::size_t i = 0; i < qs.size(); ++i)
            if ((l >> i) & 1U) offset[l] |= std::size_t{1} << qs[i];
    Eigen::VectorXcd in(static_cast<Eigen::Index>(dim)), out;
    for (std::size_t b = 0; b < st.amp.size(); ++b) {
        if (b & s) continue;
        for (std::size_t l = 0; l < dim; ++l) in[static_cast<Eigen::Index>(l)] = st.amp[b | offset[l]];
        out = u * in;
        for (std::size_t l = 0; l < dim; ++l) st.amp[b | offset[l]] = out[static_cast<Eigen::Index>(l)];
    }
}

inline double gate_angle(const Gate& g, const ParameterVector& theta) {
    return g.param ? theta[static_cast<std::size_t>(*g.param)] : *g.fixed_angle;
}

inline void check_params(const Circuit& c, const ParameterVector& theta) {
    if (theta.size() != static_cast<std::size_t>(c.param_count()))
        throw DimensionError("parameter vector length " + std::to_string(theta.size()) + " differs from circuit parameter count " +
                             std::to_string(c.param_count()));
}

inline StateVector run(const Circuit& c, const ParameterVector& theta) {
    check_params(c, theta);
    StateVector s = StateVector::zero(c.qubit_count());
    for (const auto& b : c.blocks())
        for (const auto& g : b.gates) apply_rotation(s, g.generator, gate_angle(g, theta));
    return s;
}

inline double expectation(const StateVector& s, const Hamiltonian& H) {
    check_width(s, H.qubit_count());
    cplx e{0.0, 0.0};
    for (const auto& t : H.terms()) e += t.coeff * pauli_matrix_element(s.amp, s.amp, t.pauli);
    if (std::abs(e.imag()) > 1e-10 * std::max(1.0, std::abs(e.real())))
        throw Error("expectation has an imaginary part; Hamiltonian not Hermitian?");
    return e.real();
}

inline std::vector<cplx> apply_hamiltonian(const StateVector& s, const Hamiltonian& H) {
    std::vector<cplx> out(s.amp.size(), cplx{0.0, 0.0});
    for (const auto& t : H.terms()) {
        detail::PauliAction pa(t.pauli);
        cplx f = t.coeff * pa.base;
        for (std::size_t b = 0; b < s.amp.size(); ++b) out[b ^ pa.x] += f * pa.sign(b) * s.amp[b];
    }
    return out;
}

// dC/dtheta_mu = C(theta_mu + pi/4) - C(theta_mu - pi/4) for exp(-i theta P) with P^2 = 1.
// The state before the differentiated gate is simulated once and shared by both shifts.
inline double shift_derivative(const Circuit& c, const ParameterVector& theta, const Hamiltonian& H, int mu) {
    check_params(c, theta);
    int kmu = c.block_of_param(mu);
    const auto& mgates = c.block(kmu).gates;
    std::size_t gpos = 0;
    while (mgates[gpos].param != mu) ++gpos;
    StateVector pre = StateVector::zero(c.qubit_count());
    for (int k = 0; k <= kmu; ++k) {
        const auto& gates = c.block(k).gates;
        std::size_t end = k == kmu ? gpos : gates.size();
        for (std::size_t i = 0; i < end; ++i) apply_rotation(pre, gates[i].generator, gate_angle(gates[i], theta));
    }
    double value[2];
    for (int side = 0; side < 2; ++side) {
        StateVector s = pre;
        const double shift = side == 0 ? std::numbers::pi / 4 : -std::numbers::pi / 4;
        for (int k = kmu; k < c.block_count(); ++k) {
            const auto& gates = c.block(k).gates;
            for (std::size_t i = (k == kmu ? gpos : 0); i < gates.size(); ++i) {
                double a = gate_angle(gates[i], theta);
                if (k == kmu && i == gpos) a += shift;
                apply_rotation(s, gates[i].generator, a);
            }
        }
        value[side] = expectation(s, H);
    }
    return value[0] - value[1];
}

inline std::vector<double> gradient(const Circuit& c, const ParameterVector& theta, const Hamiltonian& H) {
    std::vector<double> g(static_cast<std::size_t>(c.param_count()));
    for (int mu = 0; mu < c.param_count(); ++mu) g[static_cast<std::size_t>(mu)] = shift_derivative(c, theta, H, mu);
    return g;
}

struct EnergyGradient {
    double energy = 0.0;
    std::vector<double> grad;
    StateVector state;
};

namespace detail {

// Returns <lam|P|phi>, then applies exp(+i a P) to both phi and lam, all in one sweep.
inline cplx undo_gate_pair(StateVector& phi, StateVector& lam, const PauliString& p, double a) {
    const double c = std::cos(a), sn = std::sin(-a);
    PauliAction pa(p);
    const cplx mis = cplx{0.0, -sn} * pa.base;
    const double mr = mis.real(), mi = mis.imag();
    cplx* f = phi.amp.data();
    cplx* l = lam.amp.data();
    const std::size_t size = phi.amp.size();
    double er = 0.0, ei = 0.0;  // sum conj(l[b^x]) sign(b) f[b], base applied at the end
    auto rot = [&](cplx* v, std::size_t b, std::size_t b2, double sb, double sb2) {
        const double xr = v[b].real(), xi = v[b].imag(), yr = v[b2].real(), yi = v[b2].imag();
        const double pr = mr * sb2, pi = mi * sb2, qr = mr * sb, qi = mi * sb;
        v[b] = cplx{c * xr + pr * yr - pi * yi, c * xi + pr * yi + pi * yr};
        v[b2] = cplx{c * yr + qr * xr - qi * xi, c * yi + qr * xi + qi * xr};
    };
    if (pa.x == 0) {
        const double fr[2] = {c + mr, c - mr}, fi[2] = {mi, -mi};
        for (std::size_t b = 0; b < size; ++b) {
            const int odd = std::popcount(b & pa.z) & 1;
            const double sg = odd ? -1.0 : 1.0;
            const double ur = l[b].real(), ui = l[b].imag(), vr = f[b].real(), vi = f[b].imag();
            er += sg * (ur * vr + ui * vi);
            ei += sg * (ur * vi - ui * vr);
            f[b] = cplx{fr[odd] * vr - fi[odd] * vi, fr[odd] * vi + fi[odd] * vr};
            l[b] = cplx{fr[odd] * ur - fi[odd] * ui, fr[odd] * ui + fi[odd] * ur};
        }
        return pa.base * cplx{er, ei};
    }
    const double flip = (std::popcount(pa.x & pa.z) & 1) ? -1.0 : 1.0;
    const int hb = 63 - std::countl_zero(pa.x);
    const std::size_t stride = std::size_t{1} << hb;
    const std::uint64_t zlow = pa.z & ~std::uint64_t(stride);
    for (std::size_t hi = 0; hi < size; hi += 2 * stride) {
        for (std::size_t b = hi; b < hi + stride; ++b) {
            const std::size_t b2 = b ^ pa.x;
            const double sb = (std::popcount(b & zlow) & 1) ? -1.0 : 1.0, sb2 = sb * flip;
            // conj(l[b2]) sb f[b] + conj(l[b]) sb2 f[b2]
            er += sb * (l[b2].real() * f[b].real() + l[b2].imag() * f[b].imag()) +
                  sb2 * (l[b].real() * f[b2].real() + l[b].imag() * f[b2].imag());
            ei += sb * (l[b2].real() * f[b].imag() - l[b2].imag() * f[b].real()) +
                  sb2 * (l[b].real() * f[b2].imag() - l[b].imag() * f[b2].real());
            rot(f, b, b2, sb, sb2);
            rot(l, b, b2, sb, sb2);
        }
    }
    return pa.base * cplx{er, ei};
}

}  // namespace detail

namespace detail {

inline constexpr int kMaxDenseBlockQubits = 4;

// Gate sequence of one block folded into a dense matrix on the block support, together
// with the derivative of that matrix with respect to each trainable gate it contains.
struct DenseBlock {
    QubitSet support = 0;
    int dim = 0;
    std::vector<std::size_t> offset;  // local index -> global bit pattern
    Eigen::MatrixXcd u;
    std::vector<std::pair<int, Eigen::MatrixXcd>> du;  // (parameter index, dU/dtheta)
};

inline Eigen::MatrixXcd local_pauli(const PauliString& p, const std::vector<int>& qs) {
    const int dim = 1 << qs.size();
    std::uint64_t x = 0, z = 0;
    for (std::size_t i = 0; i < qs.size(); ++i) {
        x |= ((p.x_mask() >> qs[i]) & 1U) << i;
        z |= ((p.z_mask() >> qs[i]) & 1U) << i;
    }
    PauliAction pa(PauliString::from_masks(static_cast<int>(qs.size()), x, z, p.phase()));
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
    for (int b = 0; b < dim; ++b) m(static_cast<Eigen::Index>(b ^ pa.x), b) = pa.base * pa.sign(static_cast<std::uint64_t>(b));
    return m;
}

inline DenseBlock dense_block(const Block& blk, const ParameterVector& theta) {
    DenseBlock d;
    d.support = blk.support;
    std::vector<int> qs = set_members(blk.support);
    d.dim = 1 << qs.size();
    d.offset.assign(static_cast<std::size_t>(d.dim), 0);
    for (int l = 0; l < d.dim; ++l)
        for (std::size_t i = 0; i < qs.size(); ++i)
            if ((l >> i) & 1) d.offset[static_cast<std::size_t>(l)] |= std::size_t{1} << qs[i];
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(d.dim, d.dim);
    std::vector<Eigen::MatrixXcd> gate, pl;
    for (const auto& g : blk.gates) {
        pl.push_back(local_pauli(g.generator, qs));
        double a = gate_angle(g, theta);
        gate.push_back(std::cos(a) * id - cplx{0.0, std::sin(a)} * pl.back());
    }
    const std::size_t m = gate.size();
    // prefix[j] = G_j ... G_1 (acting first), suffix[j] = G_m ... G_{j+1}
    std::vector<Eigen::MatrixXcd> prefix(m), suffix(m);
    Eigen::MatrixXcd acc = id;
    for (std::size_t j = 0; j < m; ++j) prefix[j] = acc = gate[j] * acc;
    acc = id;
    for (std::size_t j = m; j-- > 0;) {
        suffix[j] = acc;
        acc = acc * gate[j];
    }
    d.u = prefix[m - 1];
    for (std::size_t j = 0; j < m; ++j)
        if (blk.gates[j].param)
            d.du.emplace_back(*blk.gates[j].param, suffix[j] * (cplx{0.0, -1.0} * pl[j]) * prefix[j]);
    return d;
}

template <int Dim>
void apply_dense_fixed(std::vector<cplx>& v, const DenseBlock& d, const Eigen::MatrixXcd& um) {
    cplx u[Dim][Dim];
    for (int r = 0; r < Dim; ++r)
        for (int l = 0; l < Dim; ++l) u[r][l] = um(r, l);
    std::size_t off[Dim];
    for (int l = 0; l < Dim; ++l) off[l] = d.offset[static_cast<std::size_t>(l)];
    cplx in[Dim];
    const std::size_t sup = d.support, groups = v.size() / Dim;
    // b runs over the indices with all support bits clear
    for (std::size_t g = 0, b = 0; g < groups; ++g, b = ((b | sup) + 1) & ~sup) {
        for (int l = 0; l < Dim; ++l) in[l] = v[b | off[l]];
        for (int r = 0; r < Dim; ++r) {
            cplx t{0.0, 0.0};
            for (int l = 0; l < Dim; ++l) t += u[r][l] * in[l];
            v[b | off[r]] = t;
        }
    }
}

inline void apply_dense(std::vector<cplx>& v, const DenseBlock& d, const Eigen::MatrixXcd& u) {
    switch (d.dim) {
        case 2: return apply_dense_fixed<2>(v, d, u);
        case 4: return apply_dense_fixed<4>(v, d, u);
        case 8: return apply_dense_fixed<8>(v, d, u);
        default: return apply_dense_fixed<16>(v, d, u);
    }
}

// One backward step over a dense block: undo U on phi and lam and accumulate
// M(a,b) = sum over the other qubits of conj(lam_after[a]) phi_before[b].
template <int Dim>
Eigen::MatrixXcd undo_dense_pair_fixed(std::vector<cplx>& phi, std::vector<cplx>& lam, const DenseBlock& d) {
    cplx ud[Dim][Dim], macc[Dim][Dim] = {};
    for (int r = 0; r < Dim; ++r)
        for (int l = 0; l < Dim; ++l) ud[r][l] = std::conj(d.u(l, r));
    std::size_t off[Dim];
    for (int l = 0; l < Dim; ++l) off[l] = d.offset[static_cast<std::size_t>(l)];
    cplx fa[Dim], la[Dim], fb[Dim];
    const std::size_t sup = d.support, groups = phi.size() / Dim;
    for (std::size_t g = 0, b = 0; g < groups; ++g, b = ((b | sup) + 1) & ~sup) {
        for (int l = 0; l < Dim; ++l) {
            fa[l] = phi[b | off[l]];
            la[l] = lam[b | off[l]];
        }
        for (int r = 0; r < Dim; ++r) {
            cplx tf{0.0, 0.0}, tl{0.0, 0.0};
            for (int l = 0; l < Dim; ++l) {
                tf += ud[r][l] * fa[l];
                tl += ud[r][l] * la[l];
            }
            fb[r] = tf;
            phi[b | off[r]] = tf;
            lam[b | off[r]] = tl;
        }
        for (int r = 0; r < Dim; ++r) {
            const cplx cl = std::conj(la[r]);
            for (int l = 0; l < Dim; ++l) macc[r][l] += cl * fb[l];
        }
    }
    Eigen::MatrixXcd m(Dim, Dim);
    for (int r = 0; r < Dim; ++r)
        for (int l = 0; l < Dim; ++l) m(r, l) = macc[r][l];
    return m;
}

inline Eigen::MatrixXcd undo_dense_pair(std::vector<cplx>& phi, std::vector<cplx>& lam, const DenseBlock& d) {
    switch (d.dim) {
        case 2: return undo_dense_pair_fixed<2>(phi, lam, d);
        case 4: return undo_dense_pair_fixed<4>(phi, lam, d);
        case 8: return undo_dense_pair_fixed<8>(phi, lam, d);
        default: return undo_dense_pair_fixed<16>(phi, lam, d);
    }
}

}  // namespace detail

// Reverse-mode evaluation: one forward pass, then blocks are undone from the end while
// carrying lam = (later blocks)^dagger H psi; dC/dtheta = 2 Re <lam_after| dU/dtheta |phi_before>.
// Blocks on at most four qubits are handled as dense matrices, larger ones gate by gate.
// Gives the same values as the shift rule.
inline EnergyGradient adjoint_gradient(const Circuit& c, const ParameterVector& theta, const Hamiltonian& H) {
    check_params(c, theta);
    EnergyGradient r;
    std::vector<std::optional<detail::DenseBlock>> dense(static_cast<std::size_t>(c.block_count()));
    StateVector phi = StateVector::zero(c.qubit_count());
    for (int k = 0; k < c.block_count(); ++k) {
        const Block& b = c.block(k);
        if (set_size(b.support) <= detail::kMaxDenseBlockQubits) {
            auto& d = dense[static_cast<std::size_t>(k)];
            d = detail::dense_block(b, theta);
            detail::apply_dense(phi.amp, *d, d->u);
        } else {
            for (const auto& g : b.gates) apply_rotation(phi, g.generator, gate_angle(g, theta));
        }
    }
    r.state = phi;
    StateVector lam;
    lam.n = phi.n;
    lam.amp = apply_hamiltonian(phi, H);
    cplx e{0.0, 0.0};
    for (std::size_t b = 0; b < phi.amp.size(); ++b) e += std::conj(phi.amp[b]) * lam.amp[b];
    r.energy = e.real();
    r.grad.assign(static_cast<std::size_t>(c.param_count()), 0.0);
    for (int k = c.block_count() - 1; k >= 0; --k) {
        const auto& d = dense[static_cast<std::size_t>(k)];
        if (d) {
            Eigen::MatrixXcd m = detail::undo_dense_pair(phi.amp, lam.amp, *d);
            for (const auto& [mu, du] : d->du)
                r.grad[static_cast<std::size_t>(mu)] = 2.0 * (du.array() * m.array()).sum().real();
            continue;
        }
        const auto& gates = c.block(k).gates;
        for (std::size_t i = gates.size(); i-- > 0;) {
            const Gate& g = gates[i];
            cplx el = detail::undo_gate_pair(phi, lam, g.generator, gate_angle(g, theta));
            if (g.param) r.grad[static_cast<std::size_t>(*g.param)] = 2.0 * el.imag();
        }
    }
    return r;
}

// Haar-random unitary: QR of a complex Ginibre matrix with the phases of diag(R) divided out.
inline Eigen::MatrixXcd haar_unitary(int dim, Rng& rng) {
    std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
    Eigen::MatrixXcd z(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) z(i, j) = cplx{nd(rng), nd(rng)};
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(z);
    Eigen::MatrixXcd q = qr.householderQ();
    Eigen::MatrixXcd rm = qr.matrixQR();
    for (int j = 0; j < dim; ++j) {
        cplx d = rm(j, j);
        double ad = std::abs(d);
        q.col(j) *= ad > 0 ? d / ad : cplx{1.0, 0.0};
    }
    return q;
}

enum class McMode { cartan_uniform, haar_sandwich };

inline const char* mc_mode_name(McMode m) { return m == McMode::cartan_uniform ? "cartan-uniform" : "haar-sandwich"; }

// Haar mode: every design2 block is replaced by a fresh Haar unitary on its support; the block
// holding parameter mu becomes V2 exp(-i theta_mu Omega) V1 with V1, V2 independent.
// Parameters of structured blocks keep their gates with the supplied angles.
inline StateVector run_haar(const Circuit& c, const ParameterVector& theta, int mu, Rng& rng) {
    check_params(c, theta);
    int kmu = c.block_of_param(mu);
    StateVector s = StateVector::zero(c.qubit_count());
    for (int k = 0; k < c.block_count(); ++k) {
        const Block& b = c.block(k);
        if (b.kind == BlockKind::structured) {
            for (const auto& g : b.gates) apply_rotation(s, g.generator, gate_angle(g, theta));
            continue;
        }
        int dim = 1 << set_size(b.support);
        apply_matrix(s, b.support, haar_unitary(dim, rng));
        if (k == kmu) {
            apply_rotation(s, c.gate_of_param(mu).generator, theta[static_cast<std::size_t>(mu)]);
            apply_matrix(s, b.support, haar_unitary(dim, rng));
        }
    }
    return s;
}

struct McResult {
    double mean = 0.0;
    double variance = 0.0;
    double std_error = 0.0;       // jackknife standard error of the variance
    double mean_std_error = 0.0;  // sqrt(variance / samples)
    std::size_t samples = 0;
};

// Sample variance (n-1 denominator) with a delete-one jackknife error.
inline McResult summarize_samples(const std::vector<double>& x) {
    McResult r;
    const std::size_t n = x.size();
    r.samples = n;
    if (n == 0) return r;
    double m = 0.0;
    for (double v : x) m += v;
    m /= static_cast<double>(n);
    r.mean = m;
    if (n < 2) return r;
    double s2 = 0.0;
    for (double v : x) s2 += (v - m) * (v - m);
    const double dn = static_cast<double>(n);
    r.variance = s2 / (dn - 1.0);
    r.mean_std_error = std::sqrt(r.variance / dn);
    if (n < 3) {
        r.std_error = std::numeric_limits<double>::infinity();
        return r;
    }
    // leave-one-out variances: (S2 - d_i^2 n/(n-1)) / (n-2)
    std::vector<double> loo(n);
    double lbar = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = x[i] - m;
        loo[i] = (s2 - d * d * dn / (dn - 1.0)) / (dn - 2.0);
        lbar += loo[i];
    }
    lbar /= dn;
    double acc = 0.0;
    for (double v : loo) acc += (v - lbar) * (v - lbar);
    r.std_error = std::sqrt((dn - 1.0) / dn * acc);
    return r;
}

inline constexpr std::size_t kMcChunk = 256;

// Draws `samples` derivatives of C with respect to parameter mu. Samples are grouped in fixed
// chunks with their own PRNG stream, so the result does not depend on the thread count.
inline McResult mc_variance(const Circuit& c, const Hamiltonian& H, int mu, std::size_t samples, McMode mode,
                            std::uint64_t seed, int threads = 1) {
    if (samples < 2) throw ConfigError("mc_variance needs at least 2 samples");
    c.block_of_param(mu);
    if (H.qubit_count() != c.qubit_count()) throw DimensionError("Hamiltonian width differs from circuit width");
    if (H.size() == 0) {
        McResult r;
        r.samples = samples;
        return r;
    }
    std::vector<double> x(samples);
    const std::size_t chunks = (samples + kMcChunk - 1) / kMcChunk;
    const std::size_t m = static_cast<std::size_t>(c.param_count());
    parallel_for(chunks, threads, [&](std::size_t ch) {
        Rng rng = make_rng(seed, {static_cast<std::uint64_t>(mu), ch});
        std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
        for (std::size_t i = ch * kMcChunk; i < std::min(samples, (ch + 1) * kMcChunk); ++i) {
            ParameterVector th(m);
            for (auto& t : th) t = u(rng);
            if (mode == McMode::cartan_uniform) {
                x[i] = shift_derivative(c, th, H, mu);
            } else {
                // one set of Haar draws shared by both shifted evaluations
                Rng snapshot = rng;
                ParameterVector tp = th, tm = th;
                tp[static_cast<std::size_t>(mu)] += std::numbers::pi / 4;
                tm[static_cast<std::size_t>(mu)] -= std::numbers::pi / 4;
                double ep = expectation(run_haar(c, tp, mu, rng), H);
                Rng again = snapshot;
                double em = expectation(run_haar(c, tm, mu, again), H);
                x[i] = ep - em;
            }
        }
    });
    return summarize_samples(x);
}

}  // namespace bpscope
