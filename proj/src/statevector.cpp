#include "qfe/statevector.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace qfe {

namespace {

std::atomic<std::uint64_t> g_simulations{0};

using cd = std::complex<double>;

void check_qubit(int q, int n_qubits, const char* what) {
    if (q < 0 || q >= n_qubits) {
        throw std::out_of_range(std::string(what) + " qubit " + std::to_string(q) +
                                " out of range for " + std::to_string(n_qubits) + "-qubit state");
    }
}

// Enumerates amplitude pairs (i0, i0 | 1<<target) by inserting a zero bit at
// position `target`, same stride trick as the usual simulator kernels.
struct PairIter {
    std::size_t mask, lo, hi, count;
    explicit PairIter(std::size_t dim, int target)
        : mask(std::size_t{1} << target), lo(mask - 1), hi(~lo), count(dim >> 1) {}
    std::size_t i0(std::size_t i) const { return ((i & hi) << 1) | (i & lo); }
};

void apply_h(cd* a, std::size_t dim, int target) {
    static const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    PairIter it(dim, target);
    for (std::size_t i = 0; i < it.count; ++i) {
        const std::size_t i0 = it.i0(i), i1 = i0 | it.mask;
        const cd v0 = a[i0], v1 = a[i1];
        a[i0] = (v0 + v1) * inv_sqrt2;
        a[i1] = (v0 - v1) * inv_sqrt2;
    }
}

void apply_rx(cd* a, std::size_t dim, int target, double angle) {
    const double c = std::cos(0.5 * angle), s = std::sin(0.5 * angle);
    PairIter it(dim, target);
    for (std::size_t i = 0; i < it.count; ++i) {
        const std::size_t i0 = it.i0(i), i1 = i0 | it.mask;
        const cd v0 = a[i0], v1 = a[i1];
        // [[c, -is], [-is, c]]
        a[i0] = cd(c * v0.real() + s * v1.imag(), c * v0.imag() - s * v1.real());
        a[i1] = cd(s * v0.imag() + c * v1.real(), -s * v0.real() + c * v1.imag());
    }
}

void apply_ry(cd* a, std::size_t dim, int target, double angle) {
    const double c = std::cos(0.5 * angle), s = std::sin(0.5 * angle);
    PairIter it(dim, target);
    for (std::size_t i = 0; i < it.count; ++i) {
        const std::size_t i0 = it.i0(i), i1 = i0 | it.mask;
        const cd v0 = a[i0], v1 = a[i1];
        // [[c, -s], [s, c]], all real
        a[i0] = c * v0 - s * v1;
        a[i1] = s * v0 + c * v1;
    }
}

void apply_rz(cd* a, std::size_t dim, int target, double angle) {
    const cd e0 = std::polar(1.0, -0.5 * angle);
    const cd e1 = std::polar(1.0, 0.5 * angle);
    PairIter it(dim, target);
    for (std::size_t i = 0; i < it.count; ++i) {
        const std::size_t i0 = it.i0(i), i1 = i0 | it.mask;
        a[i0] *= e0;
        a[i1] *= e1;
    }
}

void apply_cnot(cd* a, std::size_t dim, int control, int target) {
    const std::size_t cmask = std::size_t{1} << control;
    const std::size_t tmask = std::size_t{1} << target;
    // Walk indices with control bit set and target bit clear, swap with partner.
    for (std::size_t i = 0; i < dim; ++i) {
        if ((i & cmask) && !(i & tmask)) std::swap(a[i], a[i | tmask]);
    }
}

void apply_cz(cd* a, std::size_t dim, int control, int target) {
    const std::size_t both = (std::size_t{1} << control) | (std::size_t{1} << target);
    for (std::size_t i = 0; i < dim; ++i) {
        if ((i & both) == both) a[i] = -a[i];
    }
}

}  // namespace

const char* gate_kind_name(GateKind kind) {
    switch (kind) {
        case GateKind::H: return "H";
        case GateKind::RX: return "RX";
        case GateKind::RY: return "RY";
        case GateKind::RZ: return "RZ";
        case GateKind::CNOT: return "CNOT";
        case GateKind::CZ: return "CZ";
    }
    return "?";
}

double Observable::weight_bound() const {
    double bound = 0.0;
    for (const auto& term : terms) bound += std::abs(term.coeff);
    return bound;
}

int Observable::max_qubit() const {
    int max_q = -1;
    for (const auto& term : terms)
        for (const auto& [q, p] : term.ops) max_q = std::max(max_q, q);
    return max_q;
}

Statevector::Statevector(int n_qubits) : n_qubits_(n_qubits) {
    if (n_qubits < 1 || n_qubits > kMaxQubits) {
        throw std::invalid_argument("statevector size must be between 1 and " +
                                    std::to_string(kMaxQubits) + " qubits, got " +
                                    std::to_string(n_qubits));
    }
    amps_.assign(std::size_t{1} << n_qubits, cd{0.0, 0.0});
    amps_[0] = 1.0;
}

Statevector Statevector::from_amplitudes(int n_qubits,
                                         std::vector<std::complex<double>> amps) {
    Statevector s(n_qubits);
    if (amps.size() != s.size())
        throw std::invalid_argument("amplitude vector length must be 2^n_qubits");
    s.amps_ = std::move(amps);
    return s;
}

void Statevector::reset() {
    std::fill(amps_.begin(), amps_.end(), cd{0.0, 0.0});
    amps_[0] = 1.0;
}

void Statevector::apply(const Gate& gate) {
    check_qubit(gate.target, n_qubits_, "target");
    if (gate.has_control()) {
        check_qubit(gate.control, n_qubits_, "control");
        if (gate.control == gate.target)
            throw std::invalid_argument("control and target must differ");
    }
    cd* a = amps_.data();
    const std::size_t dim = amps_.size();
    switch (gate.kind) {
        case GateKind::H: apply_h(a, dim, gate.target); break;
        case GateKind::RX: apply_rx(a, dim, gate.target, gate.angle); break;
        case GateKind::RY: apply_ry(a, dim, gate.target, gate.angle); break;
        case GateKind::RZ: apply_rz(a, dim, gate.target, gate.angle); break;
        case GateKind::CNOT: apply_cnot(a, dim, gate.control, gate.target); break;
        case GateKind::CZ: apply_cz(a, dim, gate.control, gate.target); break;
    }
}

void Statevector::apply(std::span<const Gate> gates) {
    for (const Gate& g : gates) apply(g);
}

double Statevector::norm_sq() const {
    double acc = 0.0;
    for (const cd& v : amps_) acc += std::norm(v);
    return acc;
}

Statevector zero_state(int n_qubits) { return Statevector(n_qubits); }

Statevector apply_gate(Statevector state, const Gate& gate) {
    state.apply(gate);
    return state;
}

double expectation(const Statevector& state, const Observable& obs) {
    const auto amps = state.amplitudes();
    const std::size_t dim = amps.size();
    if (obs.max_qubit() >= state.n_qubits()) {
        throw std::out_of_range("observable acts on qubit " + std::to_string(obs.max_qubit()) +
                                " beyond a " + std::to_string(state.n_qubits()) + "-qubit state");
    }

    cd total = 0.0;
    std::vector<cd> scratch;
    for (const PauliTerm& term : obs.terms) {
        if (!std::isfinite(term.coeff))
            throw std::invalid_argument("observable coefficient is not finite");

        bool z_only = true;
        std::size_t zmask = 0;
        for (const auto& [q, p] : term.ops) {
            if (p == Pauli::Z) zmask |= std::size_t{1} << q;
            else z_only = false;
        }

        if (z_only) {
            // <Z...Z> = sum_i (-1)^popcount(i & zmask) |a_i|^2
            double acc = 0.0;
            for (std::size_t i = 0; i < dim; ++i) {
                const double sign = (std::popcount(i & zmask) & 1) ? -1.0 : 1.0;
                acc += sign * std::norm(amps[i]);
            }
            total += term.coeff * acc;
            continue;
        }

        scratch.assign(amps.begin(), amps.end());
        for (const auto& [q, p] : term.ops) {
            const std::size_t mask = std::size_t{1} << q;
            switch (p) {
                case Pauli::X:
                    for (std::size_t i = 0; i < dim; ++i)
                        if (!(i & mask)) std::swap(scratch[i], scratch[i | mask]);
                    break;
                case Pauli::Y:
                    for (std::size_t i = 0; i < dim; ++i) {
                        if (i & mask) continue;
                        const cd v0 = scratch[i], v1 = scratch[i | mask];
                        scratch[i] = cd(v1.imag(), -v1.real());       // -i * v1
                        scratch[i | mask] = cd(-v0.imag(), v0.real());  // +i * v0
                    }
                    break;
                case Pauli::Z:
                    for (std::size_t i = 0; i < dim; ++i)
                        if (i & mask) scratch[i] = -scratch[i];
                    break;
            }
        }
        cd inner = 0.0;
        for (std::size_t i = 0; i < dim; ++i) inner += std::conj(amps[i]) * scratch[i];
        total += term.coeff * inner;
    }

    if (std::abs(total.imag()) >= 1e-10) {
        throw std::runtime_error("expectation has non-negligible imaginary part " +
                                 std::to_string(total.imag()));
    }
    return total.real();
}

Statevector run_circuit(int n_qubits, std::span<const Gate> gates) {
    Statevector state(n_qubits);
    state.apply(gates);
    g_simulations.fetch_add(1, std::memory_order_relaxed);
    return state;
}

void run_circuit(Statevector& state, std::span<const Gate> gates) {
    state.reset();
    state.apply(gates);
    g_simulations.fetch_add(1, std::memory_order_relaxed);
}

std::uint64_t simulation_count() { return g_simulations.load(std::memory_order_relaxed); }

void reset_simulation_count() { g_simulations.store(0, std::memory_order_relaxed); }

}  // namespace qfe
