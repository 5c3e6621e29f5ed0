#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace qfe {

inline constexpr int kMaxQubits = 16;

enum class GateKind { H, RX, RY, RZ, CNOT, CZ };

// Rotation convention: R_a(angle) = exp(-i * angle * A / 2) for A in {X, Y, Z}.
struct Gate {
    GateKind kind = GateKind::H;
    int target = 0;
    int control = -1;  // >= 0 only for CNOT / CZ
    double angle = 0.0;

    static Gate h(int target) { return {GateKind::H, target, -1, 0.0}; }
    static Gate rx(int target, double angle) { return {GateKind::RX, target, -1, angle}; }
    static Gate ry(int target, double angle) { return {GateKind::RY, target, -1, angle}; }
    static Gate rz(int target, double angle) { return {GateKind::RZ, target, -1, angle}; }
    static Gate cnot(int control, int target) { return {GateKind::CNOT, target, control, 0.0}; }
    static Gate cz(int control, int target) { return {GateKind::CZ, target, control, 0.0}; }

    bool is_rotation() const {
        return kind == GateKind::RX || kind == GateKind::RY || kind == GateKind::RZ;
    }
    bool has_control() const { return kind == GateKind::CNOT || kind == GateKind::CZ; }
};

const char* gate_kind_name(GateKind kind);

enum class Pauli { X, Y, Z };

struct PauliTerm {
    double coeff = 1.0;
    std::vector<std::pair<int, Pauli>> ops;  // (qubit, pauli); empty means identity
};

struct Observable {
    std::vector<PauliTerm> terms;

    static Observable z(int qubit) { return {{PauliTerm{1.0, {{qubit, Pauli::Z}}}}}; }
    static Observable identity(double coeff = 1.0) { return {{PauliTerm{coeff, {}}}}; }

    double weight_bound() const;  // sum of |coeff|
    int max_qubit() const;        // -1 if identity only
};

// Dense amplitude vector of an n-qubit register. Qubit 0 is the least
// significant bit of the amplitude index.
class Statevector {
public:
    explicit Statevector(int n_qubits);
    static Statevector from_amplitudes(int n_qubits, std::vector<std::complex<double>> amps);

    int n_qubits() const { return n_qubits_; }
    std::size_t size() const { return amps_.size(); }
    std::span<const std::complex<double>> amplitudes() const { return amps_; }
    std::complex<double> amplitude(std::size_t index) const { return amps_.at(index); }

    void reset();  // back to |0...0>
    void apply(const Gate& gate);
    void apply(std::span<const Gate> gates);
    double norm_sq() const;

private:
    int n_qubits_;
    std::vector<std::complex<double>> amps_;
};

Statevector zero_state(int n_qubits);
Statevector apply_gate(Statevector state, const Gate& gate);
double expectation(const Statevector& state, const Observable& obs);

// Runs |0...0> through `gates`. Each call counts as one circuit simulation.
Statevector run_circuit(int n_qubits, std::span<const Gate> gates);
// Same, reusing caller-owned storage to avoid reallocation in hot loops.
void run_circuit(Statevector& state, std::span<const Gate> gates);

std::uint64_t simulation_count();
void reset_simulation_count();

}  // namespace qfe
