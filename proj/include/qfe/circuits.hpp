#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qfe/statevector.hpp"

namespace qfe {

enum class SlotOrigin { Input, Weight };

// Angle of a parameterized gate: either a fixed constant or scale * slot value.
// The scale carries the +-1/2 factors of the controlled-rotation decomposition.
struct AngleSource {
    int slot = -1;  // < 0 means fixed
    SlotOrigin origin = SlotOrigin::Weight;
    double scale = 1.0;
    double fixed = 0.0;

    static AngleSource fixed_angle(double value) { return {-1, SlotOrigin::Weight, 0.0, value}; }
    static AngleSource input(int slot, double scale = 1.0) {
        return {slot, SlotOrigin::Input, scale, 0.0};
    }
    static AngleSource weight(int slot, double scale = 1.0) {
        return {slot, SlotOrigin::Weight, scale, 0.0};
    }
    bool is_slot() const { return slot >= 0; }
};

struct TemplateGate {
    GateKind kind = GateKind::H;
    int target = 0;
    int control = -1;
    AngleSource angle;
};

struct SlotOccurrence {
    std::size_t gate_index = 0;
    double scale = 1.0;
};

struct CircuitTemplate {
    int n_qubits = 0;
    std::vector<TemplateGate> gates;
    int n_input_slots = 0;
    int n_weight_slots = 0;

    // Resolves all angles. Vector lengths must equal the declared slot counts.
    std::vector<Gate> bind(std::span<const double> inputs, std::span<const double> weights) const;
    void bind_into(std::span<const double> inputs, std::span<const double> weights,
                   std::vector<Gate>& out) const;

    std::vector<SlotOccurrence> occurrences(SlotOrigin origin, int slot) const;
    // Total parameterized gate occurrences (>= n_input_slots + n_weight_slots).
    int occurrence_count() const;

    void validate() const;  // checks slot bookkeeping and gate indices
};

// U_en(x) = tensor product of RY(x_i): one RY per qubit, input slot i on qubit i.
CircuitTemplate build_encoder(int n_qubits);

enum class AnsatzKind { Sim1, Sim2, Sim9, Sim14, Sim15, QaoaHeuristic };

struct AnsatzPreset {
    AnsatzKind kind = AnsatzKind::Sim1;
    int layers = 1;
};

AnsatzKind ansatz_from_name(std::string_view name);  // "sim1" ... "sim15", "qaoa"
std::string_view ansatz_name(AnsatzKind kind);
std::vector<AnsatzKind> all_ansatz_kinds();

// Per-layer gate structure of each preset (the implementation is the contract):
//   Sim1:  RX(w) on every qubit, then RZ(w) on every qubit.
//   Sim2:  Sim1 rotations, then descending CNOT chain (qubit i controls i-1).
//   Sim9:  H on every qubit, CZ on neighbor pairs (i, i+1), RX(w) on every qubit.
//   Sim14: RY(w) on every qubit; CRX(w) ring control i -> target (i+1) mod n;
//          RY(w) on every qubit; CRX(w) counter ring control i -> target (i-1) mod n.
//   Sim15: as Sim14 with unparameterized CNOT rings instead of CRX.
//   Qaoa:  for each neighbor pair (i, i+1): CNOT(i->i+1), RZ(w) on i+1,
//          CNOT(i->i+1); then RX(w) on every qubit.
// Controlled-RX is decomposed into RY/RZ/CNOT primitives; its weight enters
// through two RZ occurrences with scales +1/2 and -1/2.
// Repeating `layers` times stacks independent weight slots.
CircuitTemplate build_ansatz(const AnsatzPreset& preset, int n_qubits);

int weight_count(const AnsatzPreset& preset, int n_qubits);

// Encoder followed by ansatz on the same register. The encoder must have no
// weight slots and the ansatz no input slots.
CircuitTemplate compose(const CircuitTemplate& encoder, const CircuitTemplate& ansatz);

}  // namespace qfe
