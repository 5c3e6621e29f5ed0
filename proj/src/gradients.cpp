#include "qfe/gradients.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qfe {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;

double evaluate(Statevector& scratch, std::span<const Gate> gates, const Observable& obs) {
    run_circuit(scratch, gates);
    return expectation(scratch, obs);
}

void check_slot(const CircuitTemplate& tpl, SlotOrigin origin, int slot) {
    const int count = (origin == SlotOrigin::Input) ? tpl.n_input_slots : tpl.n_weight_slots;
    if (slot < 0 || slot >= count)
        throw std::out_of_range("slot " + std::to_string(slot) + " out of range");
}

// Derivative w.r.t. one slot given the bound gate list; mutates angles in
// place and restores them.
double slot_derivative_bound(std::vector<Gate>& gates, Statevector& scratch,
                             const std::vector<SlotOccurrence>& occurrences,
                             const Observable& obs) {
    double acc = 0.0;
    for (const SlotOccurrence& occ : occurrences) {
        Gate& g = gates[occ.gate_index];
        if (!g.is_rotation())
            throw std::invalid_argument("parameter-shift requires a rotation gate");
        const double base = g.angle;
        g.angle = base + kHalfPi;
        const double plus = evaluate(scratch, gates, obs);
        g.angle = base - kHalfPi;
        const double minus = evaluate(scratch, gates, obs);
        g.angle = base;
        acc += occ.scale * 0.5 * (plus - minus);
    }
    return acc;
}

void slot_derivative_bound_multi(std::vector<Gate>& gates, Statevector& scratch,
                                 const std::vector<SlotOccurrence>& occurrences,
                                 std::span<const Observable> observables,
                                 std::vector<PatchGradient>& out, SlotOrigin origin, int slot) {
    for (const SlotOccurrence& occ : occurrences) {
        Gate& g = gates[occ.gate_index];
        if (!g.is_rotation())
            throw std::invalid_argument("parameter-shift requires a rotation gate");
        const double base = g.angle;

        g.angle = base + kHalfPi;
        run_circuit(scratch, gates);
        for (std::size_t k = 0; k < observables.size(); ++k) {
            double& d = (origin == SlotOrigin::Input) ? out[k].d_inputs[slot]
                                                      : out[k].d_weights[slot];
            d += occ.scale * 0.5 * expectation(scratch, observables[k]);
        }
        g.angle = base - kHalfPi;
        run_circuit(scratch, gates);
        for (std::size_t k = 0; k < observables.size(); ++k) {
            double& d = (origin == SlotOrigin::Input) ? out[k].d_inputs[slot]
                                                      : out[k].d_weights[slot];
            d -= occ.scale * 0.5 * expectation(scratch, observables[k]);
        }
        g.angle = base;
    }
}

}  // namespace

double shifted_expectation(const CircuitTemplate& tpl, std::span<const double> inputs,
                           std::span<const double> weights, SlotOrigin origin, int slot,
                           double shift, const Observable& obs) {
    check_slot(tpl, origin, slot);
    if (!std::isfinite(shift)) throw std::invalid_argument("shift must be finite");
    std::vector<double> in(inputs.begin(), inputs.end());
    std::vector<double> w(weights.begin(), weights.end());
    auto& values = (origin == SlotOrigin::Input) ? in : w;
    values[static_cast<std::size_t>(slot)] += shift;
    const std::vector<Gate> gates = tpl.bind(in, w);
    Statevector scratch(tpl.n_qubits);
    return evaluate(scratch, gates, obs);
}

double slot_derivative(const CircuitTemplate& tpl, std::span<const double> inputs,
                       std::span<const double> weights, SlotOrigin origin, int slot,
                       const Observable& obs) {
    check_slot(tpl, origin, slot);
    std::vector<Gate> gates = tpl.bind(inputs, weights);
    Statevector scratch(tpl.n_qubits);
    return slot_derivative_bound(gates, scratch, tpl.occurrences(origin, slot), obs);
}

PatchGradient patch_gradient(const CircuitTemplate& composed, std::span<const double> inputs,
                             std::span<const double> weights, const Observable& obs) {
    const Observable obs_list[] = {obs};
    return std::move(patch_gradient_multi(composed, inputs, weights, obs_list)[0]);
}

PatchGradient patch_gradient(const CircuitTemplate& encoder, const CircuitTemplate& ansatz,
                             std::span<const double> inputs, std::span<const double> weights,
                             const Observable& obs) {
    return patch_gradient(compose(encoder, ansatz), inputs, weights, obs);
}

std::vector<PatchGradient> patch_gradient_multi(const CircuitTemplate& composed,
                                                std::span<const double> inputs,
                                                std::span<const double> weights,
                                                std::span<const Observable> observables) {
    std::vector<Gate> gates = composed.bind(inputs, weights);
    Statevector scratch(composed.n_qubits);

    std::vector<PatchGradient> out(observables.size());
    run_circuit(scratch, gates);
    for (std::size_t k = 0; k < observables.size(); ++k) {
        out[k].value = expectation(scratch, observables[k]);
        out[k].d_inputs.assign(static_cast<std::size_t>(composed.n_input_slots), 0.0);
        out[k].d_weights.assign(static_cast<std::size_t>(composed.n_weight_slots), 0.0);
    }
    for (int s = 0; s < composed.n_input_slots; ++s) {
        slot_derivative_bound_multi(gates, scratch, composed.occurrences(SlotOrigin::Input, s),
                                    observables, out, SlotOrigin::Input, s);
    }
    for (int s = 0; s < composed.n_weight_slots; ++s) {
        slot_derivative_bound_multi(gates, scratch, composed.occurrences(SlotOrigin::Weight, s),
                                    observables, out, SlotOrigin::Weight, s);
    }
    return out;
}

int shift_evaluation_count(const CircuitTemplate& tpl) { return 2 * tpl.occurrence_count() + 1; }

}  // namespace qfe
