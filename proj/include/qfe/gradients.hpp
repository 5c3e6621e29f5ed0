#pragma once

#include <span>
#include <vector>

#include "qfe/circuits.hpp"
#include "qfe/statevector.hpp"

namespace qfe {

struct PatchGradient {
    double value = 0.0;              // unshifted expectation
    std::vector<double> d_inputs;    // length n_input_slots
    std::vector<double> d_weights;   // length n_weight_slots
};

// Expectation with the slot's bound value displaced by `shift` (every
// occurrence of the slot sees the displaced value through its scale).
double shifted_expectation(const CircuitTemplate& tpl, std::span<const double> inputs,
                           std::span<const double> weights, SlotOrigin origin, int slot,
                           double shift, const Observable& obs);

// Exact d<obs>/d(slot value) by the two-term parameter-shift rule, applied per
// gate occurrence and combined with the occurrence scales (product rule).
double slot_derivative(const CircuitTemplate& tpl, std::span<const double> inputs,
                       std::span<const double> weights, SlotOrigin origin, int slot,
                       const Observable& obs);

// Value plus derivatives w.r.t. every input and weight slot. Costs exactly
// shift_evaluation_count(tpl) circuit simulations.
PatchGradient patch_gradient(const CircuitTemplate& composed, std::span<const double> inputs,
                             std::span<const double> weights, const Observable& obs);
PatchGradient patch_gradient(const CircuitTemplate& encoder, const CircuitTemplate& ansatz,
                             std::span<const double> inputs, std::span<const double> weights,
                             const Observable& obs);

// Shared-circuit variant: evaluates several observables on each of the same
// shifted states, so the simulation cost does not scale with the observable
// count. Returns one PatchGradient per observable.
std::vector<PatchGradient> patch_gradient_multi(const CircuitTemplate& composed,
                                                std::span<const double> inputs,
                                                std::span<const double> weights,
                                                std::span<const Observable> observables);

// 2 * (parameterized gate occurrences) + 1. Equals 2 * (slots) + 1 for every
// template without slot sharing; the decomposed controlled-RX of Sim14 shares
// each weight across two occurrences and costs four shifted runs per slot.
int shift_evaluation_count(const CircuitTemplate& tpl);

}  // namespace qfe
