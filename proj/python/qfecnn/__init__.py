"""Hybrid quantum-classical CNN: statevector simulation, parameter-shift
gradients, quantum feature extraction layers and the training entry points."""

from ._core import (
    CircuitTemplate,
    Gate,
    Observable,
    PatchGradient,
    QfeLayer,
    apply_gate,
    build_ansatz,
    build_encoder,
    compose,
    expectation,
    patch_gradient,
    reset_simulation_count,
    run_circuit,
    scaled_sigmoid,
    simulation_count,
    softmax_cross_entropy,
    synth_dataset,
    train_run,
    weight_count,
    zero_state,
)

__all__ = [
    "CircuitTemplate",
    "Gate",
    "Observable",
    "PatchGradient",
    "QfeLayer",
    "apply_gate",
    "build_ansatz",
    "build_encoder",
    "compose",
    "expectation",
    "patch_gradient",
    "reset_simulation_count",
    "run_circuit",
    "scaled_sigmoid",
    "simulation_count",
    "softmax_cross_entropy",
    "synth_dataset",
    "train_run",
    "weight_count",
    "zero_state",
]
