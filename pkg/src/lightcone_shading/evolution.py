"""Interaction-picture evolution of a single Pauli error through the ideal circuit."""

from __future__ import annotations

from dataclasses import dataclass

from .circuit import GateRef, LayeredCircuit, Observable, backward_cone_gates, forward_cone_gates
from .pauli import PauliSum, PauliTerm

DEFAULT_B_MAX = 500_000


@dataclass(frozen=True)
class EvolutionOutcome:
    """Result of evolving an error; ``result`` is None when B exceeded ``b_max``."""

    result: PauliSum | None
    layers_traversed: int
    peak_b: int

    @property
    def exceeded(self) -> bool:
        return self.result is None


def evolve_forward(error: PauliTerm, at_layer: int, circuit: LayeredCircuit, obs: Observable | None = None,
                   b_max: int = DEFAULT_B_MAX, gates: set[GateRef] | None = None) -> EvolutionOutcome:
    """Evolve an error occurring after layer ``at_layer`` to the end of the circuit.

    Only gates in ``gates`` are applied.  By default that is the intersection
    of the error's future cone with the past cone of ``obs``, which leaves
    ``||[E_F, A]||`` unchanged.  With ``obs=None`` and no ``gates`` every
    later gate is applied.
    """
    op = PauliSum.from_term(error)
    if gates is None:
        if obs is None:
            gates = {ref for ref, _ in circuit.gates() if ref[0] > at_layer}
        else:
            gates = (forward_cone_gates(circuit, error.support, at_layer)
                     & backward_cone_gates(circuit, obs.support))
    peak = op.size_b
    traversed = 0
    for li in range(at_layer + 1, circuit.n_layers):
        touched = False
        for gi, g in enumerate(circuit.layers[li]):
            if (li, gi) in gates:
                op = g.conjugate(op, "forward")
                touched = True
        traversed += 1
        if touched:
            peak = max(peak, op.size_b)
            if op.size_b > b_max:
                return EvolutionOutcome(None, traversed, peak)
    return EvolutionOutcome(op, traversed, peak)


def evolve_backward(error: PauliTerm, at_layer: int, circuit: LayeredCircuit,
                    b_max: int = DEFAULT_B_MAX) -> EvolutionOutcome:
    """Evolve an error occurring after layer ``at_layer`` back to the initial state.

    Gates outside the error's past topological cone cannot act on it and are
    skipped.
    """
    op = PauliSum.from_term(error)
    live = set(error.support)
    peak = op.size_b
    traversed = 0
    for li in range(at_layer, -1, -1):
        touched = False
        for g in circuit.layers[li]:
            if live.intersection(g.qubits):
                op = g.conjugate(op, "backward")
                live.update(g.qubits)
                touched = True
        traversed += 1
        if touched:
            peak = max(peak, op.size_b)
            if op.size_b > b_max:
                return EvolutionOutcome(None, traversed, peak)
    return EvolutionOutcome(op, traversed, peak)


def evolve_observable_backward(obs: Observable, circuit: LayeredCircuit, to_after_layer: int) -> PauliSum:
    """Heisenberg-evolve the observable back to just after layer ``to_after_layer``.

    Unbounded; meant for small instances and cross-checks.
    """
    op = obs.op
    cone = backward_cone_gates(circuit, obs.support)
    for li in range(circuit.n_layers - 1, to_after_layer, -1):
        for gi, g in enumerate(circuit.layers[li]):
            if (li, gi) in cone:
                op = g.conjugate(op, "backward")
    return op

