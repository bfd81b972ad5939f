"""Local operator-spreading bounds for channels that exact evolution cannot reach.

``w[i, sigma]`` bounds the spectral norm of the ``sigma`` component on qubit
``i`` of the Heisenberg-evolved observable,
``A = sum_sigma sigma_i (x) A_{sigma,[i]}``.  Bounds are pushed backward
through the circuit one gate at a time using the absolute Pauli transfer
matrix of each gate, and a commutator bound for a 1- or 2-local error is
read off the table at the error's position.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

from .circuit import Gate, LayeredCircuit, NoiseChannel, Observable, gate_ptm
from .norms import SPEED_LIMIT, BoundValue
from .pauli import LETTERS, PauliTerm

PTM_ZERO_TOL = 1e-12

# anticommutation between IXYZ letters
_ANTI = np.array([[0, 0, 0, 0], [0, 0, 1, 1], [0, 1, 0, 1], [0, 1, 1, 0]], dtype=bool)


@lru_cache(maxsize=4096)
def ptm_abs(gate: Gate) -> np.ndarray:
    """``|W[in, out]|`` with entries below ``1e-12`` set to exactly zero.

    One-qubit gates give a 4x4 matrix; two-qubit gates a 16x16 matrix indexed
    by ``4 * letter(q0) + letter(q1)``.
    """
    w = np.abs(gate_ptm(gate))
    w[w < PTM_ZERO_TOL] = 0.0
    w.setflags(write=False)
    return w


@dataclass(frozen=True)
class LocalBounds:
    """Table ``w[i, sigma]`` (columns in IXYZ order), capped at ``cap``."""

    w: np.ndarray
    cap: float

    def __post_init__(self):
        w = np.minimum(np.asarray(self.w, dtype=float), self.cap)
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    @property
    def n_qubits(self) -> int:
        return self.w.shape[0]

    def entry(self, q: int, letter: str) -> float:
        return float(self.w[q, LETTERS.index(letter)])

    def replace(self, w: np.ndarray) -> "LocalBounds":
        return LocalBounds(w, self.cap)


def init_bounds(obs: Observable) -> LocalBounds:
    """Letter-wise sum of ``|coeff|`` over the observable's Pauli terms."""
    n = obs.n_qubits
    w = np.zeros((n, 4))
    for t in obs.op.terms():
        c = abs(t.coeff)
        for q in range(n):
            w[q, LETTERS.index(t.letter(q))] += c
    return LocalBounds(w, obs.op.one_norm())


def propagate(bounds: LocalBounds, gate: Gate) -> LocalBounds:
    """Push bounds through one gate (``A -> G^dag A G``)."""
    wabs = ptm_abs(gate)
    w = bounds.w.copy()
    if len(gate.qubits) == 1:
        (q,) = gate.qubits
        w[q] = bounds.w[q] @ wabs
        return bounds.replace(w)
    i, j = gate.qubits
    pair = np.minimum.outer(bounds.w[i], bounds.w[j]).reshape(16)
    out = (pair @ wabs).reshape(4, 4)  # [sigma, tau]
    w[i] = out.sum(axis=1)
    w[j] = out.sum(axis=0)
    return bounds.replace(w)


def propagate_gates(bounds: LocalBounds, gates: Sequence[Gate]) -> list[LocalBounds]:
    """Bounds after each gate of ``gates``, traversed in reverse list order.

    ``gates`` is in time order; entry ``k`` of the result bounds the
    observable conjugated by the last ``k`` gates (entry 0 is the input).
    """
    out = [bounds]
    for g in reversed(gates):
        bounds = propagate(bounds, g)
        out.append(bounds)
    return out


def seed_from_exact(bounds: LocalBounds, exact: Mapping[tuple[int, str], float]) -> LocalBounds:
    """Tighten with known values of ``||[sigma_i, A]||``.

    ``A_{tau,[i]}`` is a normalised partial trace of ``(sigma tau)_i [sigma_i, A] / 2``
    for every ``sigma`` anticommuting with ``tau``, so its norm is at most half
    of the commutator norm.  Entries only ever decrease.
    """
    if not exact:
        return bounds
    w = bounds.w.copy()
    for (q, letter), val in exact.items():
        s = LETTERS.index(letter)
        for t in range(1, 4):
            if _ANTI[s, t]:
                w[q, t] = min(w[q, t], val / 2.0)
    return bounds.replace(w)


def restrict_to_letters(bounds: LocalBounds, allowed: Sequence[int]) -> LocalBounds:
    """Zero entries for letters the evolved observable provably lacks.

    ``allowed[q]`` is a letter-set bit mask (X=1, Y=2, Z=4) as produced by
    :func:`circuit.observable_type_sets`; identity entries are kept.
    """
    w = bounds.w.copy()
    for q, mask in enumerate(allowed):
        for t, bit in ((1, 1), (2, 2), (3, 4)):
            if not mask & bit:
                w[q, t] = 0.0
    return bounds.replace(w)


def _site_bound(bounds: LocalBounds, q: int, letter: str) -> float:
    s = LETTERS.index(letter)
    return 2.0 * float(bounds.w[q, _ANTI[s]].sum())


def commutator_bound(bounds: LocalBounds, error: PauliTerm | NoiseChannel, trivial: float = 2.0) -> BoundValue:
    """Bound ``||[E, A]||`` for a 1- or 2-local Pauli error.

    A single site gives ``2 sum_{tau anti sigma} w[i, tau]``; two sites add
    the single-site values (``[PQ, A] = P[Q, A] + [P, A]Q``).
    """
    if isinstance(error, NoiseChannel):
        sites = [(q, p) for q, p in zip(error.qubits, error.pauli) if p != "I"]
    else:
        sites = [(q, error.letter(q)) for q in error.support]
    if len(sites) > 2:
        raise ValueError("speed-limit bounds cover errors of weight 1 or 2")
    val = sum(_site_bound(bounds, q, p) for q, p in sites)
    return BoundValue(min(val, trivial), SPEED_LIMIT)


def layer_bounds(circuit: LayeredCircuit, obs: Observable,
                 exact: Mapping[int, Mapping[tuple[int, str], float]] | None = None,
                 type_sets: Mapping[int, Sequence[int]] | None = None) -> dict[int, LocalBounds]:
    """Bounds for the observable evolved back to just after each layer.

    Keys run from ``L-1`` (the bare observable) down to ``-1`` (before the
    first layer).  ``exact[l]`` seeds the table at position ``l``; ``type_sets``
    zeroes letters excluded by the commutation-aware lightcone.
    """
    exact = exact or {}
    bounds = init_bounds(obs)
    out = {}
    for li in range(circuit.n_layers - 1, -2, -1):
        if type_sets is not None:
            bounds = restrict_to_letters(bounds, type_sets[li])
        bounds = seed_from_exact(bounds, exact.get(li, {}))
        out[li] = bounds
        if li >= 0:
            for g in circuit.layers[li]:
                bounds = propagate(bounds, g)
    return out


def speed_limit_bounds(circuit: LayeredCircuit, obs: Observable, channels: Iterable[NoiseChannel],
                       **kwargs) -> dict[str, BoundValue]:
    table = layer_bounds(circuit, obs, **kwargs)
    return {ch.id: commutator_bound(table[ch.layer], ch, obs.trivial_bound) for ch in channels}
