"""Layered circuits, Pauli noise models, observables and lightcone geometry."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

import numpy as np

from .pauli import (CLIFFORD_ARITY, LETTERS, PauliError, PauliSum, PauliTerm, conjugate_clifford,
                    conjugate_rotation)

ROTATION_ALIASES = {"RX": "X", "RY": "Y", "RZ": "Z", "RXX": "XX", "RYY": "YY", "RZZ": "ZZ"}


class CircuitError(ValueError):
    """Invalid circuit, noise model or observable."""


# ----------------------------------------------------------------------------
# gates


@dataclass(frozen=True)
class Gate:
    """A named Clifford or a Pauli-axis rotation ``exp(-i theta P / 2)``.

    For rotations ``axis`` holds one letter per entry of ``qubits``.
    """

    kind: str
    qubits: tuple[int, ...]
    theta: float | None = None
    axis: str | None = None

    def __post_init__(self):
        kind = self.kind.upper()
        if kind == "CX":
            kind = "CNOT"
        qubits = tuple(int(q) for q in self.qubits)
        object.__setattr__(self, "qubits", qubits)
        if len(set(qubits)) != len(qubits) or not 1 <= len(qubits) <= 2:
            raise CircuitError(f"gate support must be 1 or 2 distinct qubits, got {qubits}")
        if kind in ROTATION_ALIASES:
            axis = ROTATION_ALIASES[kind]
            kind = "R"
            if len(axis) != len(qubits):
                raise CircuitError(f"{self.kind} acts on {len(axis)} qubit(s)")
            object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "kind", kind)
        if kind == "R":
            if self.theta is None:
                raise CircuitError("rotation gate needs an angle")
            axis = (self.axis or "").upper()
            if len(axis) != len(qubits) or any(a not in "XYZ" for a in axis):
                raise CircuitError(f"rotation axis {self.axis!r} must give one of X/Y/Z per qubit")
            object.__setattr__(self, "axis", axis)
            object.__setattr__(self, "theta", float(self.theta))
        elif kind in CLIFFORD_ARITY:
            if CLIFFORD_ARITY[kind] != len(qubits):
                raise CircuitError(f"{kind} acts on {CLIFFORD_ARITY[kind]} qubit(s)")
            if self.theta is not None:
                raise CircuitError(f"{kind} takes no angle")
        else:
            raise CircuitError(f"unknown gate kind {self.kind!r}")

    @property
    def is_rotation(self) -> bool:
        return self.kind == "R"

    @property
    def is_clifford(self) -> bool:
        if not self.is_rotation:
            return True
        k = self.theta / (math.pi / 2)
        return abs(k - round(k)) < 1e-12

    @property
    def name(self) -> str:
        return f"R{self.axis}" if self.is_rotation else self.kind

    def axis_term(self, n_qubits: int) -> PauliTerm:
        return PauliTerm.from_sparse(dict(zip(self.qubits, self.axis)), n_qubits)

    def conjugate(self, op: PauliSum, direction: str) -> PauliSum:
        """``forward``: ``G op G^dag``; ``backward``: ``G^dag op G``."""
        if self.is_rotation:
            return conjugate_rotation(op, self.axis_term(op.n_qubits), self.theta, direction)
        return conjugate_clifford(op, self.kind, self.qubits, direction)

    def relabeled(self, qubits: tuple[int, ...]) -> "Gate":
        return Gate(self.kind, qubits, self.theta, self.axis)

    def to_json(self) -> dict:
        d = {"gate": self.name, "qubits": list(self.qubits)}
        if self.is_rotation:
            d["theta"] = self.theta
        return d

    def __repr__(self):
        ang = f"({self.theta:.4g})" if self.is_rotation else ""
        return f"{self.name}{ang}{list(self.qubits)}"


@lru_cache(maxsize=4096)
def gate_ptm(gate: Gate) -> np.ndarray:
    """Signed Pauli transfer matrix ``W[in, out]`` with ``G^dag in G = sum W out``.

    Indices run over ``IXYZ`` letters; for two-qubit gates the index is
    ``4 * letter(qubits[0]) + letter(qubits[1])``.
    """
    k = len(gate.qubits)
    local = gate.relabeled(tuple(range(k)))
    size = 4 ** k
    w = np.zeros((size, size))
    for idx in range(size):
        letters = [LETTERS[idx // 4], LETTERS[idx % 4]] if k == 2 else [LETTERS[idx]]
        op = PauliSum.from_term(PauliTerm.from_label("".join(letters)))
        img = local.conjugate(op, "backward")
        for t in img.terms():
            lab = t.label
            out = 4 * LETTERS.index(lab[0]) + LETTERS.index(lab[1]) if k == 2 else LETTERS.index(lab[0])
            w[idx, out] = t.coeff.real
    return w


# ----------------------------------------------------------------------------
# circuits


GateRef = tuple[int, int]  # (layer index, position within layer)


@dataclass(frozen=True)
class LayeredCircuit:
    n_qubits: int
    layers: tuple[tuple[Gate, ...], ...]
    coupling: frozenset[tuple[int, int]] = field(default=None)

    def __post_init__(self):
        if self.n_qubits < 1:
            raise CircuitError("n_qubits must be positive")
        layers = tuple(tuple(layer) for layer in self.layers)
        object.__setattr__(self, "layers", layers)
        edges = set()
        for li, layer in enumerate(layers):
            used: set[int] = set()
            for g in layer:
                for q in g.qubits:
                    if not 0 <= q < self.n_qubits:
                        raise CircuitError(f"layer {li}: qubit {q} out of range")
                    if q in used:
                        raise CircuitError(f"layer {li}: gates overlap on qubit {q}")
                    used.add(q)
                if len(g.qubits) == 2:
                    edges.add(tuple(sorted(g.qubits)))
        if self.coupling is None:
            object.__setattr__(self, "coupling", frozenset(edges))
        else:
            coupling = frozenset(tuple(sorted((int(a), int(b)))) for a, b in self.coupling)
            object.__setattr__(self, "coupling", coupling)
            for e in edges:
                if e not in coupling:
                    raise CircuitError(f"two-qubit gate on {e} is not a coupling edge")

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    def gates(self) -> Iterator[tuple[GateRef, Gate]]:
        for li, layer in enumerate(self.layers):
            for gi, g in enumerate(layer):
                yield (li, gi), g

    def gate(self, ref: GateRef) -> Gate:
        return self.layers[ref[0]][ref[1]]

    @property
    def is_clifford(self) -> bool:
        return all(g.is_clifford for _, g in self.gates())

    def two_qubit_layers(self) -> list[int]:
        return [li for li, layer in enumerate(self.layers) if any(len(g.qubits) == 2 for g in layer)]

    def to_json(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "coupling": [list(e) for e in sorted(self.coupling)],
            "layers": [[g.to_json() for g in layer] for layer in self.layers],
        }


def edge_coloring(edges: Iterable[tuple[int, int]]) -> list[list[tuple[int, int]]]:
    """Greedy proper edge colouring; deterministic for a given edge order."""
    colors: list[list[tuple[int, int]]] = []
    busy: list[set[int]] = []
    for a, b in sorted(tuple(sorted(e)) for e in edges):
        for c, used in enumerate(busy):
            if a not in used and b not in used:
                colors[c].append((a, b))
                used.update((a, b))
                break
        else:
            colors.append([(a, b)])
            busy.append({a, b})
    return colors


def _zz_sublayers(bonds: Sequence[tuple[int, int]], theta_zz: float, native: bool) -> list[list[Gate]]:
    if native:
        return [[Gate("RZZ", (a, b), theta_zz) for a, b in bonds]]
    # R_ZZ(t) = CNOT(a, b) R_Z(t)_b CNOT(a, b)
    return [[Gate("CNOT", (a, b)) for a, b in bonds],
            [Gate("RZ", (b,), theta_zz) for a, b in bonds],
            [Gate("CNOT", (a, b)) for a, b in bonds]]


def build_tfim(n_qubits: int, bond_groups: Sequence[Sequence[tuple[int, int]]], steps: int,
               theta_x: float, theta_zz: float, native: bool = True) -> LayeredCircuit:
    """Trotter circuit: each step is an R_X layer followed by one R_ZZ
    sublayer per bond group."""
    if steps < 1:
        raise CircuitError("steps must be >= 1")
    layers: list[list[Gate]] = []
    coupling = {tuple(sorted(e)) for grp in bond_groups for e in grp}
    for _ in range(steps):
        layers.append([Gate("RX", (q,), theta_x) for q in range(n_qubits)])
        for grp in bond_groups:
            if grp:
                layers.extend(_zz_sublayers(grp, theta_zz, native))
    return LayeredCircuit(n_qubits, tuple(tuple(layer) for layer in layers), frozenset(coupling))


def build_tfim_1d(n: int, steps: int, theta_x: float, theta_zz: float, native: bool = True) -> LayeredCircuit:
    """1D transverse-field Ising Trotter circuit on an open chain.

    Each step applies ``R_X(theta_x)`` on every qubit, then ``R_ZZ(theta_zz)``
    on the even bonds (0-1, 2-3, ...) and then on the odd bonds (1-2, ...).
    The even sublayer always comes first.  Angles follow
    ``theta_x = 2 h dt`` and ``theta_zz = -2 J dt`` for
    ``H = -J sum Z_i Z_j + h sum X_i``.
    """
    if n < 2:
        raise CircuitError("need at least two qubits")
    even = [(i, i + 1) for i in range(0, n - 1, 2)]
    odd = [(i, i + 1) for i in range(1, n - 1, 2)]
    return build_tfim(n, [even, odd], steps, theta_x, theta_zz, native)


def heavy_hex_patch() -> tuple[int, list[tuple[int, int]]]:
    """One heavy-hex cell (a 12-qubit ring of corner and bridge qubits) with
    two tail qubits attached to opposite corners, 14 qubits in all.

    Returns ``(n_qubits, edges)``.
    """
    ring = [(i, (i + 1) % 12) for i in range(12)]
    tails = [(0, 12), (6, 13)]
    return 14, ring + tails


def build_tfim_graph(n_qubits: int, edges: Sequence[tuple[int, int]], steps: int, theta_x: float,
                     theta_zz: float, native: bool = True) -> LayeredCircuit:
    return build_tfim(n_qubits, edge_coloring(edges), steps, theta_x, theta_zz, native)


# ----------------------------------------------------------------------------
# noise


@dataclass(frozen=True, order=True)
class NoiseChannel:
    """Pauli-Lindblad channel applied immediately after layer ``layer``.

    ``layer = -1`` places the channel before the first layer.
    """

    layer: int
    qubits: tuple[int, ...]
    pauli: str
    lam: float = field(default=0.0, compare=False)

    def __post_init__(self):
        qubits = tuple(int(q) for q in self.qubits)
        pauli = self.pauli.upper()
        if len(qubits) != len(pauli) or not 1 <= len(qubits) <= 2 or len(set(qubits)) != len(qubits):
            raise CircuitError(f"channel needs 1 or 2 distinct qubits matching its Pauli: {qubits} {pauli}")
        if any(ch not in "IXYZ" for ch in pauli) or set(pauli) == {"I"}:
            raise CircuitError(f"channel Pauli {pauli!r} must be a non-identity Pauli")
        if self.lam < 0:
            raise CircuitError("Lindblad rate must be non-negative")
        order = sorted(range(len(qubits)), key=lambda k: qubits[k])
        object.__setattr__(self, "qubits", tuple(qubits[k] for k in order))
        object.__setattr__(self, "pauli", "".join(pauli[k] for k in order))
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def id(self) -> str:
        letters = "".join(f"{p}{q}" for p, q in zip(self.pauli, self.qubits))
        return f"L{self.layer}:{letters}"

    @property
    def key(self) -> tuple:
        return (self.layer, self.qubits, self.pauli)

    @property
    def probability(self) -> float:
        return (1.0 - math.exp(-2.0 * self.lam)) / 2.0

    @property
    def active_qubits(self) -> tuple[int, ...]:
        return tuple(q for q, p in zip(self.qubits, self.pauli) if p != "I")

    def error(self, n_qubits: int) -> PauliTerm:
        return PauliTerm.from_sparse({q: p for q, p in zip(self.qubits, self.pauli) if p != "I"}, n_qubits)

    def with_rate(self, lam: float) -> "NoiseChannel":
        return NoiseChannel(self.layer, self.qubits, self.pauli, lam)


@dataclass(frozen=True)
class NoiseModel:
    channels: tuple[NoiseChannel, ...]

    def __post_init__(self):
        chans = tuple(sorted(self.channels))
        ids = [c.id for c in chans]
        if len(set(ids)) != len(ids):
            raise CircuitError("duplicate noise channel")
        object.__setattr__(self, "channels", chans)

    def __len__(self):
        return len(self.channels)

    def __iter__(self):
        return iter(self.channels)

    @property
    def rates(self) -> dict[str, float]:
        return {c.id: c.lam for c in self.channels}

    @property
    def by_id(self) -> dict[str, NoiseChannel]:
        return {c.id: c for c in self.channels}

    def validate(self, circuit: LayeredCircuit):
        for c in self.channels:
            if not -1 <= c.layer < circuit.n_layers:
                raise CircuitError(f"{c.id}: layer out of range")
            if any(not 0 <= q < circuit.n_qubits for q in c.qubits):
                raise CircuitError(f"{c.id}: qubit out of range")
            if len(c.qubits) == 2 and c.qubits not in circuit.coupling:
                raise CircuitError(f"{c.id}: two-qubit channel off the coupling graph")

    def to_json(self) -> list:
        return [{"layer": c.layer, "qubits": list(c.qubits), "pauli": c.pauli, "lambda": c.lam}
                for c in self.channels]


def local_pauli_noise(circuit: LayeredCircuit, lam: float = 0.0, layers: str | Sequence[int] = "two_qubit",
                      edges: Iterable[tuple[int, int]] | None = None) -> NoiseModel:
    """All 3 single-qubit and 9 two-qubit Pauli channels on every site and
    coupling edge after each noisy layer.

    ``layers="two_qubit"`` uses the layers that contain a two-qubit gate,
    ``"all"`` every layer, or pass explicit indices.
    """
    if layers == "two_qubit":
        noisy = circuit.two_qubit_layers()
    elif layers == "all":
        noisy = list(range(circuit.n_layers))
    else:
        noisy = list(layers)
    edges = sorted(circuit.coupling if edges is None else {tuple(sorted(e)) for e in edges})
    chans = []
    for li in noisy:
        for q in range(circuit.n_qubits):
            for p in "XYZ":
                chans.append(NoiseChannel(li, (q,), p, lam))
        for a, b in edges:
            for p in "XYZ":
                for r in "XYZ":
                    chans.append(NoiseChannel(li, (a, b), p + r, lam))
    return NoiseModel(tuple(chans))


# ----------------------------------------------------------------------------
# observables


@dataclass(frozen=True)
class Observable:
    """Hermitian observable with a declared spectral-norm bound."""

    op: PauliSum
    norm_bound: float | None = None

    def __post_init__(self):
        if not self.op.is_hermitian():
            raise CircuitError("observable coefficients must be real")
        op = PauliSum(self.op.n_qubits, self.op.x, self.op.z, self.op.coeffs.real.astype(complex))
        object.__setattr__(self, "op", op)
        one = op.one_norm()
        bound = one if self.norm_bound is None else float(self.norm_bound)
        if bound < 0:
            raise CircuitError("norm bound must be non-negative")
        object.__setattr__(self, "norm_bound", min(bound, one))

    @classmethod
    def pauli(cls, text: str, n_qubits: int, coeff: float = 1.0) -> "Observable":
        return cls(PauliSum.from_term(PauliTerm.parse(text, n_qubits, coeff)))

    @classmethod
    def from_spec(cls, items: Sequence[dict], n_qubits: int, norm_bound: float | None = None) -> "Observable":
        terms = [PauliTerm.parse(it["pauli_string"], n_qubits, complex(it.get("coeff", 1.0))) for it in items]
        return cls(PauliSum.from_terms(terms, n_qubits), norm_bound)

    @property
    def n_qubits(self) -> int:
        return self.op.n_qubits

    @property
    def support(self) -> tuple[int, ...]:
        return self.op.support

    @property
    def trivial_bound(self) -> float:
        """Cap on ``||[E, A]||`` for a Pauli error: ``2 ||A||``."""
        return 2.0 * self.norm_bound

    def to_json(self) -> list:
        return [{"pauli_string": t.sparse_label(), "coeff": t.coeff.real} for t in self.op.terms()]


# ----------------------------------------------------------------------------
# lightcones


def backward_cone_gates(circuit: LayeredCircuit, qubits: Iterable[int], before_layer: int | None = None) -> set[GateRef]:
    """Gates in the past topological cone of ``qubits`` observed just before
    layer ``before_layer`` (default: the end of the circuit)."""
    live = set(qubits)
    end = circuit.n_layers if before_layer is None else before_layer
    refs = set()
    for li in range(end - 1, -1, -1):
        for gi, g in enumerate(circuit.layers[li]):
            if live.intersection(g.qubits):
                refs.add((li, gi))
                live.update(g.qubits)
    return refs


def forward_cone_gates(circuit: LayeredCircuit, qubits: Iterable[int], after_layer: int) -> set[GateRef]:
    live = set(qubits)
    refs = set()
    for li in range(after_layer + 1, circuit.n_layers):
        for gi, g in enumerate(circuit.layers[li]):
            if live.intersection(g.qubits):
                refs.add((li, gi))
                live.update(g.qubits)
    return refs


def lightcone_intersection(circuit: LayeredCircuit, channel: NoiseChannel, obs: Observable,
                           obs_cone: set[GateRef] | None = None) -> set[GateRef]:
    """Gates in both the channel's future cone and the observable's past cone."""
    if obs_cone is None:
        obs_cone = backward_cone_gates(circuit, obs.support)
    return forward_cone_gates(circuit, channel.active_qubits, channel.layer) & obs_cone


_X, _Y, _Z = 1, 2, 4  # letter-set bits
_LETTER_BIT = {"I": 0, "X": _X, "Y": _Y, "Z": _Z}
_ANTI = {"X": _Y | _Z, "Y": _X | _Z, "Z": _X | _Y, "I": 0}


def _letters_of(mask: int) -> list[int]:
    # IXYZ indices present in a letter-set mask (identity always allowed)
    return [0] + [i for i, b in ((1, _X), (2, _Y), (3, _Z)) if mask & b]


def _propagate_types(types: list[int], gate: Gate):
    pattern = np.abs(gate_ptm(gate)) > 1e-12
    if len(gate.qubits) == 1:
        (q,) = gate.qubits
        out = 0
        for a in _letters_of(types[q]):
            for b in np.flatnonzero(pattern[a]):
                out |= _LETTER_BIT[LETTERS[b]]
        types[q] = out
        return
    qa, qb = gate.qubits
    out_a = out_b = 0
    for a in _letters_of(types[qa]):
        for b in _letters_of(types[qb]):
            for o in np.flatnonzero(pattern[4 * a + b]):
                out_a |= _LETTER_BIT[LETTERS[o // 4]]
                out_b |= _LETTER_BIT[LETTERS[o % 4]]
    types[qa], types[qb] = out_a, out_b


def observable_type_sets(circuit: LayeredCircuit, obs: Observable) -> dict[int, list[int]]:
    """Per-qubit sets of Pauli letters the Heisenberg-evolved observable may
    contain, observed just after each layer ``l`` (keys ``-1 .. L-1``).

    Letter sets are bit masks (X=1, Y=2, Z=4).  A gate only changes the sets
    through the non-zero pattern of its transfer matrix, so commuting gates
    leave them untouched.
    """
    types = [0] * circuit.n_qubits
    for t in obs.op.terms():
        for q in t.support:
            types[q] |= _LETTER_BIT[t.letter(q)]
    out = {circuit.n_layers - 1: list(types)}
    for li in range(circuit.n_layers - 1, -1, -1):
        for g in circuit.layers[li]:
            _propagate_types(types, g)
        out[li - 1] = list(types)
    return out


def conventional_lightcone(circuit: LayeredCircuit, obs: Observable, channels: Iterable[NoiseChannel],
                           type_sets: dict[int, list[int]] | None = None) -> dict[str, bool]:
    """Binary lightcone: a channel is inside when, on some qubit of its
    support, the tracked observable letters include one that anticommutes
    with the channel's letter."""
    if type_sets is None:
        type_sets = observable_type_sets(circuit, obs)
    inside = {}
    for ch in channels:
        types = type_sets[ch.layer]
        inside[ch.id] = any(types[q] & _ANTI[p] for q, p in zip(ch.qubits, ch.pauli))
    return inside


# ----------------------------------------------------------------------------
# random instances (test and demo helpers)


def random_circuit(rng: np.random.Generator, n_qubits: int, n_layers: int, rotation_prob: float = 0.5,
                   two_qubit_prob: float = 0.6, edges: Sequence[tuple[int, int]] | None = None) -> LayeredCircuit:
    """Random layered circuit mixing named Cliffords and Pauli rotations."""
    if edges is None:
        edges = [(i, i + 1) for i in range(n_qubits - 1)]
    edges = [tuple(sorted(e)) for e in edges]
    one_q_cliff = ["H", "S", "SDG", "X", "Y", "Z"]
    two_q_cliff = ["CNOT", "CZ"]
    layers = []
    for _ in range(n_layers):
        free = set(range(n_qubits))
        layer = []
        for idx in rng.permutation(len(edges)):
            a, b = edges[idx]
            if a in free and b in free and rng.random() < two_qubit_prob:
                if rng.random() < rotation_prob:
                    axis = "".join(rng.choice(list("XYZ"), size=2))
                    layer.append(Gate("R", (a, b), float(rng.uniform(-np.pi, np.pi)), axis))
                else:
                    pair = (a, b) if rng.random() < 0.5 else (b, a)
                    layer.append(Gate(str(rng.choice(two_q_cliff)), pair))
                free -= {a, b}
        for q in sorted(free):
            r = rng.random()
            if r < rotation_prob * 0.7:
                layer.append(Gate("R", (q,), float(rng.uniform(-np.pi, np.pi)), str(rng.choice(list("XYZ")))))
            elif r < 0.85:
                layer.append(Gate(str(rng.choice(one_q_cliff)), (q,)))
        layers.append(tuple(layer))
    return LayeredCircuit(n_qubits, tuple(layers), frozenset(edges))


def random_noise(rng: np.random.Generator, circuit: LayeredCircuit, n_channels: int, lam_max: float = 0.05,
                 two_qubit_prob: float = 0.4, include_prep: bool = True) -> NoiseModel:
    """Random 2-local Pauli channels with rates uniform in ``(0, lam_max]``."""
    edges = sorted(circuit.coupling)
    lo = -1 if include_prep else 0
    chans: dict[str, NoiseChannel] = {}
    tries = 0
    while len(chans) < n_channels and tries < 50 * n_channels:
        tries += 1
        layer = int(rng.integers(lo, circuit.n_layers))
        lam = float(rng.uniform(0, lam_max)) or lam_max
        if edges and rng.random() < two_qubit_prob:
            a, b = edges[rng.integers(len(edges))]
            pauli = "".join(rng.choice(list("IXYZ"), size=2))
            if pauli == "II":
                continue
            ch = NoiseChannel(layer, (a, b), pauli, lam)
        else:
            ch = NoiseChannel(layer, (int(rng.integers(circuit.n_qubits)),), str(rng.choice(list("XYZ"))), lam)
        chans.setdefault(ch.id, ch)
    return NoiseModel(tuple(chans.values()))


def random_observable(rng: np.random.Generator, n_qubits: int, n_terms: int = 1, max_weight: int = 3) -> Observable:
    terms = []
    for _ in range(n_terms):
        w = int(rng.integers(1, min(max_weight, n_qubits) + 1))
        qs = rng.choice(n_qubits, size=w, replace=False)
        terms.append(PauliTerm.from_sparse({int(q): str(rng.choice(list("XYZ"))) for q in qs}, n_qubits,
                                           float(rng.uniform(-1, 1)) if n_terms > 1 else 1.0))
    op = PauliSum.from_terms(terms, n_qubits)
    if op.n_terms == 0:
        op = PauliSum.from_term(PauliTerm.from_sparse({0: "Z"}, n_qubits))
    return Observable(op)
