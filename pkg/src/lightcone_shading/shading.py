"""Per-channel bias bounds ("shaded lightcone") and the side partition.

A channel's incremental bias can be bounded from either end of the circuit:

* ``a_side``: ``||[E_F, A]||`` with the error pushed forward to the
  measurement (exact, one-norm fallback, or the speed-limit table);
* ``rho_side``: ``||[E_I, rho]||_1 * ||A||`` with the error pushed back to
  the initial state.

Either bound is valid for a channel only if the noise already inserted does
not sit on the path the error is evolved along.  Inserting ``rho_side``
channels latest-first and then ``a_side`` channels earliest-first satisfies
this as long as no ``rho_side`` channel lies in the future cone of an
``a_side`` channel at a strictly earlier layer.  :func:`partition_plan`
maintains exactly that certificate.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping, Sequence

from .allocation import probability_from_rate
from .circuit import (CircuitError, LayeredCircuit, NoiseChannel, NoiseModel, Observable, conventional_lightcone,
                      observable_type_sets)
from .evolution import DEFAULT_B_MAX, evolve_backward, evolve_forward
from .norms import (CLIFFORD, DEFAULT_N_MAX, DEFAULT_TOL, DENSE_MAX, EXACT_NUCLEAR, OUTSIDE, TRIVIAL, BoundValue,
                    forward_commutator_bound, nuclear_norm_zero_state)
from .pauli import PauliSum, commutator
from .speed_limit import commutator_bound, layer_bounds

A_SIDE = "a_side"
RHO_SIDE = "rho_side"
CLIFFORD_SIDE = "clifford_product"
CONVENTIONAL = "conventional"


@dataclass(frozen=True)
class ShadeConfig:
    b_max: int = DEFAULT_B_MAX
    n_max: int = DEFAULT_N_MAX
    tol: float = DEFAULT_TOL
    threads: int = 1
    dense_max: int = DENSE_MAX
    use_speed_limit: bool = True


@dataclass(frozen=True)
class ChannelBound:
    """Bound record for one channel.

    ``c`` and ``method`` refer to the chosen ``side``; ``c_a``/``c_rho`` keep
    both one-sided candidates for inspection.
    """

    id: str
    layer: int
    qubits: tuple[int, ...]
    pauli: str
    c: float
    method: str
    side: str
    c_a: float
    a_method: str
    c_rho: float
    rho_method: str
    inside: bool = True
    forward_exceeded: bool = False
    backward_exceeded: bool = False

    def to_json(self) -> dict:
        d = asdict(self)
        d["qubits"] = list(self.qubits)
        return d


@dataclass(frozen=True)
class PartitionPlan:
    assignment: dict[str, str]
    certificate: tuple[str, ...]
    description: str


@dataclass(frozen=True)
class ShadedLightcone:
    records: dict[str, ChannelBound]
    metadata: dict = field(default_factory=dict)

    def __getitem__(self, cid: str) -> ChannelBound:
        return self.records[cid]

    def __iter__(self):
        return iter(self.records.values())

    def __len__(self):
        return len(self.records)

    @property
    def c(self) -> dict[str, float]:
        return {k: r.c for k, r in self.records.items()}

    def insertion_order(self) -> list[str]:
        return insertion_order(self)

    def to_json(self) -> dict:
        return {"schema": "lightcone_shading/shaded_lightcone", "version": 1, "metadata": self.metadata,
                "channels": [r.to_json() for r in self.records.values()]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, data: Mapping) -> "ShadedLightcone":
        recs = {}
        for d in data["channels"]:
            d = dict(d)
            d["qubits"] = tuple(d["qubits"])
            recs[d["id"]] = ChannelBound(**d)
        return cls(recs, dict(data.get("metadata", {})))


def _ordered(records: Iterable[ChannelBound], key_of: Mapping[str, NoiseChannel]) -> dict[str, ChannelBound]:
    return {r.id: r for r in sorted(records, key=lambda r: key_of[r.id].key)}


def total_bias_bound(lc: ShadedLightcone, rates: Mapping[str, float]) -> float:
    """``sum_channels p(lam) * c``."""
    return math.fsum(probability_from_rate(rates[cid]) * r.c for cid, r in lc.records.items())


def insertion_order(lc: ShadedLightcone) -> list[str]:
    """Channel order under which each channel's bound holds incrementally:
    ``rho_side`` channels latest-first, then the rest earliest-first."""
    recs = list(lc.records.values())
    rho = sorted((r for r in recs if r.side == RHO_SIDE), key=lambda r: (-r.layer, r.qubits, r.pauli))
    rest = sorted((r for r in recs if r.side != RHO_SIDE), key=lambda r: (r.layer, r.qubits, r.pauli))
    return [r.id for r in rho + rest]


# ----------------------------------------------------------------------------
# sweeps


def _series(channels: Iterable[NoiseChannel]) -> list[list[NoiseChannel]]:
    groups: dict[tuple, list[NoiseChannel]] = {}
    for ch in channels:
        groups.setdefault((ch.qubits, ch.pauli), []).append(ch)
    return [sorted(groups[k], key=lambda c: c.layer) for k in sorted(groups)]


def _forward_series(series: list[NoiseChannel], circuit: LayeredCircuit, obs: Observable, cfg: ShadeConfig):
    """Latest channel first; the first Exceeded ends the series."""
    n = circuit.n_qubits
    out = {}
    for k, ch in enumerate(reversed(series)):
        ev = evolve_forward(ch.error(n), ch.layer, circuit, obs, cfg.b_max)
        if ev.exceeded:
            for rest in list(reversed(series))[k:]:
                out[rest.id] = None
            break
        out[ch.id] = forward_commutator_bound(ev.result, obs, cfg.n_max, cfg.tol, cfg.dense_max)
    return out


def _backward_series(series: list[NoiseChannel], circuit: LayeredCircuit, obs: Observable, cfg: ShadeConfig):
    """Earliest channel first; the first Exceeded ends the series."""
    n = circuit.n_qubits
    out = {}
    for k, ch in enumerate(series):
        ev = evolve_backward(ch.error(n), ch.layer, circuit, cfg.b_max)
        if ev.exceeded:
            for rest in series[k:]:
                out[rest.id] = None
            break
        nuc = nuclear_norm_zero_state(ev.result)
        out[ch.id] = BoundValue(nuc.value * obs.norm_bound, EXACT_NUCLEAR, len(ev.result.support))
    return out


def _run(fn, all_series, threads, *args) -> dict:
    merged: dict = {}
    if threads <= 1 or len(all_series) <= 1:
        results = [fn(s, *args) for s in all_series]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda s: fn(s, *args), all_series))
    for r in results:
        merged.update(r)
    return {k: merged[k] for k in sorted(merged)}


def one_sided_bounds(circuit: LayeredCircuit, obs: Observable, noise: NoiseModel,
                     cfg: ShadeConfig = ShadeConfig()) -> dict:
    """Forward, speed-limit and backward candidates for every channel inside
    the conventional lightcone; channels outside are listed separately."""
    noise.validate(circuit)
    type_sets = observable_type_sets(circuit, obs)
    inside = conventional_lightcone(circuit, obs, noise.channels, type_sets)
    chans = [ch for ch in noise.channels if inside[ch.id]]
    series = _series(chans)
    forward = _run(_forward_series, series, cfg.threads, circuit, obs, cfg)
    speed = {}
    if cfg.use_speed_limit and chans:
        seeds: dict[int, dict] = {}
        for ch in noise.channels:
            if len([p for p in ch.pauli if p != "I"]) != 1:
                continue
            (q,) = ch.active_qubits
            letter = ch.pauli.replace("I", "")
            if not inside[ch.id]:
                val = 0.0
            elif forward.get(ch.id) is not None:
                val = forward[ch.id].value
            else:
                continue
            prev = seeds.setdefault(ch.layer, {}).get((q, letter), math.inf)
            seeds[ch.layer][(q, letter)] = min(prev, val)
        table = layer_bounds(circuit, obs, exact=seeds, type_sets=type_sets)
        speed = {ch.id: commutator_bound(table[ch.layer], ch, obs.trivial_bound) for ch in chans}
    backward = _run(_backward_series, series, cfg.threads, circuit, obs, cfg)
    return {"inside": inside, "forward": forward, "speed": speed, "backward": backward}


def _best(cands: Sequence[BoundValue | None], trivial: float) -> BoundValue:
    best = BoundValue(trivial, TRIVIAL)
    for b in cands:
        if b is not None and b.value < best.value:
            best = b
    return best


def shade(circuit: LayeredCircuit, obs: Observable, noise: NoiseModel, cfg: ShadeConfig = ShadeConfig(),
          **overrides) -> ShadedLightcone:
    """Shaded lightcone with the greedy side partition applied."""
    if overrides:
        cfg = ShadeConfig(**{**asdict(cfg), **overrides})
    cand = one_sided_bounds(circuit, obs, noise, cfg)
    trivial = obs.trivial_bound
    recs = []
    for ch in noise.channels:
        if not cand["inside"][ch.id]:
            recs.append(ChannelBound(ch.id, ch.layer, ch.qubits, ch.pauli, 0.0, OUTSIDE, A_SIDE,
                                     0.0, OUTSIDE, 0.0, OUTSIDE, inside=False))
            continue
        fwd = cand["forward"].get(ch.id)
        bwd = cand["backward"].get(ch.id)
        a = _best([fwd, cand["speed"].get(ch.id)], trivial)
        r = _best([bwd], trivial)
        recs.append(ChannelBound(ch.id, ch.layer, ch.qubits, ch.pauli, a.value, a.method, A_SIDE,
                                 a.value, a.method, r.value, r.method,
                                 forward_exceeded=fwd is None, backward_exceeded=bwd is None))
    by_id = noise.by_id
    lc = ShadedLightcone(_ordered(recs, by_id))
    plan = partition_plan(lc, noise.rates, circuit)
    final = {}
    for cid, r in lc.records.items():
        side = plan.assignment.get(cid, A_SIDE)
        if side == RHO_SIDE:
            r = ChannelBound(**{**asdict(r), "c": r.c_rho, "method": r.rho_method, "side": RHO_SIDE})
        final[cid] = r
    meta = {"b_max": cfg.b_max, "n_max": cfg.n_max, "tol": cfg.tol, "mode": "shaded",
            "partition": plan.description, "n_channels": len(final),
            "n_rho_side": sum(r.side == RHO_SIDE for r in final.values())}
    return ShadedLightcone(final, meta)


# ----------------------------------------------------------------------------
# partition


def _advance_cone(cone: set[int], circuit: LayeredCircuit, layer: int) -> set[int]:
    cone = set(cone)
    for g in circuit.layers[layer]:
        if cone.intersection(g.qubits):
            cone.update(g.qubits)
    return cone


def _cost(recs: Iterable[ChannelBound], probs: Mapping[str, float], side_of) -> float:
    return math.fsum(probs[r.id] * (r.c_rho if side_of(r) == RHO_SIDE else r.c_a) for r in recs)


def partition_plan(lc: ShadedLightcone, rates: Mapping[str, float], circuit: LayeredCircuit) -> PartitionPlan:
    """Greedy side assignment over (layer, anchor qubit) groups.

    Sweeping layers earliest to latest, a group flips to ``rho_side`` when
    that lowers ``sum p*c`` over the group and none of its qubits lies in the
    future cone of an ``a_side`` channel from an earlier layer.  A region
    (anchor qubit) stops flipping after its first refusal.  The greedy result
    is then compared with every global time cut and the cheapest is kept;
    ties keep the greedy assignment.
    """
    probs = {cid: probability_from_rate(rates[cid]) for cid in lc.records}
    inside = [r for r in lc.records.values() if r.inside]
    by_layer: dict[int, dict[int, list[ChannelBound]]] = {}
    for r in inside:
        anchor = min(q for q, p in zip(r.qubits, r.pauli) if p != "I")
        by_layer.setdefault(r.layer, {}).setdefault(anchor, []).append(r)

    assign = {r.id: A_SIDE for r in inside}
    cone: set[int] = set()
    stopped: set[int] = set()
    cert = []
    layers = sorted(by_layer)
    for li in range(min(layers, default=0), max(layers, default=-1) + 1):
        if li >= 0:
            cone = _advance_cone(cone, circuit, li)
        groups = by_layer.get(li, {})
        for anchor in sorted(groups):
            grp = groups[anchor]
            qubits = {q for r in grp for q, p in zip(r.qubits, r.pauli) if p != "I"}
            if anchor in stopped:
                continue
            cheaper = math.fsum(probs[r.id] * r.c_rho for r in grp) < math.fsum(probs[r.id] * r.c_a for r in grp)
            clear = not (qubits & cone)
            if cheaper and clear:
                for r in grp:
                    assign[r.id] = RHO_SIDE
                cert.append(f"L{li}@q{anchor}: clear of earlier a_side cone")
            else:
                stopped.add(anchor)
        for grp in groups.values():
            for r in grp:
                if assign[r.id] == A_SIDE:
                    cone.update(q for q, p in zip(r.qubits, r.pauli) if p != "I")

    best = dict(assign)
    best_cost = _cost(inside, probs, lambda r: best[r.id])
    desc = "greedy"
    for cut in [min(layers, default=0)] + [li + 1 for li in layers]:
        trial = {r.id: (RHO_SIDE if r.layer < cut else A_SIDE) for r in inside}
        cost = _cost(inside, probs, lambda r: trial[r.id])
        if cost < best_cost:
            best, best_cost, desc = trial, cost, f"global cut before layer {cut}"
    if desc != "greedy":
        cert = [f"{desc}: every rho_side channel precedes every a_side channel"]
    return PartitionPlan(best, tuple(cert), desc)


def verify_taper(lc: ShadedLightcone, circuit: LayeredCircuit) -> list[str]:
    """Violations of the ordering certificate (empty when sound)."""
    bad = []
    a_side = [r for r in lc.records.values() if r.inside and r.side == A_SIDE]
    rho = [r for r in lc.records.values() if r.inside and r.side == RHO_SIDE]
    for a in a_side:
        cone = {q for q, p in zip(a.qubits, a.pauli) if p != "I"}
        later = sorted({r.layer for r in rho if r.layer > a.layer})
        li_done = a.layer
        for li in later:
            for k in range(li_done + 1, li + 1):
                cone = _advance_cone(cone, circuit, k)
            li_done = li
            for r in rho:
                if r.layer == li and cone.intersection(q for q, p in zip(r.qubits, r.pauli) if p != "I"):
                    bad.append(f"{r.id} lies in the future cone of {a.id}")
    return bad


# ----------------------------------------------------------------------------
# reference shadings


def conventional_shade(circuit: LayeredCircuit, obs: Observable, noise: NoiseModel) -> ShadedLightcone:
    """Binary lightcone: ``2 ||A||`` inside, 0 outside."""
    inside = conventional_lightcone(circuit, obs, noise.channels)
    t = obs.trivial_bound
    recs = {}
    for ch in noise.channels:
        c = t if inside[ch.id] else 0.0
        m = TRIVIAL if inside[ch.id] else OUTSIDE
        recs[ch.id] = ChannelBound(ch.id, ch.layer, ch.qubits, ch.pauli, c, m, A_SIDE, c, m, c, m,
                                   inside=inside[ch.id])
    return ShadedLightcone(recs, {"mode": CONVENTIONAL})


def clifford_shade(circuit: LayeredCircuit, obs: Observable, noise: NoiseModel,
                   cfg: ShadeConfig = ShadeConfig()) -> ShadedLightcone:
    """Product bound for Clifford circuits.

    Other Pauli channels stay Pauli channels in the interaction picture and
    only rescale individual terms of ``A``, so
    ``c = ||[E_I, rho]||_1 * sum_k |a_k| ||[E_F, P_k]|| / 2``, which is the
    one-norm of ``[E_F, A]`` times ``||[E_I, rho]||_1 / 2``.  For a single
    Pauli observable this is the product of the two commutator norms over 2.
    """
    if not circuit.is_clifford:
        bad = next(g for _, g in circuit.gates() if not g.is_clifford)
        raise CircuitError(f"clifford_shade needs a Clifford circuit; found {bad!r}. Use shade() instead.")
    noise.validate(circuit)
    n = circuit.n_qubits
    inside = conventional_lightcone(circuit, obs, noise.channels)
    trivial = obs.trivial_bound
    recs = {}
    for ch in noise.channels:
        if not inside[ch.id]:
            recs[ch.id] = ChannelBound(ch.id, ch.layer, ch.qubits, ch.pauli, 0.0, OUTSIDE, CLIFFORD_SIDE,
                                       0.0, OUTSIDE, 0.0, OUTSIDE, inside=False)
            continue
        e = ch.error(n)
        e_f = evolve_forward(e, ch.layer, circuit, obs, b_max=math.inf).result
        e_i = evolve_backward(e, ch.layer, circuit, b_max=math.inf).result
        nuc = nuclear_norm_zero_state(e_i).value
        comm_ = commutator(e_f, obs.op)
        a = forward_commutator_bound(e_f, obs, cfg.n_max, cfg.tol, cfg.dense_max)
        rho_val = min(nuc * obs.norm_bound, trivial)
        prod = min(nuc * comm_.one_norm() / 2.0, trivial)
        recs[ch.id] = ChannelBound(ch.id, ch.layer, ch.qubits, ch.pauli, prod, CLIFFORD, CLIFFORD_SIDE,
                                   a.value, a.method, rho_val, EXACT_NUCLEAR)
    return ShadedLightcone(recs, {"mode": "clifford", "n_max": cfg.n_max})
