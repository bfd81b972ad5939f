"""Antinoise budgeting: which channels to cancel, and how much.

Cancelling a channel partly, ``lam* <= lam``, leaves residual rate
``lam - lam*`` and multiplies the sampling cost by ``exp(4 lam*)``.  The
residual objective ``sum_k c_k p(lam_k - lam*_k)`` is concave in each
``lam*_k``, so optimal allocations sit on vertices of the budget polytope:
every channel fully cancelled or untouched except at most one.  Channels are
filled in order of priority ``alpha = c exp(-2 lam)``, the marginal gain of
the first unit of budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np


def probability_from_rate(lam: float) -> float:
    """``p = (1 - exp(-2 lam)) / 2``."""
    if lam < 0:
        raise ValueError(f"Lindblad rate must be non-negative, got {lam}")
    return -math.expm1(-2.0 * lam) / 2.0


def _bounds_of(lc) -> dict[str, float]:
    if isinstance(lc, Mapping):
        return dict(lc)
    return {cid: r.c for cid, r in lc.records.items()}


def _layer_of(lc, cid: str) -> int:
    if not isinstance(lc, Mapping):
        return lc.records[cid].layer
    head = cid.split(":", 1)[0]
    return int(head[1:]) if head.startswith("L") else 0


def priorities(lc, rates: Mapping[str, float]) -> dict[str, float]:
    """``alpha = c * exp(-2 lam)`` per channel."""
    c = _bounds_of(lc)
    return {cid: c[cid] * math.exp(-2.0 * rates[cid]) for cid in c}


def priority_order(lc, rates: Mapping[str, float]) -> list[str]:
    """Descending priority; ties by (layer, id)."""
    alpha = priorities(lc, rates)
    return sorted(alpha, key=lambda cid: (-alpha[cid], _layer_of(lc, cid), cid))


@dataclass(frozen=True)
class AllocationResult:
    lambda_star: dict[str, float]
    residual_bias_bound: float
    sampling_cost_gamma_sq: float
    budget_used: float
    budget: float
    order: tuple[str, ...] = field(default=())
    rates: dict[str, float] = field(default_factory=dict, repr=False)

    @property
    def gamma(self) -> float:
        return math.sqrt(self.sampling_cost_gamma_sq)

    @property
    def partial_channels(self) -> list[str]:
        """Channels with ``0 < lam* < lam`` (at most one by construction)."""
        return [cid for cid, v in self.lambda_star.items() if 0 < v < self.rates[cid]]

    def to_json(self) -> dict:
        return {"schema": "lightcone_shading/allocation", "version": 1,
                "lambda_star": dict(sorted(self.lambda_star.items())),
                "residual_bias_bound": self.residual_bias_bound,
                "sampling_cost_gamma_sq": self.sampling_cost_gamma_sq,
                "budget_used": self.budget_used, "budget": self.budget}


def residual_bias(lc, rates: Mapping[str, float], lambda_star: Mapping[str, float]) -> float:
    c = _bounds_of(lc)
    return math.fsum(c[k] * probability_from_rate(rates[k] - lambda_star.get(k, 0.0)) for k in c)


def _result(lc, rates, lam_star: dict[str, float], budget: float, order) -> AllocationResult:
    used = math.fsum(lam_star.values())
    res = residual_bias(lc, rates, lam_star)
    return AllocationResult(dict(sorted(lam_star.items())), res, math.exp(4.0 * used), used, budget,
                            tuple(order), dict(rates))


def allocate(lc, rates: Mapping[str, float], budget: float) -> AllocationResult:
    """Sort-and-fill allocation of a total antinoise rate ``budget``.

    Channels with zero priority are never mitigated.
    """
    if budget < 0:
        raise ValueError("budget must be non-negative")
    alpha = priorities(lc, rates)
    order = priority_order(lc, rates)
    lam_star = {cid: 0.0 for cid in alpha}
    left = float(budget)
    for cid in order:
        lam = rates[cid]
        if alpha[cid] <= 0 or lam <= 0:
            continue
        if left <= 0:
            break
        take = min(lam, left)
        lam_star[cid] = take
        left -= take
        if take < lam:
            break
    return _result(lc, rates, lam_star, budget, order)


def cost_for_bias_target(lc, rates: Mapping[str, float], epsilon: float) -> AllocationResult:
    """Smallest-budget sort-and-fill allocation with residual bound ``<= epsilon``.

    Walks the priority order fully cancelling channels until the next one
    would overshoot, then solves the partial channel in closed form:
    ``lam* = lam + ln(1 - 2 (epsilon - R_rest) / c) / 2`` where ``R_rest`` is
    the residual of all other channels.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    c = _bounds_of(lc)
    alpha = priorities(lc, rates)
    order = priority_order(lc, rates)
    contrib = {cid: c[cid] * probability_from_rate(rates[cid]) for cid in c}
    lam_star = {cid: 0.0 for cid in c}
    residual = total = math.fsum(contrib.values())
    for cid in order:
        if residual <= epsilon:
            break
        if alpha[cid] <= 0 or rates[cid] <= 0:
            continue
        rest = residual - contrib[cid]
        # a remainder within rounding of the target means full cancellation
        if rest < epsilon - 1e-15 * max(total, 1e-300):
            frac = 2.0 * (epsilon - rest) / c[cid]
            lam_star[cid] = min(rates[cid], max(0.0, rates[cid] + 0.5 * math.log1p(-frac)))
            residual = epsilon
            break
        lam_star[cid] = rates[cid]
        residual = rest
    budget = math.fsum(lam_star.values())
    return _result(lc, rates, lam_star, budget, order)


def tradeoff_curve(lc, rates: Mapping[str, float], points_per_segment: int = 4) -> list[AllocationResult]:
    """Allocations along a budget sweep from 0 to full mitigation.

    Includes every vertex (each prefix of the priority order fully cancelled)
    and ``points_per_segment - 1`` interior points on each partial segment.
    """
    alpha = priorities(lc, rates)
    order = [cid for cid in priority_order(lc, rates) if alpha[cid] > 0 and rates[cid] > 0]
    budgets = [0.0]
    acc = 0.0
    for cid in order:
        lam = rates[cid]
        for k in range(1, points_per_segment):
            budgets.append(acc + lam * k / points_per_segment)
        acc += lam
        budgets.append(acc)
    return [allocate(lc, rates, b) for b in budgets]


def gamma_full_mitigation(rates: Mapping[str, float]) -> float:
    """``prod 1/(1 - 2p)`` over channels; equals ``exp(2 sum lam)``."""
    return float(np.prod([1.0 / (1.0 - 2.0 * probability_from_rate(v)) for v in rates.values()]))
