"""Instance generators and oracle checks shared by unit and acceptance tests."""

import numpy as np

from lightcone_shading import oracle as O
from lightcone_shading.circuit import random_circuit, random_noise, random_observable
from lightcone_shading.shading import insertion_order, shade, total_bias_bound, verify_taper


def random_instance(seed, max_qubits=6, max_layers=8, max_channels=12, lam_max=0.05):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, max_qubits + 1))
    c = random_circuit(rng, n, int(rng.integers(1, max_layers + 1)))
    noise = random_noise(rng, c, int(rng.integers(1, max_channels + 1)), lam_max=lam_max)
    obs = random_observable(rng, n, int(rng.integers(1, 3)))
    return c, noise, obs


def soundness_report(circuit, noise, obs, lc, atol=1e-12):
    """Per-channel and global checks of a shaded lightcone against the dense oracle."""
    by = noise.by_id
    order = [by[cid] for cid in insertion_order(lc)]
    inc = O.incremental_biases(circuit, order, obs)
    bad = []
    for ch, b in zip(order, inc):
        if abs(b) > ch.probability * lc[ch.id].c + atol:
            bad.append((ch.id, b, ch.probability * lc[ch.id].c))
    bias = O.exact_expectation(circuit, noise, obs) - O.exact_expectation(circuit, [], obs)
    total = total_bias_bound(lc, noise.rates)
    return {"channel_violations": bad, "bias": bias, "total": total,
            "global_ok": abs(bias) <= total + atol, "taper": verify_taper(lc, circuit)}


def shade_small(circuit, noise, obs, threads=1):
    # small thresholds so the fallback, speed-limit and backward paths all get exercised
    return shade(circuit, obs, noise, b_max=200, n_max=4, dense_max=2, threads=threads)


def _half_table(c, lam, points):
    """All grid allocations of a channel subset: (budget, residual) arrays."""
    budget = np.zeros(1)
    resid = np.zeros(1)
    for ci, li in zip(c, lam):
        x = np.linspace(0.0, li, points)
        r = ci * (-np.expm1(-2.0 * (li - x)) / 2.0)
        budget = (budget[:, None] + x[None, :]).ravel()
        resid = (resid[:, None] + r[None, :]).ravel()
    return budget, resid


def grid_optimum(c, lam, budget, points=50):
    """Exhaustive minimum of ``sum c p(lam - x)`` over ``x_i`` on a ``points`` grid
    in ``[0, lam_i]`` with ``sum x <= budget`` (meet in the middle)."""
    c, lam = np.asarray(c, float), np.asarray(lam, float)
    h = len(c) // 2
    bl, rl = _half_table(c[:h], lam[:h], points)
    br, rr = _half_table(c[h:], lam[h:], points)
    order = np.argsort(br, kind="stable")
    br, rr = br[order], np.minimum.accumulate(rr[order])
    tol = 1e-12 * max(1.0, budget)
    idx = np.searchsorted(br, budget - bl + tol, side="right") - 1
    ok = idx >= 0
    return float(np.min(rl[ok] + rr[idx[ok]]))


def grid_resolution(c, lam, points=50):
    """Largest change in one channel's residual from a single grid step."""
    step = np.asarray(lam, float) / (points - 1)
    c = np.asarray(c, float)
    lam = np.asarray(lam, float)
    return float(np.max(c * (-np.expm1(-2 * lam) + np.expm1(-2 * (lam - step))) / 2))


def grid_min_budget(c, lam, epsilon, points=50):
    """Smallest grid budget whose best allocation reaches residual ``<= epsilon``."""
    c, lam = np.asarray(c, float), np.asarray(lam, float)
    h = len(c) // 2
    bl, rl = _half_table(c[:h], lam[:h], points)
    br, rr = _half_table(c[h:], lam[h:], points)
    # cheapest right-half budget among all right residuals up to a level
    order = np.argsort(rr, kind="stable")
    rr, br = rr[order], np.minimum.accumulate(br[order])
    idx = np.searchsorted(rr, epsilon - rl + 1e-12, side="right") - 1
    ok = idx >= 0
    return float(np.min(bl[ok] + br[idx[ok]]))
