"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the lines are repeated in
the terminal summary.  ``python tests/test_acceptance.py`` runs the same
checks without pytest.
"""

import hashlib
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from support import grid_optimum, grid_resolution, random_instance, soundness_report  # noqa: E402
from lightcone_shading import oracle as O  # noqa: E402
from lightcone_shading.allocation import allocate, cost_for_bias_target  # noqa: E402
from lightcone_shading.circuit import (Gate, LayeredCircuit, NoiseChannel, Observable, build_tfim_1d,  # noqa: E402
                                       local_pauli_noise, random_circuit, random_noise, random_observable)
from lightcone_shading.evolution import evolve_forward  # noqa: E402
from lightcone_shading.norms import (nuclear_norm_zero_state, pauli_one_norm_fallback,  # noqa: E402
                                     spectral_norm_commutator)
from lightcone_shading.pauli import PauliTerm  # noqa: E402
from lightcone_shading.shading import (clifford_shade, conventional_shade, one_sided_bounds, shade,  # noqa: E402
                                       total_bias_bound)
from lightcone_shading.speed_limit import init_bounds, propagate_gates  # noqa: E402

RESULTS: dict[int, str] = {}


def report(k: int, ok: bool, detail: str):
    line = f"criterion {k}: {'PASS' if ok else 'FAIL'} ({detail})"
    RESULTS[k] = line
    print(line, flush=True)
    assert ok, line


# ----------------------------------------------------------------------------
# shared heavy runs


def _digest(texts):
    h = hashlib.sha256()
    for t in texts:
        h.update(t.encode())
    return h.hexdigest()


_cache: dict = {}


def criterion1_runs(threads):
    key = ("c1", threads)
    if key not in _cache:
        out = []
        for seed in range(200):
            c, noise, obs = random_instance(seed, max_qubits=6, max_layers=8, max_channels=12, lam_max=0.05)
            # alternate between default thresholds and tiny ones that force every fallback path
            small = dict(b_max=200, n_max=4, dense_max=2) if seed % 2 else {}
            out.append((c, noise, obs, shade(c, obs, noise, threads=threads, **small)))
        _cache[key] = out
    return _cache[key]


TFIM = dict(n=20, steps=10, theta_x=math.pi / 16, theta_zz=-math.pi / 2, lam=0.01)


def criterion7_run(threads):
    key = ("c7", threads)
    if key not in _cache:
        p = TFIM
        c = build_tfim_1d(p["n"], p["steps"], p["theta_x"], p["theta_zz"])
        noise = local_pauli_noise(c, p["lam"])
        obs = Observable.pauli(f"Z{p['n'] // 2}", p["n"])
        t0 = time.perf_counter()
        lc = shade(c, obs, noise, b_max=500_000, n_max=20, threads=threads)
        _cache[key] = (c, noise, obs, lc, time.perf_counter() - t0)
    return _cache[key]


# ----------------------------------------------------------------------------


def test_criterion_1_soundness():
    t0 = time.perf_counter()
    runs = criterion1_runs(1)
    per_channel = glob = taper = checked = 0
    for c, noise, obs, lc in runs:
        rep = soundness_report(c, noise, obs, lc)
        per_channel += len(rep["channel_violations"])
        glob += not rep["global_ok"]
        taper += bool(rep["taper"])
        checked += len(noise)
    dt = time.perf_counter() - t0
    ok = per_channel == 0 and glob == 0 and taper == 0 and len(runs) >= 200 and dt <= 600
    report(1, ok, f"{len(runs)} instances, {checked} channels, {per_channel} channel violations, "
                  f"{glob} global violations, {taper} ordering violations, {dt:.0f}s")


def test_criterion_2_norm_kernels():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst_nuc = worst_spec = 0.0
    fallback_bad = 0
    for k in range(100):
        n = int(rng.integers(2, 11))
        circ = random_circuit(rng, n, int(rng.integers(1, 5)))
        e = PauliTerm(int(rng.integers(1, 1 << n)), int(rng.integers(1 << n)), n)
        layer = int(rng.integers(-1, circ.n_layers))
        ef = evolve_forward(e, layer, circ).result
        obs = random_observable(rng, n, int(rng.integers(1, 3)))
        nuc = nuclear_norm_zero_state(ef).value
        worst_nuc = max(worst_nuc, abs(nuc - O.nuclear_norm(O.comm(O.dense_op(ef), O.zero_state(n)))))
        # every third input goes through the iterative path
        spec = spectral_norm_commutator(ef, obs, tol=1e-10, dense_max=2 if k % 3 == 0 else 10).value
        dense = O.spectral_norm(O.comm(O.dense_op(ef), O.dense_op(obs.op)))
        if dense > 1e-12:
            worst_spec = max(worst_spec, abs(spec - dense) / dense)
        else:
            worst_spec = max(worst_spec, spec)
        fallback_bad += pauli_one_norm_fallback(ef, obs).value < dense - 1e-12
    dt = time.perf_counter() - t0
    ok = worst_nuc <= 1e-10 and worst_spec <= 1e-8 and fallback_bad == 0 and dt <= 300
    report(2, ok, f"100 inputs, max nuclear abs err {worst_nuc:.1e}, max spectral rel err {worst_spec:.1e}, "
                  f"{fallback_bad} fallback violations, {dt:.0f}s")


def _zz_toy(n, reps):
    layers = []
    for _ in range(reps):
        layers.append(tuple(Gate("RZZ", (i, i + 1), 0.7) for i in range(0, n - 1, 2)))
        layers.append(tuple(Gate("RZZ", (i, i + 1), -0.4) for i in range(1, n - 1, 2)))
    return LayeredCircuit(n, tuple(layers))


def test_criterion_3_local_bounds():
    rng = np.random.default_rng(33)
    viol = entries = 0
    for _ in range(100):
        n = int(rng.integers(2, 6))
        gates = [g for _, g in random_circuit(rng, n, 8).gates()][: int(rng.integers(1, 9))]
        obs = random_observable(rng, n, int(rng.integers(1, 3)))
        seq = propagate_gates(init_bounds(obs), gates)
        for k, b in enumerate(seq):
            for (q, s), v in O.exact_component_norms(gates[len(gates) - k:], obs).items():
                entries += 1
                viol += b.entry(q, s) < v - 1e-10
    leaks = 0
    for n in range(2, 9):
        for reps in range(1, 6):
            seq = propagate_gates(init_bounds(Observable.pauli("X0", n)), [g for _, g in _zz_toy(n, reps).gates()])
            leaks += sum(int(np.count_nonzero(b.w[2:, 1:])) for b in seq)
    report(3, viol == 0 and leaks == 0,
           f"{entries} dense entries checked, {viol} violations, {leaks} nonzero toy entries on qubits >= 2")


def test_criterion_4_time_invariance():
    rng = np.random.default_rng(44)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(1, 6))
        c = random_circuit(rng, n, int(rng.integers(1, 7)))
        obs = random_observable(rng, n, int(rng.integers(1, 3)))
        ch = next(iter(random_noise(rng, c, 1).channels))
        b = O.exact_channel_bias(c, obs, ch)
        worst = max(worst, abs(b["I"] - b["M"]), abs(b["M"] - b["F"]), abs(b["direct"] - b["M"]))
    # Counterexample: |0>, H, full Z dephasing, then the error Z, measure X.
    # Pulling E and A back through the unitary alone ignores the dephasing.
    rho = O.zero_state(1)
    h = O.gate_unitary(Gate("H", (0,)), 1)
    z, x = O.PZ, O.PX
    rho_m = h @ rho @ h.conj().T
    rho_m = 0.5 * rho_m + 0.5 * z @ rho_m @ z
    true_bias = float(np.real(np.trace(x @ z @ rho_m @ z) - np.trace(x @ rho_m)))
    e_i, a_i = h.conj().T @ z @ h, h.conj().T @ x @ h
    formula = float(np.real(np.trace(O.comm(e_i, rho) @ O.comm(e_i, a_i)))) / 2
    gap = abs(true_bias - formula)
    report(4, worst <= 1e-12 and gap > 1e-6,
           f"50 instances, max three-way disagreement {worst:.1e}; dephasing fixture: exact {true_bias:+.3f} "
           f"vs pulled-back formula {formula:+.3f}")


def test_criterion_5_allocation():
    rng = np.random.default_rng(55)
    worst = 0.0
    partial_bad = 0
    for _ in range(50):
        k = int(rng.integers(1, 9))
        ids = [f"L{i}:X{i}" for i in range(k)]
        c = rng.uniform(0, 2, k)
        lam = rng.uniform(0.001, 0.05, k)
        budget = float(rng.uniform(0, lam.sum()))
        res = allocate(dict(zip(ids, c)), dict(zip(ids, lam)), budget)
        partial_bad += len(res.partial_channels) > 1
        gap = abs(res.residual_bias_bound - grid_optimum(c, lam, budget))
        worst = max(worst, gap / grid_resolution(c, lam))
    report(5, worst <= 1.0 and partial_bad == 0,
           f"50 instances, worst |greedy - grid| = {worst:.2f} grid steps, {partial_bad} outputs with >1 partial")


def _pec_instance():
    c = build_tfim_1d(4, 1, math.pi / 8, -math.pi / 4)
    noise = local_pauli_noise(c, 0.02)
    return c, noise, Observable.pauli("Z1", 4)


def test_criterion_6_pec():
    c, noise, obs = _pec_instance()
    ideal = O.exact_expectation(c, [], obs)
    shots = 10 ** 6
    full = [O.simulate_pec(c, noise, obs, noise.rates, shots=shots, seed=s) for s in range(30)]
    mean = float(np.mean([r.estimate for r in full]))
    comb = math.sqrt(sum(r.variance for r in full) / shots) / len(full)
    gamma_sq = full[0].gamma ** 2
    # variance inflation relative to unmitigated shots of the same noisy circuit
    bare = [O.simulate_pec(c, noise, obs, None, shots=shots, seed=1000 + s) for s in range(5)]
    inflation = float(np.mean([r.variance for r in full])) / float(np.mean([r.variance for r in bare]))
    ok_full = abs(mean - ideal) <= 5 * comb and 0.5 <= inflation / gamma_sq <= 2.0

    lc = shade(c, obs, noise)
    partial_bad = 0
    total = sum(noise.rates.values())
    for frac, seeds in ((0.25, range(100, 105)), (0.5, range(200, 205)), (0.75, range(300, 305))):
        alloc = allocate(lc, noise.rates, frac * total)
        for s in seeds:
            r = O.simulate_pec(c, noise, obs, alloc.lambda_star, shots=shots, seed=s)
            partial_bad += abs(r.estimate - ideal) > alloc.residual_bias_bound + 4 * r.stderr
    report(6, ok_full and partial_bad == 0,
           f"full mitigation mean {mean:.5f} vs ideal {ideal:.5f} ({abs(mean - ideal) / comb:.2f} combined stderr), "
           f"variance inflation {inflation:.1f} vs gamma^2 {gamma_sq:.1f}, {partial_bad}/15 partial runs out of bound")


def test_criterion_7_tfim():
    c, noise, obs, lc, dt = criterion7_run(1)
    rates = noise.rates
    conv = conventional_shade(c, obs, noise)
    shaded_total = total_bias_bound(lc, rates)
    conv_total = total_bias_bound(conv, rates)
    eps = 0.1 * shaded_total
    g_sh = cost_for_bias_target(lc, rates, eps).sampling_cost_gamma_sq
    g_cv = cost_for_bias_target(conv, rates, eps).sampling_cost_gamma_sq
    q = TFIM["n"] // 2
    noisy_layers = sorted({ch.layer for ch in noise.channels})[-2:]

    def mean_c(letter):
        vals = [lc[ch.id].c for ch in noise.channels
                if ch.layer in noisy_layers and ch.qubits == (q,) and ch.pauli == letter]
        return float(np.mean(vals))

    z_mean, x_mean = mean_c("Z"), mean_c("X")
    ok = shaded_total < conv_total and g_cv >= 3 * g_sh and z_mean < 0.2 * x_mean and dt <= 1800
    report(7, ok, f"{len(noise)} channels; total bound shaded {shaded_total:.3f} vs conventional {conv_total:.3f}; "
                  f"gamma^2 at eps={eps:.3f}: shaded {g_sh:.3g}, conventional {g_cv:.3g} "
                  f"(ratio {g_cv / g_sh:.3g}); final-layer mean c on q{q}: Z {z_mean:.3f}, X {x_mean:.3f}; "
                  f"shade time {dt:.0f}s")


def test_criterion_8_clifford():
    viol_product = viol_oracle = checked = 0
    for theta in (0.0, math.pi / 2):
        for q in (0, 2):
            c = build_tfim_1d(5, 2, theta, -math.pi / 2, native=False)
            obs = Observable.pauli(f"Z{q}", 5)
            noise = local_pauli_noise(c, 0.02, layers="all")
            lc = clifford_shade(c, obs, noise)
            cand = one_sided_bounds(c, obs, noise)
            for ch in noise.channels:
                r = lc[ch.id]
                if not r.inside:
                    continue
                checked += 1
                for side in ("forward", "speed", "backward"):
                    b = cand[side].get(ch.id)
                    if b is not None and r.c > b.value + 1e-12:
                        viol_product += 1
            viol_oracle += len(soundness_report(c, noise, obs, lc)["channel_violations"])
    report(8, viol_product == 0 and viol_oracle == 0,
           f"{checked} channels at theta_x in {{0, pi/2}}, {viol_product} product > one-sided, "
           f"{viol_oracle} oracle violations")


def test_criterion_9_determinism():
    d1 = _digest(lc.dumps() for *_, lc in criterion1_runs(1))
    d8 = _digest(lc.dumps() for *_, lc in criterion1_runs(8))
    t1 = criterion7_run(1)[3].dumps()
    t8 = criterion7_run(8)[3].dumps()
    ok = d1 == d8 and t1 == t8
    report(9, ok, f"criterion 1 outputs {'identical' if d1 == d8 else 'DIFFER'} at 1 and 8 threads; "
                  f"TFIM lightcone {'identical' if t1 == t8 else 'DIFFERS'} ({len(t1)} bytes)")


if __name__ == "__main__":
    failed = 0
    for name, fn in list(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    print("\n".join(RESULTS[k] for k in sorted(RESULTS)))
    sys.exit(1 if failed else 0)
