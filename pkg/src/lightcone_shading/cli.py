"""Command-line front end: ``lightcone-shading {shade,allocate,verify,tfim1d-demo}``."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

from . import io
from .allocation import allocate, cost_for_bias_target, tradeoff_curve
from .circuit import build_tfim_1d, local_pauli_noise, Observable
from .evolution import DEFAULT_B_MAX
from .norms import DEFAULT_N_MAX, DEFAULT_TOL
from .shading import (ShadeConfig, ShadedLightcone, clifford_shade, conventional_shade, shade,
                      total_bias_bound)

THREADS_ENV = "LIGHTCONE_THREADS"


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _add_config(p: argparse.ArgumentParser):
    p.add_argument("--b-max", type=int, default=DEFAULT_B_MAX, help="operator size threshold B_max")
    p.add_argument("--n-max", type=int, default=DEFAULT_N_MAX, help="support threshold for exact spectral norms")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL, help="relative tolerance of iterative norms")
    p.add_argument("--threads", type=int, default=_default_threads(),
                   help=f"worker threads (default ${THREADS_ENV} or 1)")


def _config(args) -> ShadeConfig:
    return ShadeConfig(b_max=args.b_max, n_max=args.n_max, tol=args.tol, threads=args.threads)


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _emit_lightcone(lc: ShadedLightcone, n_qubits: int, n_layers: int, out_dir: Path, prefix: str):
    _write(out_dir / f"{prefix}.json", lc.dumps() + "\n")
    _write(out_dir / f"{prefix}.csv", io.lightcone_csv(lc))
    for p in "XYZ":
        _write(out_dir / f"{prefix}_{p}.svg", io.heatmap_svg(lc, p, n_qubits, n_layers))


def _load_inputs(args):
    circuit = io.load_circuit(args.circuit)
    noise = io.load_noise(args.noise, circuit)
    obs = io.load_observable(args.observable, circuit.n_qubits)
    return circuit, noise, obs


def cmd_shade(args) -> int:
    circuit, noise, obs = _load_inputs(args)
    if args.mode == "clifford":
        lc = clifford_shade(circuit, obs, noise, _config(args))
    elif args.mode == "conventional":
        lc = conventional_shade(circuit, obs, noise)
    else:
        lc = shade(circuit, obs, noise, _config(args))
    _emit_lightcone(lc, circuit.n_qubits, circuit.n_layers, Path(args.out_dir), args.prefix)
    print(f"total bias bound {total_bias_bound(lc, noise.rates):.6g} over {len(lc)} channels")
    return 0


def cmd_allocate(args) -> int:
    lc = ShadedLightcone.from_json(json.loads(Path(args.lightcone).read_text()))
    noise = io.load_noise(args.noise)
    rates = noise.rates
    missing = set(lc.records) ^ set(rates)
    if missing:
        raise io.InputError(f"lightcone and noise model disagree on channels, e.g. {sorted(missing)[0]}")
    if args.budget is not None:
        if args.budget < 0:
            raise io.InputError("--budget must be non-negative")
        res = allocate(lc, rates, args.budget)
    else:
        if args.epsilon < 0:
            raise io.InputError("--epsilon must be non-negative")
        res = cost_for_bias_target(lc, rates, args.epsilon)
    _write(Path(args.out), json.dumps(res.to_json(), indent=1, sort_keys=True) + "\n")
    _write(Path(args.curve), io.tradeoff_csv(tradeoff_curve(lc, rates)))
    print(f"budget {res.budget_used:.6g}  residual bound {res.residual_bias_bound:.6g}  "
          f"gamma^2 {res.sampling_cost_gamma_sq:.6g}")
    return 0


def cmd_verify(args) -> int:
    from . import oracle

    circuit, noise, obs = _load_inputs(args)
    if circuit.n_qubits > oracle.DENSE_BUDGET:
        print(f"refusing to verify: {circuit.n_qubits} qubits exceeds the dense budget of "
              f"{oracle.DENSE_BUDGET}", file=sys.stderr)
        return 2
    if args.lightcone:
        lc = ShadedLightcone.from_json(json.loads(Path(args.lightcone).read_text()))
    else:
        lc = shade(circuit, obs, noise, _config(args))
    by_id = noise.by_id
    order = [by_id[cid] for cid in lc.insertion_order()]
    inc = oracle.incremental_biases(circuit, order, obs)
    violations = 0
    print(f"{'channel':<16} {'|bias|':>12} {'p*c':>12} {'margin':>12}")
    for ch, b in zip(order, inc):
        bound = ch.probability * lc[ch.id].c
        margin = bound - abs(b)
        flag = ""
        if margin < -args.atol:
            violations += 1
            flag = "  VIOLATION"
        print(f"{ch.id:<16} {abs(b):12.4e} {bound:12.4e} {margin:12.4e}{flag}")
    ideal = oracle.exact_expectation(circuit, [], obs)
    noisy = oracle.exact_expectation(circuit, noise, obs)
    total = total_bias_bound(lc, noise.rates)
    if abs(noisy - ideal) > total + args.atol:
        violations += 1
    print(f"global |Bias(A)| {abs(noisy - ideal):.6e}  bound {total:.6e}")
    print("PASS" if violations == 0 else f"FAIL: {violations} violation(s)")
    return 0 if violations == 0 else 1


def cmd_tfim_demo(args) -> int:
    out = Path(args.out_dir)
    circuit = build_tfim_1d(args.n, args.steps, args.theta_x, args.theta_zz)
    noise = local_pauli_noise(circuit, args.lam)
    q = args.n // 2 if args.qubit is None else args.qubit
    obs = Observable.pauli(f"Z{q}", args.n)
    _write(out / "circuit.json", io.dump_circuit(circuit) + "\n")
    _write(out / "noise.json", io.dump_noise(noise) + "\n")
    _write(out / "observable.json", io.dump_observable(obs) + "\n")
    lc = shade(circuit, obs, noise, _config(args))
    conv = conventional_shade(circuit, obs, noise)
    _emit_lightcone(lc, circuit.n_qubits, circuit.n_layers, out, "lightcone")
    rates = noise.rates
    shaded_total = total_bias_bound(lc, rates)
    conv_total = total_bias_bound(conv, rates)
    eps = args.eps_fraction * shaded_total
    a_sh = cost_for_bias_target(lc, rates, eps)
    a_cv = cost_for_bias_target(conv, rates, eps)
    summary = {
        "n": args.n, "steps": args.steps, "theta_x": args.theta_x, "theta_zz": args.theta_zz, "lambda": args.lam,
        "observable": f"Z{q}", "n_channels": len(noise), "shaded_total_bound": shaded_total,
        "conventional_total_bound": conv_total, "epsilon": eps,
        "gamma_sq_shaded": a_sh.sampling_cost_gamma_sq, "gamma_sq_conventional": a_cv.sampling_cost_gamma_sq,
        "partition": lc.metadata.get("partition"),
    }
    _write(out / "summary.json", json.dumps(summary, indent=1, sort_keys=True) + "\n")
    print(json.dumps(summary, indent=1, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lightcone-shading", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("shade", help="per-channel bias bounds")
    p.add_argument("--circuit", required=True)
    p.add_argument("--noise", required=True)
    p.add_argument("--observable", required=True, help="JSON file/string or a Pauli label like Z3")
    p.add_argument("--mode", choices=["shaded", "clifford", "conventional"], default="shaded")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--prefix", default="lightcone")
    _add_config(p)
    p.set_defaults(func=cmd_shade)

    p = sub.add_parser("allocate", help="antinoise allocation from a lightcone file")
    p.add_argument("--lightcone", required=True)
    p.add_argument("--noise", required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--budget", type=float)
    g.add_argument("--epsilon", type=float)
    p.add_argument("--out", default="allocation.json")
    p.add_argument("--curve", default="tradeoff.csv")
    p.set_defaults(func=cmd_allocate)

    p = sub.add_parser("verify", help="check bounds against dense simulation")
    p.add_argument("--circuit", required=True)
    p.add_argument("--noise", required=True)
    p.add_argument("--observable", required=True)
    p.add_argument("--lightcone", help="verify this lightcone file instead of recomputing")
    p.add_argument("--atol", type=float, default=1e-12)
    _add_config(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("tfim1d-demo", help="1D transverse-field Ising workflow")
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--theta-x", type=float, default=math.pi / 16)
    p.add_argument("--theta-zz", type=float, default=-math.pi / 2)
    p.add_argument("--lam", type=float, default=0.01)
    p.add_argument("--qubit", type=int, default=None, help="measured qubit (default n//2)")
    p.add_argument("--eps-fraction", type=float, default=0.1)
    p.add_argument("--out-dir", default="tfim1d_out")
    _add_config(p)
    p.set_defaults(func=cmd_tfim_demo)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (io.InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
