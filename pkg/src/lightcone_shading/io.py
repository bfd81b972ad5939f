"""File formats: JSON inputs with schema checks, CSV tables and SVG heatmaps."""

from __future__ import annotations

import csv
import io as _io
import json
import re
from pathlib import Path
from typing import Any, Iterable, Sequence

import jsonschema

from .circuit import CircuitError, Gate, LayeredCircuit, NoiseChannel, NoiseModel, Observable
from .shading import RHO_SIDE, ShadedLightcone

SCHEMA_VERSION = 1

_GATE = {
    "type": "object",
    "properties": {
        "gate": {"type": "string", "pattern": "^[A-Za-z]+$"},
        "qubits": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1, "maxItems": 2},
        "theta": {"type": "number"},
        "axis": {"type": "string", "pattern": "^[XYZxyz]{1,2}$"},
    },
    "required": ["gate", "qubits"],
    "additionalProperties": False,
}

CIRCUIT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "layered circuit",
    "type": "object",
    "properties": {
        "version": {"const": SCHEMA_VERSION},
        "n_qubits": {"type": "integer", "minimum": 1},
        "coupling": {"type": "array",
                     "items": {"type": "array", "items": {"type": "integer", "minimum": 0},
                               "minItems": 2, "maxItems": 2}},
        "layers": {"type": "array", "items": {"type": "array", "items": _GATE}},
    },
    "required": ["n_qubits", "layers"],
    "additionalProperties": False,
}

_CHANNEL = {
    "type": "object",
    "properties": {
        "layer": {"type": "integer", "minimum": -1},
        "qubits": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1, "maxItems": 2},
        "pauli": {"type": "string", "pattern": "^[IXYZixyz]{1,2}$"},
        "lambda": {"type": "number", "minimum": 0},
    },
    "required": ["layer", "qubits", "pauli", "lambda"],
    "additionalProperties": False,
}

NOISE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "noise model",
    "oneOf": [
        {"type": "array", "items": _CHANNEL},
        {"type": "object",
         "properties": {"version": {"const": SCHEMA_VERSION}, "channels": {"type": "array", "items": _CHANNEL}},
         "required": ["channels"], "additionalProperties": False},
    ],
}

_TERM = {
    "type": "object",
    "properties": {"pauli_string": {"type": "string", "minLength": 1}, "coeff": {"type": "number"}},
    "required": ["pauli_string"],
    "additionalProperties": False,
}

OBSERVABLE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "observable",
    "oneOf": [
        {"type": "array", "items": _TERM, "minItems": 1},
        {"type": "object",
         "properties": {"version": {"const": SCHEMA_VERSION}, "terms": {"type": "array", "items": _TERM, "minItems": 1},
                        "norm_bound": {"type": "number", "minimum": 0}},
         "required": ["terms"], "additionalProperties": False},
    ],
}


class InputError(ValueError):
    """Malformed input file; the message names the offending JSON pointer."""


def _pointer(path: Iterable[Any]) -> str:
    parts = [str(p).replace("~", "~0").replace("/", "~1") for p in path]
    return "/" + "/".join(parts) if parts else "/"


def validate(data: Any, schema: dict, what: str):
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(data), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if not errors:
        return
    err = errors[0]
    # oneOf failures hide the useful message in the best-matching branch
    best = jsonschema.exceptions.best_match(errors)
    if best is not None:
        err = best
    raise InputError(f"{what}: {err.message} at {_pointer(err.absolute_path)}")


def _load(source) -> Any:
    if isinstance(source, (str, Path)) and Path(source).exists():
        return json.loads(Path(source).read_text())
    if isinstance(source, str):
        return json.loads(source)
    return source


_ROT = re.compile(r"^R([XYZ]{1,2})$")


def gate_from_json(d: dict) -> Gate:
    name = d["gate"].upper()
    m = _ROT.match(name)
    if m and len(m.group(1)) == len(d["qubits"]) and "theta" in d:
        return Gate("R", tuple(d["qubits"]), d["theta"], d.get("axis", m.group(1)))
    if name == "R":
        return Gate("R", tuple(d["qubits"]), d.get("theta"), d.get("axis"))
    return Gate(name, tuple(d["qubits"]), d.get("theta"))


def load_circuit(source) -> LayeredCircuit:
    data = _load(source)
    validate(data, CIRCUIT_SCHEMA, "circuit")
    layers = []
    for li, layer in enumerate(data["layers"]):
        gates = []
        for gi, g in enumerate(layer):
            bad = [q for q in g["qubits"] if q >= data["n_qubits"]]
            if bad:
                raise InputError(f"circuit: qubit {bad[0]} out of range for {data['n_qubits']} qubits "
                                 f"at {_pointer(['layers', li, gi, 'qubits'])}")
            try:
                gates.append(gate_from_json(g))
            except CircuitError as exc:
                raise InputError(f"circuit: {exc} at {_pointer(['layers', li, gi])}") from exc
        layers.append(tuple(gates))
    coupling = data.get("coupling")
    try:
        return LayeredCircuit(data["n_qubits"], tuple(layers),
                              None if coupling is None else frozenset(tuple(e) for e in coupling))
    except CircuitError as exc:
        raise InputError(f"circuit: {exc} at /layers") from exc


def dump_circuit(circuit: LayeredCircuit) -> str:
    return json.dumps({"version": SCHEMA_VERSION, **circuit.to_json()}, indent=1)


def load_noise(source, circuit: LayeredCircuit | None = None) -> NoiseModel:
    data = _load(source)
    validate(data, NOISE_SCHEMA, "noise")
    items = data if isinstance(data, list) else data["channels"]
    chans = []
    for k, it in enumerate(items):
        try:
            chans.append(NoiseChannel(it["layer"], tuple(it["qubits"]), it["pauli"], it["lambda"]))
        except CircuitError as exc:
            raise InputError(f"noise: {exc} at {_pointer([k])}") from exc
    try:
        model = NoiseModel(tuple(chans))
        if circuit is not None:
            model.validate(circuit)
    except CircuitError as exc:
        raise InputError(f"noise: {exc}") from exc
    return model


def dump_noise(noise: NoiseModel) -> str:
    return json.dumps({"version": SCHEMA_VERSION, "channels": noise.to_json()}, indent=1)


def load_observable(source, n_qubits: int) -> Observable:
    """Observable from a JSON term list, a file, or a bare Pauli string such as ``"Z10"``."""
    if isinstance(source, str) and not Path(source).exists() and not source.lstrip().startswith(("[", "{")):
        try:
            return Observable.pauli(source, n_qubits)
        except Exception as exc:
            raise InputError(f"observable: {exc}") from exc
    data = _load(source)
    validate(data, OBSERVABLE_SCHEMA, "observable")
    terms = data if isinstance(data, list) else data["terms"]
    bound = None if isinstance(data, list) else data.get("norm_bound")
    try:
        return Observable.from_spec(terms, n_qubits, bound)
    except Exception as exc:
        raise InputError(f"observable: {exc}") from exc


def dump_observable(obs: Observable) -> str:
    return json.dumps({"version": SCHEMA_VERSION, "terms": obs.to_json()}, indent=1)


# ----------------------------------------------------------------------------
# tables

CSV_HEADER = ["layer", "qubits", "pauli", "c", "method", "side"]


def lightcone_csv(lc: ShadedLightcone) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in lc:
        w.writerow([r.layer, " ".join(map(str, r.qubits)), r.pauli, repr(float(r.c)), r.method, r.side])
    return buf.getvalue()


def tradeoff_csv(curve: Sequence) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["budget", "residual_bias_bound", "gamma_sq"])
    for a in curve:
        w.writerow([repr(a.budget_used), repr(a.residual_bias_bound), repr(a.sampling_cost_gamma_sq)])
    return buf.getvalue()


# ----------------------------------------------------------------------------
# heatmaps


def _ramp(value: float, vmax: float = 2.0) -> str:
    # single hue, lightness falls monotonically with c
    t = min(max(value / vmax, 0.0), 1.0)
    light = 97 - 72 * t
    return f"hsl(28,85%,{light:.1f}%)"


def heatmap_svg(lc: ShadedLightcone, pauli: str, n_qubits: int, n_layers: int, title: str = "") -> str:
    """Layer x site heatmap of ``c`` for single-qubit channels with letter ``pauli``.

    Time runs left to right, qubits top to bottom.  Cells are hatched where
    a threshold was exceeded in the forward sweep; rho-side cells carry a
    dot, and the boundary between the two sides is outlined.
    """
    cell, pad_l, pad_t = 14, 40, 30
    width = pad_l + cell * (n_layers + 1) + 120
    height = pad_t + cell * n_qubits + 30
    recs = {(r.layer, r.qubits[0]): r for r in lc if len(r.qubits) == 1 and r.pauli == pauli}
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="9">',
           '<defs><pattern id="hatch" width="4" height="4" patternUnits="userSpaceOnUse">'
           '<path d="M0,4 L4,0" stroke="#555" stroke-width="0.6"/></pattern></defs>',
           f'<text x="{pad_l}" y="14" font-size="11">{title or f"shaded lightcone, {pauli} errors"}</text>']

    def xy(layer, q):
        return pad_l + cell * (layer + 1), pad_t + cell * q

    for q in range(n_qubits):
        out.append(f'<text x="{pad_l - 4}" y="{pad_t + cell * q + 10}" text-anchor="end">{q}</text>')
    for (layer, q), r in sorted(recs.items()):
        x, y = xy(layer, q)
        out.append(f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="{_ramp(r.c)}"/>')
        if r.forward_exceeded and r.side != RHO_SIDE:
            out.append(f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="url(#hatch)"/>')
        if r.side == RHO_SIDE:
            out.append(f'<circle cx="{x + cell / 2}" cy="{y + cell / 2}" r="1.6" fill="#fff"/>')
    for (layer, q), r in sorted(recs.items()):
        # outline edges between rho-side and a-side neighbours
        if r.side != RHO_SIDE:
            continue
        x, y = xy(layer, q)
        nb = recs.get((layer + 1, q)) or next((recs[k] for k in sorted(recs) if k[1] == q and k[0] > layer), None)
        if nb is None or nb.side != RHO_SIDE:
            out.append(f'<line x1="{x + cell}" y1="{y}" x2="{x + cell}" y2="{y + cell}" stroke="#fff" '
                       f'stroke-width="2"/>')
    lx = pad_l + cell * (n_layers + 1) + 20
    for k in range(11):
        v = 2.0 * (10 - k) / 10
        out.append(f'<rect x="{lx}" y="{pad_t + 8 * k}" width="12" height="8" fill="{_ramp(v)}"/>')
    out.append(f'<text x="{lx + 16}" y="{pad_t + 7}">c = 2</text>')
    out.append(f'<text x="{lx + 16}" y="{pad_t + 87}">c = 0</text>')
    out.append(f'<text x="{pad_l}" y="{height - 8}">layer (time) →</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
