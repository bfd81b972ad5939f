import csv
import json
import subprocess
import sys
from dataclasses import replace

import pytest

from lightcone_shading import io
from lightcone_shading.circuit import NoiseChannel, NoiseModel, Observable, build_tfim_1d, local_pauli_noise
from lightcone_shading.cli import main
from lightcone_shading.shading import ShadedLightcone


@pytest.fixture
def inputs(tmp_path):
    c = build_tfim_1d(4, 2, 0.3, -0.8)
    noise = local_pauli_noise(c, 0.02)
    (tmp_path / "c.json").write_text(io.dump_circuit(c))
    (tmp_path / "n.json").write_text(io.dump_noise(noise))
    (tmp_path / "o.json").write_text(io.dump_observable(Observable.pauli("Z1", 4)))
    return tmp_path


def args(d, *extra):
    return ["--circuit", str(d / "c.json"), "--noise", str(d / "n.json"), "--observable", str(d / "o.json"), *extra]


def test_round_trips(inputs):
    c = io.load_circuit(inputs / "c.json")
    assert io.dump_circuit(c) == (inputs / "c.json").read_text()
    n = io.load_noise(inputs / "n.json", c)
    assert io.dump_noise(n) == (inputs / "n.json").read_text()
    assert io.load_observable("Z1", 4) == io.load_observable(inputs / "o.json", 4)


def test_unknown_keys_and_versions_rejected():
    with pytest.raises(io.InputError, match="/"):
        io.load_circuit({"version": 1, "n_qubits": 2, "layers": [], "extra": 1})
    with pytest.raises(io.InputError):
        io.load_circuit({"version": 2, "n_qubits": 2, "layers": []})
    with pytest.raises(io.InputError, match="/layers/0/0"):
        io.load_circuit({"version": 1, "n_qubits": 2, "layers": [[{"gate": "RX", "qubits": [5], "theta": 0.1}]]})
    with pytest.raises(io.InputError):
        io.load_noise([{"layer": 0, "qubits": [0], "pauli": "X", "lambda": -0.1}])


def test_gate_names_with_axes():
    g = io.gate_from_json({"gate": "RZZ", "qubits": [0, 1], "theta": 0.3})
    assert g.is_rotation and len(g.qubits) == 2


def test_shade_writes_outputs_and_is_deterministic(inputs, capsys):
    out1, out8 = inputs / "t1", inputs / "t8"
    assert main(["shade", *args(inputs, "--out-dir", str(out1), "--threads", "1")]) == 0
    assert main(["shade", *args(inputs, "--out-dir", str(out8), "--threads", "8")]) == 0
    for name in ("lightcone.json", "lightcone.csv", "lightcone_X.svg", "lightcone_Z.svg"):
        assert (out1 / name).read_bytes() == (out8 / name).read_bytes()
    rows = list(csv.reader((out1 / "lightcone.csv").open()))
    assert rows[0] == io.CSV_HEADER
    assert (out1 / "lightcone_Z.svg").read_text().startswith("<svg")


def test_modes(inputs):
    assert main(["shade", *args(inputs, "--out-dir", str(inputs / "cv"), "--mode", "conventional")]) == 0
    # rotations make this circuit non-Clifford
    assert main(["shade", *args(inputs, "--out-dir", str(inputs / "cl"), "--mode", "clifford")]) == 2


def test_allocate(inputs):
    assert main(["shade", *args(inputs, "--out-dir", str(inputs))]) == 0
    base = ["allocate", "--lightcone", str(inputs / "lightcone.json"), "--noise", str(inputs / "n.json")]
    assert main([*base, "--epsilon", "0.001", "--out", str(inputs / "a.json"),
                 "--curve", str(inputs / "t.csv")]) == 0
    res = json.loads((inputs / "a.json").read_text())
    assert res["residual_bias_bound"] <= 0.001 + 1e-12
    assert main([*base, "--budget", "-1", "--out", str(inputs / "b.json"), "--curve", str(inputs / "t.csv")]) == 2
    with pytest.raises(SystemExit):
        main([*base, "--budget", "0.1", "--epsilon", "0.1"])


def test_verify_passes_and_detects_corruption(inputs, capsys):
    assert main(["verify", *args(inputs)]) == 0
    assert "PASS" in capsys.readouterr().out
    assert main(["shade", *args(inputs, "--out-dir", str(inputs))]) == 0
    lc = ShadedLightcone.from_json(json.loads((inputs / "lightcone.json").read_text()))
    worst = max((r for r in lc if r.c > 0), key=lambda r: r.c)
    bad = dict(lc.records)
    bad[worst.id] = replace(worst, c=0.0)
    (inputs / "bad.json").write_text(ShadedLightcone(bad, lc.metadata).dumps())
    assert main(["verify", *args(inputs, "--lightcone", str(inputs / "bad.json"))]) == 1
    assert "VIOLATION" in capsys.readouterr().out


def test_verify_noiseless_model(inputs, capsys):
    (inputs / "n.json").write_text(io.dump_noise(NoiseModel(())))
    assert main(["verify", *args(inputs)]) == 0
    assert "global |Bias(A)| 0.000000e+00" in capsys.readouterr().out


def test_verify_refuses_large_circuits(tmp_path, capsys):
    c = build_tfim_1d(12, 1, 0.3, 0.2)
    (tmp_path / "c.json").write_text(io.dump_circuit(c))
    (tmp_path / "n.json").write_text(io.dump_noise(NoiseModel((NoiseChannel(0, (0,), "X", 0.01),))))
    (tmp_path / "o.json").write_text(io.dump_observable(Observable.pauli("Z0", 12)))
    assert main(["verify", *args(tmp_path)]) == 2
    assert "dense budget" in capsys.readouterr().err


def test_bad_input_exits_cleanly(tmp_path, capsys):
    (tmp_path / "c.json").write_text('{"version": 1, "n_qubits": 2}')
    (tmp_path / "n.json").write_text("[]")
    (tmp_path / "o.json").write_text('"Z0"')
    assert main(["shade", *args(tmp_path)]) == 2
    assert "error:" in capsys.readouterr().err


def test_tfim_demo_small(tmp_path):
    out = tmp_path / "demo"
    assert main(["tfim1d-demo", "--n", "6", "--steps", "2", "--out-dir", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["shaded_total_bound"] <= summary["conventional_total_bound"]
    assert (out / "lightcone_Z.svg").exists()


def test_entry_point_runs_as_module():
    r = subprocess.run([sys.executable, "-m", "lightcone_shading.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "tfim1d-demo" in r.stdout
