import numpy as np

from lightcone_shading import oracle as O
from lightcone_shading.circuit import Gate, LayeredCircuit, Observable, build_tfim_1d, random_circuit
from lightcone_shading.evolution import evolve_backward, evolve_forward
from lightcone_shading.pauli import PauliSum, PauliTerm


def test_error_at_last_layer_is_unchanged():
    c = build_tfim_1d(4, 2, 0.3, 0.5)
    e = PauliTerm.parse("X1", 4)
    out = evolve_forward(e, c.n_layers - 1, c)
    assert out.layers_traversed == 0 and out.result == PauliSum.from_term(e)


def test_error_at_layer_zero_backward_sees_first_layer_only():
    c = build_tfim_1d(4, 2, 0.0, 0.5)
    e = PauliTerm.parse("Z2", 4)
    out = evolve_backward(e, 0, c)
    # R_X(0) commutes trivially; Z errors pass R_ZZ untouched
    assert out.result == PauliSum.from_term(e)


def test_x_error_through_commuting_zz_stays_small():
    layers = []
    for _ in range(3):
        layers.append(tuple(Gate("RZZ", (i, i + 1), 0.7) for i in range(0, 5, 2)))
        layers.append(tuple(Gate("RZZ", (i, i + 1), 0.3) for i in range(1, 5, 2)))
    c = LayeredCircuit(6, tuple(layers))
    obs = Observable.pauli("X0", 6)
    out = evolve_forward(PauliTerm.parse("X0", 6), 0, c, obs)
    assert out.result.n_terms <= 2
    assert all(len(t.support) <= 2 for t in out.result.terms())


def test_forward_and_backward_match_dense(rng):
    for _ in range(30):
        n = 5
        c = random_circuit(rng, n, 6)
        layer = int(rng.integers(-1, c.n_layers))
        e = PauliTerm(int(rng.integers(1, 1 << n)), int(rng.integers(1 << n)), n)
        u_pre = O.circuit_unitary(c, 0, layer + 1)
        u_post = O.circuit_unitary(c, layer + 1)
        ed = O.dense_term(e)
        fwd = evolve_forward(e, layer, c).result
        assert np.allclose(O.dense_op(fwd), u_post @ ed @ u_post.conj().T, atol=1e-12)
        if layer >= 0:
            bwd = evolve_backward(e, layer, c).result
            assert np.allclose(O.dense_op(bwd), u_pre.conj().T @ ed @ u_pre, atol=1e-12)


def test_two_norm_is_conserved(rng):
    for _ in range(20):
        c = random_circuit(rng, 5, 8)
        e = PauliTerm(int(rng.integers(1, 32)), int(rng.integers(32)), 5)
        out = evolve_forward(e, -1, c).result
        assert abs(out.two_norm_sq() - 1.0) < 1e-10


def test_threshold_reports_exceeded():
    c = build_tfim_1d(12, 6, 0.4, 0.9)
    e = PauliTerm.parse("Z6", 12)
    out = evolve_forward(e, 0, c, b_max=100)
    assert out.exceeded and out.result is None and out.peak_b > 100


def test_sweep_monotone_in_layer():
    # later errors never need more room than earlier ones of the same type
    c = build_tfim_1d(10, 4, 0.4, -np.pi / 2)
    obs = Observable.pauli("Z5", 10)
    e = PauliTerm.parse("Z5", 10)
    peaks = [evolve_forward(e, li, c, obs).peak_b for li in range(c.n_layers)]
    assert all(a >= b for a, b in zip(peaks, peaks[1:]))
