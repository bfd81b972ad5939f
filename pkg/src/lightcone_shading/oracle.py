"""Dense exact simulation used as ground truth for every bound.

Everything here works with explicit ``2^n`` vectors and ``2^n x 2^n``
matrices built from Kronecker products of single-qubit Pauli matrices and
gate matrices defined in this module, so it shares no arithmetic with the
symplectic kernels it checks.  Basis index ``b = sum_q b_q 2^q`` (qubit 0 is
the least significant bit).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Mapping, Sequence

import numpy as np

from .circuit import Gate, LayeredCircuit, NoiseChannel, NoiseModel, Observable
from .pauli import PauliSum, PauliTerm

DENSE_BUDGET = 10
STATEVECTOR_BUDGET = 12

I2 = np.eye(2, dtype=complex)
PX = np.array([[0, 1], [1, 0]], dtype=complex)
PY = np.array([[0, -1j], [1j, 0]], dtype=complex)
PZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI_MATS = {"I": I2, "X": PX, "Y": PY, "Z": PZ}

_GATE_MATS = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "S": np.array([[1, 0], [0, 1j]]),
    "SDG": np.array([[1, 0], [0, -1j]]),
    "X": PX, "Y": PY, "Z": PZ,
}


class DenseBudgetError(ValueError):
    """Instance too large for dense simulation."""


def _check_budget(n: int, budget: int):
    if n > budget:
        raise DenseBudgetError(f"{n} qubits exceeds the dense budget of {budget}")


# ----------------------------------------------------------------------------
# dense operators


def dense_term(term: PauliTerm) -> np.ndarray:
    mats = [PAULI_MATS[term.letter(q)] for q in range(term.n_qubits)]
    # kron(m_{n-1}, ..., m_0) puts qubit 0 in the least significant bit
    return term.coeff * reduce(np.kron, mats[::-1])


def dense_op(op: PauliSum) -> np.ndarray:
    _check_budget(op.n_qubits, DENSE_BUDGET + 2)
    dim = 2 ** op.n_qubits
    out = np.zeros((dim, dim), dtype=complex)
    for t in op.terms():
        out += dense_term(t)
    return out


def _two_qubit_matrix(name: str) -> np.ndarray:
    # local ordering: first listed qubit is the least significant bit
    if name == "CNOT":
        # control is the first qubit: |0><0|_c (x) I_t + |1><1|_c (x) X_t
        return np.kron(I2, np.diag([1, 0])) + np.kron(PX, np.diag([0, 1]))
    if name == "CZ":
        return np.diag([1, 1, 1, -1]).astype(complex)
    if name == "SWAP":
        return np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)
    raise KeyError(name)


def local_gate_matrix(gate: Gate) -> np.ndarray:
    """Gate matrix on its own qubits (``gate.qubits[0]`` least significant)."""
    if gate.is_rotation:
        letters = {k: a for k, a in enumerate(gate.axis)}
        p = dense_term(PauliTerm.from_sparse(letters, len(gate.qubits)))
        dim = p.shape[0]
        return math.cos(gate.theta / 2) * np.eye(dim) - 1j * math.sin(gate.theta / 2) * p
    if len(gate.qubits) == 1:
        return _GATE_MATS[gate.kind]
    return _two_qubit_matrix(gate.kind)


def apply_local(tensor: np.ndarray, u: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    """Apply a ``k``-qubit matrix to the leading ``n`` qubit axes of ``tensor``.

    ``tensor`` has shape ``(2,)*n + rest``; qubit ``q`` is axis ``n-1-q``.
    """
    k = len(qubits)
    ut = u.reshape((2,) * (2 * k))
    axes = [n - 1 - q for q in reversed(qubits)]  # matches u's in-axes order
    out = np.tensordot(ut, tensor, axes=(list(range(k, 2 * k)), axes))
    return np.moveaxis(out, list(range(k)), axes)


def gate_unitary(gate: Gate, n: int) -> np.ndarray:
    dim = 2 ** n
    eye = np.eye(dim, dtype=complex).reshape((2,) * n + (dim,))
    return apply_local(eye, local_gate_matrix(gate), gate.qubits, n).reshape(dim, dim)


def layer_unitary(layer: Iterable[Gate], n: int) -> np.ndarray:
    u = np.eye(2 ** n, dtype=complex)
    for g in layer:
        u = gate_unitary(g, n) @ u
    return u


def circuit_unitary(circuit: LayeredCircuit, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Unitary of layers ``start .. stop-1``."""
    _check_budget(circuit.n_qubits, DENSE_BUDGET)
    stop = circuit.n_layers if stop is None else stop
    u = np.eye(2 ** circuit.n_qubits, dtype=complex)
    for li in range(max(start, 0), stop):
        u = layer_unitary(circuit.layers[li], circuit.n_qubits) @ u
    return u


def zero_state(n: int) -> np.ndarray:
    rho = np.zeros((2 ** n, 2 ** n), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def spectral_norm(m: np.ndarray) -> float:
    return float(np.linalg.norm(m, 2))


def nuclear_norm(m: np.ndarray) -> float:
    return float(np.linalg.svd(m, compute_uv=False).sum())


def comm(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def pauli_decompose(m: np.ndarray) -> dict[str, complex]:
    """Brute-force ``4^n`` Pauli decomposition (labels with qubit 0 first)."""
    n = int(round(math.log2(m.shape[0])))
    out = {}
    for idx in range(4 ** n):
        label = "".join("IXYZ"[(idx >> (2 * q)) & 3] for q in range(n))
        c = np.trace(dense_term(PauliTerm.from_label(label)) @ m) / 2 ** n
        if abs(c) > 1e-13:
            out[label] = complex(c)
    return out


# ----------------------------------------------------------------------------
# noisy density-matrix evolution


def _apply_channel(rho: np.ndarray, ch: NoiseChannel, n: int, lam: float | None = None) -> np.ndarray:
    lam = ch.lam if lam is None else lam
    p = (1 - math.exp(-2 * lam)) / 2
    if p == 0:
        return rho
    e = dense_term(ch.error(n))
    return (1 - p) * rho + p * (e @ rho @ e)


def noisy_final_state(circuit: LayeredCircuit, channels: Iterable[NoiseChannel],
                      rho0: np.ndarray | None = None) -> np.ndarray:
    n = circuit.n_qubits
    _check_budget(n, DENSE_BUDGET)
    rho = zero_state(n) if rho0 is None else rho0
    by_layer: dict[int, list[NoiseChannel]] = {}
    for ch in channels:
        by_layer.setdefault(ch.layer, []).append(ch)
    for ch in by_layer.get(-1, []):
        rho = _apply_channel(rho, ch, n)
    for li, layer in enumerate(circuit.layers):
        u = layer_unitary(layer, n)
        rho = u @ rho @ u.conj().T
        for ch in by_layer.get(li, []):
            rho = _apply_channel(rho, ch, n)
    return rho


def exact_expectation(circuit: LayeredCircuit, noise: NoiseModel | Iterable[NoiseChannel], obs: Observable,
                      rho0: np.ndarray | None = None) -> float:
    rho = noisy_final_state(circuit, list(noise), rho0)
    return float(np.real(np.trace(dense_op(obs.op) @ rho)))


def exact_channel_bias(circuit: LayeredCircuit, obs: Observable, channel: NoiseChannel) -> dict[str, float]:
    """Bias of inserting the bare error ``E`` into the noiseless circuit.

    Returns the direct value ``Tr(A E_F rho_F E_F) - Tr(A rho_F)`` under key
    ``"direct"`` and ``Tr([E_t, rho_t][E_t, A_t]) / 2`` for ``t`` in I, M, F.
    Multiply by the channel probability for the channel bias.
    """
    n = circuit.n_qubits
    u_pre = circuit_unitary(circuit, 0, channel.layer + 1)
    u_post = circuit_unitary(circuit, channel.layer + 1)
    rho_i = zero_state(n)
    a_f = dense_op(obs.op)
    e_m = dense_term(channel.error(n))
    rho_m = u_pre @ rho_i @ u_pre.conj().T
    rho_f = u_post @ rho_m @ u_post.conj().T
    a_m = u_post.conj().T @ a_f @ u_post
    a_i = u_pre.conj().T @ a_m @ u_pre
    e_f = u_post @ e_m @ u_post.conj().T
    e_i = u_pre.conj().T @ e_m @ u_pre

    def form(e, r, a):
        return float(np.real(np.trace(comm(e, r) @ comm(e, a)))) / 2

    direct = float(np.real(np.trace(a_f @ e_f @ rho_f @ e_f) - np.trace(a_f @ rho_f)))
    return {"direct": direct, "I": form(e_i, rho_i, a_i), "M": form(e_m, rho_m, a_m), "F": form(e_f, rho_f, a_f)}


def exact_commutator_norms(circuit: LayeredCircuit, obs: Observable, channel: NoiseChannel) -> dict[str, float]:
    """Dense ``||[E_I, rho_I]||_1`` and ``||[E_F, A_F]||_inf`` for a channel's error."""
    n = circuit.n_qubits
    u_pre = circuit_unitary(circuit, 0, channel.layer + 1)
    u_post = circuit_unitary(circuit, channel.layer + 1)
    e_m = dense_term(channel.error(n))
    e_i = u_pre.conj().T @ e_m @ u_pre
    e_f = u_post @ e_m @ u_post.conj().T
    return {"rho": nuclear_norm(comm(e_i, zero_state(n))), "A": spectral_norm(comm(e_f, dense_op(obs.op)))}


def incremental_biases(circuit: LayeredCircuit, order: Sequence[NoiseChannel], obs: Observable) -> list[float]:
    """``<A>_j - <A>_{j-1}`` when channels are inserted in ``order``."""
    a = dense_op(obs.op)
    vals = []
    prev = float(np.real(np.trace(a @ noisy_final_state(circuit, []))))
    for j in range(len(order)):
        cur = float(np.real(np.trace(a @ noisy_final_state(circuit, order[: j + 1]))))
        vals.append(cur - prev)
        prev = cur
    return vals


def exact_component_norms(gates: Sequence[Gate], obs: Observable) -> dict[tuple[int, str], float]:
    """``||A_{sigma,[i]}||`` for ``A -> V^dag A V`` with ``V`` the gate list in time order.

    ``A = sum_sigma sigma_i (x) A_{sigma,[i]}`` with
    ``A_{sigma,[i]} = Tr_i(sigma_i A) / 2``.
    """
    n = obs.n_qubits
    _check_budget(n, DENSE_BUDGET)
    a = dense_op(obs.op)
    for g in reversed(gates):
        u = gate_unitary(g, n)
        a = u.conj().T @ a @ u
    return component_norms(a, n)


def component_norms(a: np.ndarray, n: int) -> dict[tuple[int, str], float]:
    dim = 2 ** n
    t = a.reshape((2,) * (2 * n))
    out = {}
    for q in range(n):
        ax_row, ax_col = n - 1 - q, 2 * n - 1 - q
        for s, mat in PAULI_MATS.items():
            # Tr_q(sigma_q A) = sum_{ab} sigma[b, a] A[a.., b..]
            part = np.tensordot(mat.T, t, axes=([0, 1], [ax_row, ax_col])) / 2
            out[(q, s)] = spectral_norm(part.reshape(dim // 2, dim // 2))
    return out


# ----------------------------------------------------------------------------
# statevector PEC sampler


@dataclass(frozen=True)
class PecResult:
    estimate: float
    variance: float  # per-shot variance of the rescaled estimator
    gamma: float
    shots: int

    @property
    def stderr(self) -> float:
        return math.sqrt(self.variance / self.shots)


def _apply_frames(psi: np.ndarray, x: np.ndarray, z: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Row-wise ``X^x Z^z`` on a batch of statevectors, global phases dropped."""
    sign = 1 - 2 * (np.bitwise_count(idx[None, :] & z[:, None]) & 1).astype(np.int8)
    rows = np.arange(len(x))[:, None]
    return (psi * sign)[rows, idx[None, :] ^ x[:, None]]


def probability_from_rate(lam: float) -> float:
    return (1 - math.exp(-2 * lam)) / 2


def sample_lindblad_flip_frequency(lam: float, draws: int, seed: int) -> float:
    """Monte Carlo frequency of a net Pauli flip under ``exp(lam L)``.

    ``exp(lam L) = e^-lam sum_k lam^k/k! S^k`` with ``S^2 = id``, so the
    number of applications is Poisson and the flip happens on odd counts.
    """
    counts = np.random.default_rng(seed).poisson(lam, size=draws)
    return float(np.mean(counts % 2 == 1))


def simulate_pec(circuit: LayeredCircuit, noise: NoiseModel, obs: Observable,
                 antinoise: Mapping[str, float] | None = None, shots: int = 10_000, seed: int = 0,
                 chunk: int | None = None) -> PecResult:
    """Quasi-probability PEC with single-shot measurements of ``obs``.

    Each shot samples hardware errors at the full rate ``lam`` and antinoise
    insertions with probability ``p(lam*)``; every antinoise insertion flips
    the sign, so the average realises ``exp((lam - lam*) L)``.  The estimator
    is ``gamma * sign * outcome`` with ``gamma = exp(2 sum lam*)``.

    Shots run as batches of statevectors.  All Paulis drawn for one layer
    multiply into a single frame per shot.  Chunks draw from independent
    child streams of ``seed``; the default chunk size depends only on the
    qubit count, so a given ``seed`` reproduces the result exactly.
    """
    n = circuit.n_qubits
    _check_budget(n, STATEVECTOR_BUDGET)
    dim = 1 << n
    if chunk is None:
        chunk = max(1, min(1 << 16, (1 << 22) // dim))
    antinoise = dict(antinoise or {})
    chans = list(noise.channels)
    lam = np.array([c.lam for c in chans])
    lam_star = np.array([antinoise.get(c.id, 0.0) for c in chans])
    if np.any(lam_star < -1e-15) or np.any(lam_star > lam + 1e-12):
        raise ValueError("antinoise rates must satisfy 0 <= lam* <= lam")
    p_noise = -np.expm1(-2 * lam) / 2
    p_anti = -np.expm1(-2 * lam_star) / 2
    gamma = math.exp(2 * lam_star.sum())
    evals, evecs = np.linalg.eigh(dense_op(obs.op))
    proj = evecs.conj()
    xs = np.array([c.error(n).x for c in chans], dtype=np.int64)
    zs = np.array([c.error(n).z for c in chans], dtype=np.int64)
    layer_of = np.array([c.layer for c in chans])
    noisy_layers = sorted(set(layer_of.tolist()))
    unitaries = [layer_unitary(layer, n).T for layer in circuit.layers]
    idx = np.arange(dim, dtype=np.int64)

    n_chunks = (shots + chunk - 1) // chunk
    streams = np.random.SeedSequence(seed).spawn(max(n_chunks, 1))
    total = 0.0
    total_sq = 0.0
    for ci in range(n_chunks):
        m = min(chunk, shots - ci * chunk)
        rng = np.random.default_rng(streams[ci])
        noise_bits = rng.random((m, len(chans))) < p_noise
        anti_bits = rng.random((m, len(chans))) < p_anti
        applied = noise_bits ^ anti_bits
        sign = 1 - 2 * (anti_bits.sum(axis=1) % 2)
        u = rng.random(m)
        frames = {}
        for li in noisy_layers:
            sel = layer_of == li
            fx = np.bitwise_xor.reduce(np.where(applied[:, sel], xs[sel], 0), axis=1)
            fz = np.bitwise_xor.reduce(np.where(applied[:, sel], zs[sel], 0), axis=1)
            frames[li] = (fx, fz)
        psi = np.zeros((m, dim), dtype=complex)
        psi[:, 0] = 1.0
        for li in range(-1, circuit.n_layers):
            if li >= 0:
                psi = psi @ unitaries[li]
            if li in frames:
                psi = _apply_frames(psi, *frames[li], idx)
        probs = np.abs(psi @ proj) ** 2
        cdf = np.cumsum(probs, axis=1)
        cdf /= cdf[:, -1:]
        pick = np.minimum((cdf < u[:, None]).sum(axis=1), dim - 1)
        est = gamma * sign * evals[pick]
        total += est.sum()
        total_sq += (est ** 2).sum()
    mean = total / shots
    var = max(total_sq / shots - mean ** 2, 0.0) * shots / max(shots - 1, 1)
    return PecResult(mean, var, gamma, shots)
