"""Commutator norms that turn evolved errors into per-channel bias bounds.

Three kernels:

* ``nuclear_norm_zero_state`` -- ``||[E_I, |0><0|]||_1`` straight from the
  Pauli coefficients, never densified.
* ``spectral_norm_commutator`` -- ``||[E_F, A]||_inf`` via the largest
  eigenvalue magnitude of the Hermitian ``i[E_F, A]`` restricted to its
  support qubits, matrix-free in the computational basis.
* ``pauli_one_norm_fallback`` -- the coefficient one-norm of ``[E_F, A]``,
  a looser upper bound used when the support is too wide.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from .circuit import Observable
from .pauli import PauliSum, _get_bits, _popcount_rows, commutator

EXACT_NUCLEAR = "exact_nuclear"
EXACT_SPECTRAL = "exact_spectral"
FALLBACK = "pauli_one_norm_fallback"
SPEED_LIMIT = "speed_limit"
TRIVIAL = "trivial"
OUTSIDE = "outside_lightcone"
CLIFFORD = "clifford_product"

DEFAULT_N_MAX = 20
DEFAULT_TOL = 1e-6
DENSE_MAX = 9
# stored diagonals for the matrix-free product, in complex entries
_DIAG_BUDGET = 40_000_000


@dataclass(frozen=True)
class BoundValue:
    value: float
    method: str
    support: int = 0

    def capped(self, cap: float) -> "BoundValue":
        if self.value <= cap:
            return self
        return BoundValue(cap, TRIVIAL, self.support)


def nuclear_norm_zero_state(e_init: PauliSum) -> BoundValue:
    """``||[E, |0><0|]||_1 = 2 sqrt(s)`` with ``s = sum_{x != 0} |sum_z c i^(x.z)|^2``.

    Terms with ``x = 0`` are diagonal and drop out.  Because terms are sorted
    by ``x`` first, each inner sum is a contiguous block.
    """
    if e_init.n_terms == 0:
        return BoundValue(0.0, EXACT_NUCLEAR)
    offdiag = np.any(e_init.x != 0, axis=1)
    if not offdiag.any():
        return BoundValue(0.0, EXACT_NUCLEAR)
    x = e_init.x[offdiag]
    z = e_init.z[offdiag]
    c = e_init.coeffs[offdiag]
    phase = np.array([1, 1j, -1, -1j])[_popcount_rows(x & z) % 4]
    vals = c * phase
    if len(vals) > 1:
        new = np.empty(len(vals), dtype=bool)
        new[0] = True
        np.any(x[1:] != x[:-1], axis=1, out=new[1:])
        sums = np.add.reduceat(vals, np.flatnonzero(new))
    else:
        sums = vals
    s = float(np.sum(np.abs(sums) ** 2))
    return BoundValue(2.0 * math.sqrt(s), EXACT_NUCLEAR)


def zero_state_singular_scale(e_init: PauliSum) -> float:
    """``sqrt(s)``: the spectral norm of ``[E, |0><0|]`` (both singular values equal it)."""
    return nuclear_norm_zero_state(e_init).value / 2.0


# ----------------------------------------------------------------------------
# reduced-support Hermitian operator


def _reduce(op: PauliSum) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """Compress ``op`` onto its support qubits; returns integer x, z masks."""
    support = op.support
    xr = np.zeros(op.n_terms, dtype=np.int64)
    zr = np.zeros(op.n_terms, dtype=np.int64)
    for k, q in enumerate(support):
        xr |= _get_bits(op.x, q) << k
        zr |= _get_bits(op.z, q) << k
    return xr, zr, op.coeffs.copy(), len(support)


def _fwht(a: np.ndarray) -> np.ndarray:
    """Unnormalised Walsh-Hadamard transform along the last axis."""
    a = a.copy()
    n = a.shape[-1]
    h = 1
    while h < n:
        a = a.reshape(*a.shape[:-1], n // (2 * h), 2, h)
        lo = a[..., 0, :].copy()
        hi = a[..., 1, :]
        a[..., 0, :] += hi
        a[..., 1, :] = lo - hi
        a = a.reshape(*a.shape[:-3], n)
        h *= 2
    return a


class ReducedPauliOperator:
    """Matrix-free ``sum_k c_k sigma(x_k, z_k)`` on ``n`` qubits.

    ``(sigma(x, z) v)[d] = (-i)^|x&z| (-1)^|z&d| v[d ^ x]``; terms sharing
    ``x`` collapse into one diagonal ``D_x`` so a product costs
    ``#distinct(x) * 2^n``.
    """

    def __init__(self, xr: np.ndarray, zr: np.ndarray, coeffs: np.ndarray, n: int):
        self.n = n
        self.dim = 1 << n
        self.idx = np.arange(self.dim, dtype=np.int64)
        order = np.lexsort((zr, xr))
        xr, zr, coeffs = xr[order], zr[order], coeffs[order]
        phase = np.array([1, -1j, -1, 1j])[np.bitwise_count(xr & zr) % 4]
        coeffs = coeffs * phase
        starts = np.flatnonzero(np.r_[True, xr[1:] != xr[:-1]]) if len(xr) else np.array([], dtype=int)
        bounds = np.r_[starts, len(xr)]
        self.groups = [(int(xr[a]), zr[a:b], coeffs[a:b]) for a, b in zip(bounds[:-1], bounds[1:])]
        self.stored = len(self.groups) * self.dim <= _DIAG_BUDGET
        self.diags = [self._diag(z, c) for _, z, c in self.groups] if self.stored else None

    def _diag(self, z: np.ndarray, c: np.ndarray) -> np.ndarray:
        if len(z) > self.n:
            a = np.zeros(self.dim, dtype=complex)
            np.add.at(a, z, c)
            return _fwht(a)
        d = np.zeros(self.dim, dtype=complex)
        for zk, ck in zip(z, c):
            par = np.bitwise_count(self.idx & zk) & 1
            d += ck * (1 - 2 * par.astype(np.int8))
        return d

    def matvec(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v).reshape(-1)
        out = np.zeros(self.dim, dtype=complex)
        for k, (x, z, c) in enumerate(self.groups):
            d = self.diags[k] if self.stored else self._diag(z, c)
            out += d * (v if x == 0 else v[self.idx ^ x])
        return out

    def dense(self) -> np.ndarray:
        m = np.zeros((self.dim, self.dim), dtype=complex)
        for k, (x, z, c) in enumerate(self.groups):
            d = self.diags[k] if self.stored else self._diag(z, c)
            m[self.idx, self.idx ^ x] += d
        return m


def _start_vector(dim: int) -> np.ndarray:
    v = np.random.default_rng(20240917).standard_normal(dim) + 0.5
    return v / np.linalg.norm(v)


def _extreme_eigenpair(lin, x0: np.ndarray, largest: bool, tol: float, maxiter: int):
    with warnings.catch_warnings():
        # non-convergence is detected from the residual below
        warnings.simplefilter("ignore", UserWarning)
        vals, vecs = spla.lobpcg(lin, x0, tol=tol, maxiter=maxiter, largest=largest)
    v = vecs[:, 0] / np.linalg.norm(vecs[:, 0])
    return float(vals[0]), float(np.linalg.norm(lin.matvec(v) - vals[0] * v))


def hermitian_spectral_norm(op: PauliSum, tol: float = DEFAULT_TOL, dense_max: int = DENSE_MAX,
                            maxiter: int | None = None) -> float | None:
    """Spectral norm of a Hermitian Pauli sum on its support.

    Dense diagonalisation up to ``dense_max`` support qubits, LOBPCG for
    both spectral ends above.  LOBPCG draws no random numbers, so repeated
    calls agree bit for bit; ARPACK restarts from a process-wide seed when
    the Krylov space closes early, which is common for short Pauli sums.
    Returns None if the residual misses ``tol`` times the one-norm.
    """
    if op.n_terms == 0:
        return 0.0
    xr, zr, c, n = _reduce(op)
    red = ReducedPauliOperator(xr, zr, c, n)
    if n <= dense_max:
        ev = np.linalg.eigvalsh(red.dense())
        return float(np.max(np.abs(ev)))
    lin = spla.LinearOperator((red.dim, red.dim), matvec=red.matvec, dtype=complex)
    if maxiter is None:
        maxiter = max(200, min(10 * red.dim, 5000))
    x0 = _start_vector(red.dim).astype(complex)[:, None]
    resid_tol = tol * float(np.abs(c).sum())
    top, r_top = _extreme_eigenpair(lin, x0, True, resid_tol, maxiter)
    bottom, r_bottom = _extreme_eigenpair(lin, x0, False, resid_tol, maxiter)
    if max(r_top, r_bottom) > resid_tol:
        return None
    return max(abs(top), abs(bottom)) * (1.0 + tol)


def spectral_norm_commutator(e_final: PauliSum, obs: Observable, tol: float = DEFAULT_TOL,
                             dense_max: int = DENSE_MAX, comm: PauliSum | None = None) -> BoundValue | None:
    """``||[E_F, A]||_inf`` computed on the commutator's support qubits.

    Iterative results are inflated by ``(1 + tol)`` so that a converged Ritz
    value stays an upper bound at the requested tolerance.  Returns None on
    non-convergence; callers fall back to the one-norm bound.
    """
    if comm is None:
        comm = commutator(e_final, obs.op)
    if comm.n_terms == 0:
        return BoundValue(0.0, EXACT_SPECTRAL, 0)
    herm = comm * 1j
    val = hermitian_spectral_norm(herm, tol=tol, dense_max=dense_max)
    if val is None:
        return None
    return BoundValue(val, EXACT_SPECTRAL, len(comm.support))


def pauli_one_norm_fallback(e_final: PauliSum, obs: Observable, comm: PauliSum | None = None) -> BoundValue:
    if comm is None:
        comm = commutator(e_final, obs.op)
    return BoundValue(min(obs.trivial_bound, comm.one_norm()), FALLBACK, len(comm.support))


def forward_commutator_bound(e_final: PauliSum, obs: Observable, n_max: int = DEFAULT_N_MAX,
                             tol: float = DEFAULT_TOL, dense_max: int = DENSE_MAX) -> BoundValue:
    """Exact spectral norm when the commutator support is at most ``n_max``,
    the one-norm fallback otherwise; capped at ``2 ||A||``."""
    comm = commutator(e_final, obs.op)
    if comm.n_terms == 0:
        return BoundValue(0.0, EXACT_SPECTRAL, 0)
    n = len(comm.support)
    bound = None
    if n <= n_max:
        bound = spectral_norm_commutator(e_final, obs, tol, dense_max, comm=comm)
    if bound is None:
        bound = pauli_one_norm_fallback(e_final, obs, comm=comm)
    return bound.capped(obs.trivial_bound)
