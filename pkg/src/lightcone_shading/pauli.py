"""Sparse Pauli operators in the symplectic (x, z) representation.

A Pauli string on ``n`` qubits is stored as two bit masks ``x`` and ``z`` and
stands for ``sigma(x, z) = (-i)**(x.z) Z**z X**x``.  With this phase
convention every ``sigma(x, z)`` is a Hermitian tensor product of the
letters I, X, Y, Z, so a sum of them with real coefficients is Hermitian.

Qubit ``q`` lives in bit ``q % 64`` of word ``q // 64``.  In string labels the
leftmost character is qubit 0.

:class:`PauliTerm` is a single scaled Pauli string backed by Python integers.
:class:`PauliSum` stores many terms as packed ``uint64`` arrays and is the
working representation for evolution; all of its arrays are read-only and
its terms are kept sorted by ``(x, z)`` with duplicates merged.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

PRUNE_TOL = 1e-14

# letter index used throughout: x + 2 z
_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}
_BITS_LETTER = {v: k for k, v in _LETTER_BITS.items()}
LETTERS = "IXYZ"


class PauliError(ValueError):
    """Raised on malformed Pauli input or mismatched qubit counts."""


def _n_words(n_qubits: int) -> int:
    return max(1, (n_qubits + 63) // 64)


def _int_to_words(value: int, n_words: int) -> np.ndarray:
    out = np.zeros(n_words, dtype=np.uint64)
    for w in range(n_words):
        out[w] = (value >> (64 * w)) & 0xFFFFFFFFFFFFFFFF
    return out


def _words_to_int(words: np.ndarray) -> int:
    value = 0
    for w, word in enumerate(words):
        value |= int(word) << (64 * w)
    return value


def _popcount_rows(a: np.ndarray) -> np.ndarray:
    return np.bitwise_count(a).sum(axis=-1, dtype=np.int64)


# ----------------------------------------------------------------------------
# single terms


@dataclass(frozen=True)
class PauliTerm:
    """A single Pauli string with a complex coefficient."""

    x: int
    z: int
    n_qubits: int
    coeff: complex = 1.0

    def __post_init__(self):
        if self.n_qubits < 1:
            raise PauliError("n_qubits must be positive")
        limit = 1 << self.n_qubits
        if not (0 <= self.x < limit and 0 <= self.z < limit):
            raise PauliError("bit masks exceed n_qubits")
        object.__setattr__(self, "coeff", complex(self.coeff))

    @classmethod
    def from_label(cls, label: str, coeff: complex = 1.0) -> "PauliTerm":
        """Dense label such as ``"XIZ"``; character ``q`` acts on qubit ``q``."""
        x = z = 0
        for q, ch in enumerate(label.upper()):
            if ch not in _LETTER_BITS:
                raise PauliError(f"invalid Pauli letter {ch!r} in {label!r}")
            bx, bz = _LETTER_BITS[ch]
            x |= bx << q
            z |= bz << q
        return cls(x, z, len(label), coeff)

    @classmethod
    def from_sparse(cls, letters: Mapping[int, str], n_qubits: int, coeff: complex = 1.0) -> "PauliTerm":
        x = z = 0
        for q, ch in letters.items():
            if not 0 <= q < n_qubits:
                raise PauliError(f"qubit {q} out of range for {n_qubits} qubits")
            ch = ch.upper()
            if ch not in _LETTER_BITS:
                raise PauliError(f"invalid Pauli letter {ch!r}")
            bx, bz = _LETTER_BITS[ch]
            x |= bx << q
            z |= bz << q
        return cls(x, z, n_qubits, coeff)

    @classmethod
    def parse(cls, text: str, n_qubits: int, coeff: complex = 1.0) -> "PauliTerm":
        """Accept either a dense label or sparse tokens like ``"X12 Y24 Z36"``."""
        text = text.strip()
        if text.upper() in ("", "I"):
            return cls(0, 0, n_qubits, coeff)
        if re.fullmatch(r"[IXYZixyz]+", text) and len(text) == n_qubits:
            return cls.from_label(text, coeff)
        letters: dict[int, str] = {}
        for tok in text.replace(",", " ").split():
            m = re.fullmatch(r"([IXYZixyz])_?(\d+)", tok)
            if not m:
                raise PauliError(f"cannot parse Pauli token {tok!r}")
            q = int(m.group(2))
            if q in letters:
                raise PauliError(f"qubit {q} repeated in {text!r}")
            letters[q] = m.group(1)
        return cls.from_sparse(letters, n_qubits, coeff)

    def letter(self, q: int) -> str:
        return _BITS_LETTER[((self.x >> q) & 1, (self.z >> q) & 1)]

    @property
    def label(self) -> str:
        return "".join(self.letter(q) for q in range(self.n_qubits))

    @property
    def support(self) -> tuple[int, ...]:
        mask = self.x | self.z
        return tuple(q for q in range(self.n_qubits) if (mask >> q) & 1)

    @property
    def weight(self) -> int:
        return (self.x | self.z).bit_count()

    def sparse_label(self) -> str:
        return " ".join(f"{self.letter(q)}{q}" for q in self.support) or "I"

    def with_coeff(self, coeff: complex) -> "PauliTerm":
        return PauliTerm(self.x, self.z, self.n_qubits, coeff)

    def __repr__(self):
        return f"PauliTerm({self.coeff:.6g} * {self.sparse_label()}, n={self.n_qubits})"


def _check_sizes(a: int, b: int):
    if a != b:
        raise PauliError(f"qubit count mismatch: {a} vs {b}")


def multiply(p: PauliTerm, q: PauliTerm) -> PauliTerm:
    """Pauli group product ``p * q`` including the phase."""
    _check_sizes(p.n_qubits, q.n_qubits)
    x3, z3 = p.x ^ q.x, p.z ^ q.z
    k = ((p.x & p.z).bit_count() + (q.x & q.z).bit_count()
         + 2 * (p.x & q.z).bit_count() - (x3 & z3).bit_count()) % 4
    phase = (1, -1j, -1, 1j)[k]  # (-i)**k
    return PauliTerm(x3, z3, p.n_qubits, phase * p.coeff * q.coeff)


def commutes(p: PauliTerm, q: PauliTerm) -> bool:
    _check_sizes(p.n_qubits, q.n_qubits)
    return ((p.x & q.z).bit_count() + (p.z & q.x).bit_count()) % 2 == 0


# ----------------------------------------------------------------------------
# sums


class PauliSum:
    """Immutable sparse linear combination of Pauli strings."""

    __slots__ = ("n_qubits", "x", "z", "coeffs")

    def __init__(self, n_qubits: int, x: np.ndarray, z: np.ndarray, coeffs: np.ndarray,
                 *, canonical: bool = False, prune: float = PRUNE_TOL):
        if n_qubits < 1:
            raise PauliError("n_qubits must be positive")
        nw = _n_words(n_qubits)
        x = np.asarray(x, dtype=np.uint64).reshape(-1, nw)
        z = np.asarray(z, dtype=np.uint64).reshape(-1, nw)
        coeffs = np.asarray(coeffs, dtype=np.complex128).reshape(-1)
        if not (len(x) == len(z) == len(coeffs)):
            raise PauliError("x, z and coeffs must have equal length")
        if not canonical:
            x, z, coeffs = _canonicalize(x, z, coeffs, prune)
        for arr in (x, z, coeffs):
            arr.setflags(write=False)
        self.n_qubits = n_qubits
        self.x = x
        self.z = z
        self.coeffs = coeffs

    # -- construction ------------------------------------------------------
    @classmethod
    def zero(cls, n_qubits: int) -> "PauliSum":
        nw = _n_words(n_qubits)
        return cls(n_qubits, np.zeros((0, nw), np.uint64), np.zeros((0, nw), np.uint64),
                   np.zeros(0, complex), canonical=True)

    @classmethod
    def from_terms(cls, terms: Iterable[PauliTerm], n_qubits: int | None = None) -> "PauliSum":
        terms = list(terms)
        if n_qubits is None:
            if not terms:
                raise PauliError("n_qubits required for an empty sum")
            n_qubits = terms[0].n_qubits
        for t in terms:
            _check_sizes(t.n_qubits, n_qubits)
        nw = _n_words(n_qubits)
        x = np.array([_int_to_words(t.x, nw) for t in terms], dtype=np.uint64).reshape(-1, nw)
        z = np.array([_int_to_words(t.z, nw) for t in terms], dtype=np.uint64).reshape(-1, nw)
        c = np.array([t.coeff for t in terms], dtype=complex)
        return cls(n_qubits, x, z, c)

    @classmethod
    def from_term(cls, term: PauliTerm) -> "PauliSum":
        return cls.from_terms([term])

    @classmethod
    def from_labels(cls, items: Mapping[str, complex] | Iterable[tuple[str, complex]]) -> "PauliSum":
        pairs = list(items.items()) if isinstance(items, Mapping) else list(items)
        return cls.from_terms([PauliTerm.from_label(lab, c) for lab, c in pairs])

    # -- basic properties --------------------------------------------------
    def __len__(self):
        return len(self.coeffs)

    @property
    def n_terms(self) -> int:
        return len(self.coeffs)

    @property
    def size_b(self) -> int:
        """Boolean-array size statistic ``2 * n_qubits * n_terms``."""
        return 2 * self.n_qubits * self.n_terms

    def support_mask(self) -> int:
        if not self.n_terms:
            return 0
        m = np.bitwise_or.reduce(self.x | self.z, axis=0)
        return _words_to_int(m)

    @property
    def support(self) -> tuple[int, ...]:
        m = self.support_mask()
        return tuple(q for q in range(self.n_qubits) if (m >> q) & 1)

    @property
    def weight(self) -> int:
        """Largest number of non-identity sites over the terms."""
        if not self.n_terms:
            return 0
        return int(_popcount_rows(self.x | self.z).max())

    def one_norm(self) -> float:
        return float(np.abs(self.coeffs).sum())

    def two_norm_sq(self) -> float:
        return float(np.sum(np.abs(self.coeffs) ** 2))

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(self.coeffs.imag) <= atol))

    def terms(self) -> list[PauliTerm]:
        return [PauliTerm(_words_to_int(self.x[k]), _words_to_int(self.z[k]), self.n_qubits, self.coeffs[k])
                for k in range(self.n_terms)]

    def to_dict(self) -> dict[str, complex]:
        return {t.sparse_label(): t.coeff for t in self.terms()}

    def __repr__(self):
        head = ", ".join(f"{t.coeff:.4g}*{t.sparse_label()}" for t in self.terms()[:6])
        more = "" if self.n_terms <= 6 else f", ... ({self.n_terms} terms)"
        return f"PauliSum(n={self.n_qubits}: {head}{more})"

    # -- arithmetic --------------------------------------------------------
    def __add__(self, other: "PauliSum") -> "PauliSum":
        _check_sizes(self.n_qubits, other.n_qubits)
        return PauliSum(self.n_qubits, np.concatenate([self.x, other.x]), np.concatenate([self.z, other.z]),
                        np.concatenate([self.coeffs, other.coeffs]))

    def __sub__(self, other: "PauliSum") -> "PauliSum":
        return self + other * -1.0

    def __mul__(self, scalar: complex) -> "PauliSum":
        return PauliSum(self.n_qubits, self.x, self.z, self.coeffs * scalar)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, PauliSum):
            return NotImplemented
        return (self.n_qubits == other.n_qubits and self.n_terms == other.n_terms
                and np.array_equal(self.x, other.x) and np.array_equal(self.z, other.z)
                and np.array_equal(self.coeffs, other.coeffs))

    __hash__ = None

    def allclose(self, other: "PauliSum", atol: float = 1e-12) -> bool:
        diff = self - other
        return bool(np.all(np.abs(diff.coeffs) <= atol))

    def anticommuting_mask(self, p: PauliTerm) -> np.ndarray:
        """Boolean mask of terms that anticommute with the Pauli string ``p``."""
        _check_sizes(self.n_qubits, p.n_qubits)
        nw = _n_words(self.n_qubits)
        px, pz = _int_to_words(p.x, nw), _int_to_words(p.z, nw)
        par = _popcount_rows(self.x & pz) + _popcount_rows(self.z & px)
        return (par & 1).astype(bool)

    def left_multiply(self, p: PauliTerm) -> "PauliSum":
        """Return ``p * self`` (term-wise Pauli products, phases included)."""
        _check_sizes(self.n_qubits, p.n_qubits)
        x, z, c = _left_mul_arrays(self.x, self.z, self.coeffs, p, self.n_qubits)
        return PauliSum(self.n_qubits, x, z, c)

    def right_multiply(self, p: PauliTerm) -> "PauliSum":
        """Return ``self * p``."""
        _check_sizes(self.n_qubits, p.n_qubits)
        nw = _n_words(self.n_qubits)
        px, pz = _int_to_words(p.x, nw), _int_to_words(p.z, nw)
        x3, z3 = self.x ^ px, self.z ^ pz
        k = (_popcount_rows(self.x & self.z) + (p.x & p.z).bit_count()
             + 2 * _popcount_rows(self.x & pz) - _popcount_rows(x3 & z3)) % 4
        return PauliSum(self.n_qubits, x3, z3, self.coeffs * _MINUS_I_POW[k] * p.coeff)

    def compose(self, other: "PauliSum") -> "PauliSum":
        """Operator product ``self @ other``."""
        _check_sizes(self.n_qubits, other.n_qubits)
        parts = [self.right_multiply(t) for t in other.terms()]
        return _concat(self.n_qubits, parts)

    __matmul__ = compose

    def prune(self, tol: float = PRUNE_TOL) -> "PauliSum":
        keep = np.abs(self.coeffs) >= tol
        if keep.all():
            return self
        return PauliSum(self.n_qubits, self.x[keep], self.z[keep], self.coeffs[keep], canonical=True)

    def restrict_to(self, keep: np.ndarray) -> "PauliSum":
        return PauliSum(self.n_qubits, self.x[keep], self.z[keep], self.coeffs[keep], canonical=True)


_MINUS_I_POW = np.array([1, -1j, -1, 1j], dtype=np.complex128)


def _left_mul_arrays(x, z, c, p: PauliTerm, n_qubits: int):
    nw = _n_words(n_qubits)
    px, pz = _int_to_words(p.x, nw), _int_to_words(p.z, nw)
    x3, z3 = x ^ px, z ^ pz
    k = ((p.x & p.z).bit_count() + _popcount_rows(x & z)
         + 2 * _popcount_rows(px & z) - _popcount_rows(x3 & z3)) % 4
    return x3, z3, c * _MINUS_I_POW[k] * p.coeff


def _canonicalize(x, z, c, prune):
    if len(c) == 0:
        return x.copy(), z.copy(), c.copy()
    keys = np.concatenate([x, z], axis=1)
    order = np.lexsort(keys.T[::-1])
    keys = keys[order]
    c = c[order]
    if len(c) > 1:
        new = np.empty(len(c), dtype=bool)
        new[0] = True
        np.any(keys[1:] != keys[:-1], axis=1, out=new[1:])
        starts = np.flatnonzero(new)
        c = np.add.reduceat(c, starts)
        keys = keys[starts]
    keep = np.abs(c) >= prune if prune > 0 else c != 0
    keys, c = keys[keep], c[keep]
    nw = x.shape[1]
    return np.ascontiguousarray(keys[:, :nw]), np.ascontiguousarray(keys[:, nw:]), np.ascontiguousarray(c)


def _concat(n_qubits: int, parts: list[PauliSum]) -> PauliSum:
    if not parts:
        return PauliSum.zero(n_qubits)
    return PauliSum(n_qubits, np.concatenate([p.x for p in parts]), np.concatenate([p.z for p in parts]),
                    np.concatenate([p.coeffs for p in parts]))


def commutator(a: PauliSum, b: PauliSum) -> PauliSum:
    """``[a, b] = ab - ba`` computed in the Pauli basis.

    Only anticommuting pairs survive, each contributing ``2 * s_a * s_b``.
    """
    _check_sizes(a.n_qubits, b.n_qubits)
    parts = []
    for t in b.terms():
        mask = a.anticommuting_mask(t)
        if mask.any():
            parts.append(a.restrict_to(mask).right_multiply(t) * 2.0)
    return _concat(a.n_qubits, parts)


def pauli_one_norm(op: PauliSum) -> float:
    """Sum of coefficient magnitudes; upper-bounds the spectral norm."""
    return op.one_norm()


# ----------------------------------------------------------------------------
# conjugation by gates

_SQ = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
_CLIFFORD_LOCAL = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2),
    "S": np.diag([1, 1j]),
    "SDG": np.diag([1, -1j]),
    "X": _SQ["X"],
    "Y": _SQ["Y"],
    "Z": _SQ["Z"],
    # two-qubit matrices in the (first, second) ordering with the first
    # qubit as the least significant bit of the 4-dim index
    "CNOT": np.array([[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex),
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
    "SWAP": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex),
}
CLIFFORD_ARITY = {"H": 1, "S": 1, "SDG": 1, "X": 1, "Y": 1, "Z": 1, "CNOT": 2, "CZ": 2, "SWAP": 2}


def _local_pauli(idx: int, arity: int) -> np.ndarray:
    """Matrix of the local Pauli with bit index ``idx`` (x0, z0, x1, z1 packed as x + 2z per qubit)."""
    mats = []
    for q in range(arity):
        code = (idx >> (2 * q)) & 3
        mats.append(_SQ[_BITS_LETTER[(code & 1, code >> 1)]])
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(m, out)  # qubit 0 least significant
    return out


def _clifford_table(u: np.ndarray, arity: int, forward: bool):
    size = 4 ** arity
    new_idx = np.zeros(size, dtype=np.int64)
    sign = np.zeros(size, dtype=np.float64)
    basis = [_local_pauli(k, arity) for k in range(size)]
    for k in range(size):
        img = u @ basis[k] @ u.conj().T if forward else u.conj().T @ basis[k] @ u
        for j in range(size):
            ov = np.trace(basis[j] @ img) / (2 ** arity)
            if abs(ov) > 0.5:
                new_idx[k] = j
                sign[k] = ov.real
                break
    return new_idx, sign


_TABLES = {(name, fwd): _clifford_table(u, CLIFFORD_ARITY[name], fwd)
           for name, u in _CLIFFORD_LOCAL.items() for fwd in (True, False)}


def _get_bits(arr: np.ndarray, q: int) -> np.ndarray:
    return ((arr[:, q // 64] >> np.uint64(q % 64)) & np.uint64(1)).astype(np.int64)


def _set_bits(arr: np.ndarray, q: int, bits: np.ndarray):
    w, b = q // 64, np.uint64(q % 64)
    col = arr[:, w] & ~(np.uint64(1) << b)
    arr[:, w] = col | (bits.astype(np.uint64) << b)


def conjugate_clifford(op: PauliSum, name: str, qubits: tuple[int, ...], direction: str = "backward") -> PauliSum:
    """Conjugate by a named Clifford gate.

    ``direction="forward"`` computes ``U P U^dag`` (Schrodinger evolution of an
    error); ``"backward"`` computes ``U^dag P U`` (Heisenberg evolution).
    """
    name = name.upper()
    if name not in CLIFFORD_ARITY:
        raise PauliError(f"unknown Clifford gate {name!r}")
    arity = CLIFFORD_ARITY[name]
    if len(qubits) != arity or len(set(qubits)) != arity:
        raise PauliError(f"{name} needs {arity} distinct qubits, got {qubits}")
    for q in qubits:
        if not 0 <= q < op.n_qubits:
            raise PauliError(f"qubit {q} out of range")
    if op.n_terms == 0:
        return op
    new_idx, sign = _TABLES[(name, direction == "forward")]
    idx = np.zeros(op.n_terms, dtype=np.int64)
    for k, q in enumerate(qubits):
        idx |= (_get_bits(op.x, q) | (_get_bits(op.z, q) << 1)) << (2 * k)
    out_idx = new_idx[idx]
    x, z = op.x.copy(), op.z.copy()
    for k, q in enumerate(qubits):
        code = out_idx >> (2 * k)
        _set_bits(x, q, code & 1)
        _set_bits(z, q, (code >> 1) & 1)
    # a Clifford permutes Pauli strings, so the result is still sorted-free of
    # duplicates; re-sort to keep the canonical order
    return PauliSum(op.n_qubits, x, z, op.coeffs * sign[idx], prune=0.0)


def _trig(theta: float) -> tuple[float, float]:
    # snap Clifford angles so that pi/2 rotations stay exactly single-term
    k = theta / (math.pi / 2)
    if abs(k - round(k)) < 1e-12:
        return [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)][int(round(k)) % 4]
    return math.cos(theta), math.sin(theta)


def conjugate_rotation(op: PauliSum, axis: PauliTerm, theta: float, direction: str = "backward") -> PauliSum:
    """Conjugate by ``R_P(theta) = exp(-i theta P / 2)``.

    Backward (``R^dag Q R``): anticommuting ``Q -> cos(theta) Q + sin(theta) iPQ``.
    Forward (``R Q R^dag``) flips the sign of ``theta``.
    """
    if axis.n_qubits != op.n_qubits:
        raise PauliError("axis and operator qubit counts differ")
    if abs(axis.coeff - 1) > 1e-12 or (axis.x | axis.z) == 0:
        raise PauliError("rotation axis must be a non-identity Pauli string with unit coefficient")
    if direction not in ("forward", "backward"):
        raise PauliError(f"direction must be 'forward' or 'backward', not {direction!r}")
    if op.n_terms == 0:
        return op
    anti = op.anticommuting_mask(axis)
    if not anti.any():
        return op
    cos_t, sin_t = _trig(theta if direction == "backward" else -theta)
    if sin_t == 0.0:
        return op if cos_t == 1.0 else PauliSum(op.n_qubits, op.x, op.z, np.where(anti, -op.coeffs, op.coeffs),
                                                canonical=True)
    moved = op.restrict_to(anti)
    px, pz, pc = _left_mul_arrays(moved.x, moved.z, moved.coeffs, axis, op.n_qubits)
    pc = pc * (1j * sin_t)
    keep_x, keep_z = op.x[~anti], op.z[~anti]
    keep_c = op.coeffs[~anti]
    if cos_t == 0.0:
        return PauliSum(op.n_qubits, np.concatenate([keep_x, px]), np.concatenate([keep_z, pz]),
                        np.concatenate([keep_c, pc]))
    return PauliSum(op.n_qubits, np.concatenate([keep_x, moved.x, px]), np.concatenate([keep_z, moved.z, pz]),
                    np.concatenate([keep_c, moved.coeffs * cos_t, pc]))


def letter_index(letter: str) -> int:
    """Index of a letter in the ``IXYZ`` ordering used by transfer matrices."""
    return LETTERS.index(letter.upper())


def site_letters(op: PauliSum, q: int) -> np.ndarray:
    """Per-term ``IXYZ`` index of the letter on qubit ``q``."""
    xb, zb = _get_bits(op.x, q), _get_bits(op.z, q)
    # (x, z): I=(0,0) X=(1,0) Y=(1,1) Z=(0,1)
    return np.where(zb == 0, xb, 3 - xb)
