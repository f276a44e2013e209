"""Dense complex linear-algebra kernel shared by every other module.

Basis convention: a multi-index ``(i_1, ..., i_N)`` is flattened
lexicographically, party 1 most significant.  Sub-indices for a subset of
parties use the same rule restricted to that subset in ascending party order.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

DEFAULT_TOL = 1e-9

MultiIndex = tuple


class ShapeError(ValueError):
    """Operands have incompatible or empty shapes."""


class StateVector:
    """Sparse unnormalised ket over the product basis of (C^d)^N."""

    __slots__ = ("d", "N", "_terms")

    def __init__(self, d: int, N: int, terms: Mapping[Sequence[int], complex]):
        if d < 2 or N < 2:
            raise ValueError(f"need d >= 2 and N >= 2, got d={d}, N={N}")
        clean = {}
        for idx, amp in terms.items():
            idx = tuple(int(v) for v in idx)
            if len(idx) != N or any(v < 0 or v >= d for v in idx):
                raise ValueError(f"index {idx} is not in Z_{d}^{N}")
            amp = complex(amp)
            if not (np.isfinite(amp.real) and np.isfinite(amp.imag)):
                raise ValueError(f"non-finite amplitude at {idx}")
            if amp != 0:
                clean[idx] = clean.get(idx, 0) + amp
        clean = {k: v for k, v in clean.items() if v != 0}
        if not clean:
            raise ValueError("state has no nonzero amplitude")
        self.d = d
        self.N = N
        self._terms = MappingProxyType(dict(sorted(clean.items())))

    @property
    def terms(self) -> Mapping[tuple, complex]:
        return self._terms

    def __getitem__(self, idx) -> complex:
        return self._terms.get(tuple(idx), 0j)

    def __len__(self):
        return len(self._terms)

    def __eq__(self, other):
        if not isinstance(other, StateVector):
            return NotImplemented
        return (self.d, self.N) == (other.d, other.N) and dict(self._terms) == dict(other._terms)

    def __hash__(self):
        return hash((self.d, self.N, tuple(self._terms.items())))

    def __repr__(self):
        body = " + ".join(f"({a:g})|{''.join(map(str, k))}>" for k, a in self._terms.items())
        return f"StateVector(d={self.d}, N={self.N}, {body})"

    def scaled(self, c: complex) -> "StateVector":
        return StateVector(self.d, self.N, {k: c * v for k, v in self._terms.items()})

    def norm(self) -> float:
        return float(np.sqrt(sum(abs(v) ** 2 for v in self._terms.values())))

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.d,) * self.N, dtype=complex)
        for idx, amp in self._terms.items():
            out[idx] = amp
        return out.reshape(-1)

    @classmethod
    def basis(cls, d: int, idx: Sequence[int]) -> "StateVector":
        return cls(d, len(idx), {tuple(idx): 1})

    @classmethod
    def from_dense(cls, d: int, N: int, vec, atol: float = 0.0) -> "StateVector":
        arr = np.asarray(vec, dtype=complex).reshape((d,) * N)
        terms = {tuple(int(v) for v in idx): arr[idx]
                 for idx in zip(*np.nonzero(np.abs(arr) > atol))}
        return cls(d, N, terms)


def ghz(d: int, N: int) -> StateVector:
    return StateVector(d, N, {(i,) * N: 1 for i in range(d)})


def w_state(N: int, d: int = 2) -> StateVector:
    terms = {}
    for k in range(N):
        idx = [0] * N
        idx[k] = 1
        terms[tuple(idx)] = 1
    return StateVector(d, N, terms)


@dataclass(frozen=True)
class Bipartition:
    """A cut of parties {1..N} into two nonempty sides (1-based labels)."""

    left: tuple
    right: tuple

    def __post_init__(self):
        left = tuple(sorted(set(self.left)))
        right = tuple(sorted(set(self.right)))
        if not left or not right:
            raise ValueError("both sides of a bipartition must be nonempty")
        if set(left) & set(right):
            raise ValueError("bipartition sides overlap")
        if set(left) | set(right) != set(range(1, len(left) + len(right) + 1)):
            raise ValueError("bipartition sides must cover parties 1..N")
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)

    @classmethod
    def of(cls, left: Iterable[int], N: int) -> "Bipartition":
        left = set(left)
        return cls(tuple(left), tuple(p for p in range(1, N + 1) if p not in left))

    @property
    def N(self) -> int:
        return len(self.left) + len(self.right)

    def flip(self) -> "Bipartition":
        return Bipartition(self.right, self.left)

    def label(self) -> str:
        return "".join(map(str, self.left)) + "|" + "".join(map(str, self.right))


def all_bipartitions(N: int) -> list[Bipartition]:
    """The 2^(N-1) - 1 unordered cuts; party 1 is always on the left."""
    cuts = []
    others = list(range(2, N + 1))
    for size in range(0, N - 1):
        for extra in itertools.combinations(others, size):
            cuts.append(Bipartition.of((1,) + extra, N))
    return cuts


def sub_index(idx: Sequence[int], parties: Sequence[int], d: int) -> int:
    """Flatten the entries of ``idx`` at the given 1-based parties."""
    out = 0
    for p in parties:
        out = out * d + idx[p - 1]
    return out


def inner_product(a: StateVector, b: StateVector) -> complex:
    """<a|b>, conjugate-linear in the first argument."""
    if (a.d, a.N) != (b.d, b.N):
        raise ShapeError(f"dimension mismatch: (d={a.d}, N={a.N}) vs (d={b.d}, N={b.N})")
    small, large = (a, b) if len(a) <= len(b) else (b, a)
    total = 0j
    for idx in small.terms:
        if idx in large.terms:
            total += a.terms[idx].conjugate() * b.terms[idx]
    return total


def reshape(a: StateVector, cut: Bipartition) -> np.ndarray:
    """Amplitude matrix with rows over ``cut.left`` and columns over ``cut.right``."""
    if cut.N != a.N:
        raise ShapeError(f"cut is for N={cut.N}, state has N={a.N}")
    M = np.zeros((a.d ** len(cut.left), a.d ** len(cut.right)), dtype=complex)
    for idx, amp in a.terms.items():
        M[sub_index(idx, cut.left, a.d), sub_index(idx, cut.right, a.d)] = amp
    return M


def numeric_rank(M, tol: float = DEFAULT_TOL) -> int:
    """Number of singular values above ``tol * max(1, sigma_max)``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    M = np.asarray(M)
    if M.size == 0:
        raise ShapeError("empty matrix has no rank")
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > tol * max(1.0, s[0])))


def real_nullspace(A, tol: float = DEFAULT_TOL) -> list[np.ndarray]:
    """Orthonormal basis of ker(A) for a real matrix, via SVD.

    A direction is in the kernel when its singular value is at most
    ``tol * sigma_max``; directions beyond the row count are always kernel.
    """
    basis, _ = _nullspace_with_spectrum(A, tol)
    return list(basis)


def _nullspace_with_spectrum(A, tol: float):
    if tol <= 0:
        raise ValueError("tol must be positive")
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ShapeError("expected a 2-d matrix")
    n = A.shape[1]
    if A.shape[0] == 0 or not np.any(A):
        return np.eye(n), np.zeros(n)
    if A.shape[0] > 2 * n:
        # tall systems: R of a QR factorisation has the same singular values
        A = np.linalg.qr(A, mode="r")
    _, s, vt = np.linalg.svd(A, full_matrices=A.shape[0] < n)
    full = np.zeros(n)
    full[: len(s)] = s
    keep = full <= tol * s[0]
    basis = vt[keep]
    # fix the sign of each vector so output is deterministic
    for row in basis:
        pivot = np.flatnonzero(np.abs(row) > 1e-12)
        if pivot.size and row[pivot[0]] < 0:
            row *= -1
    return basis, full


@dataclass(frozen=True)
class HermitianParam:
    """Real coordinates of an m x m Hermitian matrix.

    Layout: the m diagonal entries, then (re, im) of each strictly-upper
    entry in row-major order.  Total length m^2.
    """

    dim: int
    values: tuple

    def __post_init__(self):
        if len(self.values) != self.dim ** 2:
            raise ValueError(f"expected {self.dim ** 2} parameters, got {len(self.values)}")

    @classmethod
    def from_matrix(cls, E) -> "HermitianParam":
        E = np.asarray(E, dtype=complex)
        m = E.shape[0]
        if E.shape != (m, m) or not np.allclose(E, E.conj().T, rtol=0, atol=1e-12 * max(1.0, np.abs(E).max())):
            raise ValueError("matrix is not Hermitian")
        vals = [float(E[g, g].real) for g in range(m)]
        for g, h in upper_pairs(m):
            vals += [float(E[g, h].real), float(E[g, h].imag)]
        return cls(m, tuple(vals))

    @classmethod
    def identity(cls, m: int) -> "HermitianParam":
        return cls(m, tuple([1.0] * m + [0.0] * (m * (m - 1))))

    def vector(self) -> np.ndarray:
        return np.array(self.values, dtype=float)

    def matrix(self) -> np.ndarray:
        m = self.dim
        E = np.zeros((m, m), dtype=complex)
        E[np.diag_indices(m)] = self.values[:m]
        pos = m
        for g, h in upper_pairs(m):
            E[g, h] = complex(self.values[pos], self.values[pos + 1])
            E[h, g] = E[g, h].conjugate()
            pos += 2
        return E


def upper_pairs(m: int) -> list[tuple[int, int]]:
    return [(g, h) for g in range(m) for h in range(g + 1, m)]


def hermitian_coefficients(K: np.ndarray) -> np.ndarray:
    """Complex row c with sum(E * K) == c @ params for every Hermitian E.

    ``K`` is any m x m complex matrix; the result has length m^2 in the
    :class:`HermitianParam` layout.
    """
    m = K.shape[0]
    iu, ju = np.triu_indices(m, k=1)
    upper = K[iu, ju]
    lower = K[ju, iu]
    out = np.empty(m * m, dtype=complex)
    out[:m] = np.diagonal(K)
    out[m::2] = upper + lower
    out[m + 1::2] = 1j * (upper - lower)
    return out
