"""Schmidt-rank classification of states and sets, plus local-operator witnesses."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .states import StateSet
from .tensor import (DEFAULT_TOL, Bipartition, StateVector, all_bipartitions,
                     inner_product, numeric_rank, reshape)

PRODUCT = "product"
ENTANGLED = "entangled"
GENUINE = "genuinely_entangled"


class DegenerateOperatorError(ValueError):
    """A local operator annihilated the state."""


def rank_profile(a: StateVector, tol: float = DEFAULT_TOL) -> dict[Bipartition, int]:
    return {cut: numeric_rank(reshape(a, cut), tol) for cut in all_bipartitions(a.N)}


def classify(a: StateVector, tol: float = DEFAULT_TOL) -> str:
    ranks = rank_profile(a, tol).values()
    if all(r == 1 for r in ranks):
        return PRODUCT
    if all(r >= 2 for r in ranks):
        return GENUINE
    return ENTANGLED


def _labelled_states(ss: StateSet):
    for fam in ss.families:
        for s, psi in enumerate(fam.states):
            yield {"family": fam.name, "representative": list(fam.representative), "s": s}, psi


def _gram(states: list[StateVector]) -> np.ndarray:
    """Normalised Gram matrix |<a|b>| / (|a||b|)."""
    if not states:
        return np.zeros((0, 0))
    d, N = states[0].d, states[0].N
    if d ** N <= 1 << 16:
        V = np.array([s.to_dense() for s in states])
        V /= np.linalg.norm(V, axis=1)[:, None]
        return np.abs(V.conj() @ V.T)
    n = len(states)
    G = np.eye(n)
    norms = [s.norm() for s in states]
    for i, j in itertools.combinations(range(n), 2):
        G[i, j] = G[j, i] = abs(inner_product(states[i], states[j])) / (norms[i] * norms[j])
    return G


def orthogonality(ss: StateSet, tol: float = DEFAULT_TOL) -> tuple[float, list]:
    """Worst normalised overlap between distinct states, and the failing pairs."""
    labels, states = zip(*_labelled_states(ss)) if len(ss) else ((), ())
    G = _gram(list(states))
    if len(states) < 2:
        return 0.0, []
    off = G - np.diag(np.diag(G))
    bad = [[labels[i], labels[j]] for i, j in zip(*np.nonzero(np.triu(off) >= tol))]
    return float(off.max()), bad


def _report(check, ok, worst, witnesses, tol, **extra):
    out = {"check": check, "pass": bool(ok), "worst_residual": worst, "tolerance": tol,
           "witnesses": witnesses}
    out.update(extra)
    return out


def verify_oes(ss: StateSet, tol: float = DEFAULT_TOL) -> dict:
    """Pairwise orthogonal and no product state."""
    worst, bad_pairs = orthogonality(ss, tol)
    witnesses = [{"kind": "overlap", "pair": p} for p in bad_pairs]
    verdicts = {}
    for label, psi in _labelled_states(ss):
        v = classify(psi, tol)
        verdicts[v] = verdicts.get(v, 0) + 1
        if v == PRODUCT:
            witnesses.append({"kind": "product", "state": label})
    return _report("oes", not witnesses, worst, witnesses, tol,
                   size=len(ss), verdict_counts=dict(sorted(verdicts.items())))


def verify_oges(ss: StateSet, tol: float = DEFAULT_TOL) -> dict:
    """OES check plus genuine entanglement of every state."""
    base = verify_oes(ss, tol)
    witnesses = list(base["witnesses"])
    for label, psi in _labelled_states(ss):
        prof = rank_profile(psi, tol)
        cuts = [c.label() for c, r in prof.items() if r < 2]
        if cuts and classify(psi, tol) != PRODUCT:
            witnesses.append({"kind": "separable_cut", "state": label, "cuts": cuts})
    return _report("oges", not witnesses, base["worst_residual"], witnesses, tol,
                   size=base["size"], verdict_counts=base["verdict_counts"])


@dataclass(frozen=True)
class LocalOperator:
    """Product operator P_1 x ... x P_N, one d x d matrix per party."""

    mats: tuple

    def __post_init__(self):
        mats = tuple(np.array(m, dtype=complex) for m in self.mats)
        for m in mats:
            if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape != mats[0].shape:
                raise ValueError("local operators must be square and share one dimension")
        object.__setattr__(self, "mats", mats)

    @property
    def N(self) -> int:
        return len(self.mats)

    @property
    def d(self) -> int:
        return self.mats[0].shape[0]

    @classmethod
    def identity(cls, d: int, N: int) -> "LocalOperator":
        return cls(tuple(np.eye(d) for _ in range(N)))


def apply_local(a: StateVector, op: LocalOperator) -> StateVector:
    if (op.d, op.N) != (a.d, a.N):
        raise ValueError(f"operator shape (d={op.d}, N={op.N}) does not match state (d={a.d}, N={a.N})")
    cols = [[[(r, m[r, c]) for r in np.flatnonzero(m[:, c])] for c in range(a.d)] for m in op.mats]
    out: dict = {}
    for idx, amp in a.terms.items():
        for picks in itertools.product(*(cols[k][v] for k, v in enumerate(idx))):
            val = amp
            for _, x in picks:
                val *= x
            key = tuple(int(r) for r, _ in picks)
            out[key] = out.get(key, 0) + val
    out = {k: v for k, v in out.items() if v != 0}
    if not out or max(abs(v) for v in out.values()) <= 1e-14 * max(abs(v) for v in a.terms.values()):
        raise DegenerateOperatorError("local operator maps the state to zero")
    return StateVector(a.d, a.N, out)


def equal_up_to_phase(a: StateVector, b: StateVector, tol: float = DEFAULT_TOL) -> bool:
    """True when a = c b for a nonzero complex c, within ``tol`` relative to |a|."""
    if (a.d, a.N) != (b.d, b.N):
        return False
    c = inner_product(b, a) / inner_product(b, b)
    if abs(c) == 0:
        return False
    keys = set(a.terms) | set(b.terms)
    resid = np.sqrt(sum(abs(a[k] - c * b[k]) ** 2 for k in keys))
    return bool(resid <= tol * a.norm())


# -- witnesses -------------------------------------------------------------

def _w(k: int, power: int) -> complex:
    return np.exp(2j * np.pi * (power % k) / k)


def _relabel(d: int, i: int, phase: complex) -> np.ndarray:
    """Unitary with |0> -> |0>, |i> -> phase |1>, swapping |1> into |i>."""
    P = np.eye(d, dtype=complex)
    if i != 1:
        P[:, [1, i]] = P[:, [i, 1]]
    P[:, i] = 0
    P[1, i] = phase
    return P


def w3_witness(d: int, i: int, s: int) -> LocalOperator:
    """Unitaries taking the s-th state of S(0,0,i) to |W> on three qubits."""
    return LocalOperator((_relabel(d, i, _w(3, -2 * s)),
                          _relabel(d, i, _w(3, -s)),
                          _relabel(d, i, 1)))


def w4_witness(d: int, i: int, j: int, s: int) -> LocalOperator:
    """Product operator taking the s-th state of S(0,0,i,j) to |W> on four qubits.

    Each factor is |0><0| + |0><j| + phase |1><i|, so it is not invertible.
    """
    def factor(phase):
        P = np.zeros((d, d), dtype=complex)
        P[0, 0] = 1
        P[0, j] = 1
        P[1, i] = phase
        return P
    return LocalOperator((factor(_w(4, -2 * s)), factor(_w(4, -s)),
                          factor(1), factor(_w(4, -3 * s))))
