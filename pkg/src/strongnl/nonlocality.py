"""Triviality of orthogonality-preserving measurements.

Two independent routes:

* numeric: every POVM element E on the measuring group must satisfy
  <psi| I x E |phi> = 0 for all distinct states.  These are real linear
  equations in the m^2 real coordinates of a Hermitian E; the measurement is
  forced to be trivial iff the solution space is span{I}.
* symbolic: a fixpoint of two deduction rules on the entries of E (a zeroing
  rule between two families and a diagonal-equality rule inside one family),
  producing an ordered proof log.
"""
from __future__ import annotations

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .states import StateFamily, StateSet
from .tensor import DEFAULT_TOL, Bipartition, HermitianParam, _nullspace_with_spectrum, reshape

GAP = 10.0


class IndeterminateError(RuntimeError):
    """Null-space dimension is numerically ambiguous at the given tolerance."""


class PreconditionError(ValueError):
    """A deduction rule was applied outside its hypotheses."""


# -- measurement groups ----------------------------------------------------

@dataclass(frozen=True)
class MeasurementGroup:
    """Parties (1-based) that measure jointly; the rest are left untouched."""

    parties: tuple
    N: int

    def __post_init__(self):
        parties = tuple(sorted(set(int(p) for p in self.parties)))
        if not parties or len(parties) >= self.N or parties[0] < 1 or parties[-1] > self.N:
            raise ValueError(f"group {parties} must be a nonempty proper subset of 1..{self.N}")
        object.__setattr__(self, "parties", parties)

    @classmethod
    def all_but(cls, i: int, N: int) -> "MeasurementGroup":
        return cls(tuple(p for p in range(1, N + 1) if p != i), N)

    @property
    def complement(self) -> tuple:
        return tuple(p for p in range(1, self.N + 1) if p not in self.parties)

    @property
    def cut_party(self) -> int | None:
        """The single unmeasured party, when the group is all-but-one."""
        comp = self.complement
        return comp[0] if len(comp) == 1 else None

    def label(self) -> str:
        return "{" + ",".join(map(str, self.parties)) + "}"


def default_groups(N: int) -> list[MeasurementGroup]:
    return [MeasurementGroup.all_but(i, N) for i in range(1, N + 1)]


def all_groups(N: int) -> list[MeasurementGroup]:
    return [MeasurementGroup(c, N) for r in range(1, N)
            for c in itertools.combinations(range(1, N + 1), r)]


# -- numeric oracle --------------------------------------------------------

@dataclass(frozen=True)
class ConstraintSystem:
    group: MeasurementGroup
    m: int
    rows: np.ndarray
    pairs: tuple = field(repr=False)

    @property
    def n_params(self) -> int:
        return self.m * self.m


def assemble_constraints(ss: StateSet, group: MeasurementGroup) -> ConstraintSystem:
    """Real rows (re, im) of <psi| I x E |phi> for every unordered pair of states.

    The reversed ordering of a pair gives the complex conjugate functional
    on Hermitian E, so it adds no information and is not stored.
    """
    if group.N != ss.N:
        raise ValueError(f"group is for N={group.N}, set has N={ss.N}")
    states = ss.states
    if not states:
        raise ValueError("empty state set")
    m = ss.d ** len(group.parties)
    cut = Bipartition(group.complement, group.parties)
    mats = np.array([reshape(s, cut) for s in states])
    n = len(states)
    iu, ju = np.triu_indices(n, k=1)
    if len(iu) == 0:
        return ConstraintSystem(group, m, np.zeros((0, m * m)), ())
    # K[p] = Psi_i^dagger Phi_j, so <psi| I x E |phi> = sum(E * K[p])
    K = np.einsum("pcg,pch->pgh", mats[iu].conj(), mats[ju])
    coeff = np.empty((len(iu), m * m), dtype=complex)
    tu, tv = np.triu_indices(m, k=1)
    coeff[:, :m] = np.diagonal(K, axis1=1, axis2=2)
    upper, lower = K[:, tu, tv], K[:, tv, tu]
    coeff[:, m::2] = upper + lower
    coeff[:, m + 1::2] = 1j * (upper - lower)
    rows = np.empty((2 * len(iu), m * m))
    rows[0::2] = coeff.real
    rows[1::2] = coeff.imag
    return ConstraintSystem(group, m, rows, tuple(zip(iu.tolist(), ju.tolist())))


@dataclass(frozen=True)
class TrivialityResult:
    group: MeasurementGroup
    trivial: bool
    null_dim: int
    witness: HermitianParam | None
    smallest_kept: float
    largest_discarded: float

    def to_dict(self) -> dict:
        out = {"group": list(self.group.parties), "trivial": self.trivial,
               "null_dim": self.null_dim, "smallest_kept_sv": self.smallest_kept,
               "largest_null_sv": self.largest_discarded}
        if self.witness is not None:
            out["witness"] = [[[float(z.real), float(z.imag)] for z in row]
                              for row in self.witness.matrix()]
        return out


def triviality_check(ss: StateSet, group: MeasurementGroup,
                     tol: float = DEFAULT_TOL) -> TrivialityResult:
    """Decide whether every Hermitian solution of the constraints is a multiple of I."""
    cs = assemble_constraints(ss, group)
    basis, spectrum = _nullspace_with_spectrum(cs.rows, tol)
    smax = spectrum.max() if spectrum.size else 0.0
    thr = tol * smax
    kept = spectrum[spectrum > thr]
    dropped = spectrum[spectrum <= thr]
    smallest_kept = float(kept.min()) if kept.size else float("inf")
    largest_dropped = float(dropped.max()) if dropped.size else 0.0
    if smax > 0 and np.any((spectrum > thr / GAP) & (spectrum < thr * GAP)):
        raise IndeterminateError(
            f"group {group.label()}: singular value within {GAP:g}x of threshold {thr:.3e} "
            f"(smallest kept {smallest_kept:.3e}, largest null {largest_dropped:.3e})")
    ident = HermitianParam.identity(cs.m).vector()
    ident /= np.linalg.norm(ident)
    dim = len(basis)
    if dim == 0 or np.linalg.norm(basis @ ident) < 1 - 1e-6:
        raise ValueError(f"group {group.label()}: identity violates the constraints; "
                         "the states are not mutually orthogonal")
    witness = None
    if dim > 1:
        residual = basis - np.outer(basis @ ident, ident)
        best = residual[np.argmax(np.linalg.norm(residual, axis=1))]
        best = best / np.linalg.norm(best)
        witness = HermitianParam(cs.m, tuple(float(v) for v in best))
    return TrivialityResult(group, dim == 1, dim, witness, smallest_kept, largest_dropped)


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("STRONGNL_THREADS", "1")))
    except ValueError:
        return 1


def verify_strongest(ss: StateSet, tol: float = DEFAULT_TOL, exhaustive: bool = False) -> dict:
    """Triviality for every all-but-one group, or for every proper subset if exhaustive."""
    groups = all_groups(ss.N) if exhaustive else default_groups(ss.N)
    workers = min(_workers(), len(groups))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda g: triviality_check(ss, g, tol), groups))
    else:
        results = [triviality_check(ss, g, tol) for g in groups]
    bad = [r for r in results if not r.trivial]
    return {
        "check": "strongest_nonlocality",
        "pass": not bad,
        "worst_residual": max((r.largest_discarded for r in results), default=0.0),
        "tolerance": tol,
        "exhaustive": exhaustive,
        "groups": [r.to_dict() for r in results],
        "witnesses": [r.to_dict() for r in bad],
    }


# -- deduction engine ------------------------------------------------------

class UnionFind:
    def __init__(self, items=()):
        self.parent = {x: x for x in items}

    def copy(self) -> "UnionFind":
        uf = UnionFind()
        uf.parent = dict(self.parent)
        return uf

    def find(self, x):
        self.parent.setdefault(x, x)
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x, y) -> bool:
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return False
        if ry < rx:
            rx, ry = ry, rx
        self.parent[ry] = rx
        return True

    def classes(self) -> list[list]:
        out: dict = {}
        for x in sorted(self.parent):
            out.setdefault(self.find(x), []).append(x)
        return sorted(out.values())


def _pair(r, s) -> tuple:
    return (r, s) if r <= s else (s, r)


@dataclass
class DeductionState:
    """Entries of E proven zero, diagonal classes proven equal, and the log.

    Labels are basis tuples of the measured group (party order ascending).
    """

    labels: tuple
    zeros: set = field(default_factory=set)
    diag: UnionFind = None
    log: list = field(default_factory=list)

    def __post_init__(self):
        if self.diag is None:
            self.diag = UnionFind(self.labels)

    @classmethod
    def empty(cls, d: int, size: int) -> "DeductionState":
        return cls(tuple(itertools.product(range(d), repeat=size)))

    def copy(self) -> "DeductionState":
        return DeductionState(self.labels, set(self.zeros), self.diag.copy(), list(self.log))

    def is_zero(self, r, s) -> bool:
        return _pair(r, s) in self.zeros

    def n_classes(self) -> int:
        return len({self.diag.find(x) for x in self.labels})

    def solved(self) -> bool:
        m = len(self.labels)
        return len(self.zeros) == m * (m - 1) // 2 and self.n_classes() == 1

    def fingerprint(self) -> tuple:
        return len(self.zeros), self.n_classes()


def _label(t: tuple) -> str:
    return "".join(map(str, t)) if max(t, default=0) < 10 else ",".join(map(str, t))


def _split(fam: StateFamily, cut_party: int):
    """(head, tail) of each support element: head = entry at the cut party."""
    k = cut_party - 1
    return [(e[k], e[:k] + e[k + 1:]) for e in fam.elements]


def _full_rank(fam: StateFamily) -> bool:
    c = fam.coeffs
    return c.shape[0] == c.shape[1] and np.linalg.matrix_rank(c) == c.shape[0]


def lemma_zero_apply(famA: StateFamily, famB: StateFamily, cut_party: int,
                     state: DeductionState) -> DeductionState:
    """Zeroing rule: equal heads across two orthogonal families force a zero entry.

    Needs disjoint supports and full-rank (square) coefficient matrices.
    """
    if set(famA.elements) & set(famB.elements):
        raise PreconditionError(f"{famA.name} and {famB.name} share support elements")
    for fam in (famA, famB):
        if not _full_rank(fam):
            raise PreconditionError(f"{fam.name}: coefficient matrix is not full rank")
    new = state.copy()
    added = []
    for (p, r), (q, s) in itertools.product(_split(famA, cut_party), _split(famB, cut_party)):
        if p == q:
            key = _pair(r, s)
            if key not in new.zeros:
                new.zeros.add(key)
                added.append(key)
    new.log.append({"rule": "zero",
                    "families": [list(famA.representative), list(famB.representative)],
                    "names": [famA.name, famB.name],
                    "zeros_added": [[_label(r), _label(s)] for r, s in added],
                    "diagonals_merged": []})
    return new


def _rows_orthogonal(c: np.ndarray) -> bool:
    G = c @ c.conj().T
    off = G - np.diag(np.diag(G))
    return np.abs(off).max(initial=0.0) <= 1e-9 * max(1.0, np.abs(G).max())


def lemma_trivial_apply(fam: StateFamily, cut_party: int,
                        state: DeductionState) -> DeductionState:
    """Diagonal-equality rule inside one family.

    If some column t has no zero coefficient and every entry (r_t, r_j) is
    already zero, then entries between elements with equal heads vanish and
    all diagonal entries on the family's tails coincide.  An unmet
    hypothesis leaves the state unchanged and logs a no-op.
    """
    new = state.copy()
    entry = {"rule": "trivial", "families": [list(fam.representative)], "names": [fam.name],
             "zeros_added": [], "diagonals_merged": []}
    split = _split(fam, cut_party)
    c = fam.coeffs
    anchor = None
    if c.shape[0] == c.shape[1] and _rows_orthogonal(c):
        for t in range(len(split)):
            if np.all(c[:, t] != 0) and all(
                    split[j][1] == split[t][1] or new.is_zero(split[t][1], split[j][1])
                    for j in range(len(split)) if j != t):
                anchor = t
                break
    if anchor is None:
        entry["noop"] = True
        new.log.append(entry)
        return new
    added = []
    for (p, r), (q, s) in itertools.combinations(split, 2):
        if p == q and _pair(r, s) not in new.zeros:
            new.zeros.add(_pair(r, s))
            added.append(_pair(r, s))
    tails = sorted({r for _, r in split})
    merged = any([new.diag.union(tails[0], r) for r in tails[1:]])
    entry["anchor"] = _label(split[anchor][1])
    entry["zeros_added"] = [[_label(r), _label(s)] for r, s in added]
    entry["diagonals_merged"] = [_label(r) for r in tails] if merged or added else []
    new.log.append(entry)
    return new


@dataclass
class DeductionResult:
    proved: bool
    state: DeductionState
    group: MeasurementGroup
    cut_party: int
    rounds: int

    def to_dict(self) -> dict:
        return {
            "proved": self.proved,
            "group": list(self.group.parties),
            "cut_party": self.cut_party,
            "rounds": self.rounds,
            "log": self.state.log,
            "zeros": [[_label(r), _label(s)] for r, s in sorted(self.state.zeros)],
            "diagonal_classes": [[_label(x) for x in cls] for cls in self.state.diag.classes()],
        }


def deduce_fixpoint(ss: StateSet, group: MeasurementGroup) -> DeductionResult:
    """Apply both rules in a fixed order until nothing changes.

    Families are visited in stored order, pairs lexicographically, then
    every family gets the diagonal rule; rounds repeat to a fixpoint.  Only
    productive rule instances enter the log.
    """
    cut = group.cut_party
    if cut is None:
        raise ValueError("deduction needs an all-but-one measuring group")
    fams = [f for f in ss.families if _full_rank(f)]
    state = DeductionState.empty(ss.d, ss.N - 1)
    pairs = [(a, b) for a, b in itertools.combinations(fams, 2)
             if not set(a.elements) & set(b.elements)]
    rounds = 0
    while True:
        rounds += 1
        before = state.fingerprint()
        for a, b in pairs:
            state = _keep_if_productive(state, lemma_zero_apply(a, b, cut, state))
        for f in fams:
            state = _keep_if_productive(state, lemma_trivial_apply(f, cut, state))
        if state.fingerprint() == before or state.solved():
            break
    return DeductionResult(state.solved(), state, group, cut, rounds)


def _keep_if_productive(old: DeductionState, new: DeductionState) -> DeductionState:
    return new if new.fingerprint() != old.fingerprint() else old
