"""Orbit-based orthogonal entangled sets and their JSON form."""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .orbits import Orbit, domain_size, partition
from .tensor import StateVector

# Row-orthogonal replacement for the DFT on the (0,0,i,i) orbits of N=4.
BTILDE = np.array([
    [1, 1, 1, 2],
    [1, -1, 2, -1],
    [5, 5, -2, -4],
    [5, -5, -4, 2],
], dtype=complex)

# 3x3x3 genuinely entangled set: supports exactly as printed, DFT phases.
A18_SUPPORTS = (
    ("A1", ((0, 0, 0), (1, 1, 1), (2, 2, 2))),
    ("A2", ((0, 0, 2), (0, 2, 0), (2, 0, 0))),
    ("A3", ((0, 1, 1), (1, 1, 0), (1, 0, 1))),
    ("A4", ((0, 1, 2), (1, 2, 0), (2, 0, 1))),
    ("A5", ((1, 0, 2), (0, 2, 1), (2, 1, 0))),
    ("A6", ((1, 2, 2), (2, 2, 1), (2, 1, 2))),
)

LABELS = ("B", "Bbar4", "A18")


class ParseError(ValueError):
    """Malformed state-set document; the message names the offending path."""


def _snap(x: float) -> float:
    h = round(2 * x) / 2
    return h if abs(x - h) < 1e-14 else x


def dft_matrix(k: int) -> np.ndarray:
    """k x k matrix with entry (s, j) = exp(2 pi i s j / k).

    Entries that are exact halves or integers (k = 1, 2, 3, 4, 6 phases)
    are stored exactly, so they serialize without rounding noise.
    """
    if k < 1:
        raise ValueError(f"DFT order must be >= 1, got {k}")
    out = np.empty((k, k), dtype=complex)
    for s in range(k):
        for j in range(k):
            theta = 2 * np.pi * ((s * j) % k) / k
            out[s, j] = complex(_snap(np.cos(theta)), _snap(np.sin(theta)))
    return out


def _name(idx) -> str:
    return "S(" + ",".join(map(str, idx)) + ")"


@dataclass(frozen=True, eq=False)
class StateFamily:
    """States sum_j coeffs[s, j] |elements[j]> for each row s."""

    d: int
    representative: tuple
    elements: tuple
    coeffs: np.ndarray
    name: str = ""

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        c.setflags(write=False)
        if c.ndim != 2 or c.shape[1] != len(self.elements):
            raise ValueError(f"coefficient matrix {c.shape} does not fit {len(self.elements)} elements")
        if len(set(self.elements)) != len(self.elements):
            raise ValueError("family support has repeated basis elements")
        object.__setattr__(self, "coeffs", c)
        if not self.name:
            object.__setattr__(self, "name", _name(self.representative))

    @property
    def N(self) -> int:
        return len(self.representative)

    @property
    def states(self) -> list[StateVector]:
        return [StateVector(self.d, self.N, {e: row[j] for j, e in enumerate(self.elements)})
                for row in self.coeffs]

    def __len__(self):
        return self.coeffs.shape[0]

    def __eq__(self, other):
        if not isinstance(other, StateFamily):
            return NotImplemented
        return (self.d == other.d and self.representative == other.representative
                and self.elements == other.elements
                and np.array_equal(self.coeffs, other.coeffs))

    def __hash__(self):
        return hash((self.d, self.representative, self.elements))


def family_from_orbit(o: Orbit, d: int) -> StateFamily:
    """Zero orbit -> the two GHZ-like states |0..0> +- |1..1>; otherwise the DFT family."""
    if o.is_zero():
        N = o.N
        return StateFamily(d, o.representative, ((0,) * N, (1,) * N), dft_matrix(2))
    return StateFamily(d, o.representative, o.elements, dft_matrix(o.size))


@dataclass(frozen=True)
class StateSet:
    label: str
    d: int
    N: int
    families: tuple = field(default=())

    @property
    def states(self) -> list[StateVector]:
        return [s for fam in self.families for s in fam.states]

    def __len__(self):
        return sum(len(f) for f in self.families)

    def family(self, representative) -> StateFamily:
        representative = tuple(representative)
        for f in self.families:
            if f.representative == representative:
                return f
        raise KeyError(representative)


def _check_range(d, N, min_N=3):
    if not isinstance(d, int) or not isinstance(N, int) or d < 2 or N < min_N:
        raise ValueError(f"need d >= 2 and N >= {min_N}, got d={d}, N={N}")


def build_B(d: int, N: int) -> StateSet:
    _check_range(d, N)
    fams = tuple(family_from_orbit(o, d) for o in partition(d, N))
    out = StateSet("B", d, N, fams)
    assert len(out) == domain_size(d, N) + 1
    return out


def build_Bbar4(d: int) -> StateSet:
    _check_range(d, 4, min_N=4)
    base = build_B(d, 4)
    fams = []
    for fam in base.families:
        rep = fam.representative
        i = rep[2]
        if rep == (0, 0, i, i) and i != 0:
            expected = ((0, 0, i, i), (0, i, i, 0), (i, i, 0, 0), (i, 0, 0, i))
            if fam.elements != expected:
                raise AssertionError(f"orbit order {fam.elements} does not match {expected}")
            fam = StateFamily(d, rep, fam.elements, BTILDE, name="Sbar" + _name(rep)[1:])
        fams.append(fam)
    return StateSet("Bbar4", d, 4, tuple(fams))


def build_A18() -> StateSet:
    fams = tuple(StateFamily(3, support[0], support, dft_matrix(3), name=name)
                 for name, support in A18_SUPPORTS)
    return StateSet("A18", 3, 3, fams)


def product_basis(d: int, N: int) -> StateSet:
    """Computational basis as single-state families; a negative control."""
    fams = tuple(StateFamily(d, idx, (idx,), np.ones((1, 1)), name="|" + "".join(map(str, idx)) + ">")
                 for idx in itertools.product(range(d), repeat=N))
    return StateSet("product", d, N, fams)


def build(label: str, d: int | None = None, N: int | None = None) -> StateSet:
    if label == "B":
        if d is None or N is None:
            raise ValueError("set B needs both d and N")
        return build_B(d, N)
    if label == "Bbar4":
        if d is None:
            raise ValueError("set Bbar4 needs d")
        if N not in (None, 4):
            raise ValueError("set Bbar4 is only defined for N=4")
        return build_Bbar4(d)
    if label == "A18":
        if d not in (None, 3) or N not in (None, 3):
            raise ValueError("set A18 is only defined for d=3, N=3")
        return build_A18()
    if label == "product":
        if d is None or N is None:
            raise ValueError("product basis needs both d and N")
        return product_basis(d, N)
    raise ValueError(f"unknown construction {label!r}; choose from {', '.join(LABELS)}")


# -- JSON ------------------------------------------------------------------

def to_dict(ss: StateSet) -> dict:
    fams = []
    for fam in ss.families:
        states = []
        for row in fam.coeffs:
            terms = [{"index": list(e), "re": float(c.real), "im": float(c.imag)}
                     for e, c in zip(fam.elements, row) if c != 0]
            states.append({"terms": terms})
        fams.append({"representative": list(fam.representative), "name": fam.name, "states": states})
    return {"label": ss.label, "d": ss.d, "N": ss.N, "families": fams}


def serialize(ss: StateSet) -> str:
    return json.dumps(to_dict(ss), indent=1)


def _need(obj, key, kind, where):
    if not isinstance(obj, dict) or key not in obj:
        raise ParseError(f"{where}: missing key {key!r}")
    val = obj[key]
    if kind is int and (isinstance(val, bool) or not isinstance(val, int)):
        raise ParseError(f"{where}.{key}: expected integer, got {val!r}")
    if kind is float and (isinstance(val, bool) or not isinstance(val, (int, float))):
        raise ParseError(f"{where}.{key}: expected number, got {val!r}")
    if kind in (str, list) and not isinstance(val, kind):
        raise ParseError(f"{where}.{key}: expected {kind.__name__}, got {type(val).__name__}")
    return val


def _index(raw, d, N, where) -> tuple:
    if not isinstance(raw, list) or len(raw) != N:
        raise ParseError(f"{where}: index {raw!r} must be a list of length N={N}")
    for v in raw:
        if isinstance(v, bool) or not isinstance(v, int) or not 0 <= v < d:
            raise ParseError(f"{where}: index entry {v!r} not in Z_{d}")
    return tuple(raw)


def from_dict(doc) -> StateSet:
    label = _need(doc, "label", str, "$")
    d = _need(doc, "d", int, "$")
    N = _need(doc, "N", int, "$")
    if d < 2 or N < 2:
        raise ParseError(f"$: need d >= 2 and N >= 2, got d={d}, N={N}")
    fams = []
    for fi, fdoc in enumerate(_need(doc, "families", list, "$")):
        fw = f"$.families[{fi}]"
        rep = _index(_need(fdoc, "representative", list, fw), d, N, fw + ".representative")
        rows = []
        elements: list = []
        for si, sdoc in enumerate(_need(fdoc, "states", list, fw)):
            sw = f"{fw}.states[{si}]"
            row = {}
            terms = _need(sdoc, "terms", list, sw)
            if not terms:
                raise ParseError(f"{sw}.terms: state has no terms")
            for ti, tdoc in enumerate(terms):
                tw = f"{sw}.terms[{ti}]"
                idx = _index(_need(tdoc, "index", list, tw), d, N, tw + ".index")
                if idx in row:
                    raise ParseError(f"{tw}.index: duplicate index {list(idx)}")
                row[idx] = complex(_need(tdoc, "re", float, tw), _need(tdoc, "im", float, tw))
                if idx not in elements:
                    elements.append(idx)
            rows.append(row)
        if not rows:
            raise ParseError(f"{fw}.states: family has no states")
        coeffs = np.array([[row.get(e, 0) for e in elements] for row in rows], dtype=complex)
        name = fdoc.get("name") or ""
        if not isinstance(name, str):
            raise ParseError(f"{fw}.name: expected string")
        fams.append(StateFamily(d, rep, tuple(elements), coeffs, name=name))
    return StateSet(label, d, N, tuple(fams))


def deserialize(text: str) -> StateSet:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return from_dict(doc)
