"""Cyclic-shift orbits on the tuples of Z_d^N that contain a zero."""
from __future__ import annotations

import itertools
from dataclasses import dataclass


class DomainError(ValueError):
    """Input lies outside the set the operation is defined on."""


def in_domain(x, d: int | None = None) -> bool:
    """True when ``x`` has at least one zero entry (and entries in Z_d)."""
    if d is not None and any(v < 0 or v >= d for v in x):
        return False
    return 0 in x


def cyclic_shift(x) -> tuple:
    """Left rotation: (i_1, i_2, ..., i_N) -> (i_2, ..., i_N, i_1)."""
    x = tuple(x)
    return x[1:] + x[:1]


@dataclass(frozen=True)
class Orbit:
    representative: tuple
    elements: tuple

    @property
    def size(self) -> int:
        return len(self.elements)

    @property
    def N(self) -> int:
        return len(self.representative)

    def is_zero(self) -> bool:
        return not any(self.representative)

    def __contains__(self, x):
        return tuple(x) in self.elements

    def __len__(self):
        return len(self.elements)


def _sigma_cycle(x: tuple) -> tuple:
    out = [x]
    y = cyclic_shift(x)
    while y != x:
        out.append(y)
        y = cyclic_shift(y)
    return tuple(out)


def orbit_of(x, d: int | None = None) -> Orbit:
    """Orbit of ``x`` anchored at its lexicographically smallest element.

    Elements are listed in sigma-iteration order from that representative,
    which fixes the column order of the coefficient matrix of the family.
    """
    x = tuple(int(v) for v in x)
    if not x or not in_domain(x, d):
        raise DomainError(f"{x} is outside X_d^N: needs a zero entry and entries in Z_d")
    rep = min(_sigma_cycle(x))
    return Orbit(rep, _sigma_cycle(rep))


@dataclass(frozen=True)
class OrbitPartition:
    d: int
    N: int
    orbits: tuple

    def __len__(self):
        return len(self.orbits)

    def __iter__(self):
        return iter(self.orbits)

    def covered(self) -> int:
        return sum(o.size for o in self.orbits)


def domain_size(d: int, N: int) -> int:
    return d ** N - (d - 1) ** N


def partition(d: int, N: int) -> OrbitPartition:
    if d < 2 or N < 2:
        raise ValueError(f"need d >= 2 and N >= 2, got d={d}, N={N}")
    seen = set()
    orbits = []
    # product() is lexicographic, so the first unseen element is the minimum
    for x in itertools.product(range(d), repeat=N):
        if x in seen or 0 not in x:
            continue
        o = orbit_of(x)
        seen.update(o.elements)
        orbits.append(o)
    return OrbitPartition(d, N, tuple(orbits))
