"""Set-system instances for maximum coverage.

An instance is a universe [1..n], m sets over it and a budget k.  The text
format is line oriented: the first line holds "n m k", the next m lines hold
the elements of each set (an empty line is an empty set).  Duplicate elements
inside one line are dropped silently; duplicate sets are legal.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
from numpy.random import PCG64, Generator


class InstanceError(ValueError):
    """Raised for malformed instance text or inconsistent parameters."""


@dataclass(frozen=True)
class SetSystem:
    """Immutable set system. Sets are 1-indexed externally, stored in order."""

    n: int
    m: int
    k: int
    sets: tuple[tuple[int, ...], ...]  # each sorted strictly increasing

    def __post_init__(self) -> None:
        if not (1 <= self.k <= self.m):
            raise InstanceError(f"need 1 <= k <= m, got k={self.k} m={self.m}")
        if self.m > self.n:
            raise InstanceError(f"need m <= n, got m={self.m} n={self.n}")
        if len(self.sets) != self.m:
            raise InstanceError(f"expected {self.m} sets, got {len(self.sets)}")
        for j, s in enumerate(self.sets, start=1):
            for a, b in zip(s, s[1:]):
                if a >= b:
                    raise InstanceError(f"set {j} not strictly increasing")
            if s and (s[0] < 1 or s[-1] > self.n):
                raise InstanceError(f"set {j} has element outside [1, {self.n}]")


def load_instance(text: str) -> SetSystem:
    """Parse the text format. Errors name the offending 1-based line."""
    lines = text.split("\n")
    if not lines or not lines[0].strip():
        raise InstanceError("line 1: missing header 'n m k'")
    head = lines[0].split()
    if len(head) != 3:
        raise InstanceError("line 1: header must be three integers 'n m k'")
    try:
        n, m, k = (int(t) for t in head)
    except ValueError:
        raise InstanceError("line 1: header must be three integers 'n m k'") from None
    if n < 1:
        raise InstanceError("line 1: n must be positive")
    if k > m:
        raise InstanceError(f"line 1: k exceeds m ({k} > {m})")
    if k < 1:
        raise InstanceError("line 1: k must be positive")
    if m > n:
        raise InstanceError(f"line 1: m exceeds n ({m} > {n})")
    if len(lines) < m + 1:
        raise InstanceError(f"expected {m} set lines, file ends at line {len(lines)}")
    for extra in lines[m + 1 :]:
        if extra.strip():
            raise InstanceError(f"line {lines.index(extra) + 1}: trailing content after {m} sets")
    sets = []
    for j in range(1, m + 1):
        toks = lines[j].split()
        try:
            ids = sorted({int(t) for t in toks})
        except ValueError:
            raise InstanceError(f"line {j + 1}: non-integer element id") from None
        if ids and (ids[0] < 1 or ids[-1] > n):
            raise InstanceError(f"line {j + 1}: element id outside [1, {n}]")
        sets.append(tuple(ids))
    return SetSystem(n=n, m=m, k=k, sets=tuple(sets))


def dump_instance(sys: SetSystem) -> str:
    """Inverse of load_instance, canonical form (sorted, deduplicated)."""
    out = [f"{sys.n} {sys.m} {sys.k}"]
    out.extend(" ".join(str(e) for e in s) for s in sys.sets)
    return "\n".join(out) + "\n"


@functools.lru_cache(maxsize=128)
def set_masks(sys: SetSystem) -> tuple[int, ...]:
    """Bitmask per set, bit e-1 for element e. Cached; SetSystem is hashable."""
    masks = []
    for s in sys.sets:
        mask = 0
        for e in s:
            mask |= 1 << (e - 1)
        masks.append(mask)
    return tuple(masks)


def frequency(sys: SetSystem) -> tuple[int, ...]:
    """f_i = number of sets containing element i, for i in [1..n]."""
    f = [0] * sys.n
    for s in sys.sets:
        for e in s:
            f[e - 1] += 1
    return tuple(f)


def as_selection(indices, m: int) -> tuple[int, ...]:
    """Normalize to a sorted tuple of distinct 1-based set indices."""
    sel = sorted(set(int(j) for j in indices))
    if sel and (sel[0] < 1 or sel[-1] > m):
        raise InstanceError(f"selection index outside [1, {m}]")
    return tuple(sel)


def coverage(sys: SetSystem, selection) -> int:
    """Number of elements covered by the union of the selected sets."""
    sel = as_selection(selection, sys.m)
    masks = set_masks(sys)
    u = 0
    for j in sel:
        u |= masks[j - 1]
    return u.bit_count()


def forced_system(n: int, m: int, k: int, sets) -> SetSystem:
    """SetSystem that may violate m <= n.

    The m <= n input assumption can break after dropping elements; the
    solver tolerates this, so bypass that one constructor check while
    keeping the others.
    """
    if m <= n:
        return SetSystem(n=n, m=m, k=k, sets=tuple(sets))
    forced = object.__new__(SetSystem)
    object.__setattr__(forced, "n", n)
    object.__setattr__(forced, "m", m)
    object.__setattr__(forced, "k", k)
    object.__setattr__(forced, "sets", tuple(tuple(s) for s in sets))
    if not (1 <= k <= m):
        raise InstanceError(f"need 1 <= k <= m, got k={k} m={m}")
    for j, s in enumerate(forced.sets, start=1):
        for a, b in zip(s, s[1:]):
            if a >= b:
                raise InstanceError(f"set {j} not strictly increasing")
        if s and (s[0] < 1 or s[-1] > n):
            raise InstanceError(f"set {j} has element outside [1, {n}]")
    return forced


def normalize_covered(sys: SetSystem) -> tuple[SetSystem, tuple[int, ...]]:
    """Drop elements no set covers and renumber the rest contiguously.

    Returns the reduced system and the kept original ids in ascending order
    (new id i corresponds to old id kept[i-1]).  Set indices are unchanged.
    """
    f = frequency(sys)
    kept = tuple(i + 1 for i in range(sys.n) if f[i] > 0)
    if len(kept) == sys.n:
        return sys, kept
    if not kept:
        raise InstanceError("normalize: no element is covered by any set")
    new_of_old = {old: new + 1 for new, old in enumerate(kept)}
    sets = tuple(tuple(new_of_old[e] for e in s) for s in sys.sets)
    return forced_system(len(kept), sys.m, sys.k, sets), kept


def generate_random(
    n: int,
    m: int,
    k: int,
    *,
    density: float | None = None,
    set_size: int | tuple[int, int] | None = None,
    seed: int,
) -> SetSystem:
    """Deterministic random instance from a PCG64 stream.

    Exactly one of density / set_size must be given.  density p puts each
    element in each set independently with probability p (density=1.0 yields
    m copies of the full universe).  set_size draws each set uniformly
    without replacement, either a fixed size or uniform in [lo, hi].
    """
    if (density is None) == (set_size is None):
        raise InstanceError("give exactly one of density or set_size")
    rng = Generator(PCG64(seed))
    sets = []
    if density is not None:
        if not 0.0 < density <= 1.0:
            raise InstanceError("density must be in (0, 1]")
        for _ in range(m):
            keep = rng.random(n) < density
            sets.append(tuple(int(i) + 1 for i in np.flatnonzero(keep)))
    else:
        lo, hi = (set_size, set_size) if isinstance(set_size, int) else set_size
        if not 0 <= lo <= hi <= n:
            raise InstanceError(f"set sizes must satisfy 0 <= lo <= hi <= n, got [{lo}, {hi}]")
        for _ in range(m):
            size = int(rng.integers(lo, hi + 1))
            ids = rng.choice(n, size=size, replace=False) + 1
            sets.append(tuple(sorted(int(e) for e in ids)))
    return SetSystem(n=n, m=m, k=k, sets=tuple(sets))
