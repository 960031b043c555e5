"""Monotone (downward-closed) multi-index sets and their combinatorics.

Multi-indices are plain tuples of positive ints.  An :class:`IndexSet` is an
immutable, validated, downward-closed collection of them; the constructors
below build the families used throughout the package (full grids, standard
sparse grids, energy-optimized sparse grids, the level-gap example) and
:func:`bounds_quantities` evaluates the integer quantities that control the
condition number of the hierarchical basis preconditioner.

All 2-power quantities are Python ints, so they never overflow.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

logger = logging.getLogger(__name__)


def l1(beta):
    return sum(beta)


def linf(beta):
    return max(beta)


def leq(a, b):
    """Componentwise partial order ``a <= b``."""
    return all(x <= y for x, y in zip(a, b))


def check_multi_index(beta) -> tuple:
    beta = tuple(int(b) for b in beta)
    if len(beta) == 0:
        raise ValueError("multi-index must have at least one component")
    if any(b < 1 for b in beta):
        raise ValueError(f"multi-index components must be >= 1, got {beta}")
    return beta


def block_order_key(beta):
    """Deterministic block order: by |beta|_1, then lexicographic."""
    return (sum(beta), beta)


def _lower_neighbours(beta):
    for i, b in enumerate(beta):
        if b > 1:
            yield beta[:i] + (b - 1,) + beta[i + 1:]


class IndexSet:
    """An immutable downward-closed finite set of multi-indices.

    Members are kept sorted by :func:`block_order_key`, which is also the
    block order of every space built on the set.
    """

    __slots__ = ("_members", "_lookup", "d")

    def __init__(self, members: Iterable, d: int | None = None):
        mem = {check_multi_index(b) for b in members}
        dims = {len(b) for b in mem}
        if len(dims) > 1:
            raise ValueError(f"multi-indices of mixed dimension: {sorted(dims)}")
        if d is None:
            if not mem:
                raise ValueError("dimension of an empty set must be given")
            d = dims.pop()
        elif mem and dims.pop() != d:
            raise ValueError("member dimension does not match d")
        if not is_monotone(mem):
            raise ValueError("index set is not downward closed")
        self.d = int(d)
        self._members = tuple(sorted(mem, key=block_order_key))
        self._lookup = frozenset(mem)

    def __iter__(self):
        return iter(self._members)

    def __len__(self):
        return len(self._members)

    def __contains__(self, beta):
        return tuple(beta) in self._lookup

    def __eq__(self, other):
        if isinstance(other, IndexSet):
            return self.d == other.d and self._lookup == other._lookup
        return NotImplemented

    def __hash__(self):
        return hash((self.d, self._lookup))

    def __repr__(self):
        if len(self) <= 8:
            return f"IndexSet({list(self._members)})"
        return f"IndexSet(d={self.d}, size={len(self)})"

    @property
    def members(self) -> tuple:
        return self._members

    def as_set(self) -> frozenset:
        return self._lookup

    def issubset(self, other: "IndexSet") -> bool:
        return self._lookup <= other.as_set()

    @property
    def k_max(self) -> int:
        return max(linf(b) for b in self._members)


@dataclass(frozen=True)
class LevelPartition:
    """Slices ``Lambda_k = {beta : |beta|_inf = k}`` for ``k = 1..k_max``."""

    k_max: int
    slices: Mapping[int, frozenset]

    def __getitem__(self, k):
        return self.slices[k]


@dataclass(frozen=True)
class BoundsReport:
    n_lambda: int
    n_tilde: int
    n_tilde_prime: int
    k_lambda: int
    maximal_sets: Mapping[int, tuple] = field(repr=False)

    def as_dict(self):
        return {
            "n_lambda": self.n_lambda,
            "n_tilde": self.n_tilde,
            "n_tilde_prime": self.n_tilde_prime,
            "k_lambda": self.k_lambda,
            "maximal_sets": {str(k): [list(b) for b in v]
                             for k, v in sorted(self.maximal_sets.items())},
        }


def is_monotone(indices) -> bool:
    """True iff every lower neighbour of every member is also a member."""
    s = {tuple(b) for b in indices}
    return all(nb in s for b in s for nb in _lower_neighbours(b))


def monotone_closure(indices, d: int | None = None) -> IndexSet:
    """Smallest downward-closed superset of ``indices``."""
    todo = [check_multi_index(b) for b in indices]
    dims = {len(b) for b in todo}
    if len(dims) > 1:
        raise ValueError(f"multi-indices of mixed dimension: {sorted(dims)}")
    out = set()
    while todo:
        b = todo.pop()
        if b in out:
            continue
        out.add(b)
        todo.extend(nb for nb in _lower_neighbours(b) if nb not in out)
    return IndexSet(out, d=d)


def make_full_grid(beta) -> IndexSet:
    beta = check_multi_index(beta)
    return IndexSet(itertools.product(*(range(1, b + 1) for b in beta)), d=len(beta))


def make_isotropic_full_grid(k: int, d: int) -> IndexSet:
    _check_kd(k, d)
    return make_full_grid((k,) * d)


def _check_kd(k, d):
    if int(k) < 1 or int(d) < 1:
        raise ValueError(f"need k >= 1 and d >= 1, got k={k}, d={d}")


def _box_filter(d, bound, pred):
    return (b for b in itertools.product(range(1, bound + 1), repeat=d) if pred(b))


def make_standard_sparse(k: int, d: int) -> IndexSet:
    """``{beta : |beta|_1 <= k + d - 1}``."""
    _check_kd(k, d)
    return IndexSet(_box_filter(d, k, lambda b: sum(b) <= k + d - 1), d=d)


def make_energy_optimized(k: int, d: int, a) -> IndexSet:
    """``{beta : |beta|_1 - a |beta|_inf <= (1 - a) k + d - 1}``, for ``a < 1``.

    ``a`` is taken as an exact rational, so membership is decided without
    rounding.  ``a = 0`` gives the standard sparse grid; ``a -> -inf``
    approaches the full grid ``V_k``.
    """
    _check_kd(k, d)
    a = Fraction(a)
    if a >= 1:
        raise ValueError(f"energy-optimized sets need a < 1, got a={a}")
    rhs = (1 - a) * k + d - 1
    # |beta|_inf <= k for every member since (1-a)|beta|_inf + d - 1 <= lhs
    return IndexSet(_box_filter(d, k, lambda b: sum(b) - a * max(b) <= rhs), d=d)


def level_partition(lam: IndexSet) -> LevelPartition:
    if len(lam) == 0:
        raise ValueError("level partition of an empty set")
    km = lam.k_max
    slices = {k: set() for k in range(1, km + 1)}
    for b in lam:
        slices[linf(b)].add(b)
    return LevelPartition(km, {k: frozenset(v) for k, v in slices.items()})


def maximal_elements(indices) -> frozenset:
    """Members with no strictly larger member (componentwise) in ``indices``."""
    s = {tuple(b) for b in indices}
    return frozenset(b for b in s if not any(c != b and leq(b, c) for c in s))


def bounds_quantities(lam: IndexSet) -> BoundsReport:
    """Exact ``n_Lambda``, ``n~_Lambda``, ``n~'_Lambda``, ``k_Lambda`` and the
    maximal sets of every level slice."""
    part = level_partition(lam)
    n_lambda = max(len(s) for s in part.slices.values())
    maxsets = {k: tuple(sorted(maximal_elements(s), key=block_order_key))
               for k, s in part.slices.items()}
    n_tilde = sum(2 ** (l1(b) - linf(b)) for v in maxsets.values() for b in v)
    n_tilde_prime = max(2 ** (l1(b) - linf(b)) for b in lam)
    return BoundsReport(n_lambda, n_tilde, n_tilde_prime, part.k_max, maxsets)


def r0(k: int, d: int, a=0) -> int:
    """Largest ``r`` with the isotropic full grid ``V_r`` inside ``S_k^a``."""
    a = Fraction(a)
    return math.floor(((1 - a) * k + d - 1) / (d - a))


def gap_example_literal(k: int, d: int) -> list:
    """``{(2k, beta') : |beta'|_1 < k + d - 1}`` as listed (not monotone)."""
    if k < 1 or d < 2:
        raise ValueError(f"gap example needs k >= 1 and d >= 2, got k={k}, d={d}")
    tail = _box_filter(d - 1, k + d - 1, lambda b: sum(b) < k + d - 1)
    return sorted(((2 * k,) + b for b in tail), key=block_order_key)


def gap_example(k: int, d: int) -> IndexSet:
    """Monotone closure of :func:`gap_example_literal`."""
    return monotone_closure(gap_example_literal(k, d))


def literal_quantities(indices) -> dict:
    """The bound quantities evaluated verbatim on a possibly non-monotone list."""
    idx = [tuple(b) for b in indices]
    slices = {}
    for b in idx:
        slices.setdefault(linf(b), set()).add(b)
    maxsets = {k: maximal_elements(s) for k, s in slices.items()}
    return {
        "n_lambda": max(len(s) for s in slices.values()),
        "n_tilde": sum(2 ** (l1(b) - linf(b)) for v in maxsets.values() for b in v),
        "n_tilde_prime": max(2 ** (l1(b) - linf(b)) for b in idx),
        "k_lambda": max(slices),
    }


def read_index_file(path) -> IndexSet:
    """Read one multi-index per line; ``#`` lines and blank lines are skipped.

    The dimension is taken from the first index.  Non-monotone input is
    closed downward with a warning.
    """
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            try:
                beta = tuple(int(t) for t in s.split())
            except ValueError:
                raise ValueError(f"{path}:{lineno}: not a list of integers: {s!r}") from None
            if rows and len(beta) != len(rows[0]):
                raise ValueError(f"{path}:{lineno}: expected {len(rows[0])} entries, got {len(beta)}")
            rows.append(check_multi_index(beta))
    if not rows:
        raise ValueError(f"{path}: no multi-indices found")
    if not is_monotone(rows):
        logger.warning("index set in %s is not downward closed; using its monotone closure", path)
        return monotone_closure(rows)
    return IndexSet(rows)


def write_index_file(lam: IndexSet, path):
    with open(path, "w") as fh:
        fh.write(f"# d={lam.d} size={len(lam)}\n")
        for b in lam:
            fh.write(" ".join(map(str, b)) + "\n")
