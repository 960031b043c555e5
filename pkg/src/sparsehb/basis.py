"""Tensor-product Faber-Schauder (hierarchical hat) basis on the unit cube.

A univariate hat on level ``l`` with offset ``i`` is
``phi(2**l * t - (2*i + 1))`` with ``phi(t) = max(1 - |t|, 0)``; it peaks at
``(2i+1) / 2**l`` and vanishes on the boundary of its support.  Block ``beta``
holds the ``2**(|beta|_1 - d)`` tensor products with levels ``beta``.

Nodal coordinates are kept as exact dyadic pairs ``(numerator, level)``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .index_sets import IndexSet, block_order_key, check_multi_index, l1


@dataclass(frozen=True)
class BasisFunction:
    block: tuple
    offsets: tuple

    def __post_init__(self):
        for b, i in zip(self.block, self.offsets):
            if not 0 <= i < 2 ** (b - 1):
                raise ValueError(f"offset {i} out of range for level {b}")
        if len(self.block) != len(self.offsets):
            raise ValueError("block and offsets differ in length")

    @property
    def d(self):
        return len(self.block)

    def node(self) -> "NodalPoint":
        return NodalPoint(tuple((2 * i + 1, b) for b, i in zip(self.block, self.offsets)))

    def support(self):
        return tuple((Fraction(2 * i, 2 ** b), Fraction(2 * i + 2, 2 ** b))
                     for b, i in zip(self.block, self.offsets))


@dataclass(frozen=True)
class NodalPoint:
    """Point with coordinates ``num / 2**level``, one dyadic pair per axis."""

    coords: tuple

    def normalized(self) -> "NodalPoint":
        out = []
        for num, lev in self.coords:
            while num % 2 == 0 and lev > 0:
                num //= 2
                lev -= 1
            out.append((num, lev))
        return NodalPoint(tuple(out))

    def as_float(self) -> np.ndarray:
        return np.array([num / 2 ** lev for num, lev in self.coords])

    def as_fractions(self) -> tuple:
        return tuple(Fraction(num, 2 ** lev) for num, lev in self.coords)


def hat(t):
    return np.maximum(1.0 - np.abs(t), 0.0)


def hat1d(level, offset, t):
    return hat(np.ldexp(np.asarray(t, dtype=float), level) - (2 * offset + 1))


def block_size(beta) -> int:
    return 2 ** (l1(beta) - len(beta))


def enumerate_block(beta) -> list:
    """All functions of block ``beta``, offsets in lexicographic order."""
    beta = check_multi_index(beta)
    ranges = [range(2 ** (b - 1)) for b in beta]
    return [BasisFunction(beta, off) for off in itertools.product(*ranges)]


def block_offsets(beta) -> np.ndarray:
    """Offsets of block ``beta`` as an int array of shape (block_size, d)."""
    grids = np.meshgrid(*[np.arange(2 ** (b - 1)) for b in beta], indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1).astype(np.int64)


def evaluate(f: BasisFunction, x) -> float | np.ndarray:
    """Value of ``f`` at ``x``; ``x`` may be one point or an (m, d) array."""
    x = np.asarray(x, dtype=float)
    val = np.ones(x.shape[:-1])
    for j, (b, i) in enumerate(zip(f.block, f.offsets)):
        val = val * hat1d(b, i, x[..., j])
    return val if val.ndim else float(val)


def nodal_points(beta) -> list:
    """Interior grid points of the anisotropic partition with step ``2**-beta``."""
    beta = check_multi_index(beta)
    axes = [[(n, b) for n in range(1, 2 ** b)] for b in beta]
    return [NodalPoint(c).normalized() for c in itertools.product(*axes)]


def l2_norm_sq(f: BasisFunction) -> float:
    return (2 / 3) ** f.d * 2.0 ** (-l1(f.block))


def h1_norm_sq(f: BasisFunction) -> float:
    d = f.d
    return 2.0 ** d / 3.0 ** (d - 1) * 2.0 ** (-l1(f.block)) * sum(4.0 ** b for b in f.block)


def block_l2_norm_sq(beta, coeffs) -> float:
    """L2 norm squared of ``sum c_alpha phi_alpha`` over block ``beta``.

    Supports within a block do not overlap, so this is a weighted sum of squares.
    """
    beta = check_multi_index(beta)
    c = np.asarray(coeffs, dtype=float)
    if c.shape != (block_size(beta),):
        raise ValueError(f"block {beta} has {block_size(beta)} functions, got {c.shape}")
    return (2 / 3) ** len(beta) * 2.0 ** (-l1(beta)) * float(c @ c)


class SparseGridSpace:
    """The enumerated hierarchical basis of ``S_Lambda``.

    Functions are stored block-major in the block order of ``index_set``,
    offsets lexicographic inside each block.  Every basis function owns one
    grid point (its peak), so the same ordering indexes nodal values.

    Attributes
    ----------
    levels, offsets : (n, d) int arrays
    numerators : (n, d) int array, node coordinate times ``2**max_level``
    block_slices : dict block -> slice into the global ordering
    """

    def __init__(self, index_set: IndexSet):
        if len(index_set) == 0:
            raise ValueError("space over an empty index set")
        self.index_set = index_set
        self.d = index_set.d
        self.blocks = list(index_set.members)
        self.max_level = max(max(b) for b in self.blocks)
        levels, offsets, self.block_slices = [], [], {}
        start = 0
        for beta in self.blocks:
            off = block_offsets(beta)
            levels.append(np.broadcast_to(np.array(beta, dtype=np.int64), off.shape))
            offsets.append(off)
            self.block_slices[beta] = slice(start, start + len(off))
            start += len(off)
        self.n = start
        self.levels = np.concatenate(levels)
        self.offsets = np.concatenate(offsets)
        self.numerators = (2 * self.offsets + 1) << (self.max_level - self.levels)
        self._index = None

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"SparseGridSpace(d={self.d}, blocks={len(self.blocks)}, n={self.n})"

    @property
    def points(self) -> np.ndarray:
        """Grid points as floats, shape (n, d)."""
        return np.ldexp(self.numerators.astype(float), -self.max_level)

    def block_of(self):
        """Position of each function's block in ``self.blocks``."""
        return np.repeat(np.arange(len(self.blocks)),
                         [self.block_slices[b].stop - self.block_slices[b].start
                          for b in self.blocks])

    def function(self, idx: int) -> BasisFunction:
        return BasisFunction(tuple(int(v) for v in self.levels[idx]),
                             tuple(int(v) for v in self.offsets[idx]))

    def _keys(self, numerators):
        base = (1 << self.max_level) + 1
        key = np.zeros(len(numerators), dtype=object if base ** self.d >= 2 ** 62 else np.int64)
        for j in range(self.d):
            key = key * base + numerators[:, j]
        return key

    def lookup(self, numerators) -> np.ndarray:
        """Global index of grid points given by integer numerators, -1 if absent."""
        numerators = np.asarray(numerators, dtype=np.int64).reshape(-1, self.d)
        if self._index is None:
            keys = self._keys(self.numerators)
            order = np.argsort(keys, kind="stable")
            self._index = (keys[order], order)
        skeys, order = self._index
        q = self._keys(numerators)
        pos = np.searchsorted(skeys, q)
        pos = np.minimum(pos, len(skeys) - 1)
        found = skeys[pos] == q
        return np.where(found, order[pos], -1).astype(np.int64)

    def embed(self, sub: "SparseGridSpace", c) -> np.ndarray:
        """Coefficient vector of ``sub`` padded with zeros into this space."""
        out = np.zeros(self.n)
        for beta in sub.blocks:
            if beta not in self.block_slices:
                raise ValueError(f"block {beta} not in this space")
            out[self.block_slices[beta]] = np.asarray(c)[sub.block_slices[beta]]
        return out


def space_dimension(index_set) -> int:
    return sum(block_size(b) for b in index_set)


def sorted_blocks(blocks):
    return sorted((tuple(b) for b in blocks), key=block_order_key)
