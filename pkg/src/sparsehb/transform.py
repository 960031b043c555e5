"""Hierarchization and dehierarchization on generalized sparse grids.

Coefficient vectors are plain float arrays ordered like the functions of a
:class:`~sparsehb.basis.SparseGridSpace`.  A nodal vector holds the values at
the grid points in the same ordering (function ``alpha`` owns the point where
it peaks).

Both transforms run one univariate sweep per dimension (unidirectional
principle).  This is exact only because the index set is downward closed:
the hierarchical parents of a grid point in any direction are grid points of
a block that is componentwise smaller, hence present.
"""
from __future__ import annotations

import numpy as np

from .basis import SparseGridSpace, hat1d
from .index_sets import make_full_grid


def parent_indices(space: SparseGridSpace):
    """Left/right hierarchical parents of every grid point, per dimension.

    Returns two (n, d) int arrays; -1 marks a parent on the boundary, where
    every function of the space vanishes.
    """
    cached = getattr(space, "_parents", None)
    if cached is not None:
        return cached
    n, d, L = space.n, space.d, space.max_level
    left = np.full((n, d), -1, dtype=np.int64)
    right = np.full((n, d), -1, dtype=np.int64)
    for j in range(d):
        step = np.int64(1) << (L - space.levels[:, j])
        for sign, out in ((-1, left), (1, right)):
            nb = space.numerators.copy()
            nb[:, j] += sign * step
            inside = (nb[:, j] > 0) & (nb[:, j] < (1 << L)) & (space.levels[:, j] > 1)
            if inside.any():
                found = space.lookup(nb[inside])
                if (found < 0).any():
                    raise RuntimeError("missing hierarchical parent; index set not monotone?")
                out[inside, j] = found
    space._parents = (left, right)
    return left, right


def _parent_mean(v, left, right):
    padded = np.append(v, 0.0)
    return 0.5 * (padded[left] + padded[right])


def hierarchize(space: SparseGridSpace, values, dims=None) -> np.ndarray:
    """Hierarchical surpluses of the sparse-grid interpolant of nodal ``values``.

    ``dims`` fixes the sweep order (default ``0..d-1``); every order gives the
    same result.
    """
    v = np.array(values, dtype=float)
    if v.shape != (space.n,):
        raise ValueError(f"expected {space.n} nodal values, got shape {v.shape}")
    left, right = parent_indices(space)
    for j in range(space.d) if dims is None else dims:
        v = v - _parent_mean(v, left[:, j], right[:, j])
    return v


def dehierarchize(space: SparseGridSpace, coeffs, dims=None) -> np.ndarray:
    """Nodal values of ``sum_alpha c_alpha phi_alpha``; inverse of :func:`hierarchize`."""
    v = np.array(coeffs, dtype=float)
    if v.shape != (space.n,):
        raise ValueError(f"expected {space.n} coefficients, got shape {v.shape}")
    left, right = parent_indices(space)
    order = range(space.d - 1, -1, -1) if dims is None else dims
    for j in order:
        lev = space.levels[:, j]
        for level in range(2, int(lev.max()) + 1):
            idx = np.flatnonzero(lev == level)
            padded = np.append(v, 0.0)
            v[idx] += 0.5 * (padded[left[idx, j]] + padded[right[idx, j]])
    return v


def evaluate_function(space: SparseGridSpace, coeffs, x) -> np.ndarray | float:
    """``sum_alpha c_alpha phi_alpha(x)`` at one point or an (m, d) array of points.

    Inside one block at most one function is nonzero at any point (the hats
    vanish on their support boundaries), so the cost is one term per block.
    """
    c = np.asarray(coeffs, dtype=float)
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != space.d:
        raise ValueError(f"points must have {space.d} coordinates")
    out = np.zeros(len(x))
    for beta in space.blocks:
        shape = tuple(2 ** (b - 1) for b in beta)
        val = np.ones(len(x))
        offs = []
        for j, b in enumerate(beta):
            i = np.clip(np.floor(np.ldexp(x[:, j], b - 1)).astype(np.int64), 0, shape[j] - 1)
            offs.append(i)
            val *= hat1d(b, i, x[:, j])
        pos = space.block_slices[beta].start + np.ravel_multi_index(offs, shape)
        out += c[pos] * val
    return float(out[0]) if single else out


def interpolate(space: SparseGridSpace, coeffs, beta_target):
    """d-linear interpolant on the anisotropic full grid ``beta_target``.

    Returns ``(target_space, coefficients)``; the target space is the full
    grid over the closure of ``beta_target`` and need not be contained in
    ``space``.
    """
    target = SparseGridSpace(make_full_grid(beta_target))
    vals = evaluate_function(space, coeffs, target.points)
    return target, hierarchize(target, vals)


def dehierarchization_matrix(space: SparseGridSpace) -> np.ndarray:
    """Dense matrix mapping coefficients to nodal values (small spaces only)."""
    return np.column_stack([dehierarchize(space, e) for e in np.eye(space.n)])
