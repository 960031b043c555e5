"""Galerkin matrices of the Dirichlet Laplacian in the hierarchical basis.

Entries factor over dimensions, so every block pair ``(beta, beta')`` of the
stiffness matrix is a sum of Kronecker products of univariate level-pair
matrices::

    G[beta, beta'] = sum_i  K(b_i, b'_i) (x) prod_{j != i} M(b_j, b'_j)

with ``K``/``M`` the 1D stiffness/mass matrices between two hat levels.  The
1D matrices are computed exactly by writing both levels' hats in the nodal
basis of the finer level.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .basis import SparseGridSpace
from .errors import CapExceeded
from .index_sets import l1, linf

DEFAULT_NNZ_CAP = 200_000_000
DROP_TOL = 1e-15


@functools.lru_cache(maxsize=None)
def _prolongation(level, fine):
    """Values of the level-``level`` hats at the interior nodes of level ``fine``."""
    nodes = np.arange(1, 2 ** fine)
    i = np.arange(2 ** (level - 1))
    # hat i is supported on nodes (2i)*s .. (2i+2)*s with s = 2**(fine-level)
    s = 2 ** (fine - level)
    rows, cols, vals = [], [], []
    for t in range(-s + 1, s):
        rows.append((2 * i + 1) * s + t - 1)
        cols.append(i)
        vals.append(np.full(len(i), 1.0 - abs(t) / s))
    P = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(len(nodes), len(i)))
    return P


@functools.lru_cache(maxsize=None)
def _fine_matrices(fine):
    n = 2 ** fine - 1
    h = 2.0 ** -fine
    ones = np.ones(n)
    mass = sp.diags([ones[:-1] * h / 6, ones * 4 * h / 6, ones[:-1] * h / 6], [-1, 0, 1])
    stiff = sp.diags([-ones[:-1] / h, 2 * ones / h, -ones[:-1] / h], [-1, 0, 1])
    return mass.tocsr(), stiff.tocsr()


def _clean(A):
    A = sp.csr_matrix(A)
    A.data[np.abs(A.data) < DROP_TOL] = 0.0
    A.eliminate_zeros()
    A.sort_indices()
    return A


@functools.lru_cache(maxsize=None)
def level_matrices(la: int, lb: int):
    """Exact 1D (mass, stiffness) between all hats of levels ``la`` and ``lb``.

    Shapes are ``(2**(la-1), 2**(lb-1))``.
    """
    fine = max(la, lb)
    M, K = _fine_matrices(fine)
    Pa, Pb = _prolongation(la, fine), _prolongation(lb, fine)
    return _clean(Pa.T @ M @ Pb), _clean(Pa.T @ K @ Pb)


def mass_1d(a, b) -> float:
    """``int_0^1 phi_a phi_b`` for univariate hats given as ``(level, offset)``."""
    return float(level_matrices(a[0], b[0])[0][a[1], b[1]])


def stiffness_1d(a, b) -> float:
    """``int_0^1 phi_a' phi_b'`` for univariate hats given as ``(level, offset)``."""
    return float(level_matrices(a[0], b[0])[1][a[1], b[1]])


def _kron_all(factors):
    out = factors[0]
    for f in factors[1:]:
        out = sp.kron(out, f, format="csr")
    return sp.csr_matrix(out)


def _block_pair_nnz(beta, gamma, kind):
    # 1D stiffness between different levels vanishes, so a stiffness block
    # is nonzero only if the two blocks share the level in some direction
    if kind == "stiffness" and all(a != b for a, b in zip(beta, gamma)):
        return 0
    return int(np.prod([level_matrices(a, b)[0].nnz for a, b in zip(beta, gamma)]))


def estimate_nnz(space: SparseGridSpace, kind="stiffness") -> int:
    """Upper bound on the number of stored entries of the assembled matrix."""
    blocks = space.blocks
    return sum(_block_pair_nnz(b, g, kind) for b in blocks for g in blocks)


def _assemble(space, kind, nnz_cap):
    if nnz_cap is not None:
        est = estimate_nnz(space, kind)
        if est > nnz_cap:
            raise CapExceeded(f"assembly needs ~{est} nonzeros, cap is {nnz_cap}")
    d = space.d
    blocks = space.blocks
    rows, cols, vals = [], [], []
    for p, beta in enumerate(blocks):
        rs = space.block_slices[beta].start
        for gamma in blocks[p:]:
            cs = space.block_slices[gamma].start
            if _block_pair_nnz(beta, gamma, kind) == 0:
                continue
            mats = [level_matrices(a, b) for a, b in zip(beta, gamma)]
            if kind == "mass":
                blk = _kron_all([m[0] for m in mats])
            else:
                blk = None
                for i in range(d):
                    if beta[i] != gamma[i]:
                        continue
                    term = _kron_all([m[1] if j == i else m[0] for j, m in enumerate(mats)])
                    blk = term if blk is None else blk + term
            blk = blk.tocoo()
            keep = np.abs(blk.data) >= DROP_TOL
            r, c, v = blk.row[keep] + rs, blk.col[keep] + cs, blk.data[keep]
            rows.append(r), cols.append(c), vals.append(v)
            if gamma != beta:
                rows.append(c), cols.append(r), vals.append(v)
    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(space.n, space.n))
    A.sort_indices()
    return A


def assemble_stiffness(space: SparseGridSpace, nnz_cap=DEFAULT_NNZ_CAP) -> sp.csr_matrix:
    return _assemble(space, "stiffness", nnz_cap)


def assemble_mass(space: SparseGridSpace, nnz_cap=DEFAULT_NNZ_CAP) -> sp.csr_matrix:
    return _assemble(space, "mass", nnz_cap)


def block_scaling(beta) -> float:
    """``4**|beta|_inf * ||phi_alpha||_L2^2`` for any ``alpha`` in block ``beta``."""
    return 4.0 ** linf(beta) * (2 / 3) ** len(beta) * 2.0 ** (-l1(beta))


def scaling_diagonal(space: SparseGridSpace) -> np.ndarray:
    """Diagonal whose quadratic form is the HB norm ``sum 4**|beta|_inf ||s_beta||^2``."""
    out = np.empty(space.n)
    for beta, sl in space.block_slices.items():
        out[sl] = block_scaling(beta)
    return out


@dataclass
class GalerkinSystem:
    space: SparseGridSpace
    stiffness: sp.csr_matrix
    mass: sp.csr_matrix
    scaling: np.ndarray

    @classmethod
    def build(cls, space: SparseGridSpace, nnz_cap=DEFAULT_NNZ_CAP, with_mass=True):
        G = assemble_stiffness(space, nnz_cap)
        M = assemble_mass(space, nnz_cap) if with_mass else None
        return cls(space, G, M, scaling_diagonal(space))

    @property
    def n(self):
        return self.space.n

    def preconditioned_apply(self, x):
        """``D^-1/2 G D^-1/2 x``."""
        s = 1.0 / np.sqrt(self.scaling)
        return s * (self.stiffness @ (s * np.asarray(x, dtype=float)))

    def preconditioned_matrix(self) -> sp.csr_matrix:
        s = sp.diags(1.0 / np.sqrt(self.scaling))
        return sp.csr_matrix(s @ self.stiffness @ s)

    def norms(self, c):
        """``(l2_sq, h1_sq, hb_sq)`` of the function with HB coefficients ``c``."""
        c = np.asarray(c, dtype=float)
        if c.shape != (self.n,):
            raise ValueError(f"expected {self.n} coefficients, got shape {c.shape}")
        l2 = float(c @ (self.mass @ c)) if self.mass is not None else float("nan")
        return l2, float(c @ (self.stiffness @ c)), float(c @ (self.scaling * c))


def hb_norm_sq(space: SparseGridSpace, c) -> float:
    c = np.asarray(c, dtype=float)
    return float(c @ (scaling_diagonal(space) * c))


def write_coo(A, path):
    """Write ``row col value`` lines, 0-based, values as shortest round-trip decimals."""
    A = sp.coo_matrix(A)
    order = np.lexsort((A.col, A.row))
    with open(path, "w") as fh:
        for r, c, v in zip(A.row[order], A.col[order], A.data[order]):
            fh.write(f"{int(r)} {int(c)} {float(v)!r}\n")


def read_coo(path, n=None) -> sp.csr_matrix:
    data = np.loadtxt(path, ndmin=2)
    r, c = data[:, 0].astype(np.int64), data[:, 1].astype(np.int64)
    n = n if n is not None else int(max(r.max(), c.max())) + 1
    return sp.csr_matrix((data[:, 2], (r, c)), shape=(n, n))
