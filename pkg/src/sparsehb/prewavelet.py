"""Dense L2-orthogonal (prewavelet) decomposition of a sparse grid space.

``W_beta`` is the L2-orthogonal complement of ``sum_{beta' < beta} V_beta'``
inside ``V_beta``.  Each one is built here by orthogonalizing the HB block
``beta`` against all lower blocks with respect to the mass matrix; no explicit
prewavelet stencils are used.  Everything is dense, so this is for small
spaces only.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .assembly import GalerkinSystem
from .basis import SparseGridSpace, block_size
from .errors import CapExceeded
from .index_sets import leq, linf

DENSE_CAP = 2500


@dataclass(frozen=True)
class PWConstants:
    c_pw_est: float
    C_pw_est: float

    def as_dict(self):
        return {"c_pw_est": self.c_pw_est, "C_pw_est": self.C_pw_est}


class PrewaveletBasis:
    """L2-orthonormal bases of every ``W_beta``, in HB coordinates of ``system.space``."""

    def __init__(self, system: GalerkinSystem, cap=DENSE_CAP):
        space = system.space
        if space.n > cap:
            raise CapExceeded(f"prewavelet oracle on dimension {space.n} exceeds cap {cap}")
        if system.mass is None:
            raise ValueError("prewavelet oracle needs the mass matrix")
        self.space = space
        M = system.mass.toarray()
        self.mass = M
        self.bases = {}
        for beta in space.blocks:
            sl = space.block_slices[beta]
            lower = np.concatenate([np.arange(space.block_slices[g].start, space.block_slices[g].stop)
                                    for g in space.blocks if g != beta and leq(g, beta)]
                                   or [np.zeros(0, dtype=np.int64)])
            W = np.zeros((space.n, sl.stop - sl.start))
            W[sl, :] = np.eye(sl.stop - sl.start)
            if len(lower):
                Mul = M[np.ix_(lower, lower)]
                rhs = M[np.ix_(lower, np.arange(sl.start, sl.stop))]
                W[lower, :] = -scipy.linalg.solve(Mul, rhs, assume_a="pos")
            gram = W.T @ M @ W
            ev = np.linalg.eigvalsh(gram)
            if ev[0] <= 1e-12 * ev[-1]:
                raise RuntimeError(f"W_{beta} is rank deficient; expected dimension {block_size(beta)}")
            R = scipy.linalg.cholesky(gram, lower=False)
            self.bases[beta] = scipy.linalg.solve_triangular(R, W.T, trans="T").T

    def dimension(self, beta):
        return self.bases[beta].shape[1]

    def decompose(self, c) -> dict:
        """Components ``w_beta`` (as HB coefficient vectors) of the function ``c``."""
        c = np.asarray(c, dtype=float)
        Mc = self.mass @ c
        return {beta: Q @ (Q.T @ Mc) for beta, Q in self.bases.items()}

    def pw_gram(self) -> np.ndarray:
        """Matrix of the PW norm ``sum 4**|beta|_inf ||w_beta||^2`` in HB coordinates."""
        P = np.zeros_like(self.mass)
        for beta, Q in self.bases.items():
            MQ = self.mass @ Q
            P += 4.0 ** linf(beta) * (MQ @ MQ.T)
        return 0.5 * (P + P.T)


def pw_decompose(system: GalerkinSystem, c, basis: PrewaveletBasis | None = None) -> dict:
    return (basis or PrewaveletBasis(system)).decompose(c)


def pw_norm_sq(decomposition: dict, mass) -> float:
    """``sum 4**|beta|_inf ||w_beta||_L2^2`` for a decomposition from :func:`pw_decompose`."""
    mass = mass.toarray() if hasattr(mass, "toarray") else mass
    return float(sum(4.0 ** linf(b) * (w @ mass @ w) for b, w in decomposition.items()))


def estimate_pw_constants(system: GalerkinSystem, cap=DENSE_CAP) -> PWConstants:
    """Extreme eigenvalues of the pencil (stiffness, PW Gram)."""
    P = PrewaveletBasis(system, cap).pw_gram()
    ev = scipy.linalg.eigh(system.stiffness.toarray(), P, eigvals_only=True)
    return PWConstants(float(ev[0]), float(ev[-1]))


def pw_constants_for(index_set, cap=DENSE_CAP) -> PWConstants:
    return estimate_pw_constants(GalerkinSystem.build(SparseGridSpace(index_set)), cap)
