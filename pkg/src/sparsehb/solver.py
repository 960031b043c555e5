"""Diagonally preconditioned CG on the HB Galerkin system, and model load vectors."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .assembly import GalerkinSystem
from .basis import SparseGridSpace
from .errors import ConvergenceError
from .index_sets import l1

GAUSS_POINTS = 6
# coarse hats are split into cells no wider than 2**-GAUSS_MIN_LEVEL
GAUSS_MIN_LEVEL = 3


@dataclass
class SolveStats:
    iterations: int
    residual_history: list = field(default_factory=list)
    final_relative_residual: float = 0.0
    seed: int = 0

    def as_dict(self):
        return asdict(self)


def pcg(system: GalerkinSystem, b, tol=1e-8, maxit=10_000, x0=None, callback=None, seed=0):
    """Solve ``G x = b`` with preconditioner ``D^-1``.

    Stops when ``sqrt(r^T D^-1 r) / sqrt(b^T D^-1 b) <= tol``; the history
    records that relative preconditioned residual after every iteration.
    ``callback(x)`` is called after each update.
    """
    G, dinv = system.stiffness, 1.0 / system.scaling
    b = np.asarray(b, dtype=float)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - G @ x
    z = dinv * r
    bnorm = np.sqrt(b @ (dinv * b))
    stats = SolveStats(0, [], 0.0, seed)
    if bnorm == 0.0:
        return np.zeros_like(b), stats
    rz = r @ z
    res = np.sqrt(rz) / bnorm
    if res <= tol:
        stats.final_relative_residual = float(res)
        return x, stats
    p = z.copy()
    for it in range(1, maxit + 1):
        Gp = G @ p
        step = rz / (p @ Gp)
        x += step * p
        r -= step * Gp
        z = dinv * r
        rz_new = r @ z
        res = np.sqrt(max(rz_new, 0.0)) / bnorm
        stats.residual_history.append(float(res))
        stats.iterations = it
        stats.final_relative_residual = float(res)
        if callback is not None:
            callback(x)
        if res <= tol:
            return x, stats
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise ConvergenceError(f"PCG did not reach tol={tol} in {maxit} iterations", partial=(x, stats))


def _hat_sine_integral(level, offset):
    """``int phi_{level,offset}(t) sin(pi t) dt`` by Gauss rules on the hat's linear pieces."""
    nodes, weights = np.polynomial.legendre.leggauss(GAUSS_POINTS)
    h = 2.0 ** -level
    centre = (2 * offset + 1) * h
    cells = 2 ** max(GAUSS_MIN_LEVEL - level, 0)
    w = h / cells
    left = centre - h + w * np.arange(2 * cells)
    t = (left[:, None] + 0.5 * w * (nodes[None, :] + 1)).ravel()
    hatv = 1.0 - np.abs(t - centre) / h
    return 0.5 * w * float(np.sum(np.tile(weights, 2 * cells) * hatv * np.sin(np.pi * t)))


def model_rhs(space: SparseGridSpace, f="constant_one") -> np.ndarray:
    """Load vector ``b_alpha = int f phi_alpha`` for a model right-hand side.

    ``constant_one`` is exact (``2**-|beta|_1``); ``product_sine`` is
    ``prod_i sin(pi x_i)`` integrated per direction with 6-point Gauss rules on
    cells of width at most 1/8 inside each linear piece of the hat, which is
    accurate to rounding.
    """
    if f == "constant_one":
        return np.ldexp(1.0, -space.levels.sum(axis=1).astype(int))
    if f == "product_sine":
        cache = {}
        out = np.ones(space.n)
        for j in range(space.d):
            for idx, (lev, off) in enumerate(zip(space.levels[:, j], space.offsets[:, j])):
                key = (int(lev), int(off))
                if key not in cache:
                    cache[key] = _hat_sine_integral(*key)
                out[idx] *= cache[key]
        return out
    raise ValueError(f"unknown right-hand side {f!r}")


def exact_center_value(f: str, d: int) -> float:
    """Value at the cube centre of the exact solution of ``-Laplace u = f``, ``u = 0`` on the boundary."""
    if f == "product_sine":
        return 1.0 / (d * np.pi ** 2)
    raise ValueError(f"no closed-form solution for {f!r}")


def hat_integral(beta) -> float:
    return 2.0 ** -l1(beta)
