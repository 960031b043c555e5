"""Explicit test functions whose Rayleigh quotients bound the extreme eigenvalues.

* ``s_bar`` (all-ones HB coefficients on a set of blocks): restricted to the
  largest one-direction slice of the fullest level, it certifies a lower bound
  on ``lambda_max`` proportional to ``n_Lambda``.
* ``psi_beta`` (the full-grid hat centred in the cube): its HB norm grows like
  ``2**|beta|_inf`` while its energy shrinks, certifying an upper bound on
  ``lambda_min``.

Rayleigh quotients are ``h1_sq / hb_sq``, i.e. the quotient of the
preconditioned operator at the coefficient vector.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from .assembly import GalerkinSystem
from .basis import SparseGridSpace, block_l2_norm_sq
from .index_sets import (IndexSet, block_order_key, bounds_quantities, l1, level_partition,
                         linf, make_full_grid, monotone_closure)


@dataclass(frozen=True)
class WitnessReport:
    kind: str
    hb_sq: float
    h1_sq: float
    l2_sq: float
    rayleigh: float
    bound_direction: str
    blocks: tuple = ()
    details: dict = None

    def as_dict(self):
        out = asdict(self)
        out["blocks"] = [list(b) for b in self.blocks]
        return out


def psi_hb_coeffs(beta):
    """HB coefficients of ``psi_beta`` on the full grid over ``closure{beta}``.

    Returns ``(space, coeffs)``.  A block with ``r`` components above 1 holds
    ``2**r`` nonzero coefficients, each ``(-1/2)**r``: per direction the hat of
    width ``2**(1-m)`` at 1/2 equals the level-1 hat minus half of the two
    level-``l`` hats adjacent to 1/2, for ``l = 2..m``.
    """
    space = SparseGridSpace(make_full_grid(beta))
    c = np.zeros(space.n)
    for blk, sl in space.block_slices.items():
        shape = tuple(2 ** (b - 1) for b in blk)
        # adjacent to 1/2 on level l: offsets 2**(l-2) - 1 and 2**(l-2)
        per_dim = [[0] if b == 1 else [2 ** (b - 2) - 1, 2 ** (b - 2)] for b in blk]
        r = sum(b > 1 for b in blk)
        idx = np.ravel_multi_index(np.meshgrid(*per_dim, indexing="ij"), shape).ravel()
        c[sl.start + idx] = (-0.5) ** r
    return space, c


def psi_hb_norm_exact(beta) -> Fraction:
    """Exact ``||psi_beta||_HB^2`` from the blockwise L2 formula."""
    d = len(beta)
    total = Fraction(0)
    for b in make_full_grid(beta):
        r = sum(x > 1 for x in b)
        block = Fraction(2 ** d, 3 ** d) / 2 ** l1(b) * Fraction(2 ** r, 4 ** r)
        total += 4 ** linf(b) * block
    return total


def psi_h1_norm_exact(beta) -> Fraction:
    """``||psi_beta||_H1^2``: per direction the hat has L2^2 ``(2/3) 2**-b`` and H1^2 ``2**(b+1)``."""
    l2 = [Fraction(2, 3) / 2 ** b for b in beta]
    h1 = [Fraction(2 ** (b + 1)) for b in beta]
    total = Fraction(0)
    for i in range(len(beta)):
        term = h1[i]
        for j, v in enumerate(l2):
            if j != i:
                term *= v
        total += term
    return total


def psi_norm_report(beta, system: GalerkinSystem | None = None) -> WitnessReport:
    """Norms of ``psi_beta`` and the HB lower bound chain.

    ``details`` carries the exact HB norm, the intermediate bound
    ``3**-d sum 2**(2|b|_inf - |b|_1)``, the final bound
    ``2**|beta|_inf 3**-d 2**(1-d)`` and the measured constant
    ``hb_sq / 2**|beta|_inf``.
    """
    beta = tuple(beta)
    d = len(beta)
    space, c = psi_hb_coeffs(beta)
    if system is None or system.space.index_set != space.index_set:
        system = GalerkinSystem.build(space)
    l2, h1, hb = system.norms(c)
    exact = psi_hb_norm_exact(beta)
    chain = Fraction(1, 3 ** d) * sum(Fraction(4 ** linf(b), 2 ** l1(b)) for b in make_full_grid(beta))
    final = Fraction(2 ** linf(beta), 3 ** d * 2 ** (d - 1))
    details = {
        "hb_sq_exact": float(exact),
        "hb_lower_chain": float(chain),
        "hb_lower_final": float(final),
        "chain_holds": exact >= chain >= final,
        "c_measured": float(exact / 2 ** linf(beta)),
        "h1_sq_exact": float(psi_h1_norm_exact(beta)),
    }
    return WitnessReport("psi_beta", hb, h1, l2, h1 / hb, "upper_on_lambda_min", (beta,), details)


def sbar_coeffs(blocks, d=None):
    """All-ones HB coefficients on the listed blocks.

    The set may be arbitrary; the returned space is built over its monotone
    closure and blocks not listed get zero coefficients.  Returns
    ``(space, coeffs)``.
    """
    blocks = [tuple(b) for b in blocks]
    space = SparseGridSpace(monotone_closure(blocks, d))
    c = np.zeros(space.n)
    for b in blocks:
        c[space.block_slices[b]] = 1.0
    return space, c


def sbar_hb_norm_exact(blocks) -> Fraction:
    """``3**-d sum 4**|beta|_inf`` over the listed blocks."""
    blocks = [tuple(b) for b in blocks]
    d = len(blocks[0])
    return Fraction(sum(4 ** linf(b) for b in blocks), 3 ** d)


def upper_witness_slice(lam: IndexSet):
    """``Lambda_{k,i}``: fullest level ``k``, then the direction ``i`` with the
    most members having ``beta_i = k`` (smallest ``i`` on ties)."""
    part = level_partition(lam)
    sizes = {k: len(s) for k, s in part.slices.items()}
    n_lambda = max(sizes.values())
    k = min(kk for kk, v in sizes.items() if v == n_lambda)
    slices = [[b for b in part[k] if b[i] == k] for i in range(lam.d)]
    i = max(range(lam.d), key=lambda j: (len(slices[j]), -j))
    return k, i, sorted(slices[i], key=block_order_key)


def _embedded_report(kind, system, blocks, c_sub, sub, direction, details):
    c = system.space.embed(sub, c_sub)
    l2, h1, hb = system.norms(c)
    return WitnessReport(kind, hb, h1, l2, h1 / hb, direction, tuple(blocks), details)


def witness_upper(lam: IndexSet, system: GalerkinSystem | None = None) -> WitnessReport:
    """Rayleigh quotient of ``s_bar`` on the upper-witness slice (a lower bound on ``lambda_max``)."""
    system = system or GalerkinSystem.build(SparseGridSpace(lam))
    k, i, blocks = upper_witness_slice(lam)
    sub, c = sbar_coeffs(blocks, lam.d)
    n_lambda = bounds_quantities(lam).n_lambda
    d = lam.d
    bound = 3 ** d / (d * 4 ** d) * n_lambda
    rep = _embedded_report("sbar_slice", system, blocks, c, sub, "lower_on_lambda_max",
                           {"level": k, "direction": i, "n_lambda": n_lambda,
                            "explicit_bound": bound})
    rep.details["bound_holds"] = rep.rayleigh >= bound
    return rep


def sbar_report(blocks, system: GalerkinSystem | None = None) -> WitnessReport:
    """Norms of ``s_bar`` on an arbitrary block list, with the exact HB value
    and the L2 lower bound ``4**-d |blocks|**2``."""
    blocks = sorted({tuple(b) for b in blocks}, key=block_order_key)
    sub, c = sbar_coeffs(blocks)
    system = system or GalerkinSystem.build(sub)
    d = len(blocks[0])
    details = {"hb_sq_exact": float(sbar_hb_norm_exact(blocks)),
               "l2_lower_bound": len(blocks) ** 2 / 4 ** d}
    return _embedded_report("sbar", system, blocks, c, sub, "lower_on_lambda_max", details)


def witness_lower(lam: IndexSet, system: GalerkinSystem | None = None,
                  full_scan=False) -> WitnessReport:
    """Smallest ``psi_beta`` Rayleigh quotient (an upper bound on ``lambda_min``).

    Candidates are the maximal elements of the level slices, or every member
    with ``full_scan``.  Ties go to the first candidate in block order.
    """
    system = system or GalerkinSystem.build(SparseGridSpace(lam))
    if full_scan:
        candidates = list(lam)
    else:
        bq = bounds_quantities(lam)
        candidates = sorted({b for v in bq.maximal_sets.values() for b in v}, key=block_order_key)
    best = None
    for beta in candidates:
        sub, c = psi_hb_coeffs(beta)
        rep = _embedded_report("psi_beta", system, [beta], c, sub, "upper_on_lambda_min", None)
        if best is None or rep.rayleigh < best.rayleigh:
            best = rep
    ntp = bounds_quantities(lam).n_tilde_prime
    ratio = best.hb_sq / best.h1_sq
    return WitnessReport(best.kind, best.hb_sq, best.h1_sq, best.l2_sq, best.rayleigh,
                         best.bound_direction, best.blocks,
                         {"hb_over_h1": ratio, "n_tilde_prime": ntp,
                          "c_measured": ratio / ntp, "candidates": len(candidates)})


def psi_from_nodal(beta):
    """``psi_beta`` sampled at the grid points of ``closure{beta}`` (for cross-checks)."""
    space = SparseGridSpace(make_full_grid(beta))
    x = space.points
    vals = np.prod([np.maximum(1 - np.abs(np.ldexp(x[:, j], b) - 2 ** (b - 1)), 0)
                    for j, b in enumerate(beta)], axis=0)
    return space, vals


def hb_norm_blockwise(space: SparseGridSpace, c) -> float:
    """HB norm as ``sum 4**|beta|_inf ||s_beta||^2`` with the blockwise L2 formula."""
    return sum(4.0 ** linf(b) * block_l2_norm_sq(b, np.asarray(c)[sl])
               for b, sl in space.block_slices.items())

