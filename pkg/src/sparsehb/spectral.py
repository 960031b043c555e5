"""Extreme eigenvalues and condition number of the HB-preconditioned operator.

Two independent routes: :func:`dense_extremal_eigs` runs a full LAPACK
eigensolve, :func:`lanczos_extremal_eigs` runs Lanczos with full
reorthogonalization.  For the smallest eigenvalue Lanczos is applied to the
inverse operator (shift-invert at zero, one sparse LU factorization).
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass

import numpy as np
import scipy.linalg
import scipy.sparse.linalg as spla

from .assembly import GalerkinSystem
from .errors import CapExceeded, ConvergenceError
from .index_sets import IndexSet, bounds_quantities

logger = logging.getLogger(__name__)

DENSE_CAP = 4000
DEFAULT_SEED = 42
DEFAULT_TOL = 1e-8
DEFAULT_MAXITER = 5000


@dataclass(frozen=True)
class SpectralReport:
    lambda_min: float
    lambda_max: float
    kappa: float
    method: str
    residual_tol: float = 0.0
    iterations: int = 0

    def as_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class SandwichReport:
    kappa: float
    lower: int
    upper: int
    ratio_lower: float
    ratio_upper: float

    def as_dict(self):
        return asdict(self)


def dense_extremal_eigs(system: GalerkinSystem, cap=DENSE_CAP) -> SpectralReport:
    """Full symmetric eigensolve of ``D^-1/2 G D^-1/2``."""
    if system.n > cap:
        raise CapExceeded(f"dense eigensolve of dimension {system.n} exceeds cap {cap}")
    A = system.preconditioned_matrix().toarray()
    ev = scipy.linalg.eigh(A, eigvals_only=True)
    lo, hi = float(ev[0]), float(ev[-1])
    return SpectralReport(lo, hi, hi / lo, "dense")


def lanczos(apply, n, tol=DEFAULT_TOL, maxiter=DEFAULT_MAXITER, seed=DEFAULT_SEED,
            check_every=10, residual=None):
    """Largest eigenpair of a symmetric operator by Lanczos with full reorthogonalization.

    ``residual(theta, y)`` returns the relative residual used as the stopping
    test (default: the Lanczos estimate ``|beta_m s_m| / theta``).  Returns
    ``(theta, y, iterations)``.
    """
    rng = np.random.default_rng(seed)
    q = rng.standard_normal(n)
    q /= np.linalg.norm(q)
    m_max = min(maxiter, n)
    Q = np.zeros((n, min(m_max, 128)))
    alpha = np.zeros(m_max)
    beta = np.zeros(m_max)
    best = None
    for m in range(m_max):
        if m == Q.shape[1]:
            Q = np.hstack([Q, np.zeros((n, min(m_max, 2 * m) - m))])
        Q[:, m] = q
        w = apply(q)
        alpha[m] = q @ w
        w -= Q[:, :m + 1] @ (Q[:, :m + 1].T @ w)
        w -= Q[:, :m + 1] @ (Q[:, :m + 1].T @ w)
        beta[m] = np.linalg.norm(w)
        breakdown = beta[m] <= 1e-14 * max(abs(alpha[m]), 1.0)
        done = breakdown or m + 1 == m_max
        if done or (m + 1) % check_every == 0:
            theta, s = scipy.linalg.eigh_tridiagonal(alpha[:m + 1], beta[:m])
            theta, s = theta[-1], s[:, -1]
            y = Q[:, :m + 1] @ s
            est = abs(beta[m] * s[-1]) / abs(theta) if not breakdown else 0.0
            res = est if residual is None or est > tol else residual(theta, y)
            best = (float(theta), y, m + 1, res)
            if res <= tol or (breakdown and residual is None):
                return float(theta), y, m + 1
            if breakdown:
                # invariant subspace found but explicit residual disagrees
                break
        q = w / beta[m]
    raise ConvergenceError(
        f"Lanczos did not reach tol={tol} after {best[2]} iterations (residual {best[3]:.3e})",
        partial=best)


def lanczos_extremal_eigs(apply, n, tol=DEFAULT_TOL, seed=DEFAULT_SEED, solve=None,
                          maxiter=DEFAULT_MAXITER) -> SpectralReport:
    """Extreme eigenvalues of an SPD operator.

    ``apply`` computes ``A x``.  ``solve`` computes ``A^-1 x``; when given, the
    smallest eigenvalue comes from Lanczos on the inverse, otherwise from
    Lanczos on ``-A``.  Both ends are accepted when the explicit relative
    residual ``||A y - lambda y|| / lambda`` of the unit Ritz vector is at
    most ``tol``.
    """
    def explicit(lam):
        return lambda theta, y: float(np.linalg.norm(apply(y) - lam(theta) * y) / abs(lam(theta)))

    logger.debug("lanczos n=%d tol=%g seed=%d", n, tol, seed)
    try:
        th_max, _, it_max = lanczos(apply, n, tol, maxiter, seed,
                                    residual=explicit(lambda t: t))
        if solve is not None:
            th, _, it_min = lanczos(solve, n, tol, maxiter, seed + 1,
                                    residual=explicit(lambda t: 1.0 / t))
            lam_min = 1.0 / th
        else:
            th, _, it_min = lanczos(lambda x: -apply(x), n, tol, maxiter, seed + 1,
                                    residual=explicit(lambda t: -t))
            lam_min = -th
    except ConvergenceError as exc:
        raise ConvergenceError(str(exc), partial=exc.partial) from None
    return SpectralReport(lam_min, th_max, th_max / lam_min, "lanczos", tol, it_max + it_min)


def system_lanczos_eigs(system: GalerkinSystem, tol=DEFAULT_TOL, seed=DEFAULT_SEED,
                        maxiter=DEFAULT_MAXITER) -> SpectralReport:
    A = system.preconditioned_matrix().tocsc()
    lu = spla.splu(A)
    return lanczos_extremal_eigs(lambda x: A @ x, system.n, tol, seed, solve=lu.solve,
                                 maxiter=maxiter)


def extremal_eigs(system: GalerkinSystem, method="auto", tol=DEFAULT_TOL, seed=DEFAULT_SEED,
                  cap=DENSE_CAP) -> SpectralReport:
    if method == "auto":
        method = "dense" if system.n <= cap else "lanczos"
    if method == "dense":
        return dense_extremal_eigs(system, cap)
    if method == "lanczos":
        return system_lanczos_eigs(system, tol, seed)
    raise ValueError(f"unknown method {method!r}")


def sandwich_check(lam: IndexSet, report: SpectralReport) -> SandwichReport:
    """Ratios of ``kappa`` to the lower/upper combinatorial bounds."""
    b = bounds_quantities(lam)
    lower = b.n_lambda * b.n_tilde_prime
    upper = b.n_lambda * b.n_tilde
    return SandwichReport(report.kappa, lower, upper, report.kappa / lower, report.kappa / upper)
