"""Sinkhorn-Knopp matrix balancing and the LOT relaxed-LAP solver.

LOT replaces an exact linear assignment with Sinkhorn scaling of the Gibbs
kernel exp(-lambda * M), producing a doubly stochastic near-optimizer of
trace(P^T M) over the Birkhoff polytope. The cost matrix is shifted and
rescaled to unit range before exponentiation so the kernel exponent lies in
[-lambda, 0] regardless of the cost scale; lambda is therefore interpreted
against a unit-scaled cost matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .core import as_square_matrix


@dataclass(frozen=True)
class SinkhornParams:
    """Balancing controls: regularization strength and stopping rule.

    lam is the entropic-regularization inverse temperature; tol bounds the
    worst row/column marginal deviation from 1; one sweep is a full row
    normalization followed by a full column normalization.
    """

    lam: float = 100.0
    max_sweeps: int = 1000
    tol: float = 1e-8

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lam must be positive")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be at least 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")


@dataclass(frozen=True)
class SinkhornResult:
    """Balanced matrix plus convergence diagnostics."""

    matrix: np.ndarray
    converged: bool
    sweeps: int
    deviation: float


def _marginal_deviation(P: np.ndarray) -> float:
    return max(
        np.abs(P.sum(axis=1) - 1.0).max(),
        np.abs(P.sum(axis=0) - 1.0).max(),
    )


def sinkhorn_knopp(K, params: SinkhornParams = SinkhornParams()) -> SinkhornResult:
    """Balance a strictly positive matrix to doubly stochastic form.

    Returns diag(u) K diag(v) with every row and column sum within
    params.tol of 1 when converged; otherwise the best iterate with
    converged=False and the achieved deviation.
    """
    K = as_square_matrix(K, "K")
    if K.min() <= 0:
        raise ValueError("sinkhorn_knopp requires strictly positive entries")
    dev = _marginal_deviation(K)
    if dev < params.tol:
        return SinkhornResult(K, True, 0, dev)

    n = K.shape[0]
    v = np.ones(n)
    Kv = K @ v
    for sweep in range(1, params.max_sweeps + 1):
        u = 1.0 / Kv
        v = 1.0 / (K.T @ u)
        Kv = K @ v
        # Columns are exact after the v update; only rows can deviate.
        dev = float(np.abs(u * Kv - 1.0).max())
        if dev < params.tol:
            return SinkhornResult(u[:, None] * K * v[None, :], True, sweep, dev)
    return SinkhornResult(u[:, None] * K * v[None, :], False, params.max_sweeps, dev)


def _sinkhorn_log(logK: np.ndarray, params: SinkhornParams) -> SinkhornResult:
    """Log-domain balancing for kernels whose entries underflow to zero."""
    n = logK.shape[0]
    f = np.zeros(n)
    g = np.zeros(n)
    for sweep in range(1, params.max_sweeps + 1):
        f = -logsumexp(logK + g[None, :], axis=1)
        g = -logsumexp(logK + f[:, None], axis=0)
        P = np.exp(logK + f[:, None] + g[None, :])
        dev = _marginal_deviation(P)
        if dev < params.tol:
            return SinkhornResult(P, True, sweep, dev)
    return SinkhornResult(P, False, params.max_sweeps, dev)


def lot(M, sense: str = "minimize", params: SinkhornParams = SinkhornParams()) -> SinkhornResult:
    """Relaxed LAP via Lightspeed Optimal Transport.

    Approximately optimizes trace(P^T M) over doubly stochastic P in the
    requested sense by Sinkhorn-balancing the Gibbs kernel of the shifted,
    unit-scaled cost. The shift leaves the relaxed argmin unchanged;
    maximization is realized by negating the cost. As lam grows the achieved
    trace approaches the exact LAP optimum.
    """
    M = as_square_matrix(M, "M")
    if sense not in ("minimize", "maximize"):
        raise ValueError(f"sense must be minimize or maximize, got {sense!r}")
    if sense == "maximize":
        shifted = M.max() - M
    else:
        shifted = M - M.min()
    scale = shifted.max()
    n = M.shape[0]
    if scale == 0.0:
        # Constant cost: every doubly stochastic matrix ties; return the
        # barycenter, the kernel's own balanced form.
        return SinkhornResult(np.full((n, n), 1.0 / n), True, 0, 0.0)
    exponent = (-params.lam / scale) * shifted
    K = np.exp(exponent)
    if K.min() <= 0.0:
        # Some entry underflowed; balance in the log domain instead.
        return _sinkhorn_log(exponent, params)
    return sinkhorn_knopp(K, params)
