"""Exact linear assignment: optimal permutations for trace(Q^T M).

Backed by scipy's shortest-augmenting-path solver (Jonker-Volgenant class,
O(n^3) on dense inputs). Row order is processed deterministically, so
identical inputs always produce identical assignments; ties are settled by
the input's row/column ordering rather than randomly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import as_permutation, as_square_matrix

_SENSES = ("minimize", "maximize")

#: Largest order accepted by the exhaustive tie enumeration.
TIE_SET_MAX_N = 10


def _check_sense(sense: str) -> str:
    if sense not in _SENSES:
        raise ValueError(f"sense must be one of {_SENSES}, got {sense!r}")
    return sense


@dataclass(frozen=True)
class LapSolution:
    """An optimal assignment and its objective trace(Q^T M)."""

    assignment: np.ndarray
    objective: float


def assignment_value(M, p) -> float:
    """trace(Q^T M) for the permutation p: sum of M[i, p[i]]."""
    M = as_square_matrix(M, "M")
    p = as_permutation(p)
    if p.size != M.shape[0]:
        raise ValueError(f"order mismatch: {M.shape[0]} vs {p.size}")
    return float(M[np.arange(p.size), p].sum())


def solve_lap(M, sense: str = "minimize") -> LapSolution:
    """Globally optimal permutation for trace(Q^T M) in the given sense.

    Deterministic: the same M always yields the same assignment.
    """
    M = as_square_matrix(M, "M")
    _check_sense(sense)
    rows, cols = linear_sum_assignment(M, maximize=(sense == "maximize"))
    p = np.empty(M.shape[0], dtype=np.intp)
    p[rows] = cols
    return LapSolution(assignment=p, objective=float(M[rows, cols].sum()))


def lap_tie_set(M, sense: str = "minimize", atol: float = 1e-9) -> list[np.ndarray]:
    """All permutations attaining the LAP optimum, by exhaustive enumeration.

    Small-n diagnostic only; raises for n > TIE_SET_MAX_N.
    """
    M = as_square_matrix(M, "M")
    _check_sense(sense)
    n = M.shape[0]
    if n > TIE_SET_MAX_N:
        raise ValueError(f"lap_tie_set is exhaustive; n = {n} exceeds {TIE_SET_MAX_N}")
    idx = np.arange(n)
    # Two passes: find the optimum, then collect everything within atol of it.
    best = solve_lap(M, sense).objective
    ties: list[np.ndarray] = []
    for perm in itertools.permutations(range(n)):
        p = np.array(perm, dtype=np.intp)
        if abs(float(M[idx, p].sum()) - best) <= atol:
            ties.append(p)
    return ties
