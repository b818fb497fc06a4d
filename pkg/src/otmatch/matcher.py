"""Frank-Wolfe graph matching: one engine, two step-direction strategies.

With an exact LAP step direction this is the FAQ algorithm; with a
Sinkhorn-based LOT step direction it is GOAT. The two share initialization,
exact line search, stopping rule, seeding, restarts, and the final LAP
projection, so experiment parity between them is structural.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .core import (
    as_square_matrix,
    barycenter,
    invert_permutation,
    permutation_matrix,
    permute_matrix,
    qap_objective,
)
from .lap import solve_lap
from .sinkhorn import SinkhornParams, lot, sinkhorn_knopp

_STEP_SOLVERS = ("exact_lap", "lot")
_SENSES = ("minimize", "maximize")
_INITS = ("barycenter", "randomized_blend")


@dataclass(frozen=True)
class MatchOptions:
    """Solver configuration shared by FAQ (exact_lap) and GOAT (lot).

    init is "barycenter", "randomized_blend", or a supplied doubly
    stochastic matrix. shuffle_input applies a random relabeling to B per
    restart (composed back out of the reported alignment) to break LAP
    tie-ordering bias; benchmarks enable it, library use defaults off.
    """

    step_solver: str = "exact_lap"
    sinkhorn: SinkhornParams = field(default_factory=SinkhornParams)
    init: object = "barycenter"
    max_iters: int = 30
    fw_tol: float = 1e-2
    n_restarts: int = 1
    shuffle_input: bool = False
    rng_seed: int = 0
    objective_sense: str = "maximize"

    def __post_init__(self):
        if self.step_solver not in _STEP_SOLVERS:
            raise ValueError(f"step_solver must be one of {_STEP_SOLVERS}")
        if self.objective_sense not in _SENSES:
            raise ValueError(f"objective_sense must be one of {_SENSES}")
        if isinstance(self.init, str) and self.init not in _INITS:
            raise ValueError(
                f"init must be one of {_INITS} or a doubly stochastic matrix"
            )
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.fw_tol <= 0:
            raise ValueError("fw_tol must be positive")
        if self.n_restarts < 1:
            raise ValueError("n_restarts must be at least 1")


@dataclass(frozen=True)
class MatchResult:
    """Alignment found by one matching run (best restart)."""

    alignment: np.ndarray
    objective: float
    iterations: int
    iterate_history: list
    converged: bool
    wall_time: float


@dataclass(frozen=True)
class SeedSet:
    """Known vertex correspondences (G1 vertex, G2 vertex), fixed up front."""

    pairs: np.ndarray

    def __post_init__(self):
        pairs = np.asarray(self.pairs, dtype=np.intp).reshape(-1, 2)
        object.__setattr__(self, "pairs", pairs)
        for side in (0, 1):
            col = pairs[:, side]
            if np.unique(col).size != col.size:
                raise ValueError("duplicate vertex in seed set")

    @property
    def count(self) -> int:
        return self.pairs.shape[0]


def gradient(A, B, P) -> np.ndarray:
    """Gradient of trace(A^T P B P^T): A P B^T + A^T P B."""
    A = as_square_matrix(A, "A")
    B = as_square_matrix(B, "B")
    P = as_square_matrix(P, "P")
    if not (A.shape == B.shape == P.shape):
        raise ValueError(f"order mismatch: {A.shape[0]}, {B.shape[0]}, {P.shape[0]}")
    return A @ P @ B.T + A.T @ P @ B


def _line_search_coeffs(A, B, L, P, Q):
    """Coefficients (c2, c1) of g(a) = f(aP + (1-a)Q) minus its constant.

    f(P) = trace(A^T P B P^T) + trace(L^T P); with D = P - Q the quadratic
    part contributes c2 = tr(A^T D B D^T) and
    c1 = tr(A^T D B Q^T) + tr(A^T Q B D^T), the linear part adds tr(L^T D).
    """
    D = P - Q
    c2 = float((A.T @ D @ B * D).sum())
    c1 = float((A.T @ D @ B * Q).sum() + (A.T @ Q @ B * D).sum())
    if L is not None:
        c1 += float((L * D).sum())
    return c2, c1


def _optimal_alpha(c2: float, c1: float, sense: str) -> float:
    """Exact optimizer of c2*a^2 + c1*a over [0, 1] for the given sense."""
    if c2 != 0.0:
        crit = -c1 / (2.0 * c2)
        concave_ok = c2 < 0 if sense == "maximize" else c2 > 0
        if concave_ok and 0.0 <= crit <= 1.0:
            return crit
    end = c2 + c1  # g(1) - g(0)
    if sense == "maximize":
        return 1.0 if end >= 0.0 else 0.0
    return 1.0 if end <= 0.0 else 0.0


def exact_line_search(A, B, P, Q, sense: str = "maximize") -> float:
    """Exact step size over [0, 1] for the convex update a*P + (1-a)*Q.

    The objective restricted to the segment is an exact quadratic in a;
    returns its interior critical point when admissible, else the better
    endpoint. Q = P degenerates to a constant; returns 1 by convention.
    """
    A = as_square_matrix(A, "A")
    B = as_square_matrix(B, "B")
    P = as_square_matrix(P, "P")
    Q = as_square_matrix(Q, "Q")
    if not (A.shape == B.shape == P.shape == Q.shape):
        raise ValueError("order mismatch in line search")
    if sense not in _SENSES:
        raise ValueError(f"sense must be one of {_SENSES}")
    c2, c1 = _line_search_coeffs(A, B, None, P, Q)
    return _optimal_alpha(c2, c1, sense)


def random_doubly_stochastic(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform(0,1) matrix balanced to doubly stochastic via Sinkhorn-Knopp."""
    if n < 1:
        raise ValueError("order must be positive")
    K = rng.uniform(size=(n, n))
    return sinkhorn_knopp(K).matrix


def randomized_blend_init(n: int, rng: np.random.Generator) -> np.ndarray:
    """Half barycenter, half random doubly stochastic matrix."""
    return 0.5 * (barycenter(n) + random_doubly_stochastic(n, rng))


def _objective(A, B, L, P) -> float:
    val = float((A.T @ P @ B * P).sum())
    if L is not None:
        val += float((L * P).sum())
    return val


def _fw_core(A, B, L, P0, opts: MatchOptions):
    """One Frank-Wolfe run on the (possibly seed-reduced) problem.

    Returns (projected assignment, history, iterations, converged).
    """
    sense = opts.objective_sense
    P = P0
    history = [(0, _objective(A, B, L, P), None)]
    converged = False
    iterations = 0
    for i in range(1, opts.max_iters + 1):
        G = gradient(A, B, P)
        if L is not None:
            G = G + L
        if opts.step_solver == "exact_lap":
            Q = permutation_matrix(solve_lap(G, sense).assignment)
        else:
            Q = lot(G, sense, opts.sinkhorn).matrix
        c2, c1 = _line_search_coeffs(A, B, L, P, Q)
        alpha = _optimal_alpha(c2, c1, sense)
        P_new = alpha * P + (1.0 - alpha) * Q
        history.append((i, _objective(A, B, L, P_new), alpha))
        iterations = i
        step = float(np.linalg.norm(P_new - P))
        P = P_new
        if step < opts.fw_tol:
            converged = True
            break
    G = gradient(A, B, P)
    if L is not None:
        G = G + L
    # Project the final gradient onto the permutations in the optimization
    # sense (the maximize form of the printed return line, applied
    # sense-consistently so minimization problems project to their argmin).
    assignment = solve_lap(G, sense).assignment
    return assignment, history, iterations, converged


def _initial_iterate(n: int, opts: MatchOptions, rng: np.random.Generator) -> np.ndarray:
    if isinstance(opts.init, str):
        if opts.init == "barycenter":
            return barycenter(n)
        return randomized_blend_init(n, rng)
    P0 = as_square_matrix(opts.init, "init")
    if P0.shape[0] != n:
        raise ValueError(f"supplied init has order {P0.shape[0]}, expected {n}")
    return P0


def _better(a: float, b: float, sense: str) -> bool:
    return a > b if sense == "maximize" else a < b


def _run_seeded(A, B, seed_pairs: np.ndarray, opts: MatchOptions) -> MatchResult:
    """Shared engine: seed blocks (possibly empty) plus restart loop."""
    t0 = time.perf_counter()
    A = as_square_matrix(A, "A")
    B = as_square_matrix(B, "B")
    if A.shape != B.shape:
        raise ValueError(f"order mismatch: {A.shape[0]} vs {B.shape[0]}")
    n = A.shape[0]
    m = seed_pairs.shape[0]
    if m >= n:
        raise ValueError(f"seed count {m} must be less than order {n}")
    if m and (seed_pairs.min() < 0 or seed_pairs.max() >= n):
        raise ValueError("seed vertex out of range")

    # Reorder so seed pairs sit identity-aligned at indices [0, m).
    free1 = np.setdiff1d(np.arange(n), seed_pairs[:, 0]) if m else np.arange(n)
    free2 = np.setdiff1d(np.arange(n), seed_pairs[:, 1]) if m else np.arange(n)
    order1 = np.concatenate([seed_pairs[:, 0], free1]).astype(np.intp)
    order2 = np.concatenate([seed_pairs[:, 1], free2]).astype(np.intp)
    Ar = A[np.ix_(order1, order1)]
    Br = B[np.ix_(order2, order2)]
    nf = n - m

    best = None
    for r in range(opts.n_restarts):
        rng = np.random.default_rng([opts.rng_seed, r])
        if opts.shuffle_input and nf > 1:
            shuf = rng.permutation(nf).astype(np.intp)
        else:
            shuf = np.arange(nf, dtype=np.intp)
        # Relabel the free block of G2 by shuf (seed rows/columns follow).
        inv_shuf = invert_permutation(shuf)
        B22 = permute_matrix(Br[m:, m:], shuf)
        B12 = Br[:m, m:][:, inv_shuf]
        B21 = Br[m:, :m][inv_shuf, :]
        A22 = Ar[m:, m:]
        if m:
            L = Ar[m:, :m] @ B21.T + Ar[:m, m:].T @ B12
        else:
            L = None

        if nf == 1:
            p22 = np.zeros(1, dtype=np.intp)
            history, iters, conv = [(0, _objective(A22, B22, L, np.ones((1, 1))), None)], 0, True
        else:
            P0 = _initial_iterate(nf, opts, rng)
            p22, history, iters, conv = _fw_core(A22, B22, L, P0, opts)

        # Undo the shuffle, then map block indices back to original labels.
        p22 = inv_shuf[p22]
        align = np.empty(n, dtype=np.intp)
        align[order1[:m]] = order2[:m]
        align[order1[m:]] = order2[m + p22]
        obj = qap_objective(A, B, align)
        if best is None or _better(obj, best[1], opts.objective_sense):
            best = (align, obj, iters, history, conv)

    align, obj, iters, history, conv = best
    return MatchResult(
        alignment=align,
        objective=obj,
        iterations=iters,
        iterate_history=history,
        converged=conv,
        wall_time=time.perf_counter() - t0,
    )


def frank_wolfe_match(A, B, opts: MatchOptions = MatchOptions()) -> MatchResult:
    """Match two equal-order graphs; FAQ or GOAT depending on step_solver."""
    return _run_seeded(A, B, np.empty((0, 2), dtype=np.intp), opts)


def seeded_match(A, B, seeds: SeedSet, opts: MatchOptions = MatchOptions()) -> MatchResult:
    """Match with a fixed partial correspondence.

    Seed pairs are pinned exactly in the returned alignment; Frank-Wolfe
    runs over the free block only, with the seed-cross terms entering the
    gradient as a constant linear term.
    """
    return _run_seeded(A, B, seeds.pairs, opts)
