"""Core matrix/graph types, objectives, metrics, and preprocessing.

Matrices are plain dense float ``numpy`` arrays of shape (n, n); permutations
are length-n integer arrays mapping row index i to column index p[i].
Everything here is a pure function of its inputs.
"""

from __future__ import annotations

import numpy as np
from scipy.stats import rankdata

#: Tolerance for the doubly stochastic row/column-sum invariant.
DS_TOL = 1e-8


def as_square_matrix(M, name: str = "matrix") -> np.ndarray:
    """Validate and return M as a dense float square matrix.

    Raises ValueError if M is not square or contains non-finite entries.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be square, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} contains non-finite entries")
    return M


def as_permutation(p, name: str = "permutation") -> np.ndarray:
    """Validate and return p as a length-n bijection vector over [0, n)."""
    p = np.asarray(p)
    if p.ndim != 1:
        raise ValueError(f"{name} must be a 1-D index vector, got shape {p.shape}")
    if p.size and not np.issubdtype(p.dtype, np.integer):
        if not np.array_equal(p, p.astype(np.intp)):
            raise ValueError(f"{name} has non-integer entries")
    p = p.astype(np.intp)
    n = p.size
    if not np.array_equal(np.sort(p), np.arange(n)):
        raise ValueError(f"{name} is not a bijection of [0, {n})")
    return p


def as_doubly_stochastic(P, tol: float = DS_TOL, name: str = "matrix") -> np.ndarray:
    """Validate that P is doubly stochastic at tolerance ``tol`` and return it.

    Rejects negative entries and any row or column sum further than ``tol``
    from 1.
    """
    P = as_square_matrix(P, name)
    if P.size and P.min() < -tol:
        raise ValueError(f"{name} has negative entries (min {P.min():.3e})")
    row_dev = np.abs(P.sum(axis=1) - 1.0).max(initial=0.0)
    col_dev = np.abs(P.sum(axis=0) - 1.0).max(initial=0.0)
    if row_dev > tol or col_dev > tol:
        raise ValueError(
            f"{name} is not doubly stochastic at tol {tol:g} "
            f"(row dev {row_dev:.3e}, col dev {col_dev:.3e})"
        )
    return P


def permutation_matrix(p) -> np.ndarray:
    """Dense n×n 0/1 matrix view of a permutation vector (P[i, p[i]] = 1)."""
    p = as_permutation(p)
    n = p.size
    P = np.zeros((n, n))
    P[np.arange(n), p] = 1.0
    return P


def invert_permutation(p) -> np.ndarray:
    p = as_permutation(p)
    inv = np.empty_like(p)
    inv[p] = np.arange(p.size)
    return inv


def compose_permutations(p, q) -> np.ndarray:
    """Composition r with r[i] = q[p[i]] (apply p, then q)."""
    p = as_permutation(p)
    q = as_permutation(q)
    if p.size != q.size:
        raise ValueError(f"length mismatch: {p.size} vs {q.size}")
    return q[p]


def barycenter(n: int) -> np.ndarray:
    """The doubly stochastic barycenter: all entries 1/n."""
    if n < 1:
        raise ValueError("order must be positive")
    return np.full((n, n), 1.0 / n)


def _as_dense_ds(P) -> np.ndarray:
    """Accept a permutation vector or a dense matrix; return the dense form."""
    arr = np.asarray(P)
    if arr.ndim == 1:
        return permutation_matrix(arr)
    return as_square_matrix(arr, "P")


def _check_orders(*mats) -> int:
    orders = [m.shape[0] for m in mats]
    if len(set(orders)) != 1:
        raise ValueError(f"order mismatch: {orders}")
    return orders[0]


def qap_objective(A, B, P) -> float:
    """QAP objective trace(A^T P B P^T).

    P may be a permutation vector or any dense (typically doubly stochastic)
    matrix; the value agrees between a permutation and its dense embedding.
    """
    A = as_square_matrix(A, "A")
    B = as_square_matrix(B, "B")
    arr = np.asarray(P)
    if arr.ndim == 1:
        p = as_permutation(arr)
        _check_orders(A, B, np.empty((p.size, p.size)))
        # trace(A^T P B P^T) = sum_ij A_ij B_{p(i) p(j)}
        return float((A * B[np.ix_(p, p)]).sum())
    Pd = as_square_matrix(arr, "P")
    _check_orders(A, B, Pd)
    return float(np.trace(A.T @ Pd @ B @ Pd.T))


def edge_disagreements(A, B, p) -> float:
    """Squared Frobenius norm ||A - P B P^T||_F^2 for a permutation p.

    Zero exactly when p is an isomorphism between A and B.
    """
    A = as_square_matrix(A, "A")
    B = as_square_matrix(B, "B")
    p = as_permutation(p)
    _check_orders(A, B, np.empty((p.size, p.size)))
    # A's edge (i, j) is compared against B's edge (p(i), p(j)).
    return float(((A - B[np.ix_(p, p)]) ** 2).sum())


def match_ratio(found, truth) -> float:
    """Fraction of indices where two alignments agree, in [0, 1]."""
    found = as_permutation(found, "found")
    truth = as_permutation(truth, "truth")
    if found.size != truth.size:
        raise ValueError(f"length mismatch: {found.size} vs {truth.size}")
    return float(np.mean(found == truth))


def permute_matrix(B, p) -> np.ndarray:
    """Relabel B by permutation p: vertex v of B becomes vertex p[v].

    out[p[i], p[j]] = B[i, j], i.e. out[i, j] = B[p^-1(i), p^-1(j)].
    Relabeling B this way makes p the ground-truth alignment from any
    matrix identity-aligned with B to the output.
    """
    B = as_square_matrix(B, "B")
    p = as_permutation(p)
    _check_orders(B, np.empty((p.size, p.size)))
    inv = invert_permutation(p)
    return B[np.ix_(inv, inv)]


def pass_to_ranks(W) -> np.ndarray:
    """Rank-transform the nonzero entries of a weighted matrix into (0, 1).

    Zeros stay zero; each nonzero weight becomes rank / (nnz + 1) where rank
    is its 1-based average rank among all nonzero entries of the matrix.
    Invariant under strictly monotone reweighting; symmetric inputs stay
    symmetric because tied symmetric pairs share an average rank.
    """
    W = as_square_matrix(W, "W")
    if W.size and W.min() < 0:
        raise ValueError("pass_to_ranks requires nonnegative weights")
    out = np.zeros_like(W)
    mask = W != 0
    nnz = int(mask.sum())
    if nnz == 0:
        return out
    ranks = rankdata(W[mask], method="average")
    out[mask] = ranks / (nnz + 1)
    return out


# --- text formats used by the CLI ------------------------------------------

def parse_matrix_text(text: str) -> np.ndarray:
    """Parse the matrix text format: n followed by n^2 row-major entries."""
    tokens = text.split()
    if not tokens:
        raise ValueError("empty matrix text")
    try:
        n = int(tokens[0])
    except ValueError:
        raise ValueError(f"expected integer order, got {tokens[0]!r}") from None
    if n < 1:
        raise ValueError(f"order must be positive, got {n}")
    body = tokens[1:]
    if len(body) != n * n:
        raise ValueError(f"expected {n * n} entries, found {len(body)}")
    try:
        entries = np.array([float(t) for t in body])
    except ValueError as e:
        raise ValueError(f"non-numeric matrix entry: {e}") from None
    return as_square_matrix(entries.reshape(n, n))


def format_matrix_text(M) -> str:
    M = as_square_matrix(M)
    lines = [str(M.shape[0])]
    lines += [" ".join(repr(x) for x in row) for row in M.tolist()]
    return "\n".join(lines) + "\n"


def parse_permutation_text(text: str) -> np.ndarray:
    """Parse the permutation text format: n whitespace-separated 0-based indices."""
    tokens = text.split()
    try:
        p = np.array([int(t) for t in tokens], dtype=np.intp)
    except ValueError as e:
        raise ValueError(f"non-integer permutation entry: {e}") from None
    return as_permutation(p)


def format_permutation_text(p) -> str:
    p = as_permutation(p)
    return " ".join(str(int(i)) for i in p) + "\n"
