"""Correlated random graph pair generators with a planted correspondence.

The rho-correlated SBM draws two simple undirected graphs sharing block
structure: each edge slot is marginally Bernoulli(p_block) in both graphs,
and the indicator pair has correlation rho. rho = 1 gives isomorphic pairs,
rho = 0 independent ones. The Erdos-Renyi case is k = 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import as_square_matrix, permute_matrix


@dataclass(frozen=True)
class SbmSpec:
    """Block sizes, symmetric block edge-probability matrix, correlation."""

    block_sizes: tuple
    block_probs: np.ndarray
    rho: float

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.block_sizes)
        if not sizes or any(s < 1 for s in sizes):
            raise ValueError("block_sizes must be positive integers")
        probs = np.asarray(self.block_probs, dtype=float)
        k = len(sizes)
        if probs.shape != (k, k):
            raise ValueError(f"block_probs must be {k}x{k}, got {probs.shape}")
        if not np.allclose(probs, probs.T):
            raise ValueError("block_probs must be symmetric")
        if probs.min() < 0 or probs.max() > 1:
            raise ValueError("block_probs entries must lie in [0, 1]")
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError("rho must lie in [0, 1]")
        object.__setattr__(self, "block_sizes", sizes)
        object.__setattr__(self, "block_probs", probs)

    @property
    def n(self) -> int:
        return sum(self.block_sizes)


def sample_sbm_pair(spec: SbmSpec, rng: np.random.Generator):
    """Draw a rho-correlated SBM pair (A, B) with identity correspondence.

    Conditional construction per edge slot with block probability p:
    A ~ Bern(p); B ~ Bern(p + rho*(1-p)) where A = 1, Bern(p*(1-rho))
    where A = 0. This yields marginal Bern(p) for B and corr(A, B) = rho.
    """
    n = spec.n
    labels = np.repeat(np.arange(len(spec.block_sizes)), spec.block_sizes)
    P = spec.block_probs[np.ix_(labels, labels)]
    rho = spec.rho

    U = rng.uniform(size=(n, n))
    A = (U < P).astype(float)
    V = rng.uniform(size=(n, n))
    p_if_edge = P + rho * (1.0 - P)
    p_if_gap = P * (1.0 - rho)
    B = np.where(A == 1.0, (V < p_if_edge), (V < p_if_gap)).astype(float)

    # Keep the upper triangle, mirror, and clear the diagonal (simple graphs).
    iu = np.triu_indices(n, 1)
    for M in (A, B):
        M[np.tril_indices(n)] = 0.0
        M[(iu[1], iu[0])] = M[iu]
    return A, B


def sample_er_pair(n: int, p: float, rho: float, rng: np.random.Generator):
    """rho-correlated Erdos-Renyi pair: the single-block SBM special case."""
    spec = SbmSpec(block_sizes=(n,), block_probs=np.array([[p]]), rho=rho)
    return sample_sbm_pair(spec, rng)


def shuffle_pair(B, rng: np.random.Generator):
    """Randomly relabel B; returns (shuffled matrix, truth permutation).

    The truth permutation is the planted alignment from any matrix that was
    identity-aligned with B to the shuffled output.
    """
    B = as_square_matrix(B, "B")
    p = rng.permutation(B.shape[0]).astype(np.intp)
    return permute_matrix(B, p), p


def replicate_rng(master_seed: int, replicate: int) -> np.random.Generator:
    """Independent deterministic stream for one replicate of an experiment."""
    return np.random.default_rng([master_seed, replicate])
