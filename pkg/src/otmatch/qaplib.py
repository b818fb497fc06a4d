"""QAPLIB problem/solution file ingestion and the relative-accuracy metric.

.dat files carry an order n followed by two n x n matrices row-major;
.sln files carry n and the best known objective, then a 1-based
permutation. The objective convention is trace(A^T P B P^T) with the parsed
matrix order; each bundled (.dat, .sln) pair is cross-checked so the
convention is validated per instance rather than trusted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .core import as_permutation, as_square_matrix, qap_objective


@dataclass(frozen=True)
class QapInstance:
    """A parsed QAPLIB problem, optionally with its best known solution."""

    name: str
    n: int
    A: np.ndarray
    B: np.ndarray
    known_optimum: float | None = None
    known_permutation: np.ndarray | None = None


def _tokens(text: str):
    return text.split()


def parse_qaplib_dat(text: str, name: str = "") -> QapInstance:
    """Parse a .dat body: n, then A and B row-major, any line breaks."""
    toks = _tokens(text)
    if not toks:
        raise ValueError("empty .dat text")
    try:
        n = int(toks[0])
    except ValueError:
        raise ValueError(f"expected integer order at position 0, got {toks[0]!r}") from None
    if n < 1:
        raise ValueError(f"order must be positive, got {n}")
    body = toks[1:]
    expected = 2 * n * n
    if len(body) != expected:
        raise ValueError(f"expected {expected} matrix entries, found {len(body)}")
    values = np.empty(expected)
    for i, t in enumerate(body):
        try:
            values[i] = float(t)
        except ValueError:
            raise ValueError(f"non-numeric token {t!r} at position {i + 1}") from None
    A = values[: n * n].reshape(n, n)
    B = values[n * n :].reshape(n, n)
    return QapInstance(name=name, n=n, A=as_square_matrix(A, "A"), B=as_square_matrix(B, "B"))


def parse_qaplib_sln(text: str):
    """Parse a .sln body: header (n, optimum), then a 1-based permutation.

    Returns (n, optimum, zero-based permutation).
    """
    toks = _tokens(text)
    if len(toks) < 2:
        raise ValueError("malformed .sln header: need n and optimum")
    try:
        n = int(toks[0])
        optimum = float(toks[1])
    except ValueError:
        raise ValueError(f"malformed .sln header: {toks[:2]}") from None
    perm_toks = toks[2:]
    if len(perm_toks) != n:
        raise ValueError(f"expected {n} permutation entries, found {len(perm_toks)}")
    try:
        perm = np.array([int(t) for t in perm_toks], dtype=np.intp)
    except ValueError as e:
        raise ValueError(f"non-integer permutation entry: {e}") from None
    return n, optimum, as_permutation(perm - 1, "solution permutation")


def format_qaplib_dat(inst: QapInstance) -> str:
    """Serialize back to .dat text; integer entries stay integer-exact."""
    def fmt(x: float) -> str:
        return str(int(x)) if float(x).is_integer() else repr(x)

    lines = [str(inst.n), ""]
    for M in (inst.A, inst.B):
        lines += [" ".join(fmt(x) for x in row) for row in M.tolist()]
        lines.append("")
    return "\n".join(lines)


def load_instance(dat_path, sln_path=None) -> QapInstance:
    """Load a .dat file, attaching the .sln sidecar when present.

    When a solution is attached, its permutation is checked to reproduce
    the stated optimum under the parsed matrix convention.
    """
    dat_path = Path(dat_path)
    inst = parse_qaplib_dat(dat_path.read_text(), name=dat_path.stem)
    if sln_path is None:
        candidate = dat_path.with_suffix(".sln")
        sln_path = candidate if candidate.exists() else None
    if sln_path is None:
        return inst
    n, optimum, perm = parse_qaplib_sln(Path(sln_path).read_text())
    if n != inst.n:
        raise ValueError(f"{inst.name}: .sln order {n} != .dat order {inst.n}")
    value = qap_objective(inst.A, inst.B, perm)
    if not math.isclose(value, optimum, rel_tol=1e-6):
        raise ValueError(
            f"{inst.name}: solution permutation gives {value}, .sln states {optimum}"
        )
    return QapInstance(
        name=inst.name,
        n=inst.n,
        A=inst.A,
        B=inst.B,
        known_optimum=optimum,
        known_permutation=perm,
    )


def bundled_instance_names() -> list[str]:
    """Names of the QAPLIB instances shipped as package data."""
    root = resources.files("otmatch") / "data"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".dat"))


def load_bundled_instance(name: str) -> QapInstance:
    root = resources.files("otmatch") / "data"
    with resources.as_file(root / f"{name}.dat") as dat:
        sln = dat.with_suffix(".sln")
        return load_instance(dat, sln if sln.exists() else None)


def relative_accuracy(f_goat: float, f_faq: float) -> float:
    """log10 of the GOAT/FAQ objective ratio; negative favors GOAT."""
    if f_goat <= 0 or f_faq <= 0:
        raise ValueError("relative_accuracy requires positive objectives")
    return math.log10(f_goat / f_faq)
