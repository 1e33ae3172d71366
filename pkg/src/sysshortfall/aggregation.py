"""Linear aggregation maps x -> Ax from firm positions to group exposures.

A valid map has nonnegative entries, full row rank, and maps the nonnegative
orthant of R^N onto the nonnegative orthant of R^M.  The last property is an
exact linear-feasibility statement (each basis vector e^m must have a
nonnegative preimage), checked with an LP feasibility solve.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np
from scipy.optimize import linprog

RANK_RTOL = 1e-10  # relative to the largest pivot


@dataclass(frozen=True, eq=False)
class MapValidation:
    """Report produced by :func:`validate_map`."""

    nonnegative: bool
    rank: int
    full_rank: bool
    cone_surjective: bool
    infeasible_targets: tuple[int, ...]
    zero_columns: tuple[int, ...]
    messages: tuple[str, ...]

    @property
    def valid(self) -> bool:
        return self.nonnegative and self.full_rank and self.cone_surjective


def _pivoted_rank(mat: np.ndarray, rtol: float = RANK_RTOL) -> int:
    """Rank by Gaussian elimination with partial pivoting."""
    r = np.array(mat, dtype=float, copy=True)
    m, n = r.shape
    largest = np.max(np.abs(r), initial=0.0)
    if largest == 0.0:
        return 0
    tol = rtol * largest
    rank = 0
    row = 0
    for col in range(n):
        if row >= m:
            break
        p = row + int(np.argmax(np.abs(r[row:, col])))
        if abs(r[p, col]) <= tol:
            continue
        r[[row, p]] = r[[p, row]]
        r[row + 1 :] -= np.outer(r[row + 1 :, col] / r[row, col], r[row])
        rank += 1
        row += 1
    return rank


def _nonnegative_preimage(mat: np.ndarray, target: np.ndarray) -> np.ndarray | None:
    """A solution of ``mat @ x = target`` with ``x >= 0``, or None."""
    res = linprog(
        c=np.zeros(mat.shape[1]),
        A_eq=mat,
        b_eq=target,
        bounds=[(0, None)] * mat.shape[1],
        method="highs",
    )
    return res.x if res.status == 0 else None


def validate_map(matrix) -> MapValidation:
    """Check a candidate aggregation matrix against the three map invariants.

    Also reports zero columns: they do not violate the invariants, but a firm
    with no weight in any group makes the distribution optimum unattainable,
    so downstream solvers will reject such maps.
    """
    mat = np.atleast_2d(np.asarray(matrix, dtype=float))
    m, n = mat.shape
    messages: list[str] = []
    nonnegative = bool(np.all(mat >= 0) and np.all(np.isfinite(mat)))
    if not nonnegative:
        messages.append("negative entry" if np.any(mat < 0) else "non-finite entry")
    rank = _pivoted_rank(mat)
    full_rank = rank == m and m <= n
    if rank != m:
        messages.append(f"rank {rank} < number of groups {m}")
    if m > n:
        messages.append(f"more groups ({m}) than firms ({n})")
    infeasible: list[int] = []
    if nonnegative:
        for j in range(m):
            if _nonnegative_preimage(mat, np.eye(m)[j]) is None:
                infeasible.append(j)
        if infeasible:
            messages.append(
                "no nonnegative preimage for unit targets " + str(infeasible)
            )
    else:
        infeasible = list(range(m))
    zero_cols = [j for j in range(n) if not np.any(mat[:, j] != 0)]
    if zero_cols:
        messages.append(f"columns {zero_cols} carry no weight in any group")
    return MapValidation(
        nonnegative=nonnegative,
        rank=rank,
        full_rank=full_rank,
        cone_surjective=nonnegative and not infeasible,
        infeasible_targets=tuple(infeasible),
        zero_columns=tuple(zero_cols),
        messages=tuple(messages),
    )


@dataclass(frozen=True, eq=False)
class AggregationMap:
    """Validated M x N aggregation matrix, M <= N."""

    matrix: np.ndarray

    def __post_init__(self):
        mat = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        report = validate_map(mat)
        if not report.valid:
            raise ValueError("invalid aggregation map: " + "; ".join(report.messages))
        mat = mat.copy()
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    @property
    def n(self) -> int:
        return self.matrix.shape[1]

    @property
    def has_zero_columns(self) -> bool:
        return bool(np.any(~np.any(self.matrix != 0, axis=0)))

    def apply(self, x) -> np.ndarray:
        """Matrix-vector product A x, batched over leading axes."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise ValueError(f"expected {self.n} components, got shape {x.shape}")
        return x @ self.matrix.T

    def transpose_apply(self, z) -> np.ndarray:
        """Transposed product A^T z, batched over leading axes."""
        z = np.asarray(z, dtype=float)
        if z.shape[-1] != self.m:
            raise ValueError(f"expected {self.m} components, got shape {z.shape}")
        return z @ self.matrix

    def to_dict(self) -> dict[str, Any]:
        return {"matrix": self.matrix.tolist()}


def grouping_map(partition: Sequence[Sequence[int]], n: int | None = None) -> AggregationMap:
    """0/1 map induced by a partition of firms ``{1..N}`` (1-based indices).

    Row m carries the indicator of group m, so exchanges are allowed only
    within groups.
    """
    groups = [sorted(int(i) for i in g) for g in partition]
    if any(len(g) == 0 for g in groups):
        raise ValueError("every group must be nonempty")
    flat = [i for g in groups for i in g]
    if len(set(flat)) != len(flat):
        raise ValueError("groups overlap")
    size = max(flat) if n is None else int(n)
    if min(flat) < 1 or max(flat) > size:
        raise ValueError("group indices must lie in 1..N")
    if set(flat) != set(range(1, size + 1)):
        raise ValueError("groups must cover 1..N exactly")
    mat = np.zeros((len(groups), size))
    for m, g in enumerate(groups):
        mat[m, [i - 1 for i in g]] = 1.0
    return AggregationMap(mat)


def aggregation_from_dict(d: dict[str, Any]) -> AggregationMap:
    """Build a map from its JSON object: ``{"matrix": ...}`` or ``{"groups": ...}``."""
    if "matrix" in d:
        return AggregationMap(np.asarray(d["matrix"], dtype=float))
    if "groups" in d:
        return grouping_map(d["groups"])
    raise ValueError("aggregation object needs a 'matrix' or 'groups' field")
