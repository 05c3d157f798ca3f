"""Exact small-instance solver for the log canonical scaling problem.

In log space, canonical scaling asks for the vector x closest to the
known log values a subject to a zero sum over every non-empty subtensor:

    minimize  ||x - a||^2 / 2   subject to  C x = 0

where C has one 0/1 row per non-empty subtensor and one column per known
entry.  The solution is the Euclidean projection onto the null space of C:

    x = a - C^T (C C^T)^+ C a,      s = -(C C^T)^+ C a,      x = a + C^T s

The pseudoinverse absorbs the rank deficiency of C C^T caused by gauge
freedom (coefficient perturbations whose membership sums vanish on every
known entry leave x unchanged).  This is a direct, non-iterative
reference used to cross-check the sweep-based scaler and its completions;
it is built for correctness on small instances, not for speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .canonical_scaling import ScalingFamily
from .errors import CapacityError
from .sparse_tensor import Index, SparseTensor, SubtensorId, membership

SIZE_CAP = 2000
PINV_CUTOFF = 1e-10
PROJECTION_TOL = 1e-10


@dataclass
class ConstraintSystem:
    """Membership matrix of known entries against non-empty subtensors.

    Rows follow the deterministic subtensor order (fixed-dimension subsets
    ascending, then slices ascending), restricted to non-empty
    subtensors; columns follow known entries ascending by flat index.
    ``matrix[i, t]`` is 1 iff entry t lies in subtensor i.  ``a`` is the
    log-value vector aligned with the columns.
    """

    k: int
    row_ids: list[SubtensorId]
    columns: tuple[Index, ...]
    matrix: np.ndarray
    a: np.ndarray


def build_constraints(tensor: SparseTensor, k: int) -> ConstraintSystem:
    """Assemble the constraint matrix and log vector for a tensor.

    Every column carries exactly C(d, k) ones, one per subtensor
    containing that entry.
    """
    if len(tensor) == 0:
        raise ValueError("cannot build constraints for an empty tensor")
    columns = tensor.known_indices()
    n = len(columns)
    row_ids: list[SubtensorId] = []
    rows = []
    for group in tensor.groups(k):
        for local, sid in enumerate(group.ids):
            if group.counts[local] == 0:
                continue
            row = np.zeros(n)
            row[group.labels == local] = 1.0
            row_ids.append(sid)
            rows.append(row)
    matrix = np.vstack(rows)
    a = np.log(tensor.values_array())
    return ConstraintSystem(k, row_ids, columns, matrix, a)


def solve_lcsp(
    tensor: SparseTensor, k: int, system: ConstraintSystem | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Project the log values onto the constraint null space.

    Returns ``(x, s)``: the canonical log values (aligned with the known
    entries in flat-index order) and one coefficient vector realizing
    them (aligned with the system's rows).  ``s`` is a particular gauge;
    only quantities invariant under gauge shifts are meaningful.

    Raises :class:`CapacityError` above the dense-solve size cap.
    """
    if system is None:
        system = build_constraints(tensor, k)
    n_rows, n_cols = system.matrix.shape
    if n_cols > SIZE_CAP or n_rows > SIZE_CAP:
        raise CapacityError(
            f"constraint system is {n_rows}x{n_cols}, above the oracle cap {SIZE_CAP}"
        )
    c = system.matrix
    gram = c @ c.T
    s = -np.linalg.pinv(gram, rcond=PINV_CUTOFF) @ (c @ system.a)
    x = system.a + c.T @ s
    worst = float(np.abs(c @ x).max()) if n_rows else 0.0
    if worst > PROJECTION_TOL:
        raise ArithmeticError(
            f"projection residual {worst:.3e} exceeds {PROJECTION_TOL:.1e}"
        )
    return x, s


def oracle_complete(
    tensor: SparseTensor,
    k: int,
    idx: Index,
    presolved: tuple[ConstraintSystem, np.ndarray] | None = None,
) -> float:
    """Completion value at a missing index from the direct solve.

    Under full support the value is gauge-invariant; without it a value
    is still returned but depends on the particular coefficient vector
    the solve produced (pair with the support module to tell these
    apart).  Pass ``presolved = (system, s)`` to reuse one solve across
    many queries.
    """
    idx = tuple(idx)
    if idx in tensor.entries:
        raise ValueError(f"index {idx} is known; completion applies to missing entries")
    if presolved is None:
        system = build_constraints(tensor, k)
        _, s = solve_lcsp(tensor, k, system)
    else:
        system, s = presolved
    coeff = {sid: float(v) for sid, v in zip(system.row_ids, s)}
    total = sum(coeff.get(sid, 0.0) for sid in membership(idx, k, tensor.d))
    return math.exp(-total)


def gauge_check(
    s1: ScalingFamily,
    s2: ScalingFamily,
    tensor: SparseTensor,
    tolerance: float = 1e-8,
) -> tuple[bool, float]:
    """Whether two scaling families are gauges of the same canonical form.

    Computes t = s2 - s1 in log space and returns the largest |membership
    sum of t| over the known entries, plus a flag for it being below
    ``tolerance``.  A true flag certifies both families scale the tensor
    to the identical canonical form.
    """
    if s1.k != s2.k:
        raise ValueError(f"family dimensionalities differ: {s1.k} vs {s2.k}")
    diff: dict[SubtensorId, float] = dict()
    for sid, value in s2.log_coeffs.items():
        diff[sid] = value - s1.log_coeffs.get(sid, 0.0)
    for sid, value in s1.log_coeffs.items():
        if sid not in s2.log_coeffs:
            diff[sid] = -value
    worst = 0.0
    for idx in tensor.known_indices():
        total = sum(diff.get(sid, 0.0) for sid in membership(idx, s1.k, tensor.d))
        worst = max(worst, abs(total))
    return worst < tolerance, worst
