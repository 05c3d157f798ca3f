"""Fill missing tensor entries from the canonical-scaling coefficients.

The completion rule is forced by the canonical form: a missing entry of
the canonical tensor can only take the value 1 (any other value would
break some unit subtensor product through it), so transforming back gives

    prediction(idx) = product of inverse scaling coefficients over the
                      subtensors containing idx
                    = exp(-sum of log coefficients)

Known entries pass through unchanged.  A fitted model answers a query in
C(d, k) coefficient lookups plus one exponentiation — d lookups in the
usual k = d-1 case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import support as _support
from .canonical_scaling import (
    DEFAULT_EPSILON,
    DEFAULT_MAX_SWEEPS,
    ConvergenceReport,
    ScalingFamily,
    csa,
)
from .errors import CapacityError
from .sparse_tensor import Index, SparseTensor, all_indices, flat_index

DEFAULT_BOX_CAP = 10_000_000


@dataclass(frozen=True)
class CompletionConfig:
    """Knobs for fitting and bulk completion."""

    epsilon: float = DEFAULT_EPSILON
    max_sweeps: int = DEFAULT_MAX_SWEEPS
    complete_all_cap: int = DEFAULT_BOX_CAP


@dataclass
class CompletionModel:
    """Frozen result of a completion run: source tensor plus scaling family.

    ``predict`` is pure and safe for concurrent callers.
    """

    source: SparseTensor
    scaling: ScalingFamily
    report: ConvergenceReport
    k: int
    config: CompletionConfig = field(default_factory=CompletionConfig)

    def predict(self, idx: Index) -> float:
        return predict(self, idx)

    def supported(self, idx: Index) -> bool:
        """Whether the prediction at ``idx`` is pinned down by the known set.

        Known entries are trivially supported.  For missing entries this
        defers to the hypercube-witness search; unsupported predictions
        are still returned by :meth:`predict` but depend on the gauge the
        scaling run happened to land in.
        """
        idx = tuple(idx)
        flat_index(idx, self.source.extents)
        if idx in self.source.entries:
            return True
        return _support.witness(self.source, idx) is not None


def tca(
    tensor: SparseTensor,
    k: int | None = None,
    config: CompletionConfig = CompletionConfig(),
) -> CompletionModel:
    """Fit a completion model: canonical scaling, then invert at queries.

    ``k`` defaults to d-1 (slice scaling).  Preprocessing is one scaling
    run, linear in the number of known entries per sweep for fixed d.

    Raises
    ------
    ValueError
        Empty tensor or k out of range.
    ConvergenceError
        Propagated from the scaling run.
    """
    if len(tensor) == 0:
        raise ValueError("cannot complete a tensor with no known entries")
    if k is None:
        k = tensor.d - 1
    _, family, report = csa(
        tensor, k, epsilon=config.epsilon, max_sweeps=config.max_sweeps
    )
    return CompletionModel(tensor, family, report, k, config)


def mca(
    matrix: SparseTensor, config: CompletionConfig = CompletionConfig()
) -> CompletionModel:
    """Matrix special case of :func:`tca` (d = 2, row/column scaling)."""
    if matrix.d != 2:
        raise ValueError(f"mca requires a 2-dimensional tensor, got d={matrix.d}")
    return tca(matrix, 1, config)


def predict(model: CompletionModel, idx: Index) -> float:
    """Predicted value at ``idx``: stored value if known, else exp(-sum s)."""
    idx = tuple(idx)
    flat_index(idx, model.source.extents)  # bounds check
    stored = model.source.entries.get(idx)
    if stored is not None:
        return stored
    return math.exp(-model.scaling.log_sum_at(idx, model.source.d))


def round_to_scale(raw: float, low: float, high: float) -> float:
    """Clamp and round a raw prediction onto a discrete rating scale.

    Raw values stay the primary output: when ranking items whose rounded
    ratings tie, order them by the raw values.
    """
    if not low < high:
        raise ValueError(f"scale bounds must satisfy low < high, got [{low}, {high}]")
    return float(min(high, max(low, round(raw))))


def complete_all(model: CompletionModel) -> SparseTensor:
    """Dense-in-box tensor combining known entries and predictions.

    Refuses boxes larger than the configured cap; use :func:`predict` per
    query instead for large index spaces.
    """
    box = model.source.box_size
    cap = model.config.complete_all_cap
    if box > cap:
        raise CapacityError(
            f"extent box has {box} cells, above the complete_all cap {cap}"
        )
    filled = {}
    for idx in all_indices(model.source.extents):
        filled[idx] = predict(model, idx)
    return SparseTensor(model.source.extents, filled)
