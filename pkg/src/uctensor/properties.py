"""Executable checks of the completion method's behavioral guarantees.

Each check builds completion models under some perturbation (rescaling,
sweep-order permutation) or evaluates a structural claim (order
preservation across unanimously ranked slices) and reports the worst
deviation it saw together with any concrete counterexamples.  Checks are
deterministic given their seed, which every report carries for replay.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import support as _support
from .canonical_scaling import ScalingFamily, apply_scaling, csa
from .completion import CompletionModel, tca
from .errors import OrderingSpecError
from .lcsp_oracle import gauge_check
from .sparse_tensor import Index, SparseTensor, SubtensorId, all_indices

STRICTNESS_SLACK = 1e-12


@dataclass(frozen=True)
class OrderingSpec:
    """A set of slices along one dimension, unanimously ranked.

    ``gamma`` lists slice indices in ascending preference; every slice
    must carry the identical projected known set ``common_support``
    (tuples over the remaining dimensions, in dimension order), with
    values strictly increasing along ``gamma`` at every support point.
    """

    dim: int
    gamma: tuple[int, ...]
    common_support: frozenset[Index]


@dataclass
class PropertyReport:
    """Outcome of one property check."""

    name: str
    instances: int
    max_deviation: float
    violations: list[str]
    passed: bool
    tolerance: float | None = None
    seed: int | None = None
    informational: bool = False
    notes: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "record": "property",
            "name": self.name,
            "instances": self.instances,
            "max_deviation": self.max_deviation,
            "violations": list(self.violations),
            "passed": self.passed,
            "tolerance": self.tolerance,
            "seed": self.seed,
            "informational": self.informational,
            "notes": list(self.notes),
        }


def _distinct_less(x: float, y: float, slack: float = STRICTNESS_SLACK) -> bool:
    """x strictly below y by more than a relative slack (roundoff guard)."""
    return x < y and (y - x) > slack * max(abs(x), abs(y))


def _project(idx: Index, dim: int) -> Index:
    return idx[: dim - 1] + idx[dim:]


def _embed(projected: Index, dim: int, slice_index: int) -> Index:
    return projected[: dim - 1] + (slice_index,) + projected[dim - 1:]


def _slice_support(tensor: SparseTensor, dim: int, slice_index: int) -> dict[Index, float]:
    return {
        _project(idx, dim): val
        for idx, val in tensor.entries.items()
        if idx[dim - 1] == slice_index
    }


def random_scaling_family(
    rng: np.random.Generator, extents: tuple[int, ...], k: int, spread: float = 2.0
) -> ScalingFamily:
    """Positive scaling family, one log-uniform coefficient per subtensor.

    Coefficients cover every coordinate combination of the extent box,
    occupied or not, with logs uniform in [-spread, spread].
    """
    d = len(extents)
    coeffs: dict[SubtensorId, float] = {}
    for fixed in itertools.combinations(range(d), d - k):
        dims = tuple(f + 1 for f in fixed)
        for coords in itertools.product(*(range(1, extents[f] + 1) for f in fixed)):
            coeffs[SubtensorId(dims, coords)] = float(rng.uniform(-spread, spread))
    return ScalingFamily(k, coeffs)


def check_unit_consistency(
    tensor: SparseTensor,
    k: int,
    trials: int = 100,
    tolerance: float = 1e-6,
    seed: int = 0,
    missing_cap: int = 20_000,
    supported_only: bool = False,
) -> PropertyReport:
    """Rescaling inputs by a random positive family rescales predictions.

    For each trial draws a family T, completes both the original and the
    T-scaled tensor, and compares the scaled predictions against the
    predictions of the scaled tensor on every missing index (up to
    ``missing_cap``).  Predictions at unsupported missing indices are
    gauge-dependent and carry no rescaling guarantee; pass
    ``supported_only`` to exclude them when the tensor lacks full
    support.
    """
    rng = np.random.default_rng(seed)
    base = tca(tensor, k)
    missing = list(itertools.islice(tensor.missing_indices(), missing_cap))
    notes: list[str] = []
    if supported_only:
        kept = [idx for idx in missing if _support.witness(tensor, idx) is not None]
        if len(kept) < len(missing):
            notes.append(
                f"{len(missing) - len(kept)} unsupported missing indices excluded"
            )
        missing = kept
    worst = 0.0
    violations: list[str] = []
    for trial in range(trials):
        family = random_scaling_family(rng, tensor.extents, k)
        scaled_model = tca(apply_scaling(tensor, family), k)
        for idx in missing:
            expected = base.predict(idx) * float(
                np.exp(family.log_sum_at(idx, tensor.d))
            )
            actual = scaled_model.predict(idx)
            dev = abs(actual / expected - 1.0)
            if dev > worst:
                worst = dev
            if dev > tolerance:
                violations.append(
                    f"trial {trial}: idx {idx} expected {expected!r} got {actual!r}"
                )
    return PropertyReport(
        name="unit_consistency",
        instances=trials,
        max_deviation=worst,
        violations=violations,
        passed=not violations and worst <= tolerance,
        tolerance=tolerance,
        seed=seed,
        notes=notes,
    )


def validate_ordering_spec(
    tensor: SparseTensor, spec: OrderingSpec, relaxed: bool = False
) -> frozenset[Index]:
    """Check both clauses of an ordering spec against a tensor.

    Returns the support set the ordering was verified on.  Raises
    :class:`OrderingSpecError` with ``clause="support"`` when the slices'
    known sets disagree (or the common set is empty), ``clause="ordering"``
    when the known values are not strictly increasing along ``gamma``.
    In relaxed mode, support equality is not required and the ordering is
    checked on the intersection only.
    """
    if not 1 <= spec.dim <= tensor.d:
        raise ValueError(f"dimension {spec.dim} invalid for a {tensor.d}-d tensor")
    if len(set(spec.gamma)) != len(spec.gamma) or not spec.gamma:
        raise ValueError(f"gamma must be non-empty and duplicate-free: {spec.gamma}")
    for g in spec.gamma:
        if not 1 <= g <= tensor.extents[spec.dim - 1]:
            raise ValueError(f"slice {g} outside extent of dimension {spec.dim}")

    supports = [_slice_support(tensor, spec.dim, g) for g in spec.gamma]
    if relaxed:
        common = frozenset.intersection(*(frozenset(s) for s in supports))
        if not common:
            raise OrderingSpecError(
                "slices share no known entries", clause="support"
            )
    else:
        common = frozenset(supports[0])
        for g, sup in zip(spec.gamma, supports):
            if frozenset(sup) != common:
                raise OrderingSpecError(
                    f"slice {g} has a different known set than slice {spec.gamma[0]}",
                    clause="support",
                )
        if common != spec.common_support:
            raise OrderingSpecError(
                "declared common support does not match the tensor",
                clause="support",
            )
        if not common:
            raise OrderingSpecError("common support is empty", clause="support")

    for a in range(len(spec.gamma) - 1):
        lo, hi = supports[a], supports[a + 1]
        for p in sorted(common):
            if not _distinct_less(lo[p], hi[p]):
                raise OrderingSpecError(
                    f"slices {spec.gamma[a]} and {spec.gamma[a + 1]} are not "
                    f"strictly ordered at {p}: {lo[p]!r} vs {hi[p]!r}",
                    clause="ordering",
                )
    return common


def check_consensus_ordering(
    model: CompletionModel, spec: OrderingSpec, relaxed: bool = False
) -> PropertyReport:
    """Predictions preserve a unanimous ranking of slices.

    For every index pattern missing from all slices in ``gamma``, asserts
    the predicted values are strictly increasing along ``gamma``.  The
    relaxed mode (intersection support instead of identical support) is
    informational only: the guarantee is proven for identical supports.
    """
    tensor = model.source
    common = validate_ordering_spec(tensor, spec, relaxed=relaxed)
    dim = spec.dim

    other_extents = tuple(
        n for i, n in enumerate(tensor.extents) if i != dim - 1
    )
    if relaxed:
        slice_supports = [
            frozenset(_slice_support(tensor, dim, g)) for g in spec.gamma
        ]
        absent = lambda p: all(p not in s for s in slice_supports)  # noqa: E731
    else:
        absent = lambda p: p not in common  # noqa: E731

    worst = 0.0
    violations: list[str] = []
    checked = 0
    for projected in all_indices(other_extents):
        if not absent(projected):
            continue
        checked += 1
        preds = [
            model.predict(_embed(projected, dim, g)) for g in spec.gamma
        ]
        for a in range(len(spec.gamma) - 1):
            lo, hi = preds[a], preds[a + 1]
            if not _distinct_less(lo, hi):
                margin = (lo - hi) / max(abs(hi), 1e-300)
                worst = max(worst, margin)
                violations.append(
                    f"pattern {projected}: slice {spec.gamma[a]} predicted {lo!r} "
                    f"not below slice {spec.gamma[a + 1]} at {hi!r}"
                )
    return PropertyReport(
        name="consensus_ordering",
        instances=checked,
        max_deviation=worst,
        violations=violations,
        passed=not violations,
        tolerance=0.0,
        informational=relaxed,
    )


def check_scale_fairness(
    tensor: SparseTensor,
    dim: int,
    slice_index: int,
    factor: float,
    tolerance: float = 1e-9,
    top_n: int = 10,
) -> PropertyReport:
    """One slice rescaling its values moves no one else's predictions.

    Scales all known entries of slice ``slice_index`` along ``dim`` by
    ``factor`` and recompletes.  Predictions outside the slice must be
    unchanged (within ``tolerance`` relative) and their per-slice top-N
    rankings identical; predictions inside the slice must scale by
    exactly ``factor``.
    """
    if not factor > 0:
        raise ValueError(f"factor must be positive, got {factor}")
    in_slice = lambda idx: idx[dim - 1] == slice_index  # noqa: E731
    if not any(in_slice(idx) for idx in tensor.entries):
        raise ValueError(f"slice {slice_index} of dimension {dim} has no known entries")

    before = tca(tensor, tensor.d - 1)
    scaled = SparseTensor(
        tensor.extents,
        {
            idx: (val * factor if in_slice(idx) else val)
            for idx, val in tensor.entries.items()
        },
    )
    after = tca(scaled, tensor.d - 1)

    worst = 0.0
    violations: list[str] = []
    rank_before: dict[int, list[tuple[float, Index]]] = {}
    rank_after: dict[int, list[tuple[float, Index]]] = {}
    checked = 0
    for idx in tensor.missing_indices():
        checked += 1
        p_before = before.predict(idx)
        p_after = after.predict(idx)
        if in_slice(idx):
            dev = abs(p_after / (p_before * factor) - 1.0)
            kind = "in-slice"
        else:
            dev = abs(p_after / p_before - 1.0)
            kind = "other-slice"
            coord = idx[dim - 1]
            rank_before.setdefault(coord, []).append((-p_before, idx))
            rank_after.setdefault(coord, []).append((-p_after, idx))
        worst = max(worst, dev)
        if dev > tolerance:
            violations.append(f"{kind} prediction moved at {idx}: dev {dev:.3e}")

    for coord in sorted(rank_before):
        top1 = [idx for _, idx in sorted(rank_before[coord])[:top_n]]
        top2 = [idx for _, idx in sorted(rank_after[coord])[:top_n]]
        if top1 != top2:
            violations.append(f"top-{top_n} list changed for slice {coord} of dim {dim}")

    return PropertyReport(
        name="scale_fairness",
        instances=checked,
        max_deviation=worst,
        violations=violations,
        passed=not violations and worst <= tolerance,
        tolerance=tolerance,
    )


def check_gauge_uniqueness(
    tensor: SparseTensor,
    k: int,
    orderings: int = 5,
    seed: int = 0,
    tolerance: float = 1e-8,
    missing_cap: int = 20_000,
) -> PropertyReport:
    """Sweep order changes the coefficients but nothing observable.

    Runs the scaler under random permutations of the group processing
    order and asserts (a) canonical tensors agree, (b) every pair of
    scaling families differs by a pure gauge, (c) predictions agree on
    supported missing indices.  On tensors without full support the
    prediction clause is restricted to the indices that are supported.
    """
    rng = np.random.default_rng(seed)
    n_groups = len(tensor.groups(k))
    orders = [list(range(n_groups))]
    for _ in range(orderings):
        orders.append([int(g) for g in rng.permutation(n_groups)])

    runs = [csa(tensor, k, order=o) for o in orders]
    models = [
        CompletionModel(tensor, family, report, k)
        for _, family, report in runs
    ]

    worst = 0.0
    violations: list[str] = []

    base_canonical = runs[0][0].values_array()
    for run_i, (canonical, _, _) in enumerate(runs[1:], start=1):
        dev = float(np.abs(canonical.values_array() / base_canonical - 1.0).max())
        worst = max(worst, dev)
        if dev > tolerance:
            violations.append(f"canonical tensors diverge for order {run_i}: {dev:.3e}")

    for i, j in itertools.combinations(range(len(runs)), 2):
        ok, gauge_dev = gauge_check(runs[i][1], runs[j][1], tensor, tolerance)
        worst = max(worst, gauge_dev)
        if not ok:
            violations.append(
                f"orders {i} and {j} are not gauge-equivalent: {gauge_dev:.3e}"
            )

    supported = [
        idx
        for idx in itertools.islice(tensor.missing_indices(), missing_cap)
        if _support.witness(tensor, idx) is not None
    ]
    for idx in supported:
        preds = [m.predict(idx) for m in models]
        dev = max(abs(p / preds[0] - 1.0) for p in preds)
        worst = max(worst, dev)
        if dev > tolerance:
            violations.append(f"predictions diverge at {idx}: {dev:.3e}")

    return PropertyReport(
        name="gauge_uniqueness",
        instances=len(orders),
        max_deviation=worst,
        violations=violations,
        passed=not violations and worst <= tolerance,
        tolerance=tolerance,
        seed=seed,
    )


def find_consensus_sets(
    tensor: SparseTensor, dim: int, min_size: int = 2
) -> list[OrderingSpec]:
    """Maximal runs of identically supported, strictly ordered slices.

    Groups the slices along ``dim`` by their projected known set, sorts
    each group by its value profile, and splits it into maximal runs
    where every consecutive pair is strictly dominated at every support
    point.  Runs shorter than ``min_size`` are dropped.  Output order
    follows the smallest slice index of each group.
    """
    if not 1 <= dim <= tensor.d:
        raise ValueError(f"dimension {dim} invalid for a {tensor.d}-d tensor")
    by_support: dict[frozenset[Index], list[int]] = {}
    supports: dict[int, dict[Index, float]] = {}
    for g in range(1, tensor.extents[dim - 1] + 1):
        sup = _slice_support(tensor, dim, g)
        if not sup:
            continue
        supports[g] = sup
        by_support.setdefault(frozenset(sup), []).append(g)

    specs: list[OrderingSpec] = []
    for signature, slices in sorted(
        by_support.items(), key=lambda kv: min(kv[1])
    ):
        if len(slices) < min_size:
            continue
        points = sorted(signature)
        ordered = sorted(
            slices, key=lambda g: tuple(supports[g][p] for p in points) + (g,)
        )
        run = [ordered[0]]
        runs = []
        for g in ordered[1:]:
            prev = run[-1]
            if all(_distinct_less(supports[prev][p], supports[g][p]) for p in points):
                run.append(g)
            else:
                runs.append(run)
                run = [g]
        runs.append(run)
        for r in runs:
            if len(r) >= min_size:
                specs.append(OrderingSpec(dim, tuple(r), signature))
    return specs
