"""Sparse positive d-dimensional tensors and their subtensor combinatorics.

A :class:`SparseTensor` stores only its known entries, keyed by 1-based
index vectors (plain tuples of ints).  All values are strictly positive;
zero is reserved to mean "absent".  Tensors are immutable after
construction, so concurrent read access is safe.

A k-dimensional subtensor is identified by the set of dimensions it fixes
and the coordinates it fixes them at (:class:`SubtensorId`).  For the
common case k = d-1 this is a single (dimension, slice) pair — a row or
column of a matrix, a slab of a 3-d tensor.  Every known entry belongs to
exactly C(d, k) subtensors.

Iteration order is deterministic everywhere: fixed-dimension subsets
ascend lexicographically, slices ascend, and entries ascend by their
mixed-radix linearization :func:`flat_index`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import isfinite
from typing import Iterable, Iterator, Mapping, NamedTuple

import numpy as np

Index = tuple[int, ...]


class SubtensorId(NamedTuple):
    """Identifies one k-dimensional subtensor by its fixed coordinates.

    ``fixed_dims`` are the 1-based dimensions held constant (d-k of them,
    ascending); ``fixed_coords`` are the coordinates they are held at.
    For k = d-1 the id ``((i,), (j,))`` is slice j of dimension i.
    """

    fixed_dims: tuple[int, ...]
    fixed_coords: tuple[int, ...]

    @classmethod
    def line(cls, dim: int, slice_index: int) -> "SubtensorId":
        """The k = d-1 id fixing ``dim`` at ``slice_index``."""
        return cls((dim,), (slice_index,))


@dataclass
class SubtensorGroup:
    """All subtensors sharing one fixed-dimension subset, in array form.

    ``labels[t]`` gives, for the t-th known entry (in flat-index order),
    the position in ``ids`` of the one subtensor of this group containing
    it.  ``counts`` are known-entry counts per id; a zero count marks an
    empty subtensor.
    """

    fixed_dims: tuple[int, ...]
    ids: list[SubtensorId]
    labels: np.ndarray
    counts: np.ndarray


def flat_index(idx: Index, extents: tuple[int, ...]) -> int:
    """Mixed-radix linearization of a 1-based index vector.

    The first dimension varies fastest; the result ranges over
    1..prod(extents) and is a bijection on the extent box.
    """
    if len(idx) != len(extents):
        raise IndexError(f"index {idx} has wrong length for extents {extents}")
    j = 1
    stride = 1
    for alpha, n in zip(idx, extents):
        if not 1 <= alpha <= n:
            raise IndexError(f"index {idx} out of bounds for extents {extents}")
        j += (alpha - 1) * stride
        stride *= n
    return j


def unflatten_index(j: int, extents: tuple[int, ...]) -> Index:
    """Inverse of :func:`flat_index`."""
    if not 1 <= j <= int(np.prod(extents)):
        raise IndexError(f"flat index {j} out of range for extents {extents}")
    j -= 1
    coords = []
    for n in extents:
        coords.append(j % n + 1)
        j //= n
    return tuple(coords)


class SparseTensor:
    """Immutable sparse tensor with strictly positive known entries.

    Parameters
    ----------
    extents:
        Dimensional extents (n_1, ..., n_d), all positive.
    entries:
        Mapping from 1-based index tuples to positive values, or an
        iterable of (index, value) pairs.  Iterables with repeated keys
        are rejected rather than silently collapsed.
    """

    __slots__ = ("extents", "entries", "_known", "_coords", "_values", "_groups")

    def __init__(
        self,
        extents: Iterable[int],
        entries: Mapping[Index, float] | Iterable[tuple[Index, float]],
    ):
        self.extents = tuple(int(n) for n in extents)
        if not self.extents or any(n < 1 for n in self.extents):
            raise ValueError(f"extents must be positive, got {self.extents}")

        if isinstance(entries, Mapping):
            pairs = entries.items()
        else:
            pairs = list(entries)
        store: dict[Index, float] = {}
        for idx, val in pairs:
            idx = tuple(int(a) for a in idx)
            flat_index(idx, self.extents)  # bounds check
            val = float(val)
            if not (val > 0.0 and isfinite(val)):
                raise ValueError(f"entry {idx} has non-positive value {val!r}")
            if idx in store:
                raise ValueError(f"duplicate entry at {idx}")
            store[idx] = val
        self.entries = store
        self._known: tuple[Index, ...] | None = None
        self._coords: np.ndarray | None = None
        self._values: np.ndarray | None = None
        self._groups: dict[int, list[SubtensorGroup]] = {}

    # -- basic access ----------------------------------------------------

    @property
    def d(self) -> int:
        return len(self.extents)

    @property
    def box_size(self) -> int:
        return int(np.prod(self.extents, dtype=object))

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, idx: Index) -> bool:
        return tuple(idx) in self.entries

    def get(self, idx: Index) -> float | None:
        """Stored value at ``idx``, or ``None`` if the entry is absent."""
        idx = tuple(idx)
        flat_index(idx, self.extents)
        return self.entries.get(idx)

    def known_indices(self) -> tuple[Index, ...]:
        """All known index vectors, ascending by :func:`flat_index`."""
        if self._known is None:
            self._known = tuple(
                sorted(self.entries, key=lambda t: flat_index(t, self.extents))
            )
        return self._known

    def missing_indices(self) -> Iterator[Index]:
        """Iterate the complement of the known set, ascending by flat index."""
        for idx in all_indices(self.extents):
            if idx not in self.entries:
                yield idx

    def coords_array(self) -> np.ndarray:
        """Known indices as an (N, d) int array, rows in flat-index order."""
        if self._coords is None:
            self._coords = np.array(self.known_indices(), dtype=np.int64).reshape(
                len(self.entries), self.d
            )
        return self._coords

    def values_array(self) -> np.ndarray:
        """Known values aligned with :meth:`known_indices`."""
        if self._values is None:
            self._values = np.array(
                [self.entries[idx] for idx in self.known_indices()], dtype=np.float64
            )
        return self._values

    def __repr__(self) -> str:
        return f"SparseTensor(extents={self.extents}, known={len(self.entries)})"

    # -- subtensor combinatorics ------------------------------------------

    def groups(self, k: int) -> list[SubtensorGroup]:
        """Subtensor groups for dimensionality k, cached per tensor.

        One group per fixed-dimension subset, subsets ascending
        lexicographically.  For k = d-1 each group covers every slice of
        its dimension (empty slices included, flagged by a zero count);
        for smaller k only coordinate combinations occupied by at least
        one known entry get an id.
        """
        if not 1 <= k <= self.d - 1:
            raise ValueError(f"k must be in [1, {self.d - 1}], got {k}")
        if k not in self._groups:
            self._groups[k] = self._build_groups(k)
        return self._groups[k]

    def _build_groups(self, k: int) -> list[SubtensorGroup]:
        coords = self.coords_array()
        out = []
        for fixed in itertools.combinations(range(self.d), self.d - k):
            dims = tuple(f + 1 for f in fixed)
            if len(fixed) == 1:
                n = self.extents[fixed[0]]
                labels = coords[:, fixed[0]] - 1
                ids = [SubtensorId(dims, (j,)) for j in range(1, n + 1)]
                counts = np.bincount(labels, minlength=n)
            else:
                sub = coords[:, list(fixed)]
                if len(sub):
                    uniq, labels = np.unique(sub, axis=0, return_inverse=True)
                    labels = labels.ravel()
                else:
                    uniq = np.empty((0, len(fixed)), dtype=np.int64)
                    labels = np.empty(0, dtype=np.int64)
                ids = [
                    SubtensorId(dims, tuple(int(c) for c in row)) for row in uniq
                ]
                counts = np.bincount(labels, minlength=len(ids))
            out.append(SubtensorGroup(dims, ids, labels, counts))
        return out


def subtensor_ids(tensor: SparseTensor, k: int) -> list[SubtensorId]:
    """All subtensor ids of dimensionality k, in deterministic order.

    For k = d-1 this is every (dimension, slice) pair, count sum(n_i),
    empty slices included; for smaller k, only occupied ids.
    """
    return [sid for g in tensor.groups(k) for sid in g.ids]


def members(tensor: SparseTensor, sid: SubtensorId) -> list[Index]:
    """Known entries lying in the given subtensor, ascending by flat index."""
    dims = tuple(sid.fixed_dims)
    coords = tuple(sid.fixed_coords)
    if len(dims) != len(coords) or not dims:
        raise ValueError(f"malformed subtensor id {sid}")
    for dim, c in zip(dims, coords):
        if not 1 <= dim <= tensor.d:
            raise ValueError(f"id {sid} names dimension {dim} of a {tensor.d}-d tensor")
        if not 1 <= c <= tensor.extents[dim - 1]:
            raise ValueError(f"id {sid} fixes dimension {dim} outside its extent")
    return [
        idx
        for idx in tensor.known_indices()
        if all(idx[dim - 1] == c for dim, c in zip(dims, coords))
    ]


def membership(idx: Index, k: int, d: int) -> list[SubtensorId]:
    """The C(d, k) subtensor ids containing ``idx``.

    For k = d-1 these are the d ids ((i,), (alpha_i,)); in general one id
    per fixed-dimension subset of size d-k.
    """
    if len(idx) != d:
        raise ValueError(f"index {idx} is not {d}-dimensional")
    if not 1 <= k <= d - 1:
        raise ValueError(f"k must be in [1, {d - 1}], got {k}")
    out = []
    for fixed in itertools.combinations(range(d), d - k):
        out.append(
            SubtensorId(
                tuple(f + 1 for f in fixed), tuple(idx[f] for f in fixed)
            )
        )
    return out


def all_indices(extents: tuple[int, ...]) -> Iterator[Index]:
    """Every index vector of the extent box, ascending by flat index."""
    rngs = [range(1, n + 1) for n in reversed(extents)]
    for rev in itertools.product(*rngs):
        yield tuple(reversed(rev))
