"""Shared fixtures, generators and independent reference implementations.

The reference implementations here are deliberately plain-Python (dicts
and loops, no shared code with the package) so they can serve as
independent oracles for the vectorized implementations under test.
"""

import itertools
import math

import numpy as np
import pytest

from uctensor.sparse_tensor import SparseTensor, all_indices
from uctensor.support import witness


@pytest.fixture
def golden_matrix():
    """Three known entries; the missing corner completes to 6."""
    return SparseTensor((2, 2), {(1, 1): 1.0, (1, 2): 2.0, (2, 1): 3.0})


def make_golden():
    return SparseTensor((2, 2), {(1, 1): 1.0, (1, 2): 2.0, (2, 1): 3.0})


def rank1_tensor(factors, drop=()):
    """Tensor with entries prod(factors[dim][coord]), minus dropped indices."""
    extents = tuple(len(f) for f in factors)
    entries = {}
    for idx in all_indices(extents):
        if idx in drop:
            continue
        value = 1.0
        for dim, coord in enumerate(idx):
            value *= factors[dim][coord - 1]
        entries[idx] = value
    return SparseTensor(extents, entries)


def random_full_support(
    rng,
    d,
    extent_lo=2,
    extent_hi=20,
    box_cap=2500,
    density=(0.35, 0.9),
    value_spread=1.5,
):
    """Random positive tensor, resampled until every missing index has a
    hypercube witness.  Rejection stops at the first unsupported index,
    which keeps resampling cheap at low densities."""
    while True:
        extents = tuple(int(rng.integers(extent_lo, extent_hi + 1)) for _ in range(d))
        if np.prod(extents) > box_cap:
            continue
        dens = float(rng.uniform(*density)) if isinstance(density, tuple) else density
        mask = rng.random(int(np.prod(extents))) < dens
        entries = {}
        for flag, idx in zip(mask, all_indices(extents)):
            if flag:
                entries[idx] = float(np.exp(rng.uniform(-value_spread, value_spread)))
        if not entries:
            continue
        tensor = SparseTensor(extents, entries)
        if all(witness(tensor, idx) is not None for idx in tensor.missing_indices()):
            return tensor


# -- independent reference implementations ----------------------------------


def reference_flat_index(idx, extents):
    """Rank of idx in the first-dimension-fastest enumeration of the box."""
    order = []
    for rev in itertools.product(*(range(1, n + 1) for n in reversed(extents))):
        order.append(tuple(reversed(rev)))
    return order.index(tuple(idx)) + 1


def reference_subtensors(extents, k):
    """Brute-force list of (fixed_dims, fixed_coords) pairs over the full box."""
    d = len(extents)
    out = []
    for fixed in itertools.combinations(range(1, d + 1), d - k):
        for coords in itertools.product(*(range(1, extents[f - 1] + 1) for f in fixed)):
            out.append((fixed, coords))
    return out


def reference_members(entries, fixed_dims, fixed_coords):
    """Known entries of one subtensor, by scanning every known index."""
    out = []
    for idx in entries:
        if all(idx[dim - 1] == c for dim, c in zip(fixed_dims, fixed_coords)):
            out.append(idx)
    return out


def reference_sweep(log_values, subtensor_members, passes=1):
    """Sequential one-subtensor-at-a-time centering, pure dict arithmetic.

    ``subtensor_members`` is an ordered list of member-index lists; each
    step subtracts the current mean of its members and adds the squared
    mean to v.  Returns (log_values, per-pass v list, per-step rho list).
    """
    log_values = dict(log_values)
    v_per_pass = []
    rhos = []
    for _ in range(passes):
        v = 0.0
        for members_list in subtensor_members:
            if not members_list:
                continue
            rho = -sum(log_values[m] for m in members_list) / len(members_list)
            for m in members_list:
                log_values[m] += rho
            v += rho * rho
            rhos.append(rho)
        v_per_pass.append(v)
    return log_values, v_per_pass, rhos


def golden_subtensor_members():
    """Deterministic subtensor order for the golden matrix, k = 1."""
    return [
        [(1, 1), (1, 2)],  # dimension 1, slice 1
        [(2, 1)],          # dimension 1, slice 2
        [(1, 1), (2, 1)],  # dimension 2, slice 1
        [(1, 2)],          # dimension 2, slice 2
    ]


GOLDEN_LOGS = {(1, 1): 0.0, (1, 2): math.log(2.0), (2, 1): math.log(3.0)}

# frozen from reference_sweep on the golden matrix: ln2^2 * 9/16 + ln3^2
GOLDEN_SWEEP1_V = 1.4772037811415704
GOLDEN_SWEEP1_RHOS = (
    -0.34657359027997264,
    -1.0986122886681098,
    0.17328679513998632,
    -0.34657359027997264,
)
