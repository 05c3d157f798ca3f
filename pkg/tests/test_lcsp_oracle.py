import math

import numpy as np
import pytest

from uctensor.canonical_scaling import ScalingFamily, csa
from uctensor.errors import CapacityError
from uctensor.lcsp_oracle import (
    build_constraints,
    gauge_check,
    oracle_complete,
    solve_lcsp,
)
from uctensor.sparse_tensor import SparseTensor, SubtensorId, all_indices, membership
from uctensor.support import witness

from conftest import random_full_support, rank1_tensor


def dense(extents, value=1.0):
    return SparseTensor(extents, {idx: value for idx in all_indices(extents)})


class TestBuildConstraints:
    def test_golden_matrix_system(self, golden_matrix):
        system = build_constraints(golden_matrix, 1)
        # columns ascend by flat index: (1,1), (2,1), (1,2)
        assert system.columns == ((1, 1), (2, 1), (1, 2))
        assert system.row_ids == [
            SubtensorId((1,), (1,)),
            SubtensorId((1,), (2,)),
            SubtensorId((2,), (1,)),
            SubtensorId((2,), (2,)),
        ]
        expected = np.array(
            [
                [1.0, 0.0, 1.0],  # row 1 holds (1,1) and (1,2)
                [0.0, 1.0, 0.0],  # row 2 holds (2,1)
                [1.0, 1.0, 0.0],  # column 1 holds (1,1) and (2,1)
                [0.0, 0.0, 1.0],  # column 2 holds (1,2)
            ]
        )
        assert np.array_equal(system.matrix, expected)
        assert np.allclose(system.a, [0.0, math.log(3), math.log(2)])

    def test_dense_matrix_column_sums(self):
        system = build_constraints(dense((2, 2)), 1)
        assert np.array_equal(system.matrix.sum(axis=0), [2, 2, 2, 2])

    def test_dense_cube_k2(self):
        system = build_constraints(dense((2, 2, 2)), 2)
        assert system.matrix.shape == (6, 8)
        assert np.array_equal(system.matrix.sum(axis=0), [3] * 8)

    def test_rows_cover_only_nonempty_subtensors(self, golden_matrix):
        padded = SparseTensor((3, 2), golden_matrix.entries)  # row 3 empty
        system = build_constraints(padded, 1)
        assert SubtensorId((1,), (3,)) not in system.row_ids
        assert len(system.row_ids) == 4

    def test_row_support_matches_members(self, golden_matrix):
        from uctensor.sparse_tensor import members

        system = build_constraints(golden_matrix, 1)
        for row, sid in zip(system.matrix, system.row_ids):
            cols = [system.columns[t] for t in np.flatnonzero(row)]
            assert cols == members(golden_matrix, sid)


class TestSolveLcsp:
    def test_all_ones_is_fixed_point(self):
        x, s = solve_lcsp(dense((3, 3)), 1)
        assert np.allclose(x, 0.0, atol=1e-14)
        assert np.allclose(s, 0.0, atol=1e-14)

    def test_golden_matrix_projects_to_zero(self, golden_matrix):
        system = build_constraints(golden_matrix, 1)
        x, s = solve_lcsp(golden_matrix, 1, system)
        assert np.allclose(x, 0.0, atol=1e-12)
        assert np.allclose(system.a + system.matrix.T @ s, x, atol=1e-12)
        assert float(np.abs(system.matrix @ x).max()) < 1e-12

    def test_matches_iterative_scaler(self):
        rng = np.random.default_rng(101)
        tensor = random_full_support(
            rng, 2, extent_lo=5, extent_hi=5, box_cap=25, density=0.5
        )
        canonical, _, _ = csa(tensor, 1)
        x, _ = solve_lcsp(tensor, 1)
        assert np.allclose(np.log(canonical.values_array()), x, atol=1e-8)

    def test_projection_idempotent_on_canonical_input(self):
        rng = np.random.default_rng(7)
        tensor = random_full_support(rng, 2, extent_hi=6, box_cap=36)
        canonical, _, _ = csa(tensor, 1)
        system = build_constraints(canonical, 1)
        x, s = solve_lcsp(canonical, 1, system)
        assert np.allclose(x, system.a, atol=1e-10)
        # null gauge: every membership sum of s vanishes
        coeff = dict(zip(system.row_ids, s))
        for idx in canonical.known_indices():
            total = sum(coeff.get(sid, 0.0) for sid in membership(idx, 1, 2))
            assert abs(total) < 1e-10

    def test_size_cap(self):
        big = dense((50, 50))  # 2500 known entries
        with pytest.raises(CapacityError):
            solve_lcsp(big, 1)


class TestOracleComplete:
    def test_golden_corner(self, golden_matrix):
        assert oracle_complete(golden_matrix, 1, (2, 2)) == pytest.approx(6.0, rel=1e-9)

    def test_rank1_cube(self):
        tensor = rank1_tensor([(1.0, 2.0), (1.0, 3.0), (1.0, 5.0)], drop=[(2, 2, 2)])
        assert oracle_complete(tensor, 2, (2, 2, 2)) == pytest.approx(30.0, rel=1e-9)

    def test_known_index_rejected(self, golden_matrix):
        with pytest.raises(ValueError):
            oracle_complete(golden_matrix, 1, (1, 1))

    def test_unsupported_index_still_returns_value(self):
        tensor = SparseTensor((2, 2), {(1, 1): 1.0, (1, 2): 2.0})
        value = oracle_complete(tensor, 1, (2, 1))
        assert value > 0
        assert witness(tensor, (2, 1)) is None  # flag: gauge-dependent

    def test_presolved_reuse(self, golden_matrix):
        system = build_constraints(golden_matrix, 1)
        _, s = solve_lcsp(golden_matrix, 1, system)
        direct = oracle_complete(golden_matrix, 1, (2, 2))
        reused = oracle_complete(golden_matrix, 1, (2, 2), presolved=(system, s))
        assert direct == reused


class TestGaugeCheck:
    def test_identical_families(self, golden_matrix):
        _, family, _ = csa(golden_matrix, 1)
        ok, worst = gauge_check(family, family, golden_matrix)
        assert ok and worst == 0.0

    def test_balanced_shift_is_a_gauge(self):
        tensor = dense((2, 2))
        _, family, _ = csa(tensor, 1)
        shift = math.log(2)
        shifted = ScalingFamily(
            1,
            {
                sid: val
                + (shift if sid.fixed_dims == (1,) else -shift)
                for sid, val in family.log_coeffs.items()
            },
        )
        ok, worst = gauge_check(family, shifted, tensor)
        assert ok and worst < 1e-12

    def test_unbalanced_shift_is_not(self):
        tensor = dense((2, 2))
        _, family, _ = csa(tensor, 1)
        bumped = dict(family.log_coeffs)
        bumped[SubtensorId((1,), (1,))] += math.log(2)
        ok, worst = gauge_check(family, ScalingFamily(1, bumped), tensor)
        assert not ok
        assert worst == pytest.approx(math.log(2), rel=1e-12)

    def test_mismatched_k_rejected(self, golden_matrix):
        with pytest.raises(ValueError):
            gauge_check(ScalingFamily(1, {}), ScalingFamily(2, {}), golden_matrix)

    def test_order_permutations_are_gauges(self):
        rng = np.random.default_rng(3)
        tensor = random_full_support(rng, 3, extent_hi=5, box_cap=125)
        _, fam1, _ = csa(tensor, 2, order=[0, 1, 2])
        _, fam2, _ = csa(tensor, 2, order=[1, 2, 0])
        ok, worst = gauge_check(fam1, fam2, tensor)
        assert ok, f"gauge violation {worst:.3e}"
