import math

import numpy as np
import pytest

from tsplab.errors import InputError, ValidityError
from tsplab.geometry import (
    GEO_SPHERE_RADIUS,
    DistanceMatrix,
    Metric,
    MetricKind,
    Tour,
    att,
    build_matrix,
    euc2d,
    euc2d_tsplib,
    geo_tsplib,
    haversine,
    nint,
    tour_length,
)

from conftest import COORD_METRICS, make_instance, random_instance


class TestEuc2d:
    def test_3_4_5_triangle(self):
        assert euc2d((0, 0), (3, 4)) == 5.0

    def test_identity(self):
        assert euc2d((2.5, -1.25), (2.5, -1.25)) == 0.0

    def test_unit_diagonal(self):
        assert euc2d((0, 0), (1, 1)) == pytest.approx(math.sqrt(2), abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(InputError):
            euc2d((0, 0), (1, 2, 3))

    def test_scaling(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            a, b = rng.random(2), rng.random(2)
            s = rng.uniform(0.1, 10)
            assert euc2d(s * a, s * b) == pytest.approx(s * euc2d(a, b), rel=1e-12)


class TestEuc2dTsplib:
    def test_3_4_5(self):
        assert euc2d_tsplib((0, 0), (3, 4)) == 5

    def test_rounds_down_sqrt2(self):
        assert euc2d_tsplib((0, 0), (1, 1)) == 1

    def test_nint_is_floor_plus_half(self):
        assert nint(0.5) == 1
        assert nint(1.5) == 2  # not banker's rounding
        assert nint(-0.5) == 0
        assert nint(2.49999) == 2


class TestAtt:
    def test_continuous_3_4(self):
        assert att((0, 0), (3, 4)) == pytest.approx(math.sqrt(2.5), abs=1e-12)

    def test_rounded_3_4(self):
        assert att((0, 0), (3, 4), rounded=True) == 2

    def test_same_point(self):
        assert att((7.0, 7.0), (7.0, 7.0)) == 0.0

    def test_rounded_bumps_up(self):
        # r = sqrt(100/10) = sqrt(10) = 3.162..., t = 3 < r -> 4
        assert att((0, 0), (10, 0), rounded=True) == 4

    def test_continuous_is_scaled_euclidean(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            a, b = rng.random(2) * 10, rng.random(2) * 10
            assert att(a, b) == pytest.approx(euc2d(a, b) / math.sqrt(10), rel=1e-12)


class TestHaversine:
    def test_same_point(self):
        assert haversine((0.3, 1.1), (0.3, 1.1), radius=2.0) == 0.0

    def test_antipodal(self):
        r = 42.0
        assert haversine((0, 0), (0, math.pi), radius=r) == pytest.approx(math.pi * r, rel=1e-12)

    def test_quarter_circle(self):
        assert haversine((0, 0), (math.pi / 2, 0), radius=1.0) == pytest.approx(math.pi / 2, rel=1e-12)

    def test_latitude_range_error(self):
        with pytest.raises(InputError):
            haversine((2.0, 0.0), (0.0, 0.0), radius=1.0)

    def test_radius_must_be_positive(self):
        with pytest.raises(InputError):
            haversine((0, 0), (0, 1), radius=0.0)


class TestGeoTsplib:
    def test_same_point_formula_value(self):
        # acos(1) = 0, trunc(0 + 1.0) = 1; the matrix builder zeroes the diagonal
        assert geo_tsplib((38.24, 20.42), (38.24, 20.42)) == 1

    def test_symmetry_random_pairs(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            a = (rng.uniform(-80, 80), rng.uniform(-179, 179))
            b = (rng.uniform(-80, 80), rng.uniform(-179, 179))
            assert geo_tsplib(a, b) == geo_tsplib(b, a)

    def test_diagonal_zeroed_in_matrix(self):
        inst = make_instance([(38.24, 20.42), (39.57, 26.15)], MetricKind.GEO_TSPLIB)
        m = build_matrix(inst)
        assert m.entries[0, 0] == 0.0 and m.entries[1, 1] == 0.0
        assert m.entries[0, 1] == geo_tsplib((38.24, 20.42), (39.57, 26.15))


def test_geo_ulysses16_fixture_tour_is_held_karp_optimal():
    # independent oracle: exact DP over all 2^16 subsets of the same matrix
    from tsplab import tsplib_io
    from tsplab.exact import held_karp

    inst = tsplib_io.to_instance(tsplib_io.load_fixture("ulysses16"))
    tour = tsplib_io.tour_from_file(tsplib_io.load_fixture_tour("ulysses16"))
    m = inst.matrix()
    assert tour_length(m, tour) == held_karp(m).length


class TestBuildMatrix:
    def test_single_city(self):
        m = build_matrix(make_instance([(0.3, 0.4)]))
        assert m.n == 1 and m.entries[0, 0] == 0.0

    def test_unit_square_entries(self, unit_square):
        m = build_matrix(unit_square)
        off_diag = m.entries[~np.eye(4, dtype=bool)]
        assert set(np.round(off_diag, 12)) == {1.0, round(math.sqrt(2), 12)}

    @pytest.mark.parametrize("kind", COORD_METRICS)
    def test_symmetry_random_instances(self, kind):
        rng = np.random.default_rng(3)
        for _ in range(50 // len(COORD_METRICS) + 1):
            inst = random_instance(rng, n=int(rng.integers(2, 12)), kind=kind)
            m = build_matrix(inst)
            assert np.array_equal(m.entries, m.entries.T)
            assert np.all(m.entries >= 0)
            assert np.all(np.diag(m.entries) == 0)

    def test_matches_scalar_functions(self):
        rng = np.random.default_rng(4)
        inst = random_instance(rng, 6, MetricKind.ATT_TSPLIB)
        m = build_matrix(inst)
        for i in range(6):
            for j in range(6):
                if i != j:
                    assert m.entries[i, j] == att(inst.coords[i], inst.coords[j], rounded=True)

    def test_explicit_rejected(self):
        from conftest import random_explicit_instance

        inst = random_explicit_instance(np.random.default_rng(5), 4)
        with pytest.raises(InputError):
            build_matrix(inst)


class TestTriangleInequality:
    @pytest.mark.parametrize(
        "kind", [MetricKind.EUC2D_CONT, MetricKind.ATT_CONT, MetricKind.HAVERSINE]
    )
    def test_random_triples(self, kind):
        rng = np.random.default_rng(6)
        for _ in range(200):
            inst = random_instance(rng, 3, kind)
            m = build_matrix(inst).entries
            assert m[0, 2] <= m[0, 1] + m[1, 2] + 1e-9


class TestTourLength:
    def test_perimeter(self, unit_square):
        m = build_matrix(unit_square)
        assert tour_length(m, Tour([0, 1, 2, 3])) == pytest.approx(4.0, abs=1e-12)

    def test_crossing_tour(self, unit_square):
        # both crossing tours of a unit square have length 2 + 2*sqrt(2)
        m = build_matrix(unit_square)
        assert tour_length(m, Tour([0, 2, 1, 3])) == pytest.approx(2 + 2 * math.sqrt(2), rel=1e-12)

    def test_rotation_invariance(self, unit_square):
        rng = np.random.default_rng(7)
        inst = random_instance(rng, 9)
        m = build_matrix(inst)
        order = list(rng.permutation(9))
        base = tour_length(m, Tour(order))
        for k in range(1, 9):
            rotated = order[k:] + order[:k]
            assert tour_length(m, Tour(rotated)) == pytest.approx(base, rel=1e-12)

    def test_reversal_invariance(self):
        rng = np.random.default_rng(8)
        inst = random_instance(rng, 11)
        m = build_matrix(inst)
        order = list(rng.permutation(11))
        assert tour_length(m, Tour(order)) == pytest.approx(
            tour_length(m, Tour(order[::-1])), rel=1e-12
        )

    def test_non_permutation_rejected(self, unit_square):
        m = build_matrix(unit_square)
        with pytest.raises(ValidityError):
            tour_length(m, Tour([0, 1, 2, 2]))


class TestTourCanonical:
    def test_rule_application(self):
        assert Tour([2, 0, 3, 1]).canonical().order == (0, 2, 1, 3)

    def test_already_canonical(self):
        assert Tour([0, 1, 2, 3]).canonical().order == (0, 1, 2, 3)

    def test_idempotent_and_reversal_invariant(self):
        rng = np.random.default_rng(9)
        for _ in range(1000):
            n = int(rng.integers(2, 12))
            t = Tour(rng.permutation(n))
            c = t.canonical()
            assert c.canonical().order == c.order
            assert Tour(c.order[::-1]).canonical().order == c.order


def test_distance_matrix_shape_check():
    with pytest.raises(InputError):
        DistanceMatrix(n=3, entries=np.zeros((2, 2)), metric=Metric(MetricKind.EUC2D_CONT))


def test_haversine_metric_requires_radius():
    with pytest.raises(InputError):
        Metric(MetricKind.HAVERSINE)


def test_geo_sphere_radius_constant():
    assert GEO_SPHERE_RADIUS == 6378.388
