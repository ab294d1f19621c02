import json
import math

import numpy as np
import pytest

from tsplab.errors import ConfigError, DegenerateAreaError, ParseError
from tsplab.exact import brute_force, held_karp
from tsplab.geometry import Tour, tour_length
from tsplab.heuristics import improving_two_opt_moves
from tsplab.instances import (
    HARDNESS_PHASE_TRANSITION,
    Instance,
    LabelBudget,
    LabeledPair,
    canonicalize,
    generate_uniform,
    hardness_indicator,
    label,
    load_dataset,
    save_dataset,
    unit_square,
)

from conftest import make_instance


class TestGenerateUniform:
    def test_deterministic(self):
        a = generate_uniform(20, 50, seed=7)
        b = generate_uniform(20, 50, seed=7)
        for x, y in zip(a, b):
            assert np.array_equal(x.coords, y.coords)
            assert x.id == y.id

    def test_different_seeds_differ(self):
        a = generate_uniform(5, 1, seed=1)[0]
        b = generate_uniform(5, 1, seed=2)[0]
        assert not np.array_equal(a.coords, b.coords)

    def test_in_unit_square(self):
        for inst in generate_uniform(30, 20, seed=3):
            assert inst.coords.min() >= 0.0 and inst.coords.max() < 1.0

    def test_mean_coordinate_law_of_large_numbers(self):
        # oracle: E[x] = 0.5 for U[0,1]; 1e5 points keep the sample mean within 0.01
        insts = generate_uniform(100, 1000, seed=11)
        xs = np.concatenate([i.coords[:, 0] for i in insts])
        assert xs.size == 100_000
        assert abs(xs.mean() - 0.5) < 0.01


class TestCanonicalize:
    def test_spec_rule(self):
        assert canonicalize(Tour([2, 0, 3, 1])).order == (0, 2, 1, 3)

    def test_idempotent_random(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            t = Tour(rng.permutation(int(rng.integers(2, 10))))
            c = canonicalize(t)
            assert canonicalize(c).order == c.order


class TestLabel:
    def test_unit_square_brute(self, unit_square):
        pair = label([unit_square], "BRUTE")[0]
        assert pair.tour.order == (0, 1, 2, 3)
        assert tour_length(unit_square.matrix(), pair.tour) == pytest.approx(4.0)
        assert pair.oracle == "BRUTE"

    def test_held_karp_agrees_with_brute(self):
        # oracle: exhaustive enumeration over all (n-1)!/2 tours
        rng = np.random.default_rng(1)
        for _ in range(200):
            n = int(rng.integers(4, 11))
            inst = make_instance(rng.random((n, 2)))
            bf = brute_force(inst.matrix())
            hk = held_karp(inst.matrix())
            assert hk.length == pytest.approx(bf.length, rel=1e-12)

    def test_heuristic_best_never_beats_exact(self):
        rng = np.random.default_rng(2)
        insts = [make_instance(rng.random((int(rng.integers(4, 13)), 2))) for _ in range(20)]
        hk = label(insts, "HELD_KARP")
        hb = label(insts, "HEURISTIC_BEST", LabelBudget(restarts=2))
        for a, b in zip(hk, hb):
            m = a.instance.matrix()
            assert tour_length(m, b.tour) >= tour_length(m, a.tour) - 1e-9

    def test_exact_labels_are_two_opt_optimal(self):
        rng = np.random.default_rng(3)
        insts = [make_instance(rng.random((8, 2))) for _ in range(25)]
        for pair in label(insts, "HELD_KARP"):
            assert improving_two_opt_moves(pair.instance.matrix(), pair.tour) == []

    def test_oracle_size_mismatch(self):
        inst = make_instance(np.random.default_rng(4).random((11, 2)))
        with pytest.raises(ConfigError):
            label([inst], "BRUTE")
        big = make_instance(np.random.default_rng(5).random((21, 2)))
        with pytest.raises(ConfigError):
            label([big], "HELD_KARP")

    def test_unknown_oracle(self, unit_square):
        with pytest.raises(ConfigError):
            label([unit_square], "CONJURE")

    def test_external_tours(self, tmp_path, unit_square):
        side = tmp_path / "tours.jsonl"
        side.write_text(json.dumps({"id": "square", "tour": [0, 1, 2, 3]}) + "\n")
        pair = label([unit_square], "EXTERNAL", LabelBudget(external_tours=str(side)))[0]
        assert pair.tour.order == (0, 1, 2, 3)


class TestHardness:
    def test_form_b_unit_square(self, unit_square):
        rep = hardness_indicator(unit_square, tour_len=4.0, form="B")
        assert rep.indicator == pytest.approx(4.0 / math.sqrt(4 * 1.0))
        assert rep.rank == pytest.approx(abs(2.0 - HARDNESS_PHASE_TRANSITION))

    def test_form_a_unit_square(self, unit_square):
        rep = hardness_indicator(unit_square, tour_len=4.0, form="A")
        assert rep.indicator == pytest.approx(1.0)

    def test_form_b_scale_invariant(self):
        rng = np.random.default_rng(6)
        inst = make_instance(rng.random((12, 2)))
        t = Tour(rng.permutation(12))
        base_len = tour_length(inst.matrix(), t)
        base = hardness_indicator(inst, base_len, form="B").indicator
        for s in (0.5, 2.0, 10.0):
            scaled = make_instance(inst.coords * s)
            rep = hardness_indicator(scaled, tour_length(scaled.matrix(), t), form="B")
            assert abs(rep.indicator - base) / base <= 1e-12

    def test_form_a_not_scale_invariant(self):
        rng = np.random.default_rng(7)
        inst = make_instance(rng.random((10, 2)))
        t = Tour(rng.permutation(10))
        base = hardness_indicator(inst, tour_length(inst.matrix(), t), form="A").indicator
        scaled = make_instance(inst.coords * 2.0)
        rep = hardness_indicator(scaled, tour_length(scaled.matrix(), t), form="A")
        assert rep.indicator != pytest.approx(base, rel=1e-6)

    def test_hull_vs_bbox_on_square(self, unit_square):
        bbox = hardness_indicator(unit_square, 4.0, area_convention="BBOX")
        hull = hardness_indicator(unit_square, 4.0, area_convention="HULL")
        assert bbox.area == pytest.approx(1.0)
        assert hull.area == pytest.approx(1.0)

    def test_hull_smaller_than_bbox(self):
        rng = np.random.default_rng(8)
        inst = make_instance(rng.random((30, 2)))
        b = hardness_indicator(inst, 5.0, area_convention="BBOX").area
        h = hardness_indicator(inst, 5.0, area_convention="HULL").area
        assert h <= b + 1e-12

    def test_degenerate_area(self):
        collinear = make_instance([(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)])
        with pytest.raises(DegenerateAreaError):
            hardness_indicator(collinear, 4.0)

    def test_rank_shortcut(self, unit_square):
        from tsplab.instances import hardness_rank

        assert hardness_rank(unit_square, 4.0, form="B") == pytest.approx(1.25)


class TestUnitSquareNormalization:
    def test_range_and_constant_axis(self):
        pts = np.array([[10.0, 5.0], [20.0, 5.0], [15.0, 5.0]])
        out = unit_square(pts)
        assert out[:, 0].min() == 0.0 and out[:, 0].max() == 1.0
        assert np.all(out[:, 1] == 0.5)


class TestDatasetIO:
    def test_round_trip(self, tmp_path):
        insts = generate_uniform(6, 50, seed=9)
        pairs = label(insts, "BRUTE")
        path = tmp_path / "data.jsonl"
        save_dataset(pairs, str(path))
        loaded = load_dataset(str(path))
        assert len(loaded) == len(pairs)
        for a, b in zip(pairs, loaded):
            assert np.array_equal(a.instance.coords, b.instance.coords)
            assert a.tour.order == b.tour.order
            assert a.oracle == b.oracle
            assert a.instance.id == b.instance.id

    def test_unlabeled_round_trip(self, tmp_path):
        insts = generate_uniform(5, 3, seed=10)
        path = tmp_path / "u.jsonl"
        save_dataset([LabeledPair(i, None, None) for i in insts], str(path))
        loaded = load_dataset(str(path))
        assert all(p.tour is None for p in loaded)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("")
        assert load_dataset(str(path)) == []

    def test_missing_tour_key_errors_with_line(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        good = {"id": "a", "metric": "EUC2D_CONT", "coords": [[0, 0], [1, 1]], "tour": None, "oracle": None}
        bad = {"id": "b", "metric": "EUC2D_CONT", "coords": [[0, 0], [1, 1]], "oracle": None}
        path.write_text(json.dumps(good) + "\n" + json.dumps(bad) + "\n")
        with pytest.raises(ParseError, match=":2"):
            load_dataset(str(path))
