import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sdcnn.bench.data import (
    DataError,
    Dataset,
    GridSpec,
    RectangleHoldout,
    eggholder,
    generate_eggholder_dataset,
    kfold_split,
    load_csv,
    minmax_scale,
    minmax_unscale,
    read_rows,
    rectangle_holdout,
    write_dataset_csv,
    write_scores_csv,
    write_surface_csv,
)

# 40-digit mpmath evaluation of the surface at (100, 100)
EGG_100_100 = -200.4143930647469253149400880656956865205


def egg_mp(x1, x2):
    mpmath.mp.dps = 40
    a, b = mpmath.mpf(x1), mpmath.mpf(x2)
    return -(b + 47) * mpmath.sin(mpmath.sqrt(abs(b + a / 2 + 47))) - a * mpmath.sin(mpmath.sqrt(abs(a - (b + 47))))


class TestEggholder:
    def test_zero_coefficient_point(self):
        assert eggholder(0.0, -47.0) == 0.0

    def test_origin(self):
        assert eggholder(0.0, 0.0) == pytest.approx(-47 * math.sin(math.sqrt(47)), rel=1e-14)
        assert eggholder(0.0, 0.0) == pytest.approx(-25.46, abs=5e-3)

    def test_pinned(self):
        assert eggholder(100.0, 100.0) == pytest.approx(EGG_100_100, rel=1e-13)

    def test_against_high_precision(self):
        pts = np.random.default_rng(0).uniform(-500, 500, size=(100, 2))
        vals = eggholder(pts[:, 0], pts[:, 1])
        for (a, b), v in zip(pts, vals):
            ref = float(egg_mp(a, b))
            assert abs(v - ref) <= 1e-10 * max(abs(ref), 1.0)

    def test_array_matches_scalar(self):
        pts = np.random.default_rng(1).uniform(-500, 500, size=(20, 2))
        arr = eggholder(pts[:, 0], pts[:, 1])
        assert all(arr[i] == eggholder(*pts[i]) for i in range(20))


class TestGrid:
    def test_sizes(self):
        assert len(generate_eggholder_dataset(GridSpec(60, 60))) == 3600
        assert len(GridSpec(300, 300).points()) == 90_000

    def test_corner_maps_to_origin(self):
        ds = generate_eggholder_dataset(GridSpec(10, 7))
        sc = ds.scaled_locations
        i = np.flatnonzero((ds.locations == [-500, -500]).all(axis=1))[0]
        assert np.array_equal(sc[i], [0.0, 0.0])
        assert sc.min() == 0.0 and sc.max() == 1.0

    def test_uniform_spacing(self):
        pts = GridSpec(40, 25, (-3.0, 7.0, 1.0, 2.0)).points()
        for axis, n in ((0, 40), (1, 25)):
            u = np.unique(pts[:, axis])
            assert len(u) == n
            d = np.diff(u)
            assert np.ptp(d) < 1e-12

    def test_responses_are_surface(self):
        ds = generate_eggholder_dataset(GridSpec(5, 5))
        assert np.array_equal(ds.responses, eggholder(ds.locations[:, 0], ds.locations[:, 1]))

    def test_bad_grid(self):
        with pytest.raises(DataError):
            GridSpec(0, 3)
        with pytest.raises(DataError):
            GridSpec(3, 3, (1, 0, 0, 1))


class TestScaling:
    def test_example(self):
        v = np.array([[-500.0, 0.0], [0.0, 1.0], [500.0, 2.0]])
        s, st_ = minmax_scale(v)
        np.testing.assert_array_equal(s[:, 0], [0.0, 0.5, 1.0])

    @given(st.lists(st.tuples(st.floats(-1e4, 1e4), st.floats(-1e4, 1e4)), min_size=2, max_size=30))
    def test_round_trip(self, pts):
        v = np.array(pts)
        if np.any(np.ptp(v, axis=0) < 1e-3):
            return
        s, state = minmax_scale(v)
        np.testing.assert_allclose(minmax_unscale(s, state), v, rtol=0, atol=1e-12 * max(1.0, np.abs(v).max()))

    def test_reuses_training_state(self):
        _, state = minmax_scale(np.array([[0.0, 0.0], [10.0, 10.0]]))
        s, state2 = minmax_scale(np.array([[20.0, -10.0]]), state)
        np.testing.assert_array_equal(s, [[2.0, -1.0]])
        assert state2 is state

    def test_constant_axis(self):
        with pytest.raises(DataError):
            minmax_scale(np.array([[1.0, 2.0], [1.0, 3.0]]))


class TestKFold:
    def test_sizes(self):
        f = kfold_split(10, 5, 0)
        assert [len(f.test_indices(i)) for i in range(5)] == [2] * 5

    @settings(max_examples=50)
    @given(st.integers(2, 300), st.integers(2, 10), st.integers(0, 1000))
    def test_partition(self, n, k, seed):
        if n < k:
            with pytest.raises(DataError):
                kfold_split(n, k, seed)
            return
        f = kfold_split(n, k, seed)
        tests = [f.test_indices(i) for i in range(k)]
        allidx = np.concatenate(tests)
        assert np.array_equal(np.sort(allidx), np.arange(n))
        sizes = [len(t) for t in tests]
        assert max(sizes) - min(sizes) <= 1
        for i in range(k):
            assert len(np.intersect1d(f.train_indices(i), tests[i])) == 0
            assert len(f.train_indices(i)) + len(tests[i]) == n

    def test_seeded(self):
        assert np.array_equal(kfold_split(50, 5, 3).assignments, kfold_split(50, 5, 3).assignments)
        assert not np.array_equal(kfold_split(50, 5, 3).assignments, kfold_split(50, 5, 4).assignments)

    def test_bad_k(self):
        with pytest.raises(DataError):
            kfold_split(10, 1)


class TestRectangle:
    def test_desk_grid_count(self):
        ds = generate_eggholder_dataset(GridSpec(60, 60))
        train, test = rectangle_holdout(ds, (-100, 100, -100, 100))
        count = 0
        for x1, x2 in ds.locations:
            if -100 < x1 < 100 and -100 < x2 < 100:
                count += 1
        assert len(test) == count
        assert len(train) + len(test) == 3600
        assert len(np.intersect1d(train, test)) == 0

    def test_default_rect(self):
        assert RectangleHoldout().rect == (-100.0, 100.0, -100.0, 100.0)

    def test_errors(self):
        ds = generate_eggholder_dataset(GridSpec(10, 10))
        with pytest.raises(DataError):
            rectangle_holdout(ds, (600, 700, 600, 700))
        with pytest.raises(DataError):
            rectangle_holdout(ds, (-1, 1, 600, 700))
        with pytest.raises(DataError):
            rectangle_holdout(ds, (-501, 501, -501, 501))
        with pytest.raises(DataError):
            rectangle_holdout(ds, (1, 1, 0, 2))
        with pytest.raises(DataError):
            # inside the box but between grid lines
            rectangle_holdout(ds, (1, 2, 1, 2))


class TestCSV:
    def test_three_rows(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("x1,x2,y\n0,0,1\n1,0,2\n0,1,3\n")
        ds = load_csv(p)
        assert len(ds) == 3
        np.testing.assert_array_equal(ds.responses, [1, 2, 3])

    def test_nan_and_blank_are_prediction_only(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("x1,x2,y\n0,0,NaN\n1,0,\n0,1,3\n")
        ds = load_csv(p)
        assert len(ds) == 3
        np.testing.assert_array_equal(ds.observed, [False, False, True])

    def test_malformed_line_number(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("x1,x2,y\n0,0,1\n1,abc,2\n")
        with pytest.raises(DataError, match=":3:"):
            load_csv(p)
        p.write_text("x1,x2,y\n0,0,1\n1,2\n")
        with pytest.raises(DataError, match=":3:"):
            load_csv(p)

    def test_empty_and_bad_header(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("")
        with pytest.raises(DataError, match="empty"):
            load_csv(p)
        p.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(DataError):
            load_csv(p)
        p.write_text("x1,x2,y\n")
        with pytest.raises(DataError):
            load_csv(p)

    def test_round_trip_bitwise(self, tmp_path):
        rng = np.random.default_rng(0)
        locs = rng.normal(size=(50, 2)) * 10.0 ** rng.integers(-8, 8, size=(50, 2))
        ys = rng.normal(size=50) * 1e5
        ys[3] = np.nan
        ds = Dataset(locs, ys)
        write_dataset_csv(tmp_path / "d.csv", ds)
        back = load_csv(tmp_path / "d.csv")
        assert np.array_equal(back.locations, ds.locations)
        assert np.array_equal(back.responses, ds.responses, equal_nan=True)
        assert [int(i) for i in back.location_ids] == ds.location_ids

    def test_rfc4180_crlf(self, tmp_path):
        write_scores_csv(tmp_path / "s.csv", [{"model": "a,b", "fold": 0, "mse": 0.1, "crps": -1.0,
                                              "icr": 1.0, "interval_score": 2.5}])
        raw = (tmp_path / "s.csv").read_bytes()
        assert raw.endswith(b"\r\n") and b'"a,b"' in raw
        assert b"0.10000000000000001" in raw

    def test_surface_columns(self, tmp_path):
        pts = GridSpec(4, 3).points()
        write_surface_csv(tmp_path / "s.csv", pts, np.zeros(12), np.ones(12))
        header, rows = read_rows(tmp_path / "s.csv")
        assert header == ["x1", "x2", "mean", "sd"] and len(rows) == 12
