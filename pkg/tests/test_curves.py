import math

import numpy as np
import pytest

from curvejoin import (
    Curve,
    Dataset,
    ParseError,
    bounding_box,
    densify,
    longest_edge,
    parse_series_1d,
    parse_trajectories_2d,
    simplify,
    write_series_1d,
    write_trajectories_2d,
)
from helpers import curve, curve1, random_walk_curve


class TestCurve:
    def test_flat_input_becomes_one_dimensional(self):
        c = Curve(0, np.array([1.0, 2.0, 3.0]))
        assert c.vertices.shape == (3, 1)
        assert c.dim == 1
        assert len(c) == 3

    def test_rejects_empty_and_nonfinite(self):
        with pytest.raises(ValueError):
            Curve(0, np.empty((0, 2)))
        with pytest.raises(ValueError):
            Curve(0, np.array([[0.0, float("nan")]]))
        with pytest.raises(ValueError):
            Curve(0, np.array([[math.inf]]))

    def test_vertices_are_immutable(self):
        c = curve(0, [[0.0, 0.0], [1.0, 1.0]])
        with pytest.raises(ValueError):
            c.vertices[0, 0] = 5.0

    def test_consecutive_duplicates_allowed(self):
        c = curve1(0, [1.0, 1.0, 2.0])
        assert len(c) == 3


class TestDataset:
    def test_ids_must_be_dense(self):
        with pytest.raises(ValueError):
            Dataset([curve1(0, [0.0]), curve1(2, [1.0])])
        with pytest.raises(ValueError):
            Dataset([curve1(0, [0.0]), curve1(0, [1.0])])

    def test_dimensions_must_agree(self):
        with pytest.raises(ValueError):
            Dataset([curve1(0, [0.0]), curve(1, [[0.0, 1.0]])])

    def test_lookup_by_id_out_of_order(self):
        ds = Dataset([curve1(1, [1.0]), curve1(0, [0.0])])
        assert ds[0].vertices[0, 0] == 0.0
        assert ds[1].vertices[0, 0] == 1.0
        assert ds.n == 2

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            Dataset([])


class TestGeometryHelpers:
    def test_bounding_box(self):
        c = curve(0, [[0.0, 5.0], [-1.0, 2.0], [3.0, 3.0]])
        b = bounding_box(c)
        assert b.lower.tolist() == [-1.0, 2.0]
        assert b.upper.tolist() == [3.0, 5.0]

    def test_longest_edge(self):
        # edges: 3-4-5 triangle leg (5.0) then a unit step
        c = curve(0, [[0.0, 0.0], [3.0, 4.0], [3.0, 5.0]])
        assert longest_edge(c) == 5.0
        assert longest_edge(curve1(0, [7.0])) == 0.0


class TestSimplify:
    def test_hand_worked_example(self):
        # start at 0; 0.5 within mu; 1.2 marked; 3.0 marked; 3.3 kept as tail
        c = curve1(0, [0.0, 0.5, 1.2, 3.0, 3.3])
        s = simplify(c, 1.0)
        assert s.vertices[:, 0].tolist() == [0.0, 1.2, 3.0, 3.3]

    def test_mu_zero_drops_consecutive_duplicates(self):
        c = curve1(0, [1.0, 1.0, 2.0, 2.0, 3.0])
        s = simplify(c, 0.0)
        assert s.vertices[:, 0].tolist() == [1.0, 2.0, 3.0]

    def test_endpoints_always_kept(self):
        c = curve1(0, [0.0, 0.1, 0.2])
        s = simplify(c, 10.0)
        assert s.vertices[:, 0].tolist() == [0.0, 0.2]

    def test_negative_mu_rejected(self):
        with pytest.raises(ValueError):
            simplify(curve1(0, [0.0]), -0.1)

    def test_output_is_subsequence(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            c = random_walk_curve(rng, 0, int(rng.integers(1, 30)), 2)
            s = simplify(c, float(rng.uniform(0.0, 3.0)))
            i = 0
            for v in s.vertices:
                while i < len(c) and not np.array_equal(c.vertices[i], v):
                    i += 1
                assert i < len(c), "simplified vertex not found in order"
                i += 1

    def test_stays_within_mu_of_original(self):
        from curvejoin import decide_continuous

        rng = np.random.default_rng(8)
        for _ in range(40):
            c = random_walk_curve(rng, 0, int(rng.integers(2, 20)), 2)
            mu = float(rng.uniform(0.1, 2.0))
            s = simplify(c, mu)
            assert decide_continuous(c, s, mu)


class TestDensify:
    def test_respects_max_edge_and_keeps_original_vertices(self):
        c = curve(0, [[0.0, 0.0], [10.0, 0.0], [10.0, 1.0]])
        d = densify(c, 3.0)
        assert longest_edge(d) <= 3.0 + 1e-12
        got = {tuple(v) for v in np.round(d.vertices, 9).tolist()}
        for v in c.vertices:
            assert tuple(np.round(v, 9).tolist()) in got

    def test_identical_polyline(self):
        from curvejoin import decide_continuous

        rng = np.random.default_rng(9)
        for _ in range(20):
            c = random_walk_curve(rng, 0, int(rng.integers(2, 12)), 2)
            d = densify(c, 0.5)
            assert decide_continuous(c, d, 1e-9)

    def test_single_vertex_passthrough(self):
        c = curve1(0, [4.0])
        assert densify(c, 1.0) is c

    def test_nonpositive_max_edge_rejected(self):
        with pytest.raises(ValueError):
            densify(curve1(0, [0.0, 1.0]), 0.0)


class TestSeriesFormat:
    def test_parse_basic(self, tmp_path):
        f = tmp_path / "series.txt"
        f.write_text("1.0, 2.0 3\n\n4 5\n")
        ds = parse_series_1d(f)
        assert ds.n == 2
        assert ds[0].vertices[:, 0].tolist() == [1.0, 2.0, 3.0]
        assert ds[1].vertices[:, 0].tolist() == [4.0, 5.0]

    def test_skip_first_field(self, tmp_path):
        f = tmp_path / "labeled.txt"
        f.write_text("7 1.5 2.5\n3 0.5\n")
        ds = parse_series_1d(f, skip_first_field=True)
        assert ds[0].vertices[:, 0].tolist() == [1.5, 2.5]
        assert ds[1].vertices[:, 0].tolist() == [0.5]

    def test_error_names_line_and_column(self, tmp_path):
        f = tmp_path / "bad.txt"
        f.write_text("1.0 2.0\n3.0 oops 5.0\n")
        with pytest.raises(ParseError, match=r"bad\.txt:2:2.*oops"):
            parse_series_1d(f)

    def test_nonfinite_rejected(self, tmp_path):
        f = tmp_path / "naughty.txt"
        f.write_text("1.0 nan\n")
        with pytest.raises(ParseError, match="non-finite"):
            parse_series_1d(f)

    def test_empty_file_rejected(self, tmp_path):
        f = tmp_path / "empty.txt"
        f.write_text("\n\n")
        with pytest.raises(ParseError, match="no curves"):
            parse_series_1d(f)

    def test_label_only_line_rejected(self, tmp_path):
        f = tmp_path / "lonely.txt"
        f.write_text("7\n")
        with pytest.raises(ParseError, match="empty curve"):
            parse_series_1d(f, skip_first_field=True)

    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(11)
        curves = [
            random_walk_curve(rng, i, int(rng.integers(1, 15)), 1)
            for i in range(6)
        ]
        ds = Dataset(curves)
        out = tmp_path / "rt.txt"
        write_series_1d(ds, out)
        back = parse_series_1d(out)
        assert back.n == ds.n
        for c in ds:
            assert np.array_equal(back[c.id].vertices, c.vertices)


class TestTrajectoryFormat:
    def _write(self, tmp_path, rows_by_name):
        names = []
        for name, rows in rows_by_name.items():
            (tmp_path / name).write_text(
                "".join(f"{x} {y}\n" for x, y in rows)
            )
            names.append(name)
        lst = tmp_path / "files.txt"
        lst.write_text("".join(n + "\n" for n in names))
        return lst

    def test_parse_and_relative_paths(self, tmp_path):
        lst = self._write(
            tmp_path,
            {"a.txt": [(0.0, 0.0), (1.0, 2.0)], "b.txt": [(5.0, 5.0)]},
        )
        ds = parse_trajectories_2d(lst)
        assert ds.n == 2 and ds.d == 2
        assert ds[0].vertices.tolist() == [[0.0, 0.0], [1.0, 2.0]]
        assert ds[1].vertices.tolist() == [[5.0, 5.0]]

    def test_comments_and_blanks_ignored(self, tmp_path):
        (tmp_path / "a.txt").write_text("# header\n1 2\n\n3 4\n")
        lst = tmp_path / "files.txt"
        lst.write_text("a.txt\n")
        ds = parse_trajectories_2d(lst)
        assert ds[0].vertices.tolist() == [[1.0, 2.0], [3.0, 4.0]]

    def test_wrong_field_count(self, tmp_path):
        (tmp_path / "a.txt").write_text("1 2 3\n")
        lst = tmp_path / "files.txt"
        lst.write_text("a.txt\n")
        with pytest.raises(ParseError, match=r"a\.txt:1.*fields"):
            parse_trajectories_2d(lst)

    def test_missing_file(self, tmp_path):
        lst = tmp_path / "files.txt"
        lst.write_text("ghost.txt\n")
        with pytest.raises(ParseError, match="not found"):
            parse_trajectories_2d(lst)

    def test_empty_trajectory(self, tmp_path):
        (tmp_path / "a.txt").write_text("# nothing\n")
        lst = tmp_path / "files.txt"
        lst.write_text("a.txt\n")
        with pytest.raises(ParseError, match="empty trajectory"):
            parse_trajectories_2d(lst)

    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(12)
        ds = Dataset(
            [random_walk_curve(rng, i, int(rng.integers(1, 10)), 2) for i in range(4)]
        )
        lst = write_trajectories_2d(ds, tmp_path / "out")
        back = parse_trajectories_2d(lst)
        for c in ds:
            assert np.array_equal(back[c.id].vertices, c.vertices)
