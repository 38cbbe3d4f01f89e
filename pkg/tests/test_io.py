import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from mprs.core import PointSet
from mprs.io import (
    InputError,
    fill_grid,
    grid_to_points,
    load_table,
    read_config,
    read_points,
    read_predictions,
    write_points,
    write_predictions,
)

finite = st.floats(allow_nan=False, allow_infinity=False)


class TestPoints:
    def test_round_trip(self, tmp_path, rng):
        ps = PointSet(rng.normal(size=(15, 3)), rng.normal(size=15))
        write_points(tmp_path / "a.csv", ps, ["seed = 3"])
        back = read_points(tmp_path / "a.csv", require_values=True)
        np.testing.assert_array_equal(back.coords, ps.coords)
        np.testing.assert_array_equal(back.values, ps.values)
        assert (tmp_path / "a.csv").read_text().startswith("# seed = 3\nc1,c2,c3,value\n")

    def test_without_values(self, tmp_path):
        (tmp_path / "q.csv").write_text("# comment\nc1,c2\n1,2\n\n3.5,4e-3\n")
        ps = read_points(tmp_path / "q.csv")
        assert ps.values is None
        np.testing.assert_array_equal(ps.coords, [[1, 2], [3.5, 4e-3]])

    def test_header_only(self, tmp_path):
        (tmp_path / "e.csv").write_text("c1,value\n")
        assert read_points(tmp_path / "e.csv").n == 0

    @pytest.mark.parametrize("text,line", [
        ("c1,value\n1,2\n3,x\n", 3),
        ("c1,c2,value\n1,2\n", 2),
        ("c2,value\n1,2\n", 1),
        ("c1,temp\n1,2\n", 1),
        ("c1,value\n1,nan\n", 2),
        ("# only\n", None),
    ])
    def test_malformed(self, tmp_path, text, line):
        (tmp_path / "bad.csv").write_text(text)
        with pytest.raises(InputError) as exc:
            read_points(tmp_path / "bad.csv")
        assert exc.value.line == line
        if line is not None:
            assert f":{line}:" in str(exc.value)

    def test_values_required(self, tmp_path):
        (tmp_path / "q.csv").write_text("c1\n1\n")
        with pytest.raises(InputError):
            read_points(tmp_path / "q.csv", require_values=True)

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError):
            read_points(tmp_path / "nope.csv")


class TestPredictions:
    @given(hnp.arrays(float, st.tuples(st.integers(0, 8), st.integers(1, 3)), elements=finite),
           st.booleans(), st.data())
    def test_byte_identical_reemission(self, coords, with_std, data):
        import tempfile
        from pathlib import Path
        n = coords.shape[0]
        mean = data.draw(hnp.arrays(float, n, elements=finite))
        std = data.draw(hnp.arrays(float, n, elements=st.floats(0, 1e300))) if with_std else None
        with tempfile.TemporaryDirectory() as d:
            a, b = Path(d) / "a.csv", Path(d) / "b.csv"
            write_predictions(a, coords, mean, std, ["command = predict", "seed = 1"])
            comments, c2, m2, s2 = read_predictions(a)
            write_predictions(b, c2, m2, s2, comments)
            assert a.read_bytes() == b.read_bytes()
            np.testing.assert_array_equal(m2, mean)

    def test_layout(self, tmp_path):
        write_predictions(tmp_path / "p.csv", [[0.5, 1.0]], [2.0], None)
        assert (tmp_path / "p.csv").read_text() == "c1,c2,mean,std\n0.5,1.0,2.0,\n"


class TestConfig:
    def test_parse(self, tmp_path):
        (tmp_path / "c.txt").write_text("# comment\nnb = 4\n--temp=0.01\n\nout = x y.csv\n")
        assert read_config(tmp_path / "c.txt") == {"nb": "4", "temp": "0.01", "out": "x y.csv"}

    def test_bad_line(self, tmp_path):
        (tmp_path / "c.txt").write_text("nb 4\n")
        with pytest.raises(InputError) as exc:
            read_config(tmp_path / "c.txt")
        assert exc.value.line == 1


class TestTable:
    def test_named_columns_and_gaps(self, tmp_path):
        (tmp_path / "t.csv").write_text("id,x,y,V\n1,0,0,5\n2,1,0,\n3,0,1,NA\n4,1,1,7.5\n")
        ps = load_table(tmp_path / "t.csv", ["x", "y"], "V")
        np.testing.assert_array_equal(ps.values, [5.0, 7.5])
        np.testing.assert_array_equal(ps.coords, [[0, 0], [1, 1]])

    def test_strict(self, tmp_path):
        (tmp_path / "t.csv").write_text("x,V\n0,\n")
        with pytest.raises(InputError):
            load_table(tmp_path / "t.csv", ["x"], "V", skip_missing=False)

    def test_missing_column(self, tmp_path):
        (tmp_path / "t.csv").write_text("x,V\n0,1\n")
        with pytest.raises(InputError):
            load_table(tmp_path / "t.csv", ["x", "y"], "V")

    def test_whitespace_delimited(self, tmp_path):
        (tmp_path / "t.txt").write_text("t\tP\n0\t1.5\n1\t2.5\n")
        ps = load_table(tmp_path / "t.txt", ["t"], "P", delimiter="\t")
        assert ps.dim == 1 and ps.values.tolist() == [1.5, 2.5]


class TestGrid:
    def test_split_and_fill(self):
        grid = np.array([[1.0, np.nan, 3.0], [np.nan, 5.0, 6.0]])
        s, gaps, si, gi = grid_to_points(grid, spacing=2.0, origin=(10.0, 0.0))
        assert s.n == 4 and gaps.n == 2
        np.testing.assert_array_equal(gaps.coords, [[10.0, 2.0], [12.0, 0.0]])
        filled = fill_grid(grid, gi, [2.0, 4.0])
        np.testing.assert_array_equal(filled, [[1, 2, 3], [4, 5, 6]])
        assert np.isnan(grid[0, 1])
