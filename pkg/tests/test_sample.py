import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ujack.errors import EmptyFile, InvalidParameter, MissingColumn, NonFiniteValue, ParseError
from ujack.sample import Sample, load_csv, synthesize_null_regression, write_csv


def _write(tmp_path, text, name="d.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_load_small_file(tmp_path):
    path = _write(tmp_path, "x,y\n0.1,1.0\n0.2,0.5\n")
    s = load_csv(path, ["x"], ["x", "y"])
    assert (s.n, s.m, s.p) == (2, 1, 2)
    np.testing.assert_array_equal(s.V, [[0.1, 1.0], [0.2, 0.5]])


@pytest.mark.parametrize(
    "text, exc",
    [
        ("x,y\n0.1,NaN\n0.2,0.5\n", NonFiniteValue),
        ("x,y\n0.1,inf\n0.2,0.5\n", NonFiniteValue),
        ("x,y\n0.1,abc\n0.2,0.5\n", ParseError),
        ("x,z\n0.1,1\n0.2,0.5\n", MissingColumn),
        ("", EmptyFile),
        ("x,y\n", EmptyFile),
    ],
)
def test_load_errors(tmp_path, text, exc):
    with pytest.raises(exc):
        load_csv(_write(tmp_path, text), ["x"], ["x", "y"])


def test_parse_error_location(tmp_path):
    with pytest.raises(ParseError) as info:
        load_csv(_write(tmp_path, "x,y\n0.1,1\n0.2,oops\n"), ["x"], ["x", "y"])
    assert info.value.row == 2 and info.value.col == "y"


def test_column_means_500_rows(tmp_path):
    gen = np.random.default_rng(0)
    x, y = gen.random(500), gen.normal(size=500)
    lines = ["x,y"] + [f"{float(a)!r},{float(b)!r}" for a, b in zip(x, y)]
    s = load_csv(_write(tmp_path, "\n".join(lines) + "\n"), ["x"], ["x", "y"])
    assert s.n == 500
    # independent recomputation from the raw text
    raw = np.array([[float(t) for t in line.split(",")] for line in lines[1:]])
    assert abs(s.V[:, 0].mean() - raw[:, 0].mean()) <= 1e-12
    assert abs(s.V[:, 1].mean() - raw[:, 1].mean()) <= 1e-12


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.floats(-1e6, 1e6), st.floats(-1e300, 1e300)), min_size=2, max_size=30))
def test_csv_round_trip(tmp_path_factory, rows):
    s = Sample([[a] for a, _ in rows], [[a, b] for a, b in rows])
    path = tmp_path_factory.mktemp("rt") / "s.csv"
    write_csv(s, path)
    assert load_csv(path, ["x1"], ["v1", "v2"]) == s


def test_null_regression_gaussian():
    s = synthesize_null_regression(100, ("gaussian", 0.1), 1)
    assert np.all((s.X >= 0) & (s.X <= 1))
    np.testing.assert_array_equal(s.X[:, 0], s.V[:, 0])
    assert 0.07 <= s.V[:, 1].std(ddof=1) <= 0.13


def test_null_regression_rademacher():
    s = synthesize_null_regression(100, ("rademacher", 0.1), 1)
    assert set(np.unique(s.V[:, 1])) <= {-0.1, 0.1}


def test_null_regression_deterministic():
    a = synthesize_null_regression(50, "gaussian:0.1", 99)
    b = synthesize_null_regression(50, "gaussian:0.1", 99)
    assert a.X.tobytes() == b.X.tobytes() and a.V.tobytes() == b.V.tobytes()
    assert synthesize_null_regression(50, "gaussian:0.1", 100) != a


@pytest.mark.parametrize("args", [(1, "gaussian:0.1"), (10, "gaussian:0"), (10, "cauchy:1"), (10, "rademacher:-1")])
def test_null_regression_invalid(args):
    with pytest.raises(InvalidParameter):
        synthesize_null_regression(*args, seed=1)


def test_sample_is_immutable():
    s = Sample([[0.0], [1.0]], [[1.0], [2.0]])
    with pytest.raises(ValueError):
        s.X[0, 0] = 5
