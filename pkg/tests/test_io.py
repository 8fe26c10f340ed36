import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shiftqr.io import (
    MatrixFormatError,
    from_json_obj,
    read_json,
    read_matrix,
    read_mtx,
    to_json_obj,
    write_matrix,
    write_mtx,
)

finite = st.floats(allow_nan=False, allow_infinity=False, allow_subnormal=True, width=64)


@st.composite
def matrices(draw):
    n = draw(st.integers(1, 5))
    vals = draw(st.lists(st.tuples(finite, finite), min_size=n * n, max_size=n * n))
    a = np.empty((n, n), dtype=complex)
    a.real = np.array([v[0] for v in vals]).reshape(n, n)
    a.imag = np.array([v[1] for v in vals]).reshape(n, n)
    return a


def bits(a):
    return np.concatenate([a.real.view(np.uint64).ravel(), a.imag.view(np.uint64).ravel()])


@settings(max_examples=100, deadline=None)
@given(a=matrices())
def test_json_round_trip_bit_exact(a, tmp_path_factory):
    p = tmp_path_factory.mktemp("j") / "a.json"
    write_matrix(p, a)
    assert np.array_equal(bits(read_matrix(p)), bits(a))


@settings(max_examples=100, deadline=None)
@given(a=matrices())
def test_mtx_round_trip_bit_exact(a, tmp_path_factory):
    p = tmp_path_factory.mktemp("m") / "a.mtx"
    write_matrix(p, a)
    assert np.array_equal(bits(read_matrix(p)), bits(a))


def test_signed_zero_survives_json():
    a = np.array([[complex(-0.0, -0.0)]])
    b = from_json_obj(json.loads(json.dumps(to_json_obj(a))))
    assert np.signbit(b.real[0, 0]) and np.signbit(b.imag[0, 0])


def test_json_layout_is_row_major(tmp_path):
    a = np.array([[1, 2j], [3, 4]])
    p = tmp_path / "a.json"
    write_matrix(p, a)
    obj = json.loads(p.read_text())
    assert obj == {"n": 2, "entries": [[1.0, 0.0], [0.0, 2.0], [3.0, 0.0], [4.0, 0.0]]}


def test_mtx_layout(tmp_path):
    p = tmp_path / "a.mtx"
    write_mtx(p, np.array([[1, 2j], [3, 4]]))
    lines = p.read_text().splitlines()
    assert lines[0] == "%%MatrixMarket matrix array complex general"
    assert lines[1] == "2 2"
    # column-major
    assert lines[2:] == ["1.0 0.0", "3.0 0.0", "0.0 2.0", "4.0 0.0"]


def test_mtx_real_array_and_comments(tmp_path):
    p = tmp_path / "a.mtx"
    p.write_text("%%MatrixMarket matrix array real general\n% a comment\n2 2\n1\n2\n3\n4\n")
    np.testing.assert_array_equal(read_mtx(p), [[1, 3], [2, 4]])


def test_mtx_coordinate_via_fallback(tmp_path):
    p = tmp_path / "a.mtx"
    p.write_text("%%MatrixMarket matrix coordinate complex general\n2 2 2\n1 1 1.5 -1\n2 1 0 2\n")
    np.testing.assert_array_equal(read_mtx(p), [[1.5 - 1j, 0], [2j, 0]])


def test_mtx_hermitian_via_fallback(tmp_path):
    p = tmp_path / "a.mtx"
    p.write_text("%%MatrixMarket matrix coordinate complex hermitian\n2 2 2\n1 1 1 0\n2 1 1 1\n")
    np.testing.assert_array_equal(read_mtx(p), [[1, 1 - 1j], [1 + 1j, 0]])


@pytest.mark.parametrize("text", [
    "",
    "not a header\n1 1\n1 0\n",
    "%%MatrixMarket vector array complex general\n1 1\n1 0\n",
    "%%MatrixMarket matrix array complex general\n",
    "%%MatrixMarket matrix array complex general\n2 2\n1 0\n",
    "%%MatrixMarket matrix array complex general\n1 1\n1\n",
    "%%MatrixMarket matrix array complex general\n1 1\nx y\n",
    "%%MatrixMarket matrix array complex general\n2 1\n1 0\n1 0\n",
    "%%MatrixMarket matrix array complex general\n1 1\nnan 0\n",
    "%%MatrixMarket matrix coordinate complex general\n2 2 5\n1 1 1 0\n",
])
def test_mtx_malformed(tmp_path, text):
    p = tmp_path / "bad.mtx"
    p.write_text(text)
    with pytest.raises(MatrixFormatError):
        read_matrix(p)


@pytest.mark.parametrize("obj", [
    [],
    {"n": 2},
    {"n": 0, "entries": []},
    {"n": True, "entries": [[1, 0]]},
    {"n": 2, "entries": [[1, 0]]},
    {"n": 1, "entries": [[1]]},
    {"n": 1, "entries": [["1", 0]]},
    {"n": 1, "entries": [[True, 0]]},
])
def test_json_malformed(tmp_path, obj):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(obj))
    with pytest.raises(MatrixFormatError):
        read_json(p)


def test_json_syntax_error(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{")
    with pytest.raises(MatrixFormatError):
        read_matrix(p)


def test_missing_file_and_extension(tmp_path):
    with pytest.raises(MatrixFormatError):
        read_matrix(tmp_path / "nope.json")
    with pytest.raises(MatrixFormatError):
        read_matrix(tmp_path / "a.txt")


def test_write_rejects_bad_shapes(tmp_path):
    with pytest.raises(MatrixFormatError):
        write_matrix(tmp_path / "a.json", np.ones((2, 3)))
    with pytest.raises(MatrixFormatError):
        write_matrix(tmp_path / "a.mtx", np.array([[np.inf]]))
