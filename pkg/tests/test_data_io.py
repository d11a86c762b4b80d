"""
Tests for potential files, JSON reports and CSV outputs.
"""

import gzip
import json

import numpy as np
import pytest

from robin_spectra.data_io import (
    dumps_json,
    load_potential,
    potential_from_dict,
    potential_to_dict,
    read_polylines_csv,
    save_potential,
    write_json,
    write_polylines_csv,
    write_weight_table,
)
from robin_spectra.errors import PotentialFormatError
from robin_spectra.lattice import Potential


def test_potential_from_dict():
    """Test entries with optional imaginary parts and a tail."""
    V = potential_from_dict({
        "entries": [{"n": 1, "re": 0.5}, {"n": 3, "re": 0, "im": -1.25}],
        "tail": {"amplitude": {"re": 0.1, "im": 0.2}, "exponent": 4},
    })
    assert V.entries == {1: 0.5, 3: -1.25j}
    assert V.tail.start == 3
    assert V.tail.amplitude == 0.1 + 0.2j
    assert V.value(5) == pytest.approx((0.1 + 0.2j) * 5 ** -4)


@pytest.mark.parametrize(
    "data",
    [
        [],
        {"entries": {}},
        {"entries": [{"n": 0, "re": 1}]},
        {"entries": [{"n": 1.5, "re": 1}]},
        {"entries": [{"n": True, "re": 1}]},
        {"entries": [{"n": 1}]},
        {"entries": [{"n": 1, "re": "x"}]},
        {"entries": [{"n": 2, "re": 1}, {"n": 2, "re": 3}]},
        {"entries": [], "tail": {"amplitude": 1, "exponent": 0.5}},
        {"entries": [], "tail": [1, 2]},
    ],
)
def test_potential_format_errors(data):
    """Test malformed potential objects are rejected."""
    with pytest.raises(PotentialFormatError):
        potential_from_dict(data)


def test_potential_file_round_trip(tmp_path):
    """Test saving and loading plain and gzip-compressed files."""
    V = Potential.with_tail({2: 0.3 - 0.1j}, amplitude=0.5, exponent=3.5)
    for name in ("v.json", "v.json.gz"):
        path = save_potential(tmp_path / name, V)
        W = load_potential(path)
        assert W.entries == V.entries
        assert W.tail == V.tail
    assert potential_to_dict(Potential.zero()) == {"entries": []}


def test_load_potential_errors(tmp_path):
    """Test missing files and invalid JSON."""
    with pytest.raises(FileNotFoundError):
        load_potential(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(PotentialFormatError):
        load_potential(bad)


def test_dumps_json_is_deterministic():
    """Test sorted keys, complex and numpy conversion, non-finite values as strings."""
    text = dumps_json({"b": np.float64(1.5), "a": 2 - 1j, "c": [np.int64(3), float("inf")]})
    assert text.endswith("\n")
    data = json.loads(text)
    assert list(data) == ["a", "b", "c"]
    assert data["a"] == {"re": 2.0, "im": -1.0}
    assert data["c"] == [3, "inf"]
    assert dumps_json({"x": 1}) == dumps_json({"x": 1})


def test_write_json_gzip_is_byte_stable(tmp_path):
    """Test compressed reports carry no timestamp."""
    first = write_json(tmp_path / "one.json.gz", {"level": "Inconclusive"}).read_bytes()
    second = write_json(tmp_path / "two.json.gz", {"level": "Inconclusive"}).read_bytes()
    assert first == second
    assert json.loads(gzip.decompress(first)) == {"level": "Inconclusive"}


def test_polyline_csv(tmp_path):
    """Test blocks separated by blank lines and exact float text."""
    lines = [np.array([0.1 + 0.2j, 1 / 3 - 2j]), np.array([5j])]
    path = write_polylines_csv(tmp_path / "curve.csv", lines)
    text = path.read_text(encoding="utf-8")
    assert text.startswith("re,im\n")
    assert "\n\n" in text
    back = read_polylines_csv(path)
    assert len(back) == 2
    assert np.array_equal(back[0], lines[0])
    assert np.array_equal(back[1], lines[1])


def test_weight_table(tmp_path):
    """Test the n,w_n table."""
    path = write_weight_table(tmp_path / "w.csv", np.array([0.5, 0.25]))
    assert path.read_text(encoding="utf-8").splitlines() == ["n,w_n", "1,0.5", "2,0.25"]
