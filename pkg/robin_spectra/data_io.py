"""
Reading potentials and writing result files.

File Formats:
1. Potential JSON (.json or .json.gz):
   {"entries": [{"n": 1, "re": 0.3, "im": 0.0}, ...],
    "tail": {"start": 20, "amplitude": {"re": 1.0, "im": 0.0}, "exponent": 4.0}}
   "tail" is optional; duplicate sites are rejected.
2. Polyline CSV: header "re,im", one polyline per block, blocks separated by
   a blank line.
3. Weight tables: CSV "n,w_n".
4. Reports: JSON with sorted keys and a trailing newline.

Design Decisions:
- Compressed input is recognised by the gzip magic bytes, not the suffix.
- Writers are deterministic: fixed float formatting (repr), sorted keys,
  gzip headers with mtime 0.
"""

import csv
import gzip
import io
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Union

import numpy as np

from .errors import PotentialFormatError
from .lattice import DecayTail, Potential

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

GZIP_MAGIC = b"\x1f\x8b"


def _read_text(path: Path) -> str:
    raw = path.read_bytes()
    if raw[:2] == GZIP_MAGIC:
        raw = gzip.decompress(raw)
    return raw.decode("utf-8")


def _number(obj: Dict[str, Any], key: str, where: str, default: Any = None) -> float:
    if key not in obj:
        if default is not None:
            return default
        raise PotentialFormatError(f"{where}: missing field {key!r}")
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise PotentialFormatError(f"{where}: field {key!r} must be a number, got {value!r}")
    return value


def potential_from_dict(data: Dict[str, Any]) -> Potential:
    """
    Build a Potential from its JSON object.

    Raises:
        PotentialFormatError: On missing fields, non-numeric values or duplicate sites
    """
    if not isinstance(data, dict) or "entries" not in data:
        raise PotentialFormatError(
            'potential JSON must be an object with an "entries" list\n'
            'Expected: {"entries": [{"n": 1, "re": 0.5, "im": 0.0}]}'
        )
    entries = data["entries"]
    if not isinstance(entries, list):
        raise PotentialFormatError('"entries" must be a list')
    values: Dict[int, complex] = {}
    for idx, item in enumerate(entries):
        where = f"entries[{idx}]"
        if not isinstance(item, dict):
            raise PotentialFormatError(f"{where}: expected an object, got {item!r}")
        n = item.get("n")
        if isinstance(n, bool) or not isinstance(n, int) or n < 1:
            raise PotentialFormatError(f"{where}: site n must be an integer >= 1, got {n!r}")
        if n in values:
            raise PotentialFormatError(f"{where}: duplicate site n = {n}")
        values[n] = complex(_number(item, "re", where), _number(item, "im", where, 0.0))

    tail = None
    if data.get("tail") is not None:
        spec = data["tail"]
        if not isinstance(spec, dict):
            raise PotentialFormatError('"tail" must be an object')
        amplitude = spec.get("amplitude")
        if isinstance(amplitude, dict):
            amplitude = complex(_number(amplitude, "re", "tail.amplitude"),
                                _number(amplitude, "im", "tail.amplitude", 0.0))
        else:
            amplitude = _number(spec, "amplitude", "tail")
        start = spec.get("start", max(values) if values else 0)
        tail = DecayTail(start, amplitude, _number(spec, "exponent", "tail"))
    return Potential(values, tail)


def potential_to_dict(V: Potential) -> Dict[str, Any]:
    out: Dict[str, Any] = {
        "entries": [
            {"n": int(n), "re": float(v.real), "im": float(v.imag)}
            for n, v in zip(V.sites, V.values)
        ]
    }
    if V.tail is not None:
        out["tail"] = {
            "start": V.tail.start,
            "amplitude": {"re": V.tail.amplitude.real, "im": V.tail.amplitude.imag},
            "exponent": V.tail.exponent,
        }
    return out


def load_potential(path: PathLike) -> Potential:
    """
    Load a potential from .json or gzip-compressed .json.gz.

    Raises:
        FileNotFoundError: If the file does not exist
        PotentialFormatError: If the content is not a valid potential
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Potential file not found: {path}")
    try:
        data = json.loads(_read_text(path))
    except (json.JSONDecodeError, UnicodeDecodeError, OSError) as exc:
        raise PotentialFormatError(f"cannot read potential {path}: {exc}") from exc
    V = potential_from_dict(data)
    logger.debug("loaded %r from %s", V, path)
    return V


def dumps_json(obj: Any) -> str:
    """Deterministic JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(_json_safe(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _json_safe(obj: Any) -> Any:
    """numpy scalars to Python numbers, complex to {re, im}, inf to a string."""
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_json_safe(v) for v in obj.tolist()]
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _json_safe(float(obj.real)), "im": _json_safe(float(obj.imag))}
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return obj


def write_json(path: PathLike, obj: Any) -> Path:
    """Write a report as deterministic JSON; a .gz suffix compresses it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = dumps_json(obj).encode("utf-8")
    if path.suffix == ".gz":
        buffer = io.BytesIO()
        with gzip.GzipFile(filename="", mode="wb", fileobj=buffer, mtime=0) as gz:
            gz.write(text)
        path.write_bytes(buffer.getvalue())
    else:
        path.write_bytes(text)
    return path


def save_potential(path: PathLike, V: Potential) -> Path:
    return write_json(path, potential_to_dict(V))


def write_polylines_csv(path: PathLike, polylines: Iterable[np.ndarray]) -> Path:
    """One block of "re,im" rows per polyline, blank line between blocks."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        f.write("re,im\n")
        for idx, line in enumerate(polylines):
            if idx:
                f.write("\n")
            for z in np.asarray(line, dtype=complex):
                f.write(f"{float(z.real)!r},{float(z.imag)!r}\n")
    return path


def read_polylines_csv(path: PathLike) -> List[np.ndarray]:
    """Inverse of write_polylines_csv."""
    blocks: List[List[complex]] = [[]]
    with open(path, newline="", encoding="utf-8") as f:
        rows = csv.reader(f)
        next(rows, None)
        for row in rows:
            if not row:
                if blocks[-1]:
                    blocks.append([])
                continue
            blocks[-1].append(complex(float(row[0]), float(row[1])))
    return [np.asarray(b, dtype=complex) for b in blocks if b]


def write_table_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Plain CSV table with repr-formatted floats."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def write_weight_table(path: PathLike, weights: np.ndarray) -> Path:
    """CSV "n,w_n" for n = 1..len(weights)."""
    return write_table_csv(path, ["n", "w_n"],
                           ((n, float(w)) for n, w in enumerate(weights, start=1)))
