"""
Marching squares for the zero level set of a sampled scalar field.

Nodes with value > 0 are "outside", the rest "inside". Each cell whose corners
disagree contributes one or two segments joining linear-interpolation points on
its edges. Segments sharing an edge point are chained into polylines.

Design Decisions:
- Saddle cells (diagonal corners agree, neighbours disagree) are resolved by
  the sign of the cell-centre value, taken as the mean of the four corners.
- The column axis may be periodic (polar grids in the angle); closed loops
  then close across the seam.
- Output coordinates are fractional (row, column) indices. Column values in
  [C - 1, C] belong to the seam cell when the axis is periodic.
"""

import logging
from typing import Dict, List, Tuple

import numpy as np

logger = logging.getLogger(__name__)

# Edge key: (orientation, row, col). "h" joins (row, col)-(row, col+1),
# "v" joins (row, col)-(row+1, col).
EdgeKey = Tuple[str, int, int]


def _crossing(f0: float, f1: float) -> float:
    """Fraction along an edge from the f0 end where the linear interpolant vanishes."""
    return f0 / (f0 - f1)


def _cell_segments(outside: Tuple[bool, bool, bool, bool], center_outside: bool):
    """
    Edge pairs for one cell. Corners c0=(i,j), c1=(i,j+1), c2=(i+1,j+1),
    c3=(i+1,j); edges e0=c0c1, e1=c1c2, e2=c3c2, e3=c0c3.
    """
    b0, b1, b2, b3 = outside
    crossed = [b0 != b1, b1 != b2, b3 != b2, b0 != b3]
    count = sum(crossed)
    if count == 2:
        return [tuple(e for e in range(4) if crossed[e])]
    if count == 4:
        if center_outside == b0:
            # c0 and c2 joined through the centre: cut off c1 and c3
            return [(0, 1), (2, 3)]
        return [(3, 0), (1, 2)]
    return []


def marching_squares(values: np.ndarray, periodic_columns: bool = False) -> List[np.ndarray]:
    """
    Zero contour of a 2-D array.

    Args:
        values: Array of shape (R, C); must be free of NaN
        periodic_columns: Treat column C - 1 as adjacent to column 0

    Returns:
        Polylines as arrays of shape (L, 2) holding (row, col) positions.
        Closed loops repeat their first point at the end.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 2 or min(values.shape) < 2:
        raise ValueError(f"marching_squares needs a 2-D array of size >= 2x2, got {values.shape}")
    if np.isnan(values).any():
        raise ValueError("marching_squares input contains NaN")
    rows, cols = values.shape
    if periodic_columns:
        grid = np.concatenate((values, values[:, :1]), axis=1)
    else:
        grid = values
    outside = grid > 0
    n_cell_cols = grid.shape[1] - 1

    mixed = (
        (outside[:-1, :-1] != outside[:-1, 1:])
        | (outside[:-1, :-1] != outside[1:, :-1])
        | (outside[:-1, :-1] != outside[1:, 1:])
    )
    cells = np.argwhere(mixed)

    points: Dict[EdgeKey, Tuple[float, float]] = {}

    def edge_point(key: EdgeKey) -> Tuple[float, float]:
        if key in points:
            return points[key]
        kind, i, j = key
        if kind == "h":
            t = _crossing(grid[i, j], grid[i, j + 1])
            point = (float(i), j + t)
        else:
            t = _crossing(grid[i, j], grid[i + 1, j])
            point = (i + t, float(j))
        points[key] = point
        return point

    def canonical(kind: str, i: int, j: int) -> EdgeKey:
        if periodic_columns and kind == "v" and j == cols:
            return ("v", i, 0)
        return (kind, i, j)

    segments: List[Tuple[EdgeKey, EdgeKey]] = []
    for i, j in cells:
        i = int(i)
        j = int(j)
        corners = (outside[i, j], outside[i, j + 1], outside[i + 1, j + 1], outside[i + 1, j])
        center = 0.25 * (grid[i, j] + grid[i, j + 1] + grid[i + 1, j + 1] + grid[i + 1, j])
        edges = (
            ("h", i, j),
            canonical("v", i, j + 1),
            ("h", i + 1, j),
            ("v", i, j),
        )
        for first, second in _cell_segments(corners, center > 0):
            segments.append((edges[first], edges[second]))

    polylines = _link(segments)
    result = []
    for chain in polylines:
        coords = []
        for key in chain:
            row, col = edge_point(key)
            coords.append((row, col))
        result.append(np.asarray(coords, dtype=float))
    _unwrap_columns(result, cols, periodic_columns)
    logger.debug("marching squares: %d cells, %d segments, %d polylines",
                 len(cells), len(segments), len(result))
    return result


def _link(segments: List[Tuple[EdgeKey, EdgeKey]]) -> List[List[EdgeKey]]:
    """Chain segments through shared edge keys; open chains first, then loops."""
    incident: Dict[EdgeKey, List[int]] = {}
    for idx, (p, q) in enumerate(segments):
        incident.setdefault(p, []).append(idx)
        incident.setdefault(q, []).append(idx)
    used = [False] * len(segments)

    def walk(start_key: EdgeKey, start_seg: int) -> List[EdgeKey]:
        chain = [start_key]
        key, seg = start_key, start_seg
        while seg is not None and not used[seg]:
            used[seg] = True
            p, q = segments[seg]
            key = q if p == key else p
            chain.append(key)
            seg = next((s for s in incident[key] if not used[s]), None)
        return chain

    chains = []
    for key in sorted(k for k, segs in incident.items() if len(segs) == 1):
        seg = incident[key][0]
        if not used[seg]:
            chains.append(walk(key, seg))
    for idx, (p, _) in enumerate(segments):
        if not used[idx]:
            chains.append(walk(p, idx))
    return chains


def _unwrap_columns(polylines: List[np.ndarray], cols: int, periodic: bool) -> None:
    """Keep consecutive column positions within half a period of each other."""
    if not periodic:
        return
    for line in polylines:
        if line.shape[0] < 2:
            continue
        jumps = np.diff(line[:, 1])
        shift = -cols * np.round(jumps / cols)
        line[1:, 1] += np.cumsum(shift)
