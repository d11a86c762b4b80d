"""
SVG rendering of spectral enclosures.

Styling is fixed: the essential spectrum [-2, 2] as a black segment, one
blue curve family per budget Q (darker for larger Q), and the eigenvalue
a + 1/a of J_a as a red dot when |a| > 1.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .data_io import write_polylines_csv  # noqa: E402
from .enclosure import DEFAULT_DELTA, DEFAULT_GRID, EnclosureCurve, trace_boundary  # noqa: E402
from .errors import InputError  # noqa: E402
from .lattice import GOLDEN_RATIO  # noqa: E402
from .spectra import hausdorff_distance  # noqa: E402

logger = logging.getLogger(__name__)

plt.rcParams["svg.hashsalt"] = "robin-spectra"
plt.rcParams["svg.fonttype"] = "none"

FIGURE_BUDGETS = (0.5, 1.0, 2.0)

FIGURE_PRESETS: Dict[str, complex] = {
    "fig1": 0j,                       # Dirichlet
    "fig2": 1 + 0j,                   # Neumann
    "fig3": 0.5 + 0j,
    "fig4": 2 + 0j,                   # eigenvalue 2.5 outside the band
    "fig5": complex(0, GOLDEN_RATIO),  # eigenvalue i
}


@dataclass
class FigureResult:
    """Files written for one figure plus its structural summary."""

    name: str
    a: complex
    svg_path: Path
    csv_paths: List[Path] = field(default_factory=list)
    curve_counts: Dict[float, int] = field(default_factory=dict)
    has_pole_dot: bool = False
    conjugation_error: Optional[float] = None

    def to_dict(self) -> Dict:
        return {
            "name": self.name,
            "a": self.a,
            "svg": self.svg_path.name,
            "csv": [p.name for p in self.csv_paths],
            "curve_counts": {f"{q:g}": n for q, n in self.curve_counts.items()},
            "has_pole_dot": self.has_pole_dot,
            "conjugation_error": self.conjugation_error,
        }


def _colors(count: int):
    cmap = matplotlib.colormaps["Blues"]
    if count == 1:
        return [cmap(0.75)]
    return [cmap(0.4 + 0.55 * i / (count - 1)) for i in range(count)]


def _limits(curves: Sequence[EnclosureCurve]):
    points = [c.vertices() for c in curves if c.vertex_count]
    points.append(np.array([-2.0, 2.0], dtype=complex))
    for c in curves:
        points.append(np.array([f.z for f in c.features], dtype=complex))
    z = np.concatenate(points)
    pad = 0.1 * max(1.0, float(np.ptp(z.real)), float(np.ptp(z.imag)))
    return (z.real.min() - pad, z.real.max() + pad), (z.imag.min() - pad, z.imag.max() + pad)


def render_enclosure_svg(
    curves: Sequence[EnclosureCurve], path: Union[str, Path], title: Optional[str] = None
) -> Path:
    """
    Overlay enclosure curves of a common coupling in one deterministic SVG.

    Raises:
        InputError: If no curves are given or their couplings differ
    """
    if not curves:
        raise InputError("render_enclosure_svg needs at least one curve")
    a = curves[0].a
    if any(c.a.a != a.a for c in curves):
        raise InputError("all curves in one figure must share the coupling a")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    ordered = sorted(curves, key=lambda c: c.Q)
    fig, ax = plt.subplots(figsize=(6, 6))
    for curve, color in zip(ordered, _colors(len(ordered))):
        for idx, line in enumerate(curve.polylines):
            ax.plot(line.real, line.imag, color=color, lw=1.2,
                    label=f"Q = {curve.Q:g}" if idx == 0 else None)
    ax.plot([-2, 2], [0, 0], color="black", lw=2.0, solid_capstyle="butt", gid="band")
    if a.has_eigenvalue:
        z = a.eigenvalue
        ax.plot([z.real], [z.imag], "o", color="red", ms=6, gid="pole")
    xlim, ylim = _limits(ordered)
    ax.set_xlim(*xlim)
    ax.set_ylim(*ylim)
    ax.set_aspect("equal")
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z")
    ax.set_title(title or f"a = {a.a.real:g}{a.a.imag:+g}i")
    ax.legend(loc="upper right", fontsize=8)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.info("wrote %s", path)
    return path


def conjugation_error(curve: EnclosureCurve) -> float:
    """Hausdorff distance between the curve and its complex conjugate."""
    z = curve.vertices()
    if z.size == 0:
        return 0.0
    return hausdorff_distance(z, np.conj(z))


def render_figure(
    name: str,
    a: complex,
    out_dir: Union[str, Path],
    budgets: Sequence[float] = FIGURE_BUDGETS,
    grid_n: int = DEFAULT_GRID,
    delta: float = DEFAULT_DELTA,
    threads: Optional[int] = None,
) -> FigureResult:
    """Trace every budget, write <name>.svg and <name>_Q<q>.csv."""
    out_dir = Path(out_dir)
    curves = [trace_boundary(a, Q, grid_n, delta, threads) for Q in budgets]
    result = FigureResult(name, complex(a), out_dir / f"{name}.svg")
    for curve in curves:
        csv_path = write_polylines_csv(out_dir / f"{name}_Q{curve.Q:g}.csv", curve.polylines)
        result.csv_paths.append(csv_path)
        result.curve_counts[curve.Q] = len(curve.polylines)
    render_enclosure_svg(curves, result.svg_path)
    result.has_pole_dot = curves[0].a.has_eigenvalue
    if complex(a).imag == 0:
        result.conjugation_error = max(conjugation_error(c) for c in curves)
    return result


def render_presets(
    out_dir: Union[str, Path],
    names: Optional[Sequence[str]] = None,
    grid_n: int = DEFAULT_GRID,
    threads: Optional[int] = None,
) -> List[FigureResult]:
    """Render the preset figures (all of them by default)."""
    names = list(FIGURE_PRESETS) if names is None else list(names)
    unknown = [n for n in names if n not in FIGURE_PRESETS]
    if unknown:
        raise InputError(f"unknown figure preset(s) {unknown}; choose from {sorted(FIGURE_PRESETS)}")
    return [render_figure(n, FIGURE_PRESETS[n], out_dir, grid_n=grid_n, threads=threads)
            for n in names]
