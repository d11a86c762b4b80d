"""
Spectral enclosures for J_a + V with summable potentials, ||v||_1 = Q.

Every eigenvalue z of J_a + V off the band satisfies

    F(z) = sqrt|z^2 - 4| - g_a(z) Q <= 0,

and the thresholds +-2 always belong to the set. The set is sharp: every
non-real boundary point is an eigenvalue of some J_a + omega P_n with |omega| = Q.

Pipeline for trace_boundary:
1. Sample F on a polar grid delta <= |k| <= 1 - delta of the k-disk
2. Extract the zero contour with marching squares (angle axis periodic)
3. Push the polylines to the z-plane through z = k + 1/k
4. Attach the thresholds and, for |a| > 1, the eigenvalue a + 1/a as point features

Design Decisions:
- The grid lives in the k-annulus, where F is smooth and the band edge is
  stretched over the whole unit circle.
- Node angles are built so that columns j and C - j are exact negatives;
  for real a the traced curves are then conjugation symmetric to rounding.
- Grid rows are evaluated in blocks, optionally on a thread pool; blocks are
  reassembled in row order.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Union

import numpy as np
from scipy.optimize import brentq

from .contour import marching_squares
from .errors import (
    ConvergenceFailure,
    DomainError,
    EmptyCurve,
    NotOnBoundary,
    ParamError,
    RealTarget,
    SizeError,
)
from .lattice import (
    ComplexLike,
    Potential,
    RobinCoupling,
    SpectralPoint,
    as_coupling,
    as_finite_complex,
    inverse_joukowski,
)
from .resolvent import (
    POLE_TOL,
    TAIL_CUTOFF,
    g_a,
    get_evaluator,
    kappa_of,
    sup_attaining_sites,
    sup_series,
)
from .spectra import MAX_DENSE_SIZE, rank_one_eigenvalues_exact

logger = logging.getLogger(__name__)

DEFAULT_GRID = 800
DEFAULT_DELTA = 1e-3
MIN_GRID = 64
WITNESS_TOL = 1e-8
TRUNCATION_TOL = 1e-8
MIN_TRUNCATION = 64
# finite stand-in for F = -inf at the resolvent pole
POLE_SENTINEL = -1e300
ROWS_PER_BLOCK_TARGET = 16384

CouplingLike = Union[RobinCoupling, ComplexLike]


def _check_budget(Q: float) -> float:
    Q = float(Q)
    if not math.isfinite(Q) or Q <= 0:
        raise ParamError(f"l1 budget Q must be a positive number, got {Q}")
    return Q


def _is_threshold(z: complex) -> bool:
    return abs(z - 2) <= 1e-12 or abs(z + 2) <= 1e-12


def enclosure_indicator(
    z: ComplexLike,
    a: CouplingLike,
    Q: float,
    cutoff: float = TAIL_CUTOFF,
) -> float:
    """
    F(z) = sqrt|z^2 - 4| - g_a(z) Q; F <= 0 exactly on the enclosure.

    At the thresholds z = +-2 the value -Q is returned (sqrt term 0, g_a >= 1).
    At the pole z = a + 1/a the value is -inf.

    Raises:
        DomainError: If z lies in the open band (-2, 2) or too close to it
        ParamError: If Q <= 0
    """
    z = as_finite_complex(z, "z")
    Q = _check_budget(Q)
    if _is_threshold(z):
        return -Q
    if z.imag == 0 and -2 < z.real < 2:
        raise DomainError(f"z = {z.real} lies in the open band (-2, 2)")
    p = inverse_joukowski(z)
    g = g_a(p, a, cutoff)
    if math.isinf(g):
        return -math.inf
    return p.sqrt_discriminant_modulus - g * Q


def simple_enclosure_member(z: ComplexLike, a: CouplingLike, Q: float) -> bool:
    """
    Membership in the simplified enclosure
    {+-2} U {z : |1/k - k| |1 - a k| <= (|1 - a k| + |k - a|) Q},
    a superset of the optimal enclosure.
    """
    z = as_finite_complex(z, "z")
    Q = _check_budget(Q)
    if _is_threshold(z):
        return True
    p = inverse_joukowski(z)
    if p.on_unit_circle:
        return False
    k = p.k
    a_val = as_coupling(a).a
    lhs = abs(1 / k - k) * abs(1 - a_val * k)
    return lhs <= (abs(1 - a_val * k) + abs(k - a_val)) * Q


@dataclass(frozen=True)
class PointFeature:
    """Annotated set member that is not a curve vertex."""

    z: complex
    label: str


@dataclass(eq=False)
class EnclosureCurve:
    """Boundary of the enclosure for one (a, Q), as z-plane polylines."""

    a: RobinCoupling
    Q: float
    polylines: List[np.ndarray]
    grid_n: int
    delta: float
    features: List[PointFeature] = field(default_factory=list)

    @property
    def radial_step(self) -> float:
        return (1 - 2 * self.delta) / (self.grid_n - 1)

    @property
    def angular_step(self) -> float:
        return 2 * math.pi / self.grid_n

    @property
    def vertex_count(self) -> int:
        return sum(len(line) for line in self.polylines)

    def vertices(self) -> np.ndarray:
        if not self.polylines:
            return np.zeros(0, dtype=complex)
        return np.concatenate(self.polylines)

    def has_pole_feature(self) -> bool:
        return any(f.label == "eigenvalue" for f in self.features)

    def __repr__(self) -> str:
        return (
            f"EnclosureCurve(a={self.a.a!r}, Q={self.Q}, polylines={len(self.polylines)}, "
            f"vertices={self.vertex_count}, grid={self.grid_n})"
        )


def polar_grid(grid_n: int, delta: float):
    """
    Radii and node angles of the k-annulus grid.

    Angles are 2 pi j / C for 2j <= C and -2 pi (C - j) / C above, so that
    column C - j mirrors column j exactly.
    """
    radii = np.linspace(delta, 1 - delta, grid_n)
    j = np.arange(grid_n)
    angles = np.where(2 * j <= grid_n, 2 * np.pi * j / grid_n, -2 * np.pi * (grid_n - j) / grid_n)
    return radii, angles


def _indicator_block(k: np.ndarray, a: complex, Q: float, cutoff: float) -> np.ndarray:
    denom = 1 - a * k
    pole = (abs(a) > 1) & (np.abs(denom) <= POLE_TOL * abs(a))
    safe_denom = np.where(pole, 1.0, denom)
    kappa = (k - a) / safe_denom
    g = sup_series(kappa, k, cutoff)
    F = np.abs(1 / k - k) - g * Q
    return np.where(pole, POLE_SENTINEL, F)


def indicator_grid(
    a: CouplingLike,
    Q: float,
    radii: np.ndarray,
    angles: np.ndarray,
    threads: Optional[int] = None,
    cutoff: float = TAIL_CUTOFF,
) -> np.ndarray:
    """F sampled at k = r e^{i theta}; rows follow radii, columns angles."""
    a_val = as_coupling(a).a
    Q = _check_budget(Q)
    unit = np.cos(angles) + 1j * np.sin(angles)
    rows_per_block = max(1, ROWS_PER_BLOCK_TARGET // max(1, angles.size))
    blocks = [radii[i:i + rows_per_block] for i in range(0, radii.size, rows_per_block)]

    def evaluate(block: np.ndarray) -> np.ndarray:
        return _indicator_block(block[:, None] * unit[None, :], a_val, Q, cutoff)

    if threads and threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(evaluate, blocks))
    else:
        parts = [evaluate(b) for b in blocks]
    return np.vstack(parts)


def _grid_to_k(line: np.ndarray, radii: np.ndarray, angles: np.ndarray) -> np.ndarray:
    rows = line[:, 0]
    cols = line[:, 1]
    i0 = np.clip(np.floor(rows).astype(int), 0, radii.size - 2)
    r = radii[i0] + (rows - i0) * (radii[i0 + 1] - radii[i0])
    j0 = np.floor(cols).astype(int)
    theta = angles[np.mod(j0, angles.size)] + (cols - j0) * (2 * np.pi / angles.size)
    return r * (np.cos(theta) + 1j * np.sin(theta))


def point_features(a: RobinCoupling) -> List[PointFeature]:
    features = [PointFeature(-2 + 0j, "threshold"), PointFeature(2 + 0j, "threshold")]
    if a.has_eigenvalue:
        features.append(PointFeature(a.eigenvalue, "eigenvalue"))
    return features


def trace_boundary(
    a: CouplingLike,
    Q: float,
    grid_n: int = DEFAULT_GRID,
    delta: float = DEFAULT_DELTA,
    threads: Optional[int] = None,
    cutoff: float = TAIL_CUTOFF,
) -> EnclosureCurve:
    """
    Zero contour of F traced on a polar k-grid and mapped to the z-plane.

    Args:
        a: Robin coupling
        Q: l1 budget, > 0
        grid_n: Radial and angular resolution, >= 64
        delta: Annulus margin, the grid covers delta <= |k| <= 1 - delta
        threads: Worker threads for the grid sweep

    Raises:
        SizeError: If grid_n < 64
        EmptyCurve: If F has constant sign on the grid
    """
    coupling = as_coupling(a)
    Q = _check_budget(Q)
    if grid_n < MIN_GRID:
        raise SizeError(f"grid_n must be >= {MIN_GRID}, got {grid_n}")
    if not 0 < delta < 0.5:
        raise ParamError(f"delta must lie in (0, 0.5), got {delta}")
    radii, angles = polar_grid(grid_n, delta)
    F = indicator_grid(coupling, Q, radii, angles, threads, cutoff)
    inside = F <= 0
    if inside.all() or not inside.any():
        raise EmptyCurve(
            f"enclosure indicator has constant sign on the {grid_n}x{grid_n} grid "
            f"(a={coupling.a!r}, Q={Q})"
        )
    lines = marching_squares(F, periodic_columns=True)
    polylines = []
    for line in lines:
        k = _grid_to_k(line, radii, angles)
        polylines.append(k + 1 / k)
    curve = EnclosureCurve(coupling, Q, polylines, grid_n, delta, point_features(coupling))
    logger.info("traced %r", curve)
    return curve


def _ray_indicator(a: RobinCoupling, Q: float, theta: float, r: float) -> float:
    k = r * complex(math.cos(theta), math.sin(theta))
    return float(_indicator_block(np.array([k]), a.a, Q, TAIL_CUTOFF)[0])


def refine_boundary_point(
    a: CouplingLike,
    Q: float,
    theta: float,
    samples: int = 400,
    r_max: float = 1 - 1e-6,
) -> Optional[SpectralPoint]:
    """
    Outermost boundary point on the ray k = r e^{i theta} (smallest r with a
    sign change of F), located with Brent's method to machine precision.

    Returns:
        The SpectralPoint, or None if F keeps its sign along the ray
    """
    coupling = as_coupling(a)
    Q = _check_budget(Q)
    radii = np.linspace(1e-3, r_max, samples)
    unit = complex(math.cos(theta), math.sin(theta))
    values = _indicator_block(radii * unit, coupling.a, Q, TAIL_CUTOFF)
    change = np.nonzero((values[:-1] > 0) & (values[1:] <= 0))[0]
    if change.size == 0:
        return None
    i = int(change[0])
    lo, hi = radii[i], radii[i + 1]
    if values[i + 1] == 0:
        r = hi
    else:
        r = brentq(lambda t: _ray_indicator(coupling, Q, theta, t), lo, hi,
                   xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=200)
    return SpectralPoint.from_k(r * unit)


def boundary_points(
    a: CouplingLike,
    Q: float,
    count: int,
    samples: int = 400,
) -> List[SpectralPoint]:
    """
    Exactly ``count`` non-real boundary points spread over the rays of the
    open upper k half-disk that actually cross the boundary.

    Candidate rays are scanned in one vectorised sweep; rays with a sign
    change of F are kept and ``count`` of them, evenly spaced, are refined.

    Raises:
        SizeError: If count < 1
        EmptyCurve: If fewer than ``count`` candidate rays cross the boundary
    """
    if count < 1:
        raise SizeError(f"count must be >= 1, got {count}")
    coupling = as_coupling(a)
    Q = _check_budget(Q)
    m = max(8 * count, 64)
    thetas = math.pi * (np.arange(m) + 1) / (m + 1)
    radii = np.linspace(1e-3, 1 - 1e-6, samples)
    k = radii[None, :] * np.exp(1j * thetas)[:, None]
    values = _indicator_block(k, coupling.a, Q, TAIL_CUTOFF)
    crosses = np.any((values[:, :-1] > 0) & (values[:, 1:] <= 0), axis=1)
    hits = np.nonzero(crosses)[0]
    if hits.size < count:
        raise EmptyCurve(
            f"only {hits.size} of {m} rays cross the enclosure boundary "
            f"(a={coupling.a!r}, Q={Q}); {count} points requested"
        )
    chosen = hits[np.round(np.linspace(0, hits.size - 1, count)).astype(int)]
    found = []
    for i in chosen:
        point = refine_boundary_point(coupling, Q, float(thetas[i]), samples)
        if point is None or point.z.imag == 0:
            raise ConvergenceFailure(f"ray theta={thetas[i]:.6f} lost its boundary crossing", found)
        found.append(point)
    return found


@dataclass(frozen=True)
class OptimalityWitness:
    """(n, omega, z): z is an eigenvalue of J_a + omega P_n with |omega| = Q."""

    n: int
    omega: complex
    z: complex
    a: RobinCoupling
    Q: float

    @property
    def potential(self) -> Potential:
        return Potential.single_site(self.omega, self.n)

    def characteristic_residual(self) -> float:
        """|1 + omega G_{n,n}(z)|."""
        G = get_evaluator(self.a).entry(self.z, self.n, self.n)
        return abs(1 + self.omega * G)

    def truncation_size(self, tol: float = TRUNCATION_TOL, cap: int = MAX_DENSE_SIZE) -> Optional[int]:
        """
        Smallest section size whose eigenvalue near z is accurate to about tol.

        The eigenvector decays like |k|^m past site n, so the section error is
        of order |k|^(2(N - n)). Returns None when that needs more than cap sites.
        """
        r = abs(inverse_joukowski(self.z).k)
        needed = self.n + math.ceil(math.log(tol) / (2 * math.log(r))) + 16
        size = max(MIN_TRUNCATION, needed)
        if size > cap:
            logger.info("truncation check needs %d > %d sites (|k| = %.6f)", size, cap, r)
            return None
        return size

    def to_dict(self) -> Dict:
        return {
            "a": {"re": self.a.a.real, "im": self.a.a.imag},
            "Q": self.Q,
            "n": self.n,
            "omega": {"re": self.omega.real, "im": self.omega.imag},
            "z": {"re": self.z.real, "im": self.z.imag},
        }


def construct_optimality_witness(
    a: CouplingLike,
    Q: float,
    z: ComplexLike,
    tol: float = WITNESS_TOL,
) -> OptimalityWitness:
    """
    Build the one-site potential omega P_n that has z as an eigenvalue.

    n is the smallest site attaining the supremum in g_a(z); omega has modulus
    Q and the argument that makes omega G_{n,n}(z) = -1.

    Raises:
        RealTarget: If Im z = 0
        NotOnBoundary: If |sqrt|z^2 - 4| - g_a(z) Q| exceeds tol
    """
    coupling = as_coupling(a)
    Q = _check_budget(Q)
    z = as_finite_complex(z, "z")
    if z.imag == 0:
        raise RealTarget(
            f"z = {z.real} is real; optimality is only asserted for non-real boundary points"
        )
    p = inverse_joukowski(z)
    g = g_a(p, coupling)
    if math.isinf(g):
        raise NotOnBoundary(f"z = {z!r} is the eigenvalue of J_a itself, not a boundary point")
    mismatch = abs(p.sqrt_discriminant_modulus - g * Q)
    if mismatch > tol * max(1.0, p.sqrt_discriminant_modulus):
        raise NotOnBoundary(
            f"z = {z!r} is not on the enclosure boundary for Q = {Q}\n"
            f"|sqrt|z^2-4| - g_a(z) Q| = {mismatch:.3e} exceeds {tol:.1e}"
        )
    sites = sup_attaining_sites(p, coupling)
    if not sites:
        raise ConvergenceFailure(f"supremum of g_a is not attained at z = {z!r}")
    n = sites[0]
    G = get_evaluator(coupling).entry(p, n, n)
    direction = -1 / G
    omega = Q * direction / abs(direction)
    logger.info("witness for z=%s: n=%d omega=%s", z, n, omega)
    return OptimalityWitness(n, complex(omega), p.z, coupling, Q)


def real_boundary_points(
    a: CouplingLike,
    Q: float,
    samples: int = 2000,
    r_max: float = 1 - 1e-6,
) -> List[float]:
    """Real boundary points in R \\ [-2, 2] (k on the real diameter), sorted."""
    coupling = as_coupling(a)
    Q = _check_budget(Q)
    found = []
    for sign in (1.0, -1.0):
        radii = np.linspace(1e-3, r_max, samples)
        values = _indicator_block(sign * radii + 0j, coupling.a, Q, TAIL_CUTOFF)
        flips = np.nonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0)[0]
        # k stays exactly real so sup_series takes its closed form
        f = lambda t: float(_indicator_block(np.array([sign * t + 0j]), coupling.a, Q, TAIL_CUTOFF)[0])
        for i in flips:
            r = brentq(f, radii[i], radii[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)
            k = sign * r
            found.append(k + 1 / k)
    return sorted(found)


def real_boundary_near_misses(
    a: CouplingLike,
    Q: float,
    n_max: int = 20,
) -> List[Dict]:
    """
    For each real boundary point x and each site n <= n_max, the one-site
    potential with |omega| = Q aimed at x and the distance from x to its
    nearest exact eigenvalue. Evidence only.
    """
    coupling = as_coupling(a)
    evaluator = get_evaluator(coupling)
    records = []
    for x in real_boundary_points(coupling, Q):
        p = inverse_joukowski(x)
        g = g_a(p, coupling)
        kappa = kappa_of(p.k, coupling.a)
        for n in range(1, n_max + 1):
            G = evaluator.entry(p, n, n)
            omega = Q * (-1 / G) / abs(1 / G)
            eigenvalues = rank_one_eigenvalues_exact(coupling, omega, n)
            distance = min((abs(z - x) for z in eigenvalues), default=math.inf)
            term = abs(1 - kappa * p.k ** (2 * n - 1))
            records.append({
                "x": x,
                "n": n,
                "omega": {"re": omega.real, "im": omega.imag},
                "sup_gap": g - term,
                "distance": distance,
            })
    return records
