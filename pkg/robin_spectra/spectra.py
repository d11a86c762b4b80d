"""
Eigenvalue machinery for finite sections of J_a + V.

Oracles:
1. eigenvalues_dense - LAPACK eigensolver (balanced Hessenberg QR for complex
   matrices, tridiagonal QL for the Hermitian case) with a residual bound
2. count_outside_band - argument principle for the tridiagonal determinant
   on the boundary of a stadium around [-2, 2]; independent of (1)
3. rank_one_eigenvalues_exact - eigenvalues of J_a + omega P_n from the
   characteristic equation 1 + omega G_{n,n}(z) = 0, solved as a polynomial in k

Design Decisions:
- The characteristic polynomial is cleared of the denominators
  (1 - a k)(k - 1/k) and 1/k. The cleared polynomial always vanishes at
  k = +-1; that factor is divided out before companion-matrix rootfinding,
  and the remaining roots are filtered (k ~ 0, |k| ~ 1, k ~ 1/a) at 1e-10.
- A truncation eigenvalue is accepted as genuine when its nearest
  neighbour at twice the size moves by less than 1e-6.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import LinAlgError, eig, eigh_tridiagonal, eigvalsh_tridiagonal, svdvals
from scipy.spatial.distance import directed_hausdorff

from .errors import ContourTooClose, ConvergenceFailure, DomainError, SizeError
from .hardy import HardyWeight
from .lattice import (
    ComplexLike,
    Potential,
    RobinCoupling,
    SpectralPoint,
    TridiagonalMatrix,
    as_coupling,
    as_finite_complex,
    as_spectral_point,
    build_truncation,
)
from .resolvent import get_evaluator

logger = logging.getLogger(__name__)

MAX_DENSE_SIZE = 4000
RESIDUAL_CONTRACT = 1e-8
ROOT_FILTER_TOL = 1e-10
STABLE_MOVE_TOL = 1e-6
SAMPLES_PER_SITE = 16

CouplingLike = Union[RobinCoupling, ComplexLike]


def band_distance(z) -> np.ndarray:
    """Distance from z to the segment [-2, 2]."""
    z = np.asarray(z, dtype=complex)
    nearest = np.clip(z.real, -2.0, 2.0)
    return np.abs(z - nearest)


@dataclass(eq=False)
class EigenReport:
    """All eigenvalues of a finite section, sorted by (Re, Im)."""

    size: int
    eigenvalues: np.ndarray
    residual: float
    method: str = "geev"
    converged: bool = True

    @property
    def residual_ok(self) -> bool:
        return self.residual <= RESIDUAL_CONTRACT

    def outside_band(self, margin: float) -> np.ndarray:
        return self.eigenvalues[band_distance(self.eigenvalues) > margin]

    def nearest(self, z: complex) -> Tuple[complex, float]:
        d = np.abs(self.eigenvalues - z)
        i = int(np.argmin(d))
        return complex(self.eigenvalues[i]), float(d[i])

    def to_dict(self) -> Dict:
        return {
            "N": self.size,
            "eigenvalues": [{"re": float(v.real), "im": float(v.imag)} for v in self.eigenvalues],
            "residual": float(self.residual),
        }

    def __repr__(self) -> str:
        return (
            f"EigenReport(N={self.size}, method={self.method!r}, "
            f"residual={self.residual:.2e}, converged={self.converged})"
        )


def _tridiagonal_residual(M: TridiagonalMatrix, w: np.ndarray, V: np.ndarray) -> float:
    MV = M.diagonal[:, None] * V
    MV[:-1] += M.off_diagonal * V[1:]
    MV[1:] += M.off_diagonal * V[:-1]
    R = MV - V * w[None, :]
    norms = np.linalg.norm(V, axis=0)
    return float(np.max(np.linalg.norm(R, axis=0) / norms)) if w.size else 0.0


def eigenvalues_dense(M: TridiagonalMatrix) -> EigenReport:
    """
    All eigenvalues of a section with a residual bound max ||(M - l)v|| / ||v||.

    Raises:
        SizeError: If the section is larger than 4000
        ConvergenceFailure: If LAPACK does not converge
    """
    N = M.dimension
    if N > MAX_DENSE_SIZE:
        raise SizeError(f"dense eigensolver is limited to N <= {MAX_DENSE_SIZE}, got {N}")
    try:
        if M.is_hermitian:
            off = np.full(N - 1, M.off_diagonal.real)
            w, V = eigh_tridiagonal(M.diagonal.real, off)
            w = w.astype(complex)
            V = V.astype(complex)
            method = "stemr"
        else:
            w, V = eig(M.to_dense())
            method = "geev"
    except (LinAlgError, ValueError) as exc:
        raise ConvergenceFailure(f"eigensolver failed on N={N}: {exc}") from exc
    order = np.lexsort((w.imag, w.real))
    w = w[order]
    V = V[:, order]
    residual = _tridiagonal_residual(M, w, V)
    if residual > RESIDUAL_CONTRACT:
        logger.warning("eigen residual %.3e exceeds %.0e (N=%d)", residual, RESIDUAL_CONTRACT, N)
    logger.debug("eigenvalues_dense N=%d via %s, residual %.2e", N, method, residual)
    return EigenReport(N, w, residual, method)


def truncation_spectrum(a: CouplingLike, V: Optional[Potential], N: int) -> EigenReport:
    return eigenvalues_dense(build_truncation(a, V, N))


# Argument principle


def _stadium_point(margin: float, s: np.ndarray) -> np.ndarray:
    """Point of the stadium boundary at parameter s in [0, 4)."""
    s = np.mod(s, 4.0)
    piece = np.floor(s).astype(int)
    t = s - piece
    out = np.empty(s.shape, dtype=complex)
    for p, build in enumerate((
        lambda t: -2 + 4 * t - 1j * margin,
        lambda t: 2 + margin * np.exp(1j * (-np.pi / 2 + np.pi * t)),
        lambda t: 2 - 4 * t + 1j * margin,
        lambda t: -2 + margin * np.exp(1j * (np.pi / 2 + np.pi * t)),
    )):
        mask = piece == p
        out[mask] = build(t[mask])
    return out


def _determinant_phase(M: TridiagonalMatrix, z: np.ndarray) -> np.ndarray:
    """
    Unit phase of det(M - z) from the ratios r_n = D_n / D_{n-1} of the
    recurrence D_n = (d_n - z) D_{n-1} - b^2 D_{n-2}.
    """
    b2 = M.off_diagonal * M.off_diagonal
    tiny = 1e-280
    r = M.diagonal[0] - z
    phase = np.ones(z.shape, dtype=complex)
    for n in range(M.dimension):
        if n > 0:
            r = (M.diagonal[n] - z) - b2 / r
        mag = np.abs(r)
        if np.any(mag < tiny):
            raise ContourTooClose("determinant recurrence broke down on the contour")
        phase = phase * (r / mag)
        phase = phase / np.abs(phase)
    return phase


def count_outside_band(
    M: TridiagonalMatrix,
    band_margin: float,
    per_piece: int = 256,
    max_rounds: int = 40,
    min_step: float = 1e-9,
) -> int:
    """
    Number of eigenvalues of M at distance > band_margin from [-2, 2].

    Counts eigenvalues inside the stadium {dist(z, [-2, 2]) <= margin} with the
    argument principle and subtracts from N. The phase of det(M - z) turns by
    about 2 pi N around the contour, so the initial sampling grows with N
    (at least SAMPLES_PER_SITE * N points per piece) and a wrapped step stays
    below 7 pi/4. The contour is then refined until every step turns the
    phase by less than pi/4.

    Raises:
        ContourTooClose: If refinement stalls (an eigenvalue sits on the contour)
    """
    if band_margin <= 0:
        raise DomainError(f"band margin must be positive, got {band_margin}")
    per_piece = max(per_piece, SAMPLES_PER_SITE * M.dimension)
    s = np.arange(4 * per_piece, dtype=float) / per_piece
    phases = _determinant_phase(M, _stadium_point(band_margin, s))
    for _ in range(max_rounds):
        s_next = np.append(s[1:], 4.0)
        p_next = np.append(phases[1:], phases[:1])
        steps = np.angle(p_next * np.conj(phases))
        coarse = np.abs(steps) > np.pi / 4
        if not coarse.any():
            winding = float(np.sum(steps)) / (2 * np.pi)
            inside = int(round(winding))
            if abs(winding - inside) > 0.05:
                raise ContourTooClose(f"non-integer winding number {winding:.4f}")
            return M.dimension - inside
        arc = (s_next - s) * min(band_margin, 4.0)
        if np.any(arc[coarse] < min_step):
            raise ContourTooClose(
                f"contour within {min_step:g} of an eigenvalue; choose another band margin"
            )
        mids = 0.5 * (s[coarse] + s_next[coarse])
        mid_phases = _determinant_phase(M, _stadium_point(band_margin, mids))
        s = np.concatenate((s, mids))
        phases = np.concatenate((phases, mid_phases))
        order = np.argsort(s, kind="stable")
        s = s[order]
        phases = phases[order]
    raise ContourTooClose(f"contour refinement did not settle after {max_rounds} rounds")


# Rank-one perturbations


def characteristic_polynomial(a: complex, omega: complex, n: int) -> np.ndarray:
    """
    Coefficients (highest power first) of
    -w k^(2n+1) + w a k^(2n) - a k^3 + (1 - w a) k^2 + (a + w) k - 1,
    the cleared form of 1 + w G_{n,n}(k + 1/k) = 0.
    """
    c = np.zeros(2 * n + 2, dtype=complex)
    c[2 * n + 1] += -omega
    c[2 * n] += omega * a
    c[3] += -a
    c[2] += 1 - omega * a
    c[1] += a + omega
    c[0] += -1
    return c[::-1]


def _polish(poly: np.ndarray, roots: np.ndarray, steps: int = 3) -> np.ndarray:
    deriv = np.polyder(poly)
    out = roots.copy()
    for i, k in enumerate(roots):
        best = k
        best_val = abs(np.polyval(poly, k))
        for _ in range(steps):
            d = np.polyval(deriv, best)
            if d == 0:
                break
            trial = best - np.polyval(poly, best) / d
            val = abs(np.polyval(poly, trial))
            if val >= best_val:
                break
            best, best_val = trial, val
        out[i] = best
    return out


def rank_one_eigenvalues_exact(
    a: CouplingLike,
    omega: ComplexLike,
    n: int,
    verify_size: Optional[int] = None,
) -> List[complex]:
    """
    Eigenvalues of J_a + omega P_n off the band, from the characteristic equation.

    Args:
        a: Robin coupling
        omega: Strength of the one-site potential
        n: Site of the potential
        verify_size: If given, each eigenvalue is compared with a truncation of
            this size and a warning is logged when it is not matched to 1e-5

    Returns:
        Eigenvalues z = k + 1/k with 0 < |k| < 1, sorted by (Re, Im)
    """
    coupling = as_coupling(a)
    a_val = coupling.a
    omega = as_finite_complex(omega, "omega")
    if n < 1:
        raise DomainError(f"sites are 1-based, got {n}")
    if omega == 0:
        return []
    poly = characteristic_polynomial(a_val, omega, n)
    quotient, remainder = np.polydiv(poly, np.array([1.0, 0.0, -1.0], dtype=complex))
    if np.max(np.abs(remainder)) > 1e-8 * max(1.0, np.max(np.abs(poly))):
        logger.warning("characteristic polynomial not divisible by k^2 - 1 (remainder %s)", remainder)
    quotient = np.trim_zeros(quotient, "f")
    if quotient.size <= 1:
        return []
    roots = _polish(quotient, np.roots(quotient))
    found: List[complex] = []
    for k in roots:
        if abs(k) <= ROOT_FILTER_TOL or abs(k) >= 1 - ROOT_FILTER_TOL:
            continue
        if abs(a_val) > 1 and abs(1 - a_val * k) <= ROOT_FILTER_TOL * abs(a_val):
            continue
        z = complex(k + 1 / k)
        if all(abs(z - other) > 1e-12 * max(1.0, abs(z)) for other in found):
            found.append(z)
    found.sort(key=lambda v: (v.real, v.imag))
    if verify_size:
        report = truncation_spectrum(coupling, Potential.single_site(omega, n), verify_size)
        for z in found:
            _, distance = report.nearest(z)
            if distance > 1e-5:
                logger.warning("rank-one eigenvalue %s not matched by N=%d truncation (%.2e)",
                               z, verify_size, distance)
    return found


def stable_eigenvalues(
    a: CouplingLike,
    V: Optional[Potential],
    N: int,
    margin: float = 0.05,
    tol: float = STABLE_MOVE_TOL,
) -> List[complex]:
    """
    Outside-band eigenvalues of the size-N section whose nearest eigenvalue in
    the size-2N section lies within ``tol``; the 2N values are returned.
    """
    small = truncation_spectrum(a, V, N).outside_band(margin)
    large = truncation_spectrum(a, V, 2 * N).eigenvalues
    accepted = []
    for z in small:
        d = np.abs(large - z)
        i = int(np.argmin(d))
        if d[i] < tol:
            accepted.append(complex(large[i]))
    return accepted


# Birman-Schwinger operator


@dataclass(frozen=True, eq=False)
class BirmanSchwingerMatrix:
    """
    Section of K(z) = |V|^(1/2) (J_a - z)^-1 |V|^(1/2) sgn V on sites 1..size,
    restricted to the sites where v_n != 0 (the remaining rows and columns vanish).
    """

    point: SpectralPoint
    a: RobinCoupling
    potential: Potential
    size: int

    def sites(self) -> np.ndarray:
        v = self.potential.dense(self.size)
        return np.nonzero(v)[0] + 1

    def matrix(self) -> np.ndarray:
        v = self.potential.dense(self.size)
        nz = np.nonzero(v)[0]
        if nz.size == 0:
            return np.zeros((0, 0), dtype=complex)
        vv = v[nz]
        root = np.sqrt(np.abs(vv))
        sign = vv / np.abs(vv)
        G = get_evaluator(self.a).on_sites(self.point, nz + 1)
        return root[:, None] * G * (root * sign)[None, :]

    def norm(self) -> float:
        K = self.matrix()
        if K.size == 0:
            return 0.0
        return float(svdvals(K)[0])


def bs_norm(z, a: CouplingLike, V: Potential, N: int) -> float:
    """Largest singular value of the size-N section of K(z)."""
    return BirmanSchwingerMatrix(as_spectral_point(z), as_coupling(a), V, N).norm()


# Critical operator J_0 - W


def critical_operator_spectrum(N: int) -> EigenReport:
    """Eigenvalues of the size-N section of J_0 - W, W the optimal Hardy weight."""
    if N < 1:
        raise SizeError(f"section size must be >= 1, got {N}")
    if N == 1:
        w = HardyWeight.optimal().values(1)
        return EigenReport(1, np.array([-w[0]], dtype=complex), 0.0, "trivial")
    return eigenvalues_dense(TridiagonalMatrix(-HardyWeight.optimal().values(N), 1.0))


def _recurrence_diagonal(n_max: int) -> np.ndarray:
    n = np.arange(1, n_max + 1, dtype=float)
    return np.sqrt(1 - 1 / n) + np.sqrt(1 + 1 / n)


def orthopoly_eval(x: float, n_max: int) -> np.ndarray:
    """
    p_0(x), ..., p_{n_max}(x) with p_0 = 1, p_1 = x - sqrt 2 and
    p_{n+1} = (x - b_{n+1}) p_n - p_{n-1}, b_n = sqrt(1 - 1/n) + sqrt(1 + 1/n).
    """
    if n_max < 1:
        raise SizeError(f"n_max must be >= 1, got {n_max}")
    b = _recurrence_diagonal(n_max)
    p = np.empty(n_max + 1)
    p[0] = 1.0
    p[1] = x - b[0]
    for n in range(1, n_max):
        p[n + 1] = (x - b[n]) * p[n] - p[n - 1]
    return p


def orthopoly_zeros(N: int) -> np.ndarray:
    """Zeros of p_N: eigenvalues of the Jacobi matrix diag(b_1..b_N), off-diagonal 1."""
    if N < 1:
        raise SizeError(f"N must be >= 1, got {N}")
    b = _recurrence_diagonal(N)
    if N == 1:
        return b.copy()
    return eigvalsh_tridiagonal(b, np.ones(N - 1))


def interlaces(outer: Sequence[float], inner: Sequence[float]) -> bool:
    """True if each inner point lies strictly between consecutive outer points."""
    outer = np.sort(np.asarray(outer, dtype=float))
    inner = np.sort(np.asarray(inner, dtype=float))
    if inner.size != outer.size - 1:
        return False
    return bool(np.all(outer[:-1] < inner) and np.all(inner < outer[1:]))


def hausdorff_distance(first: Sequence[complex], second: Sequence[complex]) -> float:
    first = np.asarray(first, dtype=complex)
    second = np.asarray(second, dtype=complex)
    u = np.column_stack((first.real, first.imag))
    v = np.column_stack((second.real, second.imag))
    return float(max(directed_hausdorff(u, v)[0], directed_hausdorff(v, u)[0]))
