"""
Resolvent of J_a: Green kernel, generalized eigensolutions and the
supremum functions behind the enclosures and the stability kernel.

With kappa = (k - a) / (1 - a k) the diagonal of the Green kernel is
G_{n,n}(z) = (1 - kappa k^(2n-1)) / (k - 1/k), and

    g_a(z) = sup_n |1 - kappa k^(2n-1)|,   gamma_a(z) = g_a(z) / |sqrt(z^2 - 4)|.

Design Decisions:
1. The sign of the closed-form kernel is not trusted. GreenKernelEvaluator
   fixes it once at construction by a banded linear solve on a small
   truncation (the literal closed form comes out with the opposite sign).
2. The supremum over n is a max over the terms up to the tail cutoff plus
   the limit value 1. The scan stops early once no later term can beat the
   running maximum, so the result is the same as the full scan.
3. Points with |k| >= 1 - 1e-9 are refused by g_a; the explicit bound
   1 + |kappa| is available there instead.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import ConvergenceFailure, DomainError, PoleError
from .lattice import (
    ComplexLike,
    RobinCoupling,
    SpectralPoint,
    as_coupling,
    as_spectral_point,
    build_truncation,
)

logger = logging.getLogger(__name__)

TAIL_CUTOFF = 1e-14
BOUNDARY_GUARD = 1e-9
POLE_TOL = 1e-12
MAX_SUP_TERMS = 10_000_000
SIGN_ORACLE_SIZE = 64

CouplingLike = Union[RobinCoupling, ComplexLike]
PointLike = Union[SpectralPoint, ComplexLike]


def _is_pole(k: complex, a: complex) -> bool:
    return abs(a) > 1 and abs(1 - a * k) <= POLE_TOL * abs(a)


def _require_interior(k: complex, guard: float = 0.0) -> None:
    if abs(k) >= 1 - guard:
        raise DomainError(
            f"point with |k| = {abs(k):.12g} is on or too close to the band [-2, 2]\n"
            f"Only |k| < {1 - guard:.12g} is accepted here."
        )


def sup_series(
    kappa: np.ndarray,
    k: np.ndarray,
    cutoff: float = TAIL_CUTOFF,
    max_terms: int = MAX_SUP_TERMS,
) -> np.ndarray:
    """
    Vectorised sup over n >= 1 of |1 - kappa k^(2n-1)|, including the limit 1.

    Args:
        kappa: Array of kappa values
        k: Array of k values, same shape, 0 < |k| < 1
        cutoff: Terms with |kappa||k|^(2n-1) below this are the tail
        max_terms: Hard cap on the number of scanned terms

    Returns:
        Array of suprema, same shape as the inputs
    """
    kappa = np.asarray(kappa, dtype=complex)
    k = np.asarray(k, dtype=complex)
    shape = kappa.shape
    kappa = kappa.ravel()
    k = k.ravel()
    best = np.ones(kappa.size)
    # real k: every term lies on the segment from kappa k to 0, where |1 - t| is convex
    on_axis = k.imag == 0
    best[on_axis] = np.maximum(1.0, np.abs(1 - kappa[on_axis] * k[on_axis]))
    active = np.nonzero(~on_axis)[0]
    term = kappa[active] * k[active]
    step = k[active] * k[active]
    step_mod = np.abs(step)
    for n in range(1, max_terms + 1):
        if active.size == 0:
            break
        current = np.maximum(best[active], np.abs(1 - term))
        best[active] = current
        # every later term has modulus at most |term| * |k|^2
        remaining = np.abs(term) * step_mod
        keep = (remaining >= cutoff) & (1 + remaining > current)
        if not keep.any():
            break
        if not keep.all():
            active = active[keep]
            term = term[keep]
            step = step[keep]
            step_mod = step_mod[keep]
        term = term * step
    else:
        logger.warning("sup_series hit the cap of %d terms on %d points", max_terms, active.size)
    return best.reshape(shape)


def kappa_of(k: complex, a: complex) -> complex:
    return (k - a) / (1 - a * k)


def g_a(p: PointLike, a: CouplingLike, cutoff: float = TAIL_CUTOFF) -> float:
    """
    Enclosure function g_a(z) = sup_n |1 - kappa k^(2n-1)|.

    Returns +inf at the resolvent pole k = 1/a (|a| > 1).

    Raises:
        DomainError: If |k| >= 1 - 1e-9
    """
    p = as_spectral_point(p)
    a = as_coupling(a)
    _require_interior(p.k, BOUNDARY_GUARD)
    if _is_pole(p.k, a.a):
        return math.inf
    kappa = kappa_of(p.k, a.a)
    return float(sup_series(np.array([kappa]), np.array([p.k]), cutoff)[0])


def g_a_upper_bound(p: PointLike, a: CouplingLike) -> float:
    """The explicit bound g_a(z) <= 1 + |(k - a)/(1 - a k)|, valid for |k| <= 1."""
    p = as_spectral_point(p)
    a = as_coupling(a)
    if _is_pole(p.k, a.a):
        return math.inf
    return 1 + abs(kappa_of(p.k, a.a))


def gamma_a(p: PointLike, a: CouplingLike, cutoff: float = TAIL_CUTOFF) -> float:
    """sup over m, n of |G_{m,n}(z)|, equal to g_a(z) / |sqrt(z^2 - 4)|."""
    p = as_spectral_point(p)
    value = g_a(p, a, cutoff)
    if math.isinf(value):
        return value
    return value / p.sqrt_discriminant_modulus


def sup_attaining_sites(
    p: PointLike,
    a: CouplingLike,
    tol: float = 1e-12,
    cutoff: float = TAIL_CUTOFF,
) -> List[int]:
    """
    Sites n whose term |1 - kappa k^(2n-1)| is within ``tol`` of g_a(z).

    Empty when the supremum is only the limit value 1.
    """
    p = as_spectral_point(p)
    a = as_coupling(a)
    target = g_a(p, a, cutoff)
    if math.isinf(target):
        raise PoleError(f"z = {p.z!r} is the eigenvalue of J_a for a = {a.a!r}")
    k = p.k
    kappa = kappa_of(k, a.a)
    step = k * k
    term = kappa * k
    sites = []
    n = 1
    while n <= MAX_SUP_TERMS:
        if abs(1 - term) >= target - tol:
            sites.append(n)
        if 1 + abs(term) < target - tol or abs(term) < cutoff:
            break
        term *= step
        n += 1
    return sites


class GreenKernelEvaluator:
    """
    Green kernel G_{m,n}(z) = ((J_a - z)^-1)_{m,n} of the unperturbed operator.

    sign_convention is the s in {+1, -1} for which s times the closed form
    solves (J_a - z) G = I on a truncation; it is computed once here.
    """

    def __init__(self, a: CouplingLike, oracle_size: int = SIGN_ORACLE_SIZE):
        self.a = as_coupling(a)
        self.sign_convention = self._calibrate_sign(oracle_size)
        logger.debug("Green kernel sign for a=%r fixed to %+d", self.a.a, self.sign_convention)

    def _closed_form(self, k, m, n):
        a = self.a.a
        numerator = (k - a) * k ** (m + n - 1) - (1 / k - a) * k ** (np.abs(n - m) + 1)
        return numerator / ((1 - a * k) * (k - 1 / k))

    def _calibrate_sign(self, size: int) -> int:
        candidates = [0.3j, 0.3, -0.3, -0.3j, 0.25 * np.exp(0.7j)]
        a = self.a.a
        for k in candidates:
            if abs(1 - a * k) < 0.1 * max(1.0, abs(a)):
                continue
            z = k + 1 / k
            rhs = np.zeros(size, dtype=complex)
            rhs[0] = 1
            column = build_truncation(self.a, None, size).solve(rhs, z)
            literal = complex(self._closed_form(k, 1, 1))
            scale = max(abs(column[0]), 1e-300)
            if abs(column[0] - literal) <= 1e-8 * scale:
                return 1
            if abs(column[0] + literal) <= 1e-8 * scale:
                return -1
        raise ConvergenceFailure(f"could not fix the Green kernel sign for a = {a!r}")

    def _checked_k(self, p: PointLike) -> complex:
        p = as_spectral_point(p)
        _require_interior(p.k)
        if _is_pole(p.k, self.a.a):
            raise PoleError(
                f"z = {p.z!r} is the eigenvalue a + 1/a of J_a (a = {self.a.a!r})"
            )
        return p.k

    def entry(self, p: PointLike, m: int, n: int) -> complex:
        """
        (m, n) entry of (J_a - z)^-1.

        Raises:
            DomainError: If |k| >= 1 or a site is < 1
            PoleError: If k = 1/a with |a| > 1
        """
        if m < 1 or n < 1:
            raise DomainError(f"sites are 1-based, got ({m}, {n})")
        k = self._checked_k(p)
        return complex(self.sign_convention * self._closed_form(k, m, n))

    def matrix(self, p: PointLike, size: int, first_site: int = 1) -> np.ndarray:
        """Section of the kernel on sites first_site .. first_site + size - 1."""
        k = self._checked_k(p)
        sites = np.arange(first_site, first_site + size)
        m = sites[:, None]
        n = sites[None, :]
        return self.sign_convention * self._closed_form(k, m, n)

    def on_sites(self, p: PointLike, sites: np.ndarray) -> np.ndarray:
        """Kernel restricted to an arbitrary list of sites."""
        k = self._checked_k(p)
        sites = np.asarray(sites, dtype=np.int64)
        return self.sign_convention * self._closed_form(k, sites[:, None], sites[None, :])

    def diagonal_entry(self, p: PointLike, n: int) -> complex:
        return self.entry(p, n, n)


@lru_cache(maxsize=64)
def _cached_evaluator(a: complex) -> GreenKernelEvaluator:
    return GreenKernelEvaluator(RobinCoupling(a))


def get_evaluator(a: CouplingLike) -> GreenKernelEvaluator:
    """Shared evaluator per coupling (sign check runs once per a)."""
    return _cached_evaluator(as_coupling(a).a)


def green_entry(a: CouplingLike, p: PointLike, m: int, n: int) -> complex:
    """The (m, n) entry of (J_a - z)^-1."""
    return get_evaluator(a).entry(p, m, n)


def gamma_a_brute_force(p: PointLike, a: CouplingLike, size: int = 200) -> float:
    """max |G_{m,n}(z)| over m, n <= size."""
    return float(np.max(np.abs(get_evaluator(a).matrix(p, size))))


@dataclass(frozen=True)
class EigenSolution:
    """
    Generalized eigensolution psi_n(k) = (k - a) k^(n-1) - (1/k - a) k^(1-n)
    of J_a at z = k + 1/k. At k = +-1 the threshold solutions
    u_n(+-1) = (+-1)^n (n -+ a(n - 1)) are used instead.
    """

    k: complex
    a: complex

    def __post_init__(self):
        k = complex(self.k)
        if k == 0:
            raise DomainError("EigenSolution needs k != 0")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "a", as_coupling(self.a).a)

    @property
    def z(self) -> complex:
        return self.k + 1 / self.k

    @property
    def threshold_sign(self) -> Optional[int]:
        for s in (1, -1):
            if abs(self.k - s) <= 1e-14:
                return s
        return None

    def values(self, N: int) -> np.ndarray:
        n = np.arange(1, N + 1)
        s = self.threshold_sign
        if s is not None:
            return (float(s) ** n) * (n - s * self.a * (n - 1))
        k, a = self.k, self.a
        coefficient = 1 / k - a
        if abs(coefficient) <= 1e-13 * max(1.0, abs(a)):
            # k = 1/a: the growing branch vanishes
            return (k - a) * k ** (n - 1.0)
        return (k - a) * k ** (n - 1.0) - coefficient * k ** (1.0 - n)

    def value(self, n: int) -> complex:
        return complex(self.values(n)[-1])

    def residual(self, N: int) -> float:
        """||(M - z) psi|| / ||psi|| on the size-N truncation of J_a."""
        psi = self.values(N).astype(complex)
        M = build_truncation(self.a, None, N)
        r = M.matvec(psi) - self.z * psi
        return float(np.linalg.norm(r) / np.linalg.norm(psi))


def g_m_theta(theta, a: float, m: int):
    """
    Unit-circle kernel
    g_m(theta; a) = |sin(m theta) - a sin((m-1) theta)| / (|sin theta| sqrt(1 + a^2 - 2a cos theta)),
    continuously extended to theta = 0 and theta = +-pi.
    """
    if not -1 < a < 1:
        raise DomainError(f"g_m_theta needs a in (-1, 1), got {a}")
    theta = np.asarray(theta, dtype=float)
    s = np.sin(theta)
    small = np.abs(s) < 1e-7
    safe = np.where(small, 1.0, theta)
    numerator = np.abs(np.sin(m * safe) - a * np.sin((m - 1) * safe))
    denominator = np.abs(np.sin(safe)) * np.sqrt(1 + a * a - 2 * a * np.cos(safe))
    value = numerator / denominator
    at_zero = (m - a * (m - 1)) / (1 - a)
    at_pi = (m + a * (m - 1)) / (1 + a)
    limit = np.where(np.cos(theta) > 0, at_zero, at_pi)
    value = np.where(small, limit, value)
    if value.ndim == 0:
        return float(value)
    return value


def g_m_theta_max(a: float, m: int, samples: int = 20001) -> Tuple[float, float]:
    """
    Maximise g_m(.; a) over [-pi, pi]: grid search, then bounded refinement
    around the best grid cell.

    Returns:
        (theta, value) of the maximum found
    """
    theta = np.linspace(-np.pi, np.pi, samples)
    values = g_m_theta(theta, a, m)
    i = int(np.argmax(values))
    best_theta, best_value = float(theta[i]), float(values[i])
    lo = theta[max(i - 1, 0)]
    hi = theta[min(i + 1, samples - 1)]
    if hi > lo:
        res = minimize_scalar(
            lambda t: -g_m_theta(t, a, m), bounds=(lo, hi), method="bounded",
            options={"xatol": 1e-12},
        )
        if -res.fun > best_value:
            best_theta, best_value = float(res.x), float(-res.fun)
    return best_theta, best_value


def kernel_global_max(a: float, m: int, n: int) -> float:
    """Bound a/(1-a) + min(m, n) on |G_{m,n}(z)| over the whole disk, a in [0, 1)."""
    if not 0 <= a < 1:
        raise DomainError(f"kernel_global_max needs a in [0, 1), got {a}")
    return a / (1 - a) + min(m, n)
