"""
Spectral-stability verdicts for J_a + V with real a in (-1, 1).

The kernel

    K'_{m,n} = sqrt|v_m| (a/(1-a) + min(m, n)) sqrt|v_n|

dominates the Birman-Schwinger operator K(z) entrywise on the whole resolvent
set. ||K'|| < 1 forces sigma(J_a + V) to be purely continuous; ||K'|| <= 1
still rules out discrete eigenvalues.

Verdict pipeline (every stage is evaluated and kept as evidence):
1. Weighted l1 sum  sum (a/(1-a) + n^2)|v_n|      (cheapest, weakest)
2. Hilbert-Schmidt norm of K'
3. Operator norm of K' (certified upper estimate)
4. Hardy pointwise condition |v_n| <= c w_n with the Robin weight of q = q_a
The strict implications 1 => 2 => 3 hold; 4 is independent.

Design Decisions:
- Verdicts only use certified upper bounds.
- For a in (-1, 0) every quantity is evaluated with |a|: the dual operator
  -J_{-a} - V has the same K' and the form test switches to 4 + Delta_a.
- Tails of decaying potentials are controlled through
  (a/(1-a) + min(m, n))^2 <= (a/(1-a) + m^2)(a/(1-a) + n^2).
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.linalg import eigvalsh, eigvalsh_tridiagonal

from .errors import DivergentTail, DomainError, SizeError
from .hardy import HardyWeight, _power_weight, q_max
from .lattice import Potential, as_finite_complex

logger = logging.getLogger(__name__)

TAIL_HS_TARGET = 1e-8
POWER_TOL = 1e-10
POWER_MAXITER = 10_000
MAX_SECTION = 4000
MAX_TAIL_SITES = 1 << 22
# relative accuracy of the dense symmetric eigensolve
EIGEN_ROUNDING = 1e-12


def reflected_coupling(a) -> float:
    """|a| for real a in (-1, 1)."""
    a = as_finite_complex(a, "a")
    if a.imag != 0 or not -1 < a.real < 1:
        raise DomainError(f"stability analysis needs real a in (-1, 1), got {a!r}")
    return abs(a.real)


def _alpha(a) -> float:
    b = reflected_coupling(a)
    return b / (1 - b)


def _hs_sq_sorted(sites: np.ndarray, x: np.ndarray, alpha: float) -> float:
    """sum_{i,j} x_i x_j (alpha + min(s_i, s_j))^2 for increasing sites, in O(len)."""
    if sites.size == 0:
        return 0.0
    after = np.concatenate((np.cumsum(x[::-1])[::-1][1:], [0.0]))
    weights = (alpha + sites.astype(float)) ** 2
    return math.fsum(weights * x * (x + 2 * after))


def _tail_growth(V: Potential, alpha: float, after: int) -> float:
    """sum over tail sites n > after of (alpha + n^2)|v_n|."""
    tail = V.tail
    return alpha * tail.moment(0.0, after) + tail.moment(2.0, after)


def _head(V: Potential, last_site: int) -> Tuple[np.ndarray, np.ndarray]:
    """Sites with v_n != 0 up to last_site and their |v_n|."""
    keep = V.sites <= last_site
    sites = V.sites[keep]
    x = np.abs(V.values[keep])
    if V.tail is not None and last_site > V.tail.start:
        extra = np.arange(V.tail.start + 1, last_site + 1, dtype=np.int64)
        sites = np.concatenate((sites, extra))
        x = np.concatenate((x, np.abs(V.tail.amplitude) * extra.astype(float) ** (-V.tail.exponent)))
    nz = x > 0
    return sites[nz], x[nz]


@dataclass(frozen=True, eq=False)
class KPrimeKernel:
    """K' for coupling a (|a| is used) and potential V."""

    a: float
    potential: Potential

    def __post_init__(self):
        object.__setattr__(self, "a", reflected_coupling(self.a))

    @property
    def alpha(self) -> float:
        return self.a / (1 - self.a)

    def entry(self, m: int, n: int) -> float:
        vm = abs(self.potential.value(m))
        vn = abs(self.potential.value(n))
        return math.sqrt(vm) * (self.alpha + min(m, n)) * math.sqrt(vn)

    def on_sites(self, sites: np.ndarray, x: Optional[np.ndarray] = None) -> np.ndarray:
        sites = np.asarray(sites, dtype=np.int64)
        if x is None:
            x = np.array([abs(self.potential.value(int(n))) for n in sites])
        root = np.sqrt(x)
        kernel = self.alpha + np.minimum(sites[:, None], sites[None, :]).astype(float)
        return root[:, None] * kernel * root[None, :]

    def section(self, N: int) -> np.ndarray:
        """Matrix of K' on sites 1..N."""
        sites = np.arange(1, N + 1)
        return self.on_sites(sites, np.abs(self.potential.dense(N)))


def kprime_hs_bounds(a, V: Potential, tail_tol: float = TAIL_HS_TARGET) -> Tuple[float, float]:
    """
    Certified (lower, upper) bounds on ||K'||_HS^2; equal for finite support.

    Raises:
        DivergentTail: If the tail cannot be certified to tail_tol
    """
    alpha = _alpha(a)
    if V.tail is None:
        value = _hs_sq_sorted(V.sites, np.abs(V.values), alpha)
        return value, value
    last = max(V.tail.start, 64)
    while True:
        sites, x = _head(V, last)
        head = _hs_sq_sorted(sites, x, alpha)
        head_growth = math.fsum((alpha + sites.astype(float) ** 2) * x)
        tail_growth = _tail_growth(V, alpha, last)
        bound = tail_growth * (2 * head_growth + tail_growth)
        logger.debug("HS tail after site %d: bound %.3e", last, bound)
        if bound <= tail_tol:
            return head, head + bound
        if last >= MAX_TAIL_SITES:
            raise DivergentTail(
                f"HS tail bound {bound:.3e} still above {tail_tol:.1e} after {last} sites"
            )
        last *= 2


def kprime_hs_norm_sq(a, V: Potential, tail_tol: float = TAIL_HS_TARGET) -> float:
    """||K'||_HS^2 (certified upper value, exact for finite support)."""
    return kprime_hs_bounds(a, V, tail_tol)[1]


def weighted_l1_sum(a, V: Potential) -> float:
    """sum_n (a/(1-a) + n^2)|v_n|; < 1 implies the HS and operator-norm conditions."""
    return V.weighted_norm(_alpha(a))


@dataclass(frozen=True)
class OperatorNormEstimate:
    """Enclosure lower <= ||K'|| <= upper, both up to the eigensolver rounding."""

    lower: float
    upper: float
    size: int
    exact: bool = False
    rounding: float = 0.0


def _power_iteration(K: np.ndarray, tol: float = POWER_TOL, maxiter: int = POWER_MAXITER):
    x = np.ones(K.shape[0]) / math.sqrt(K.shape[0])
    previous = None
    value = 0.0
    for it in range(maxiter):
        y = K @ x
        value = float(np.linalg.norm(y))
        if value == 0.0:
            return 0.0, True
        x = y / value
        if previous is not None and abs(value - previous) < tol * value:
            logger.debug("power iteration converged after %d steps: %.12g", it, value)
            return value, True
        previous = value
    logger.warning("power iteration stopped after %d steps at %.12g", maxiter, value)
    return value, False


def kprime_op_norm(
    a,
    V: Potential,
    N: Optional[int] = None,
    tail_target: float = TAIL_HS_TARGET,
    max_size: int = MAX_SECTION,
    power_tol: float = POWER_TOL,
) -> OperatorNormEstimate:
    """
    Lower and upper estimates of ||K'||.

    The lower estimate is the norm of the section on the leading nonzero
    sites (power iteration, certified by a symmetric eigensolve); the upper
    estimate adds the Hilbert-Schmidt norm of the section complement.
    Rank-one potentials return the exact value |v_n| (a/(1-a) + n).

    Args:
        a: Real coupling in (-1, 1)
        V: Potential
        N: Optional cap on the site range of the section
        tail_target: Stop enlarging the section once the complement bound is below this
        max_size: Largest section handled densely
        power_tol: Relative tolerance of the power iteration
    """
    alpha = _alpha(a)
    if V.tail is None:
        sites, x = _head(V, V.support_bound or 0)
        if sites.size == 0:
            return OperatorNormEstimate(0.0, 0.0, 0, True)
        if sites.size == 1:
            value = float(x[0] * (alpha + sites[0]))
            return OperatorNormEstimate(value, value, 1, True)
        total_hs_sq = _hs_sq_sorted(sites, x, alpha)
        limit = min(sites.size, max_size)
        if N is not None:
            limit = min(limit, int(np.searchsorted(sites, N, side="right")))
        head_sites, head_x = sites[:limit], x[:limit]
        complement_sq = max(0.0, total_hs_sq - _hs_sq_sorted(head_sites, head_x, alpha))
    else:
        last = max(V.tail.start, 64)
        while True:
            head_sites, head_x = _head(V, last)
            head_growth = math.fsum((alpha + head_sites.astype(float) ** 2) * head_x)
            tail_growth = _tail_growth(V, alpha, last)
            complement_sq = tail_growth * (2 * head_growth + tail_growth)
            too_big = head_sites.size * 2 > max_size or (N is not None and last * 2 > N)
            if math.sqrt(complement_sq) < tail_target or too_big:
                break
            last *= 2
    if head_sites.size == 0:
        return OperatorNormEstimate(0.0, math.sqrt(complement_sq), 0, complement_sq == 0.0)
    kernel = KPrimeKernel(reflected_coupling(a), V)
    K = kernel.on_sites(head_sites, head_x)
    power, _ = _power_iteration(K, power_tol)
    section = float(eigvalsh(K, subset_by_index=[K.shape[0] - 1, K.shape[0] - 1])[0])
    if abs(section - power) > 1e-8 * max(1.0, section):
        logger.debug("power iteration %.12g vs eigensolver %.12g", power, section)
    lower = max(power, section)
    upper = lower + math.sqrt(complement_sq)
    logger.info("||K'|| in [%.10g, %.10g] on %d sites", lower, upper, K.shape[0])
    return OperatorNormEstimate(lower, upper, int(K.shape[0]), complement_sq == 0.0,
                                EIGEN_ROUNDING * lower)


def hardy_pointwise_constant(a: float, V: Potential, q: Optional[float] = None) -> float:
    """
    Smallest c with |v_n| <= c w_n for all n, w the Robin weight of (q, a);
    +inf if no such c exists. q defaults to q_a.
    """
    b = float(a)
    q = q_max(b) if q is None else q
    w = HardyWeight.robin(q, b)
    best = 0.0
    sites, x = V.sites, np.abs(V.values)
    if sites.size:
        wv = w.values(int(sites[-1]))[sites - 1]
        if np.any((wv <= 0) & (x > 0)):
            return math.inf
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(x > 0, x / np.where(wv > 0, wv, 1.0), 0.0)
        best = float(np.max(ratios))
    tail = V.tail
    if tail is not None and tail.amplitude != 0:
        if tail.exponent < 2:
            return math.inf
        floor_coeff = q * (1 - q)
        # for n in the tail, |v_n| / w_n <= |C| n^(2-p) / (q (1 - q))
        amplitude = abs(tail.amplitude)
        n = tail.start + 1
        if n == 1:
            first = float(_power_weight(q, np.array([1.0]))[0]) - b
            if first <= 0:
                return math.inf
            best = max(best, amplitude / first)
            n = 2
        if tail.exponent == 2:
            # n^2 w_n decreases to q (1 - q): the supremum is the limit
            return max(best, amplitude / floor_coeff)
        block = 4096
        while True:
            ns = np.arange(n, n + block, dtype=float)
            wv = _power_weight(q, ns)
            ratios = amplitude * ns ** (-tail.exponent) / wv
            best = max(best, float(np.max(ratios)))
            envelope = amplitude * (n + block) ** (2 - tail.exponent) / floor_coeff
            if envelope <= best or n > MAX_TAIL_SITES:
                if envelope > best:
                    best = envelope
                break
            n += block
    return best


def hardy_pointwise_condition(a: float, V: Potential, q: float, c: float) -> bool:
    """
    True iff |v_n| <= c w_n(q, a) for every n (Robin Hardy weight).

    Raises:
        DomainError: If a is outside [0, 1)
        ParamError: If q is outside (0, q_a]
    """
    b = float(a)
    HardyWeight.robin(q, b)
    return hardy_pointwise_constant(b, V, q) <= c * (1 + 1e-12)


def form_subordination_min_eigenvalue(a, V: Potential, c: float, N: Optional[int] = None) -> float:
    """
    Smallest eigenvalue of the size-N section of c(2 - J_a) - |V| for a >= 0,
    or of the dual c(2 + J_a) - |V| (i.e. c(4 + Delta_a) - |V|) for a < 0.
    """
    a = as_finite_complex(a, "a")
    reflected_coupling(a)
    if N is None:
        N = V.last_explicit_site + 200
    if N < 2:
        raise SizeError(f"section size must be >= 2, got {N}")
    x = np.abs(V.dense(N))
    sign = 1.0 if a.real >= 0 else -1.0
    diagonal = 2 * c - x
    diagonal[0] -= sign * c * a.real
    off = np.full(N - 1, -sign * c)
    return float(eigvalsh_tridiagonal(diagonal, off, select="i", select_range=(0, 0))[0])


class VerdictLevel(Enum):
    PURELY_CONTINUOUS = "PurelyContinuous"
    NO_DISCRETE_SPECTRUM = "NoDiscreteSpectrum"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class Evidence:
    """
    One certified bound, compared against the threshold 1.

    ``tolerance`` is the rounding of the computed value: a strict bound must
    clear the threshold by more than it, a weak bound may exceed it by at most it.
    """

    condition: str
    value: float
    threshold: float = 1.0
    note: str = ""
    tolerance: float = 0.0

    @property
    def strict(self) -> bool:
        return self.value + self.tolerance < self.threshold

    @property
    def weak(self) -> bool:
        return self.value <= self.threshold + self.tolerance

    def to_dict(self) -> Dict:
        out = {"condition": self.condition, "value": self.value, "threshold": self.threshold}
        if self.tolerance:
            out["tolerance"] = self.tolerance
        if self.note:
            out["note"] = self.note
        return out


class StabilityVerdict:
    """Outcome of verdict(): the strongest level any certified bound supports."""

    def __init__(self, a: float, level: VerdictLevel, evidence: List[Evidence]):
        self.a = a
        self.level = level
        self.evidence = evidence

    @property
    def fired(self) -> List[Evidence]:
        """Evidence entries that support the reported level."""
        if self.level is VerdictLevel.PURELY_CONTINUOUS:
            return [e for e in self.evidence if e.strict]
        if self.level is VerdictLevel.NO_DISCRETE_SPECTRUM:
            return [e for e in self.evidence if e.weak]
        return []

    def to_dict(self) -> Dict:
        return {
            "a": self.a,
            "level": self.level.value,
            "evidence": [e.to_dict() for e in self.evidence],
        }

    def __repr__(self) -> str:
        return f"StabilityVerdict(level={self.level.value}, fired={[e.condition for e in self.fired]})"


def verdict(
    a,
    V: Potential,
    q: Optional[float] = None,
    tail_target: float = TAIL_HS_TARGET,
    max_size: int = MAX_SECTION,
    power_tol: float = POWER_TOL,
) -> StabilityVerdict:
    """
    Evaluate all stability conditions for J_a + V, a real in (-1, 1).

    q is the Hardy exponent of the pointwise stage (default q_a); the other
    keywords go to the Hilbert-Schmidt and operator-norm stages.

    Returns:
        StabilityVerdict with level PurelyContinuous if some certified bound is
        < 1, NoDiscreteSpectrum if some bound is <= 1, else Inconclusive
    """
    b = reflected_coupling(a)
    evidence: List[Evidence] = []

    # Stage 1: weighted l1 sum
    try:
        evidence.append(Evidence("weighted_l1", weighted_l1_sum(b, V)))
    except DivergentTail as exc:
        evidence.append(Evidence("weighted_l1", math.inf, note=str(exc)))

    # Stage 2: Hilbert-Schmidt norm
    try:
        evidence.append(Evidence("hilbert_schmidt", math.sqrt(kprime_hs_norm_sq(b, V, tail_target))))
    except DivergentTail as exc:
        evidence.append(Evidence("hilbert_schmidt", math.inf, note=str(exc)))

    # Stage 3: operator norm, upper estimate
    try:
        estimate = kprime_op_norm(b, V, tail_target=tail_target, max_size=max_size, power_tol=power_tol)
        evidence.append(Evidence("operator_norm", estimate.upper,
                                 note=f"lower={estimate.lower:.12g}", tolerance=estimate.rounding))
    except DivergentTail as exc:
        evidence.append(Evidence("operator_norm", math.inf, note=str(exc)))

    # Stage 4: Hardy pointwise condition, q = q_a unless given
    if q is None:
        q = q_max(b)
    else:
        HardyWeight.robin(q, b)
    evidence.append(Evidence("hardy_pointwise", hardy_pointwise_constant(b, V, q),
                             note=f"q={q:.10g}"))

    if any(e.strict for e in evidence):
        level = VerdictLevel.PURELY_CONTINUOUS
    elif any(e.weak for e in evidence):
        level = VerdictLevel.NO_DISCRETE_SPECTRUM
    else:
        level = VerdictLevel.INCONCLUSIVE
    result = StabilityVerdict(float(as_finite_complex(a).real), level, evidence)
    logger.info("verdict %r", result)
    return result
