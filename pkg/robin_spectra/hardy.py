"""
Discrete Hardy inequalities on the half-line lattice.

A Hardy weight w >= 0 satisfies

    sum_n |u_n - u_{n-1}|^2 >= sum_n w_n |u_n|^2      (u_0 = 0)

for every finitely supported u. Weights implemented here:
1. Classical: 1 / (4 n^2)
2. PowerGenerated(q): 2 - (1 - 1/n)^q - (1 + 1/n)^q, q in (0, 1/2]; q = 1/2 is
   the optimal weight
3. RobinCoupled(q, a): the power weight minus a at n = 1, q in (0, q_a]

Any positive superharmonic sequence g generates a weight
w_n = (2 g_n - g_{n-1} - g_{n+1}) / g_n together with an exact identity whose
remainder is a sum of squares; identity_terms evaluates all three parts.

Design Decisions:
- g_0 = 0 throughout, matching u_0 = 0.
- The power weight is evaluated as -(expm1(q log1p(-1/n)) + expm1(q log1p(1/n)))
  which keeps full relative accuracy for large n.
- The linear ramp used for Neumann criticality is summed in exact rational
  arithmetic (fractions.Fraction).
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import eigh, eigvalsh_tridiagonal
from scipy.special import factorial, poch

from .errors import DomainError, ParamError, SizeError, SuperharmonicityViolation
from .lattice import as_finite_complex, difference_backward

logger = logging.getLogger(__name__)

CERTIFICATE_CHUNK = 1_000_000
SERIES_FROM = 100


def q_max(a: float) -> float:
    """
    Largest admissible exponent q_a = min(log2(2 - a), 1/2) for a in [0, 1).

    Raises:
        DomainError: If a is outside [0, 1)
    """
    a = float(a)
    if not 0 <= a < 1:
        raise DomainError(f"q_max needs a in [0, 1), got {a}")
    return min(math.log2(2 - a), 0.5)


class WeightKind(Enum):
    CLASSICAL = "classical"
    POWER_GENERATED = "power"
    ROBIN_COUPLED = "robin"


def _power_weight(q: float, n: np.ndarray) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    out = np.empty_like(n)
    first = n == 1
    out[first] = 2 - 2.0 ** q
    # the two expm1 terms cancel to O(n^-2); far out only the series keeps the n^-4 digits
    far = n >= SERIES_FROM
    near = ~first & ~far
    x = 1 / n[near]
    out[near] = -(np.expm1(q * np.log1p(-x)) + np.expm1(q * np.log1p(x)))
    out[far] = weight_series(q, n[far])
    return out


def weight_series(q: float, n, terms: int = 8):
    """
    Series form of the power weight for n >= 2:
    2q * sum_{k=1}^{terms} (1-q)_{2k-1} / (2k)! * n^(-2k), with (x)_j the rising factorial.
    """
    n = np.asarray(n, dtype=float)
    total = np.zeros_like(n)
    for k in range(terms, 0, -1):
        total = total + poch(1 - q, 2 * k - 1) / factorial(2 * k) * n ** (-2.0 * k)
    total = 2 * q * total
    if total.ndim == 0:
        return float(total)
    return total


@dataclass(frozen=True)
class HardyWeight:
    """A Hardy weight sequence with its kind and parameters."""

    kind: WeightKind
    q: Optional[float] = None
    a: float = 0.0

    def __post_init__(self):
        if self.kind is WeightKind.CLASSICAL:
            return
        if self.q is None:
            raise ParamError(f"{self.kind.value} weight needs an exponent q")
        q = float(self.q)
        if self.kind is WeightKind.POWER_GENERATED:
            if not 0 < q <= 0.5:
                raise ParamError(f"PowerGenerated weight needs q in (0, 1/2], got {q}")
        else:
            limit = q_max(self.a)
            if not 0 < q <= limit + 1e-15:
                raise ParamError(
                    f"RobinCoupled weight needs q in (0, q_a] with q_a = {limit:.10g} "
                    f"for a = {self.a}, got {q}"
                )
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "a", float(self.a))

    @classmethod
    def classical(cls) -> "HardyWeight":
        return cls(WeightKind.CLASSICAL)

    @classmethod
    def power(cls, q: float) -> "HardyWeight":
        return cls(WeightKind.POWER_GENERATED, q)

    @classmethod
    def optimal(cls) -> "HardyWeight":
        return cls(WeightKind.POWER_GENERATED, 0.5)

    @classmethod
    def robin(cls, q: float, a: float) -> "HardyWeight":
        return cls(WeightKind.ROBIN_COUPLED, q, a)

    @property
    def label(self) -> str:
        if self.kind is WeightKind.CLASSICAL:
            return "classical"
        if self.kind is WeightKind.POWER_GENERATED:
            return f"power(q={self.q:g})"
        return f"robin(q={self.q:g}, a={self.a:g})"

    @property
    def generator(self) -> Optional["GeneratorSequence"]:
        if self.kind is WeightKind.CLASSICAL:
            return None
        return GeneratorSequence.power(self.q)

    def values(self, N: int) -> np.ndarray:
        """w_1, ..., w_N."""
        n = np.arange(1, N + 1, dtype=float)
        if self.kind is WeightKind.CLASSICAL:
            return 1 / (4 * n * n)
        out = _power_weight(self.q, n)
        if self.kind is WeightKind.ROBIN_COUPLED and N >= 1:
            out[0] -= self.a
        return out

    def value(self, n: int) -> float:
        if n < 1:
            raise DomainError(f"sites are 1-based, got {n}")
        if self.kind is WeightKind.CLASSICAL:
            return 1 / (4 * n * n)
        value = float(_power_weight(self.q, np.array([n]))[0])
        if self.kind is WeightKind.ROBIN_COUPLED and n == 1:
            value -= self.a
        return value

    def __call__(self, n: int) -> float:
        return self.value(n)


def weight(kind: HardyWeight, n: int) -> float:
    """w_n of the given weight."""
    return kind.value(n)


class GeneratorSequence:
    """
    Positive sequence g_1, g_2, ... generating a Hardy weight.

    Superharmonicity (-Delta_0 g)_n = 2 g_n - g_{n-1} - g_{n+1} >= 0 (g_0 = 0)
    is checked on demand.
    """

    def __init__(self, func: Callable[[np.ndarray], np.ndarray], label: str = "g"):
        self._func = func
        self.label = label

    @classmethod
    def power(cls, q: float) -> "GeneratorSequence":
        return cls(lambda n: n ** q, f"n^{q:g}")

    @classmethod
    def from_function(cls, func: Callable[[np.ndarray], np.ndarray], label: str = "g"):
        return cls(func, label)

    def values(self, N: int) -> np.ndarray:
        """g_1, ..., g_N."""
        n = np.arange(1, N + 1, dtype=float)
        return np.asarray(self._func(n), dtype=float) * np.ones_like(n)

    def laplacian(self, N: int) -> np.ndarray:
        """(-Delta_0 g)_n for n = 1..N."""
        g = np.concatenate(([0.0], self.values(N + 1)))
        return 2 * g[1:-1] - g[:-2] - g[2:]

    def check(self, n_max: int) -> None:
        """
        Raises:
            DomainError: If some g_n <= 0 for n <= n_max + 1
            SuperharmonicityViolation: If (-Delta_0 g)_n < 0 for some n <= n_max
        """
        g = self.values(n_max + 1)
        bad = np.nonzero(g <= 0)[0]
        if bad.size:
            raise DomainError(f"generator {self.label} is not positive at n = {int(bad[0]) + 1}")
        self._violations(n_max)

    def _violations(self, N: int) -> np.ndarray:
        g = np.concatenate(([0.0], self.values(N + 1)))
        lap = 2 * g[1:-1] - g[:-2] - g[2:]
        slack = 64 * np.finfo(float).eps * (2 * np.abs(g[1:-1]) + np.abs(g[:-2]) + np.abs(g[2:]))
        bad = np.nonzero(lap < -slack)[0]
        if bad.size:
            n = int(bad[0]) + 1
            raise SuperharmonicityViolation(
                f"(-Delta_0 g)_{n} = {lap[bad[0]]:.6g} < 0 for generator {self.label}"
            )
        return np.maximum(lap, 0.0)

    def weights(self, N: int) -> np.ndarray:
        """Generated weight w_n = (-Delta_0 g)_n / g_n for n = 1..N."""
        lap = self._violations(N)
        return lap / self.values(N)


def generated_weight(g: GeneratorSequence, n: int) -> float:
    """(2 g_n - g_{n-1} - g_{n+1}) / g_n with g_0 = 0."""
    if n < 1:
        raise DomainError(f"sites are 1-based, got {n}")
    return float(g.weights(n)[-1])


@dataclass(frozen=True)
class IdentityTerms:
    """The three sums of the generalized Hardy identity."""

    dirichlet: float
    hardy: float
    remainder: float

    @property
    def residual(self) -> float:
        return abs(self.dirichlet - self.hardy - self.remainder)

    @property
    def scale(self) -> float:
        return max(abs(self.dirichlet), abs(self.hardy), abs(self.remainder))


def identity_terms(u: Sequence[complex], g: GeneratorSequence) -> IdentityTerms:
    """
    Evaluate
        sum |u_n - u_{n-1}|^2,  sum w_n |u_n|^2,
        sum_{n>=2} |sqrt(g_{n-1}/g_n) u_n - sqrt(g_n/g_{n-1}) u_{n-1}|^2
    for u = (u_1, ..., u_L) and u_0 = 0.
    """
    u = np.asarray(u, dtype=complex)
    L = u.size
    if L == 0:
        return IdentityTerms(0.0, 0.0, 0.0)
    gv = g.values(L + 1)
    w = g.weights(L)
    d = difference_backward(u)
    dirichlet = math.fsum(np.abs(d) ** 2)
    hardy = math.fsum(w * np.abs(u) ** 2)
    ext = np.concatenate((u, [0j]))
    later, earlier = ext[1:], ext[:-1]
    g_later, g_earlier = gv[1:], gv[:-1]
    terms = np.sqrt(g_earlier / g_later) * later - np.sqrt(g_later / g_earlier) * earlier
    remainder = math.fsum(np.abs(terms) ** 2)
    return IdentityTerms(dirichlet, hardy, remainder)


def identity_residual(u: Sequence[complex], g: GeneratorSequence) -> float:
    """Absolute defect of the generalized Hardy identity for u and g."""
    return identity_terms(u, g).residual


class CutoffKind(Enum):
    LOGARITHMIC = "logarithmic"
    LINEAR_RAMP = "linear_ramp"


@dataclass(frozen=True)
class CutoffSequence:
    """
    Finitely supported approximations of the constant sequence 1.

    LOGARITHMIC: 1 for n < N, (2 log N - log n)/log N for N <= n <= N^2, 0 beyond.
    LINEAR_RAMP: 1 for n < N, (2N - n)/N for N <= n <= 2N, 0 beyond.
    """

    kind: CutoffKind
    N: int

    def __post_init__(self):
        minimum = 2 if self.kind is CutoffKind.LOGARITHMIC else 1
        if self.N < minimum:
            raise SizeError(f"{self.kind.value} cutoff needs N >= {minimum}, got {self.N}")

    @classmethod
    def logarithmic(cls, N: int) -> "CutoffSequence":
        return cls(CutoffKind.LOGARITHMIC, N)

    @classmethod
    def linear_ramp(cls, N: int) -> "CutoffSequence":
        return cls(CutoffKind.LINEAR_RAMP, N)

    @property
    def support(self) -> int:
        return self.N * self.N if self.kind is CutoffKind.LOGARITHMIC else 2 * self.N

    def values(self, size: Optional[int] = None) -> np.ndarray:
        size = self.support if size is None else size
        n = np.arange(1, size + 1, dtype=float)
        N = float(self.N)
        if self.kind is CutoffKind.LOGARITHMIC:
            middle = (2 * math.log(N) - np.log(n)) / math.log(N)
            out = np.where(n < N, 1.0, middle)
            return np.where(n > N * N, 0.0, out)
        out = np.where(n < N, 1.0, (2 * N - n) / N)
        return np.where(n > 2 * N, 0.0, out)

    def exact_values(self) -> List[Fraction]:
        """Exact ramp values psi_1 .. psi_{2N+1}."""
        if self.kind is not CutoffKind.LINEAR_RAMP:
            raise DomainError("exact values exist only for the linear ramp")
        N = self.N
        return [
            Fraction(1) if n < N else (Fraction(2 * N - n, N) if n <= 2 * N else Fraction(0))
            for n in range(1, 2 * N + 2)
        ]


def _certificate_chunk(bounds: Tuple[int, int], q: float) -> float:
    lo, hi = bounds
    n = np.arange(lo, hi, dtype=float)
    terms = (n * (n - 1)) ** q * np.log1p(1 / (n - 1)) ** 2
    return float(np.sum(terms))


def optimality_certificate(
    q: float,
    N: int,
    threads: Optional[int] = None,
    chunk: int = CERTIFICATE_CHUNK,
) -> float:
    """
    S(N) = sum_{n>=2} g_n g_{n-1} |xi_n - xi_{n-1}|^2 with g_n = n^q and the
    logarithmic cutoff xi of level N. Only n in (N, N^2] contribute.

    Args:
        q: Exponent in (0, 1/2]
        N: Cutoff level, >= 2
        threads: Worker threads for the range split (None or 1: serial)
        chunk: Sites per range block

    Returns:
        S(N); the decay bound is S(N) <= 4 / log N
    """
    if not 0 < q <= 0.5:
        raise ParamError(f"certificate needs q in (0, 1/2], got {q}")
    if N < 2:
        raise SizeError(f"certificate needs N >= 2, got {N}")
    blocks = [(lo, min(lo + chunk, N * N + 1)) for lo in range(N + 1, N * N + 1, chunk)]
    if threads and threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(lambda b: _certificate_chunk(b, q), blocks))
    else:
        partials = [_certificate_chunk(b, q) for b in blocks]
    total = math.fsum(partials) / math.log(N) ** 2
    logger.info("certificate q=%g N=%d: S=%.6g over %d blocks", q, N, total, len(blocks))
    return total


def certificate_report(q: float, N: int, threads: Optional[int] = None) -> Dict[str, float]:
    """{N, S, bound} for the JSON certificate output."""
    return {"N": N, "S": optimality_certificate(q, N, threads), "bound": 4 / math.log(N)}


def neumann_criticality_demo(N: int) -> Tuple[float, float]:
    """
    Neumann form of the linear ramp psi^(N) against 1/N.

    Returns:
        (<psi, -Delta_1 psi>, 1/N), the first summed exactly as
        sum_n (psi_{n+1} - psi_n)^2
    """
    if N < 1:
        raise SizeError(f"ramp needs N >= 1, got {N}")
    psi = CutoffSequence.linear_ramp(N).exact_values()
    form = sum((psi[i + 1] - psi[i]) ** 2 for i in range(len(psi) - 1))
    return float(form), 1 / N


def neumann_hardy_violation(w: HardyWeight, N: int) -> Tuple[float, float]:
    """
    (Neumann form, weighted term sum w_n psi_n^2) for the ramp psi^(N).

    The weighted term exceeding the form exhibits a failure of the Hardy
    inequality for the Neumann Laplacian.
    """
    form, _ = neumann_criticality_demo(N)
    ramp = CutoffSequence.linear_ramp(N).values()
    weighted = math.fsum(w.values(ramp.size) * ramp ** 2)
    return form, weighted


def robin_form_min_eigenvalue(a: float, w: HardyWeight, c: float = 1.0, N: int = 2000) -> float:
    """Smallest eigenvalue of the size-N section of (2 - J_a) - c W, a real."""
    a = as_finite_complex(a, "a")
    if a.imag != 0:
        raise DomainError(f"robin form check needs real a, got {a!r}")
    if N < 2:
        raise SizeError(f"section size must be >= 2, got {N}")
    diagonal = 2.0 - c * w.values(N)
    diagonal[0] -= a.real
    off = -np.ones(N - 1)
    return float(eigvalsh_tridiagonal(diagonal, off, select="i", select_range=(0, 0))[0])


def opt3_ratio(w: HardyWeight, n: int, L: int) -> float:
    """
    inf over psi supported in [n, L] of ||D psi||^2 / <psi, W psi>:
    the smallest generalized eigenvalue of the Dirichlet section against W.
    """
    if n < 1 or L < n:
        raise SizeError(f"need 1 <= n <= L, got n={n}, L={L}")
    wv = w.values(L)[n - 1:]
    if np.any(wv <= 0):
        raise ParamError(f"weight {w.label} must be positive on sites {n}..{L}")
    size = wv.size
    A = 2 * np.eye(size) - np.eye(size, k=1) - np.eye(size, k=-1)
    return float(eigh(A, np.diag(wv), eigvals_only=True, subset_by_index=[0, 0])[0])


def opt3_search(w: HardyWeight, n: int, lengths: Sequence[int]) -> List[Tuple[int, float]]:
    """Ratios for growing windows; values staying above 1 + eps falsify the strongest optimality."""
    results = []
    for L in lengths:
        ratio = opt3_ratio(w, n, L)
        logger.debug("opt3 %s n=%d L=%d ratio=%.8f", w.label, n, L, ratio)
        results.append((int(L), ratio))
    return results
