"""
Lattice core: the Joukowski parametrisation, Robin couplings, diagonal
potentials and finite sections of J_a + V.

Conventions:
1. Sites are 1-based. The virtual value psi_0 = 0 belongs to the backward
   difference and is never stored.
2. The spectral parameter z is paired with k in the closed unit disk,
   z = k + 1/k. The open band (-2, 2) is the image of the unit circle.
3. J_a is tridiagonal with off-diagonals 1 and (1,1) entry a. Its finite
   section of size N is the universal numerical oracle of this package.

Design Decisions:
- inverse_joukowski computes both roots of k^2 - z k + 1 and keeps the one
  with |k| <= 1. For z in [-2, 2] both roots sit on the circle and the one
  with Im k >= 0 is returned.
- Potentials carry their explicit sites as sorted arrays and, optionally, a
  power-law tail v_n = C n^-p whose sums are taken in closed form through
  the Hurwitz zeta function.
"""

import cmath
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, FrozenSet, Iterable, Mapping, Optional, Sequence, Union

import numpy as np
from scipy.linalg import solve_banded
from scipy.special import zeta

from .errors import DivergentTail, DomainError, PotentialFormatError, SizeError

logger = logging.getLogger(__name__)

JOUKOWSKI_TOL = 1e-12
GOLDEN_RATIO = (1 + math.sqrt(5)) / 2

ComplexLike = Union[complex, float, int]


def as_finite_complex(value: ComplexLike, name: str = "value") -> complex:
    """Coerce to a finite Python complex or raise DomainError."""
    try:
        c = complex(value)
    except (TypeError, ValueError) as exc:
        raise DomainError(f"{name} must be a complex number, got {value!r}") from exc
    if not (math.isfinite(c.real) and math.isfinite(c.imag)):
        raise DomainError(f"{name} must be finite, got {c!r}")
    return c


def joukowski(k: ComplexLike) -> complex:
    """
    Map k in the punctured closed unit disk to z = k + 1/k.

    Args:
        k: Point with 0 < |k| <= 1

    Returns:
        The spectral parameter z

    Raises:
        DomainError: If k = 0 or |k| > 1 (up to 1e-12)

    Examples:
        >>> joukowski(0.5)
        (2.5+0j)
    """
    k = as_finite_complex(k, "k")
    if k == 0 or abs(k) > 1 + JOUKOWSKI_TOL:
        raise DomainError(
            f"joukowski requires 0 < |k| <= 1, got k={k!r} (|k|={abs(k):.6g})"
        )
    return k + 1 / k


def inverse_joukowski(z: ComplexLike) -> "SpectralPoint":
    """
    Return the SpectralPoint (z, k) with k the root of k^2 - z k + 1 = 0 in the
    closed unit disk.

    For z in [-2, 2] the two roots are conjugate points of the unit circle and
    the one with Im k >= 0 is selected.

    Examples:
        >>> inverse_joukowski(2.5).k
        (0.5+0j)
        >>> inverse_joukowski(1.5j).k
        -0.5j
    """
    z = as_finite_complex(z, "z")
    root = cmath.sqrt(z * z - 4)
    if z.imag == 0 and abs(z.real) <= 2:
        # Both roots on the unit circle
        k = complex(z.real / 2, abs(root.imag) / 2)
        return SpectralPoint(z, k)
    k_plus = (z + root) / 2
    k_minus = (z - root) / 2
    # The roots multiply to 1; inverting the larger one avoids cancellation
    big = k_plus if abs(k_plus) >= abs(k_minus) else k_minus
    return SpectralPoint(z, 1 / big)


@dataclass(frozen=True)
class SpectralPoint:
    """A z-plane point paired with its Joukowski preimage k, 0 < |k| <= 1."""

    z: complex
    k: complex

    def __post_init__(self):
        z = as_finite_complex(self.z, "z")
        k = as_finite_complex(self.k, "k")
        if k == 0 or abs(k) > 1 + JOUKOWSKI_TOL:
            raise DomainError(f"SpectralPoint requires 0 < |k| <= 1, got k={k!r}")
        if abs(z - (k + 1 / k)) > JOUKOWSKI_TOL * max(1.0, abs(z)) * 10:
            raise DomainError(f"SpectralPoint mismatch: z={z!r} but k + 1/k = {k + 1 / k!r}")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "k", k)

    @classmethod
    def from_k(cls, k: ComplexLike) -> "SpectralPoint":
        k = as_finite_complex(k, "k")
        return cls(joukowski(k), k)

    @classmethod
    def from_z(cls, z: ComplexLike) -> "SpectralPoint":
        return inverse_joukowski(z)

    @property
    def on_unit_circle(self) -> bool:
        return abs(abs(self.k) - 1) <= JOUKOWSKI_TOL

    @property
    def sqrt_discriminant_modulus(self) -> float:
        """|sqrt(z^2 - 4)|, evaluated as |1/k - k| to avoid cancellation."""
        return abs(1 / self.k - self.k)


def as_spectral_point(p: Union["SpectralPoint", ComplexLike]) -> SpectralPoint:
    """Accept either a SpectralPoint or a bare z."""
    if isinstance(p, SpectralPoint):
        return p
    return inverse_joukowski(p)


class CouplingClass(Enum):
    """Classification of the Robin coupling a (most specific class wins)."""

    SUB_UNIT = "SubUnit"
    SUPER_UNIT = "SuperUnit"
    REAL_UNIT_INTERVAL = "RealUnitInterval"
    REAL_SYMMETRIC = "RealSymmetric"


@dataclass(frozen=True)
class RobinCoupling:
    """Boundary coupling a of J_a; a = 0 is Dirichlet, a = 1 is Neumann."""

    a: complex

    def __post_init__(self):
        object.__setattr__(self, "a", as_finite_complex(self.a, "a"))

    @property
    def is_real(self) -> bool:
        return self.a.imag == 0

    @property
    def classes(self) -> FrozenSet[CouplingClass]:
        """Every class the coupling belongs to."""
        a = self.a
        found = {CouplingClass.SUB_UNIT if abs(a) <= 1 else CouplingClass.SUPER_UNIT}
        if self.is_real and -1 < a.real < 1:
            found.add(CouplingClass.REAL_SYMMETRIC)
            if a.real >= 0:
                found.add(CouplingClass.REAL_UNIT_INTERVAL)
        return frozenset(found)

    @property
    def coupling_class(self) -> CouplingClass:
        classes = self.classes
        for candidate in (
            CouplingClass.REAL_UNIT_INTERVAL,
            CouplingClass.REAL_SYMMETRIC,
            CouplingClass.SUB_UNIT,
        ):
            if candidate in classes:
                return candidate
        return CouplingClass.SUPER_UNIT

    @property
    def has_eigenvalue(self) -> bool:
        return abs(self.a) > 1

    @property
    def eigenvalue(self) -> Optional[complex]:
        """The simple eigenvalue a + 1/a of J_a, present only when |a| > 1."""
        if not self.has_eigenvalue:
            return None
        return self.a + 1 / self.a

    @property
    def pole(self) -> Optional[complex]:
        """k = 1/a, the Joukowski preimage of the eigenvalue (|a| > 1 only)."""
        if not self.has_eigenvalue:
            return None
        return 1 / self.a


def as_coupling(a: Union[RobinCoupling, ComplexLike]) -> RobinCoupling:
    if isinstance(a, RobinCoupling):
        return a
    return RobinCoupling(a)


@dataclass(frozen=True)
class DecayTail:
    """
    Power-law tail v_n = amplitude * n^-exponent for every site n > start.
    """

    start: int
    amplitude: complex
    exponent: float

    def __post_init__(self):
        if isinstance(self.start, bool) or not isinstance(self.start, (int, np.integer)):
            raise PotentialFormatError(f"tail start must be an integer, got {self.start!r}")
        if self.start < 0:
            raise PotentialFormatError(f"tail start must be >= 0, got {self.start}")
        object.__setattr__(self, "start", int(self.start))
        object.__setattr__(self, "amplitude", as_finite_complex(self.amplitude, "tail amplitude"))
        exponent = float(self.exponent)
        if not math.isfinite(exponent) or exponent <= 1:
            raise PotentialFormatError(
                f"tail exponent must exceed 1 for an l1 potential, got {exponent}"
            )
        object.__setattr__(self, "exponent", exponent)

    def value(self, n: int) -> complex:
        return self.amplitude * float(n) ** (-self.exponent)

    def moment(self, power: float, after: Optional[int] = None) -> float:
        """
        Sum of n^power * |v_n| over tail sites n > max(start, after).

        Raises:
            DivergentTail: If exponent - power <= 1
        """
        s = self.exponent - power
        if s <= 1:
            raise DivergentTail(
                f"tail n^{power}|v_n| with decay exponent {self.exponent} is not summable\n"
                f"A decay exponent above {power + 1} is required."
            )
        first = self.start if after is None else max(self.start, after)
        return abs(self.amplitude) * float(zeta(s, first + 1))


class Potential:
    """
    Complex diagonal perturbation V = diag(v_1, v_2, ...).

    Explicit sites are stored as sorted arrays; an optional DecayTail extends
    the potential to infinitely many sites.
    """

    def __init__(
        self,
        entries: Optional[Mapping[int, ComplexLike]] = None,
        tail: Optional[DecayTail] = None,
    ):
        entries = dict(entries or {})
        sites = []
        values = []
        for site in sorted(entries):
            if isinstance(site, bool) or not isinstance(site, (int, np.integer)):
                raise PotentialFormatError(f"site must be an integer, got {site!r}")
            if site < 1:
                raise PotentialFormatError(f"sites are 1-based, got site {site}")
            try:
                value = as_finite_complex(entries[site], f"v_{site}")
            except DomainError as exc:
                raise PotentialFormatError(str(exc)) from exc
            sites.append(int(site))
            values.append(value)
        self._sites = np.asarray(sites, dtype=np.int64)
        self._values = np.asarray(values, dtype=complex)
        self._sites.setflags(write=False)
        self._values.setflags(write=False)
        if tail is not None and sites and sites[-1] > tail.start:
            raise PotentialFormatError(
                f"explicit site {sites[-1]} overlaps the tail starting after site {tail.start}"
            )
        self._tail = tail

    @classmethod
    def zero(cls) -> "Potential":
        return cls()

    @classmethod
    def single_site(cls, omega: ComplexLike, n: int) -> "Potential":
        """The rank-one potential omega * P_n."""
        return cls({n: omega})

    @classmethod
    def from_entries(cls, entries: Mapping[int, ComplexLike]) -> "Potential":
        return cls(entries)

    @classmethod
    def from_array(cls, values: Sequence[ComplexLike], first_site: int = 1) -> "Potential":
        """Sites first_site, first_site + 1, ... take the given values."""
        return cls({first_site + i: v for i, v in enumerate(values)})

    @classmethod
    def with_tail(
        cls,
        entries: Optional[Mapping[int, ComplexLike]],
        amplitude: ComplexLike,
        exponent: float,
        start: Optional[int] = None,
    ) -> "Potential":
        """Explicit entries followed by amplitude * n^-exponent beyond ``start``."""
        entries = dict(entries or {})
        if start is None:
            start = max(entries) if entries else 0
        return cls(entries, DecayTail(start, amplitude, exponent))

    @property
    def sites(self) -> np.ndarray:
        return self._sites

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def tail(self) -> Optional[DecayTail]:
        return self._tail

    @property
    def entries(self) -> Dict[int, complex]:
        return {int(n): complex(v) for n, v in zip(self._sites, self._values)}

    @property
    def is_finite_support(self) -> bool:
        return self._tail is None

    @property
    def support_bound(self) -> Optional[int]:
        """Largest explicit site (0 for V = 0), or None for an infinite tail."""
        if self._tail is not None:
            return None
        return int(self._sites[-1]) if self._sites.size else 0

    @property
    def last_explicit_site(self) -> int:
        if self._tail is not None:
            return self._tail.start
        return int(self._sites[-1]) if self._sites.size else 0

    def value(self, n: int) -> complex:
        if n < 1:
            raise DomainError(f"sites are 1-based, got {n}")
        idx = np.searchsorted(self._sites, n)
        if idx < self._sites.size and self._sites[idx] == n:
            return complex(self._values[idx])
        if self._tail is not None and n > self._tail.start:
            return self._tail.value(n)
        return 0j

    def dense(self, size: int) -> np.ndarray:
        """Vector (v_1, ..., v_size)."""
        out = np.zeros(size, dtype=complex)
        keep = self._sites <= size
        out[self._sites[keep] - 1] = self._values[keep]
        if self._tail is not None and size > self._tail.start:
            n = np.arange(self._tail.start + 1, size + 1, dtype=float)
            out[self._tail.start:] = self._tail.amplitude * n ** (-self._tail.exponent)
        return out

    def l1_norm(self) -> float:
        total = math.fsum(np.abs(self._values))
        if self._tail is not None:
            total += self._tail.moment(0.0)
        return total

    def weighted_norm(self, alpha: float) -> float:
        """
        Sum over n of (alpha + n^2)|v_n|.

        Raises:
            DivergentTail: If a tail with exponent <= 3 is present
        """
        n = self._sites.astype(float)
        total = math.fsum((alpha + n * n) * np.abs(self._values))
        if self._tail is not None:
            total += alpha * self._tail.moment(0.0) + self._tail.moment(2.0)
        return total

    def scaled(self, factor: ComplexLike) -> "Potential":
        factor = as_finite_complex(factor, "factor")
        tail = self._tail
        if tail is not None:
            tail = DecayTail(tail.start, tail.amplitude * factor, tail.exponent)
        return Potential({int(n): v * factor for n, v in zip(self._sites, self._values)}, tail)

    def __len__(self) -> int:
        return int(self._sites.size)

    def __repr__(self) -> str:
        shown = ", ".join(f"{int(n)}: {complex(v):.4g}" for n, v in zip(self._sites[:4], self._values[:4]))
        more = ", ..." if self._sites.size > 4 else ""
        tail = f", tail={self._tail}" if self._tail is not None else ""
        return f"Potential({{{shown}{more}}}{tail})"


@dataclass(frozen=True, eq=False)
class TridiagonalMatrix:
    """
    N x N tridiagonal matrix with constant off-diagonal.

    build_truncation produces off_diagonal = 1; the duality transform flips it.
    """

    diagonal: np.ndarray
    off_diagonal: complex = 1.0

    def __post_init__(self):
        diagonal = np.array(self.diagonal, dtype=complex)
        if diagonal.ndim != 1 or diagonal.size < 1:
            raise SizeError("TridiagonalMatrix needs a non-empty 1-D diagonal")
        if not np.all(np.isfinite(diagonal)):
            raise DomainError("TridiagonalMatrix diagonal must be finite")
        diagonal.setflags(write=False)
        object.__setattr__(self, "diagonal", diagonal)
        object.__setattr__(self, "off_diagonal", as_finite_complex(self.off_diagonal, "off_diagonal"))

    @property
    def dimension(self) -> int:
        return int(self.diagonal.size)

    @property
    def is_hermitian(self) -> bool:
        return self.off_diagonal.imag == 0 and not np.any(self.diagonal.imag)

    def to_dense(self) -> np.ndarray:
        n = self.dimension
        out = np.diag(self.diagonal.copy())
        idx = np.arange(n - 1)
        out[idx, idx + 1] = self.off_diagonal
        out[idx + 1, idx] = self.off_diagonal
        return out

    def affine(self, scale: ComplexLike, shift: ComplexLike) -> "TridiagonalMatrix":
        """scale * M + shift * I."""
        scale = complex(scale)
        return TridiagonalMatrix(scale * self.diagonal + complex(shift), scale * self.off_diagonal)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        out = self.diagonal * x
        out[:-1] += self.off_diagonal * x[1:]
        out[1:] += self.off_diagonal * x[:-1]
        return out

    def quadratic_form(self, psi: np.ndarray) -> complex:
        """<psi, M psi> with psi padded by zeros to the matrix size."""
        psi = np.asarray(psi, dtype=complex)
        if psi.size > self.dimension:
            raise SizeError(f"vector of length {psi.size} exceeds matrix size {self.dimension}")
        full = np.zeros(self.dimension, dtype=complex)
        full[: psi.size] = psi
        return complex(np.vdot(full, self.matvec(full)))

    def solve(self, rhs: np.ndarray, z: ComplexLike = 0.0) -> np.ndarray:
        """Solve (M - z) x = rhs with a banded LU factorisation."""
        n = self.dimension
        ab = np.zeros((3, n), dtype=complex)
        ab[0, 1:] = self.off_diagonal
        ab[1, :] = self.diagonal - complex(z)
        ab[2, :-1] = self.off_diagonal
        return solve_banded((1, 1), ab, np.asarray(rhs, dtype=complex))


def build_truncation(
    a: Union[RobinCoupling, ComplexLike],
    V: Optional[Potential],
    N: int,
) -> TridiagonalMatrix:
    """
    N x N top-left corner of J_a + V.

    Raises:
        SizeError: If N < 2
    """
    if N < 2:
        raise SizeError(f"truncation size must be >= 2, got {N}")
    a = as_coupling(a)
    diagonal = V.dense(N) if V is not None else np.zeros(N, dtype=complex)
    diagonal[0] += a.a
    return TridiagonalMatrix(diagonal, 1.0)


def duality_transform(M: TridiagonalMatrix) -> TridiagonalMatrix:
    """U M U* with U = diag(1, -1, 1, ...): diagonal kept, off-diagonals negated."""
    return TridiagonalMatrix(M.diagonal, -M.off_diagonal)


def difference_backward(psi: Iterable[ComplexLike]) -> np.ndarray:
    """(D psi)_n = psi_{n-1} - psi_n with psi_0 = 0; length len(psi) + 1."""
    psi = np.asarray(list(psi) if not isinstance(psi, np.ndarray) else psi, dtype=complex)
    padded = np.concatenate(([0j], psi, [0j]))
    return padded[:-1] - padded[1:]


def difference_forward(psi: Iterable[ComplexLike]) -> np.ndarray:
    """(D* psi)_n = psi_{n+1} - psi_n; length len(psi)."""
    psi = np.asarray(list(psi) if not isinstance(psi, np.ndarray) else psi, dtype=complex)
    extended = np.concatenate((psi, [0j]))
    return extended[1:] - extended[:-1]


def dirichlet_form(psi: Iterable[ComplexLike]) -> float:
    """Sum of |psi_{n-1} - psi_n|^2 over n >= 1, i.e. <psi, D*D psi>."""
    d = difference_backward(psi)
    return float(np.vdot(d, d).real)
