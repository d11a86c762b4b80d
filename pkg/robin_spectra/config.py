"""
Run configuration and argument parsing helpers.

Every tolerance the command line can override lives on RunConfig with its
documented default; library functions keep the same defaults as keyword
arguments, so RunConfig() reproduces an unconfigured library call.
"""

import os
from dataclasses import dataclass, field
from typing import List, Optional

from .errors import InputError

THREADS_ENV = "ROBIN_SPECTRA_THREADS"


@dataclass
class RunConfig:
    # Coupling and budgets
    a: complex = 0j
    Q: List[float] = field(default_factory=lambda: [0.5, 1.0, 2.0])
    q: float = 0.5
    c: float = 1.0

    # Enclosure sweep
    grid: int = 800                 # polar grid resolution per axis
    delta: float = 1e-3             # distance kept from the unit circle
    cutoff: float = 1e-14           # tail cutoff of the supremum series
    witness_tol: float = 1e-8       # boundary tolerance for optimality witnesses

    # Truncations
    N: int = 400                    # eigenvalue truncation size
    section_cap: int = 4000         # largest dense K' section
    tail_hs_target: float = 1e-8    # certified tail budget for K'
    power_tol: float = 1e-10        # power-iteration relative tolerance

    # Plumbing
    seed: int = 0
    threads: Optional[int] = None
    potential_path: Optional[str] = None
    out_dir: str = "."


def _split_imaginary(body: str):
    """Split "re+im" at the last sign that is not an exponent sign."""
    for idx in range(len(body) - 1, 0, -1):
        if body[idx] in "+-" and body[idx - 1] not in "eE":
            return body[:idx], body[idx:]
    return "", body


def parse_complex(text: str) -> complex:
    """
    Parse "re", "re+imi", "imi", "i" or the Python "j" form, independent of locale.

    Raises:
        InputError: If the text is not a complex literal
    """
    if not isinstance(text, str):
        raise InputError(f"complex value must be a string, got {text!r}")
    s = text.strip().replace(" ", "")
    try:
        if s[-1:] in ("i", "j", "I", "J"):
            real, imag = _split_imaginary(s[:-1])
            imag = {"": "1", "+": "1", "-": "-1"}.get(imag, imag)
            return complex(float(real) if real else 0.0, float(imag))
        return complex(float(s), 0.0)
    except ValueError:
        raise InputError(
            f"cannot parse complex number {text!r}\n"
            f"Use the form re+imi, e.g. 0+1.618i, -2-0.5i, 1.5 or i."
        ) from None


def parse_float_list(text: str) -> List[float]:
    """Comma-separated floats, e.g. "0.5,1,2"."""
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise InputError(f"cannot parse number list {text!r}: {exc}") from exc
    if not values:
        raise InputError(f"empty number list {text!r}")
    return values


def resolve_threads(requested: Optional[int] = None) -> int:
    """
    Worker count: explicit request, else ROBIN_SPECTRA_THREADS, else the CPU count.

    Raises:
        InputError: If the request or the environment value is not a positive integer
    """
    if requested is not None:
        if requested < 1:
            raise InputError(f"thread count must be >= 1, got {requested}")
        return int(requested)
    raw = os.environ.get(THREADS_ENV)
    if raw is not None and raw.strip():
        try:
            value = int(raw)
        except ValueError:
            raise InputError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
        if value < 1:
            raise InputError(f"{THREADS_ENV} must be >= 1, got {value}")
        return value
    return max(1, os.cpu_count() or 1)
