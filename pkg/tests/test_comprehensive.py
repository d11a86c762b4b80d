"""
Comprehensive test suite for robin_spectra.

Tests:
- Documented point values across all modules
- Eigenvalues of J_a for super-unit couplings
- Enclosure soundness on random potentials
- Hardy identity, weight dominance and certificate decay
- Preset figure regeneration
"""

import math

import numpy as np
import pytest

from robin_spectra import (
    HardyWeight,
    Potential,
    g_a,
    gamma_a,
    green_entry,
    inverse_joukowski,
    joukowski,
    q_max,
    rank_one_eigenvalues_exact,
    truncation_spectrum,
    verdict,
    weight,
)
from robin_spectra.enclosure import enclosure_indicator
from robin_spectra.figures import FIGURE_PRESETS, render_presets
from robin_spectra.hardy import GeneratorSequence, identity_residual, optimality_certificate
from robin_spectra.lattice import GOLDEN_RATIO, build_truncation
from robin_spectra.resolvent import kernel_global_max
from robin_spectra.spectra import stable_eigenvalues


# (function, arguments, expected value)
KNOWN_VALUES = [
    (joukowski, (0.5,), 2.5),
    (joukowski, (0.5j,), -1.5j),
    (joukowski, (np.exp(1j * np.pi / 3),), 1.0),
    (lambda z: inverse_joukowski(z).k, (2.5,), 0.5),
    (lambda z: inverse_joukowski(z).k, (2,), 1.0),
    (green_entry, (0, 2.5, 1, 1), -0.5),
    (g_a, (2.5, 0), 1.0),
    (gamma_a, (2.5, 0), 2 / 3),
    (kernel_global_max, (0, 3, 7), 3.0),
    (kernel_global_max, (0.5, 1, 1), 2.0),
    (q_max, (0,), 0.5),
    (q_max, (0.9,), math.log2(1.1)),
    (weight, (HardyWeight.optimal(), 1), 2 - math.sqrt(2)),
    (weight, (HardyWeight.optimal(), 2), 2 - math.sqrt(0.5) - math.sqrt(1.5)),
    (weight, (HardyWeight.robin(0.3, 0.4), 1), 2 - 2 ** 0.3 - 0.4),
]


@pytest.mark.parametrize("func,args,expected", KNOWN_VALUES)
def test_known_values(func, args, expected):
    """Test documented point values."""
    assert func(*args) == pytest.approx(expected, abs=1e-12)


def test_green_entry_off_diagonal_matches_solve():
    """Test G_13(2.5) for a = 0 against a direct solve."""
    rhs = np.zeros(2000, dtype=complex)
    rhs[2] = 1
    column = build_truncation(0, None, 2000).solve(rhs, 2.5)
    assert green_entry(0, 2.5, 1, 3) == pytest.approx(column[0], abs=1e-10)


@pytest.mark.parametrize("a,eigenvalue", [(2, 2.5), (1j * GOLDEN_RATIO, 1j)])
def test_eigenvalue_of_super_unit_coupling(a, eigenvalue):
    """Test N = 400 sections of J_a contain a + 1/a and nothing else off the band."""
    report = truncation_spectrum(a, None, 400)
    _, distance = report.nearest(eigenvalue)
    assert distance < 1e-6
    outside = report.outside_band(0.05)
    assert outside.size == 1
    assert abs(outside[0] - eigenvalue) < 1e-6


@pytest.mark.parametrize("a", [0, 0.5, 1])
def test_enclosure_soundness(a):
    """Test stable truncation eigenvalues of 50 random potentials satisfy F <= 0.02."""
    rng = np.random.default_rng(100 + int(10 * a))
    for Q in (0.5, 1.0, 2.0):
        for _ in range(17):
            size = int(rng.integers(1, 6))
            sites = rng.choice(np.arange(1, 16), size=size, replace=False)
            values = rng.standard_normal(size) + 1j * rng.standard_normal(size)
            values *= Q / np.sum(np.abs(values))
            V = Potential({int(n): complex(v) for n, v in zip(sites, values)})
            for z in stable_eigenvalues(a, V, 200, margin=0.05):
                assert enclosure_indicator(z, a, Q) <= 0.02


@pytest.mark.parametrize("q", [0.1, 0.3, 0.5])
def test_hardy_identity(q):
    """Test the generalized Hardy identity on 100 random sequences."""
    rng = np.random.default_rng(int(q * 10))
    g = GeneratorSequence.power(q)
    for _ in range(100):
        L = int(rng.integers(1, 51))
        u = rng.standard_normal(L) + 1j * rng.standard_normal(L)
        scale = max(1.0, float(np.sum(np.abs(u) ** 2)))
        assert identity_residual(u, g) <= 1e-12 * scale


def test_weight_dominance():
    """Test w(1/2) > 1/(4n^2), w(q) < w(1/2) for n >= 2 and w_1(q) > w_1(1/2)."""
    n = np.arange(1, 100_001, dtype=float)
    optimal = HardyWeight.optimal().values(100_000)
    assert np.all(optimal > 1 / (4 * n * n))
    for q in (0.1, 0.3):
        w = HardyWeight.power(q).values(100_000)
        assert np.all(w[1:] < optimal[1:])
        assert w[0] > optimal[0]


def test_certificate_decay():
    """Test S(N) <= 4/log N and decreasing for N = 10^2, 10^3, 10^4."""
    values = [optimality_certificate(0.5, N, threads=4) for N in (100, 1000, 10_000)]
    for N, S in zip((100, 1000, 10_000), values):
        assert S <= 4 / math.log(N)
    assert values[0] > values[1] > values[2]


def test_verdict_examples():
    """Test the three documented verdicts for V = s P_1 at a = 0."""
    assert verdict(0, Potential.single_site(0.3, 1)).level.value == "PurelyContinuous"
    assert verdict(0, Potential.single_site(1.0, 1)).level.value == "NoDiscreteSpectrum"
    assert verdict(0, Potential.single_site(1.5, 1)).level.value == "Inconclusive"
    assert truncation_spectrum(0, Potential.single_site(0.3, 1), 500).outside_band(0.05).size == 0
    _, distance = truncation_spectrum(0, Potential.single_site(1.5, 1), 500).nearest(1.5 + 2 / 3)
    assert distance < 1e-6


def test_rank_one_identification():
    """Test J_0 + omega P_1 = J_omega for a sample of |omega| > 1."""
    for omega in (2j, -1.5, 1.2 + 0.9j):
        found = rank_one_eigenvalues_exact(0, omega, 1)
        assert len(found) == 1
        assert found[0] == pytest.approx(omega + 1 / omega)


def test_figures_regenerate(tmp_path):
    """Test all presets: curves for every budget, conjugation symmetry, red dots."""
    results = render_presets(tmp_path, grid_n=160, threads=2)
    assert [r.name for r in results] == list(FIGURE_PRESETS)
    for result in results:
        assert result.svg_path.exists()
        assert set(result.curve_counts) == {0.5, 1.0, 2.0}
        assert all(count >= 1 for count in result.curve_counts.values())
        assert result.has_pole_dot == (abs(result.a) > 1)
        if result.a.imag == 0:
            assert result.conjugation_error < 1e-9
