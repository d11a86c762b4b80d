"""
Tests for the Green kernel, the enclosure function g_a and eigensolutions.
"""

import math

import numpy as np
import pytest

from robin_spectra.errors import DomainError, PoleError
from robin_spectra.lattice import GOLDEN_RATIO, SpectralPoint, build_truncation, inverse_joukowski
from robin_spectra.resolvent import (
    EigenSolution,
    GreenKernelEvaluator,
    g_a,
    g_a_upper_bound,
    g_m_theta,
    g_m_theta_max,
    gamma_a,
    gamma_a_brute_force,
    get_evaluator,
    green_entry,
    kernel_global_max,
    sup_attaining_sites,
    sup_series,
)


@pytest.mark.parametrize("a", [0, 0.5, 2, 1j * GOLDEN_RATIO])
def test_green_entry_matches_linear_solve(a):
    """Test closed-form entries against columns of (M - z)^-1 on N = 1000."""
    rng = np.random.default_rng(7)
    M = build_truncation(a, None, 1000)
    checked = 0
    while checked < 200:
        k = rng.uniform(0.3, 0.9) * np.exp(1j * rng.uniform(-np.pi, np.pi))
        if abs(1 - a * k) < 0.05 * max(1.0, abs(a)):
            continue
        m, n = (int(v) for v in rng.integers(1, 21, size=2))
        p = SpectralPoint.from_k(k)
        rhs = np.zeros(1000, dtype=complex)
        rhs[n - 1] = 1
        column = M.solve(rhs, p.z)
        value = green_entry(a, p, m, n)
        assert abs(value - column[m - 1]) <= 1e-8 * np.max(np.abs(column))
        checked += 1


def test_kernel_sign_fixed_once():
    """Test the calibrated sign and evaluator caching."""
    evaluator = GreenKernelEvaluator(0.5)
    assert evaluator.sign_convention in (1, -1)
    assert evaluator.sign_convention == -1
    assert get_evaluator(0.5) is get_evaluator(0.5 + 0j)


def test_green_matrix_symmetric():
    """Test G is complex symmetric and matrix() agrees with entry()."""
    evaluator = get_evaluator(0.3 + 0.2j)
    p = inverse_joukowski(0.4 + 1.1j)
    G = evaluator.matrix(p, 8)
    assert np.allclose(G, G.T)
    assert G[2, 5] == pytest.approx(evaluator.entry(p, 3, 6))
    sites = np.array([2, 7])
    assert np.allclose(evaluator.on_sites(p, sites), G[np.ix_(sites - 1, sites - 1)])


@pytest.mark.parametrize("a", [0, 0.5, -0.7, 2])
def test_conjugation_symmetry_for_real_coupling(a):
    """Test G(conj z) = conj G(z) and g_a(conj z) = g_a(z) for real a."""
    rng = np.random.default_rng(21)
    checked = 0
    while checked < 20:
        k = rng.uniform(0.2, 0.9) * np.exp(1j * rng.uniform(-np.pi, np.pi))
        if abs(1 - a * k) < 0.05 * max(1.0, abs(a)):
            continue
        m, n = (int(v) for v in rng.integers(1, 16, size=2))
        p, mirrored = SpectralPoint.from_k(k), SpectralPoint.from_k(np.conj(k))
        assert mirrored.z == pytest.approx(np.conj(p.z))
        expected = np.conj(green_entry(a, p, m, n))
        assert green_entry(a, mirrored, m, n) == pytest.approx(expected, rel=1e-12, abs=1e-14)
        assert g_a(mirrored, a) == pytest.approx(g_a(p, a), rel=1e-12)
        checked += 1


def test_green_entry_errors():
    """Test pole and domain errors."""
    with pytest.raises(PoleError):
        green_entry(2, 2.5, 1, 1)
    with pytest.raises(DomainError):
        green_entry(0, 1.0, 1, 1)
    with pytest.raises(DomainError):
        green_entry(0, 3.0, 0, 1)


def test_g_a_dirichlet_values():
    """Test g_0 at k = 0.5 (supremum is the limit 1) and k = 0.5i."""
    assert g_a(2.5, 0) == pytest.approx(1.0)
    p = SpectralPoint.from_k(0.5j)
    assert g_a(p, 0) == pytest.approx(1.25)
    assert sup_attaining_sites(p, 0) == [1]


def test_g_a_pole_and_band():
    """Test g_a is infinite at the pole and refuses band points."""
    assert math.isinf(g_a(2.5, 2))
    with pytest.raises(DomainError):
        g_a(0.5, 0)
    with pytest.raises(PoleError):
        sup_attaining_sites(2.5, 2)


@pytest.mark.parametrize("a", [0, 0.5, 1, -0.7, 2, 0.4 + 0.9j])
def test_gamma_a_equals_entrywise_sup(a):
    """Test gamma_a = sup |G_mn| = g_a / |sqrt(z^2 - 4)|."""
    for k in (0.6j, -0.5 + 0.3j, 0.7 * np.exp(2.2j)):
        p = SpectralPoint.from_k(k)
        exact = gamma_a(p, a)
        assert gamma_a_brute_force(p, a, 200) == pytest.approx(exact, rel=1e-9)
        assert g_a(p, a) <= g_a_upper_bound(p, a) + 1e-12


def test_sup_series_matches_direct_scan():
    """Test the vectorised supremum against a plain loop."""
    rng = np.random.default_rng(3)
    k = rng.uniform(0.2, 0.95, 50) * np.exp(1j * rng.uniform(-np.pi, np.pi, 50))
    kappa = rng.standard_normal(50) + 1j * rng.standard_normal(50)
    fast = sup_series(kappa, k)
    n = np.arange(1, 2000)
    for i in range(50):
        direct = max(1.0, float(np.max(np.abs(1 - kappa[i] * k[i] ** (2 * n - 1)))))
        assert fast[i] == pytest.approx(direct, rel=1e-12)


def test_sup_series_on_real_axis():
    """Test real k gives max(1, |1 - kappa k|), matching a loop and reaching |k| -> 1."""
    k = np.array([0.3, -0.6, 0.9, -0.95])
    kappa = np.array([0.5 - 0.3j, 2.0, -1.5, 0.2j])
    fast = sup_series(kappa, k)
    n = np.arange(1, 2000)
    for i in range(4):
        direct = max(1.0, float(np.max(np.abs(1 - kappa[i] * k[i] ** (2 * n - 1)))))
        assert fast[i] == pytest.approx(direct, rel=1e-12)
    edge = sup_series(np.array([0.4, 3.0]), np.array([1 - 1e-9, -(1 - 1e-9)]))
    assert edge[0] == pytest.approx(1.0)
    assert edge[1] == pytest.approx(4.0, rel=1e-8)


def test_eigensolution_of_super_unit_coupling():
    """Test u(k = 1/a) is an l2 eigenvector of J_a at z = a + 1/a."""
    u = EigenSolution(0.5, 2)
    assert u.z == pytest.approx(2.5)
    assert u.residual(60) < 1e-12
    assert u.value(1) == pytest.approx(-1.5)


def test_threshold_solutions():
    """Test u_n(+-1) = (+-1)^n (n -+ a(n-1)) solve the recursion at z = +-2."""
    a = 0.3
    for s in (1, -1):
        u = EigenSolution(s, a).values(6)
        M = build_truncation(a, None, 6).to_dense()
        r = M @ u - 2 * s * u
        assert np.allclose(r[:-1], 0)
    assert np.allclose(EigenSolution(1, a).values(4), [1, 1.7, 2.4, 3.1])


@pytest.mark.parametrize("a", [0.0, 0.3, 0.9])
def test_g_m_theta_maximum(a):
    """Test max over theta of g_m equals (m - a(m-1))/(1-a)."""
    for m in (1, 2, 5, 10, 25, 50):
        _, value = g_m_theta_max(a, m)
        assert abs(value - (m - a * (m - 1)) / (1 - a)) <= 1e-6


def test_g_m_theta_limits():
    """Test continuity at theta = 0 and pi."""
    a, m = 0.4, 3
    assert g_m_theta(1e-5, a, m) == pytest.approx(g_m_theta(0.0, a, m), rel=1e-6)
    assert g_m_theta(np.pi - 1e-5, a, m) == pytest.approx(g_m_theta(np.pi, a, m), rel=1e-6)
    with pytest.raises(DomainError):
        g_m_theta(0.1, 1.0, 2)


def test_kernel_global_bound():
    """Test |G_mn(z)| <= a/(1-a) + min(m, n) on the disk."""
    rng = np.random.default_rng(11)
    for a in (0.0, 0.3, 0.8):
        evaluator = get_evaluator(a)
        for _ in range(50):
            k = rng.uniform(0.05, 0.999) * np.exp(1j * rng.uniform(-np.pi, np.pi))
            m, n = (int(v) for v in rng.integers(1, 30, size=2))
            assert abs(evaluator.entry(SpectralPoint.from_k(k), m, n)) <= kernel_global_max(a, m, n) + 1e-9
