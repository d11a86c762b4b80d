"""
Tests for the K' kernel norms, the Hardy pointwise condition and stability verdicts.
"""

import math

import numpy as np
import pytest

from robin_spectra.errors import DivergentTail, DomainError, ParamError
from robin_spectra.hardy import HardyWeight, q_max
from robin_spectra.lattice import Potential, RobinCoupling, SpectralPoint, build_truncation
from robin_spectra.spectra import BirmanSchwingerMatrix, count_outside_band, truncation_spectrum
from robin_spectra.stability import (
    Evidence,
    KPrimeKernel,
    StabilityVerdict,
    VerdictLevel,
    form_subordination_min_eigenvalue,
    hardy_pointwise_condition,
    hardy_pointwise_constant,
    kprime_hs_bounds,
    kprime_hs_norm_sq,
    kprime_op_norm,
    reflected_coupling,
    verdict,
    weighted_l1_sum,
)


def _random_potential(rng, max_site=12):
    size = int(rng.integers(1, 6))
    sites = rng.choice(np.arange(1, max_site + 1), size=size, replace=False)
    values = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    values *= rng.uniform(0.01, 0.5) / np.sum(np.abs(values))
    return Potential({int(n): complex(v) for n, v in zip(sites, values)})


def test_reflected_coupling():
    """Test |a| for a in (-1, 1) and rejection elsewhere."""
    assert reflected_coupling(-0.4) == pytest.approx(0.4)
    for bad in (1.0, -1.0, 0.5j, 2):
        with pytest.raises(DomainError):
            reflected_coupling(bad)


def test_kernel_entries():
    """Test K'_mn = sqrt|v_m| (a/(1-a) + min(m, n)) sqrt|v_n|."""
    kernel = KPrimeKernel(0.5, Potential({1: 4.0, 3: -1j}))
    assert kernel.alpha == pytest.approx(1.0)
    assert kernel.entry(1, 3) == pytest.approx(2 * 2 * 1)
    assert kernel.entry(3, 3) == pytest.approx(4)
    assert kernel.entry(2, 3) == 0
    assert np.allclose(kernel.section(3), kernel.section(3).T)


def test_hs_norm_examples():
    """Test HS norms of one- and two-site potentials at a = 0."""
    omega = 0.7 - 0.2j
    assert kprime_hs_norm_sq(0, Potential.single_site(omega, 2)) == pytest.approx((2 * abs(omega)) ** 2)
    V = Potential({1: omega, 3: omega})
    assert kprime_hs_norm_sq(0, V) == pytest.approx(abs(omega) ** 2 * (1 + 1 + 1 + 9))
    lower, upper = kprime_hs_bounds(0.3, V)
    assert lower == upper


def test_hs_norm_matches_dense_section():
    """Test the O(K) formula against the Frobenius norm of the section."""
    rng = np.random.default_rng(21)
    for _ in range(20):
        V = _random_potential(rng, 30)
        a = rng.uniform(-0.9, 0.9)
        dense = KPrimeKernel(a, V).section(30)
        assert kprime_hs_norm_sq(a, V) == pytest.approx(np.sum(dense ** 2), rel=1e-12)


def test_hs_norm_with_tail():
    """Test certified HS bounds for a fast decaying tail."""
    V = Potential.with_tail({1: 0.1}, amplitude=0.2, exponent=6.0, start=1)
    lower, upper = kprime_hs_bounds(0.2, V)
    assert upper - lower <= 1e-8
    section = KPrimeKernel(0.2, V).section(3000)
    assert lower == pytest.approx(np.sum(section ** 2), rel=1e-6)


def test_hs_norm_slow_tail_diverges():
    """Test tails with too slow decay cannot be certified."""
    V = Potential.with_tail({}, amplitude=0.5 * 6 / math.pi ** 2, exponent=4.0, start=0)
    with pytest.raises(DivergentTail):
        kprime_hs_norm_sq(0, V)


def test_weighted_l1_sum():
    """Test the weighted sum on a single site and a tail with known total."""
    assert weighted_l1_sum(0, Potential.single_site(0.3j, 4)) == pytest.approx(16 * 0.3)
    V = Potential.with_tail({}, amplitude=0.5 * 6 / math.pi ** 2, exponent=4.0, start=0)
    assert weighted_l1_sum(0, V) == pytest.approx(0.5, rel=1e-12)


def test_op_norm_rank_one():
    """Test ||K'|| = |omega| (a/(1-a) + n) exactly for one-site potentials."""
    est = kprime_op_norm(0, Potential.single_site(0.3, 1))
    assert est.exact
    assert est.lower == est.upper == pytest.approx(0.3)
    for a in (0.0, 0.25, 0.8):
        for n in (1, 4, 9):
            est = kprime_op_norm(a, Potential.single_site(0.2 + 0.1j, n))
            assert est.upper == pytest.approx(abs(0.2 + 0.1j) * (a / (1 - a) + n))
    assert kprime_op_norm(0.5, Potential.zero()).upper == 0


def test_op_norm_matches_eigensolver():
    """Test the estimate encloses the largest eigenvalue of the dense section."""
    rng = np.random.default_rng(8)
    for _ in range(20):
        V = _random_potential(rng, 20)
        a = rng.uniform(0, 0.9)
        est = kprime_op_norm(a, V)
        top = np.linalg.eigvalsh(KPrimeKernel(a, V).section(20))[-1]
        assert est.lower <= top * (1 + 1e-9) + 1e-15
        assert est.upper >= top * (1 - 1e-12)
        assert est.upper - est.lower <= 1e-9 * max(1.0, top)


def test_op_norm_restricted_section():
    """Test a capped section still yields a certified upper estimate."""
    V = Potential({1: 0.1, 5: 0.2, 40: 0.01})
    full = kprime_op_norm(0.3, V)
    capped = kprime_op_norm(0.3, V, N=10)
    assert capped.size == 2
    assert capped.lower <= full.upper
    assert capped.upper >= full.lower


def test_op_norm_with_tail():
    """Test tails give lower <= upper with a small complement."""
    V = Potential.with_tail({1: 0.2}, amplitude=0.1, exponent=5.0, start=1)
    est = kprime_op_norm(0.1, V)
    assert not est.exact
    assert est.lower <= est.upper
    assert est.upper - est.lower < 1e-3


def test_implication_chain():
    """Test ||K'|| <= ||K'||_HS <= weighted l1 sum on random samples."""
    rng = np.random.default_rng(30)
    for _ in range(100):
        V = _random_potential(rng)
        a = rng.uniform(-0.9, 0.9)
        weighted = weighted_l1_sum(a, V)
        hs = math.sqrt(kprime_hs_norm_sq(a, V))
        op = kprime_op_norm(a, V).upper
        assert hs <= weighted * (1 + 1e-12)
        assert op <= hs * (1 + 1e-9)


def test_kernel_dominates_birman_schwinger():
    """Test |K(z)_mn| <= K'_mn on sampled spectral parameters."""
    rng = np.random.default_rng(13)
    a = 0.4
    V = Potential({1: 0.3 + 0.1j, 2: -0.2, 5: 0.05j})
    bound = KPrimeKernel(a, V).on_sites(np.array([1, 2, 5]))
    for _ in range(100):
        k = rng.uniform(0.05, 0.99) * np.exp(1j * rng.uniform(-np.pi, np.pi))
        K = BirmanSchwingerMatrix(SpectralPoint.from_k(k), RobinCoupling(a), V, 5).matrix()
        assert np.all(np.abs(K) <= bound + 1e-10)


def test_hardy_pointwise_condition():
    """Test |v_n| <= c w_n for the optimal weight."""
    w = HardyWeight.optimal().values(1000)
    V = Potential.from_array(0.9 * w)
    assert hardy_pointwise_condition(0, V, 0.5, 0.9)
    assert not hardy_pointwise_condition(0, V, 0.5, 0.89)
    big = Potential.single_site(0.6, 1)
    assert not hardy_pointwise_condition(0, big, 0.5, 1.0)
    with pytest.raises(ParamError):
        hardy_pointwise_condition(0.9, big, 0.2, 1.0)


def test_hardy_pointwise_constant_with_tail():
    """Test tail handling: n^-2 decay gives a finite constant, slower decay none."""
    V = Potential.with_tail({}, amplitude=0.01, exponent=2.0, start=0)
    assert hardy_pointwise_constant(0, V, 0.5) == 0.01 / 0.25
    offset = Potential.with_tail({1: 0.5}, amplitude=0.01, exponent=2.0, start=1)
    assert hardy_pointwise_constant(0, offset, 0.5) == pytest.approx(0.5 / (2 - math.sqrt(2)))
    assert hardy_pointwise_constant(0, offset, 0.3) == pytest.approx(max(0.5 / (2 - 2 ** 0.3), 0.01 / 0.21))
    slow = Potential.with_tail({}, amplitude=0.01, exponent=1.5, start=0)
    assert hardy_pointwise_constant(0, slow, 0.5) == math.inf


def test_hardy_pointwise_zero_weight_site():
    """Test a potential on a site where the Robin weight vanishes is never dominated."""
    a = 0.9
    V = Potential.single_site(1e-6, 1)
    value = HardyWeight.robin(q_max(a), a)(1)
    if value <= 0:
        assert hardy_pointwise_constant(a, V) == math.inf
    else:
        assert hardy_pointwise_constant(a, V) == pytest.approx(1e-6 / value)


@pytest.mark.parametrize(
    "strength,level",
    [
        (0.3, VerdictLevel.PURELY_CONTINUOUS),
        (1.0, VerdictLevel.NO_DISCRETE_SPECTRUM),
        (1.5, VerdictLevel.INCONCLUSIVE),
    ],
)
def test_verdict_levels(strength, level):
    """Test verdicts for V = s P_1 at a = 0, i.e. J_s."""
    result = verdict(0, Potential.single_site(strength, 1))
    assert result.level is level
    conditions = [e.condition for e in result.evidence]
    assert conditions == ["weighted_l1", "hilbert_schmidt", "operator_norm", "hardy_pointwise"]
    op = next(e for e in result.evidence if e.condition == "operator_norm")
    assert op.value == pytest.approx(strength)


def test_inconclusive_case_has_eigenvalue():
    """Test J_1.5 has the eigenvalue 1.5 + 1/1.5 outside the band."""
    _, distance = truncation_spectrum(0, Potential.single_site(1.5, 1), 400).nearest(1.5 + 1 / 1.5)
    assert distance < 1e-8


def test_purely_continuous_has_no_outside_eigenvalues():
    """Test PurelyContinuous verdicts leave no eigenvalue away from the band."""
    rng = np.random.default_rng(2)
    checked = 0
    while checked < 10:
        V = _random_potential(rng, 6)
        a = rng.uniform(-0.5, 0.5)
        if verdict(a, V).level is not VerdictLevel.PURELY_CONTINUOUS:
            continue
        assert count_outside_band(build_truncation(a, V, 300), 0.05) == 0
        checked += 1


def test_verdict_negative_coupling_uses_reflection():
    """Test a and -a share the same evidence values."""
    V = Potential({1: 0.1, 3: 0.05j})
    left = verdict(-0.4, V)
    right = verdict(0.4, V)
    assert [e.value for e in left.evidence] == pytest.approx([e.value for e in right.evidence])
    assert left.a == -0.4


def test_verdict_with_slow_tail():
    """Test an uncertifiable HS tail is reported as inf while the weighted sum fires."""
    V = Potential.with_tail({}, amplitude=0.5 * 6 / math.pi ** 2, exponent=4.0, start=0)
    result = verdict(0, V)
    assert result.level is VerdictLevel.PURELY_CONTINUOUS
    hs = next(e for e in result.evidence if e.condition == "hilbert_schmidt")
    assert hs.value == math.inf
    assert "weighted_l1" in [e.condition for e in result.fired]


def test_unit_operator_norm_gives_no_discrete_spectrum():
    """Test a two-site K' with norm exactly 1 keeps the weak verdict."""
    # K' = [[1/2, sqrt(1/8)], [sqrt(1/8), 3/4]] has eigenvalues 1 and 1/4
    V = Potential({1: 0.5, 3: -0.25})
    estimate = kprime_op_norm(0, V)
    assert estimate.upper == pytest.approx(1.0, abs=1e-12)
    assert estimate.rounding == pytest.approx(1e-12)
    result = verdict(0, V)
    assert result.level is VerdictLevel.NO_DISCRETE_SPECTRUM
    assert [e.condition for e in result.fired] == ["operator_norm"]
    assert Evidence("x", 1 + 5e-13, tolerance=1e-12).weak
    assert not Evidence("x", 1 - 5e-13, tolerance=1e-12).strict


def test_verdict_serialisation():
    """Test the JSON layout {a, level, evidence: [{condition, value, threshold}]}."""
    data = verdict(0, Potential.single_site(0.3, 1)).to_dict()
    assert data["level"] == "PurelyContinuous"
    assert set(data["evidence"][0]) >= {"condition", "value", "threshold"}
    assert Evidence("x", 1.0).weak and not Evidence("x", 1.0).strict
    empty = StabilityVerdict(0.0, VerdictLevel.INCONCLUSIVE, [Evidence("x", 2.0)])
    assert empty.fired == []
    assert "Inconclusive" in repr(empty)


@pytest.mark.parametrize("a", [0.0, 0.6, -0.4])
def test_form_subordination(a):
    """Test |V| <= c(2 - J_a) once c exceeds ||K'||, and failure well below it."""
    rng = np.random.default_rng(40)
    for _ in range(10):
        V = _random_potential(rng, 10)
        norm = kprime_op_norm(a, V).upper
        assert form_subordination_min_eigenvalue(a, V, norm * (1 + 1e-6)) >= -1e-6
    V = Potential.single_site(0.3, 1)
    assert form_subordination_min_eigenvalue(a, V, 0.5 * kprime_op_norm(a, V).upper) < 0
