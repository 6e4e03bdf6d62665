import importlib
import math
from concurrent.futures import ThreadPoolExecutor

import mpmath as mp
import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy import integrate
from scipy.special import gamma

from fracdiff.errors import DomainError, MLOverflowError, OrderingError
from fracdiff.mittag_leffler import (
    MLParams,
    decay_bound_constant,
    k_kernel,
    k_segment,
    kernel_antiderivatives,
    ml,
    mittag_leffler,
    relaxation,
)

mlmod = importlib.import_module("fracdiff.mittag_leffler")

from conftest import ml_laplace_mp, ml_series_mp


def rel(a, b):
    return abs(a - b) / abs(b)


# ---------------------------------------------------------------- examples


def test_alpha_one_is_exp():
    assert ml(MLParams(1.0, 1.0), -1.0) == pytest.approx(0.36787944117144233, rel=1e-15)


def test_zero_argument():
    assert ml(MLParams(0.5, 1.0), 0.0) == 1.0


def test_erfc_identity_at_minus_one():
    assert ml(MLParams(0.5, 1.0), -1.0) == pytest.approx(0.4275835761558070, rel=1e-14)


@pytest.mark.parametrize("x", np.geomspace(0.1, 50, 12))
def test_erfc_identity(x):
    with mp.workdps(40):
        ref = float(mp.exp(mp.mpf(x) ** 2) * mp.erfc(mp.mpf(x)))
    assert rel(ml(MLParams(0.5, 1.0), -x), ref) < 1e-12


# ---------------------------------------------------------------- accuracy


ORDERS = [(0.1, 1.0), (0.3, 1.0), (0.5, 0.5), (0.5, 1.0), (0.7, 1.7), (0.8, 0.8), (0.95, 1.0), (1.0, 0.5), (1.0, 2.0)]


@pytest.mark.parametrize("alpha,beta", ORDERS)
@pytest.mark.parametrize("z", [-10.0, -7.3, -4.0, -1.5, -0.2, 0.3, 2.0, 6.5, 10.0])
def test_series_oracle(alpha, beta, z):
    peak = abs(z) ** (1 / alpha)
    if z > 0 and peak > 700:
        with pytest.raises(MLOverflowError):
            ml(MLParams(alpha, beta), z)
        return
    # the series oracle needs ~peak/2.3 extra digits; beyond that use the inversion oracle
    ref = float(ml_series_mp(alpha, beta, z) if peak <= 400 or z > 0 else ml_laplace_mp(alpha, beta, z))
    assert rel(ml(MLParams(alpha, beta), z), ref) < 1e-12


@pytest.mark.parametrize("alpha,beta", ORDERS)
@pytest.mark.parametrize("z", [-12.0, -16.0, -40.0, -300.0, -5e3, -1e6])
def test_far_field_oracle(alpha, beta, z):
    ref = float(ml_laplace_mp(alpha, beta, z))
    assert rel(ml(MLParams(alpha, beta), z), ref) < 1e-12


def test_oracles_agree():
    for alpha, beta, z in [(0.3, 1.0, -3.0), (0.8, 0.8, -20.0), (0.9, 1.9, -40.0)]:
        a, b = ml_series_mp(alpha, beta, z), ml_laplace_mp(alpha, beta, z)
        assert float(abs(a - b) / abs(b)) < 1e-25


@pytest.mark.parametrize("z", [-1e6, -1e3, -30.0, -1.0, 0.0, 3.0, 10.0])
def test_exp_branch(z):
    assert ml(MLParams(1.0, 1.0), z) == pytest.approx(math.exp(z), rel=1e-12, abs=0.0)


def test_array_matches_scalar():
    z = np.linspace(-60, 5, 57).reshape(3, 19)
    arr = ml(MLParams(0.6, 1.0), z)
    assert arr.shape == z.shape
    assert np.array_equal(arr.ravel(), [ml(MLParams(0.6, 1.0), v) for v in z.ravel()])


@settings(max_examples=60, deadline=None)
@given(
    alpha=st.floats(0.15, 1.0),
    beta=st.floats(0.2, 2.5),
    z=st.floats(-200.0, 8.0),
)
def test_recurrence(alpha, beta, z):
    # E_{a,b}(z) = 1/Gamma(b) + z E_{a,a+b}(z)
    assume(z <= 0 or z ** (1 / alpha) < 600)
    lhs = ml(MLParams(alpha, beta), z)
    rhs = 1.0 / gamma(beta) + z * ml(MLParams(alpha, alpha + beta), z)
    scale = max(abs(lhs), 1.0 / gamma(beta), abs(z * ml(MLParams(alpha, alpha + beta), z)))
    assert abs(lhs - rhs) <= 1e-11 * scale


# ---------------------------------------------------------------- branches


@pytest.mark.parametrize("alpha,beta", ORDERS)
def test_series_and_integral_agree_in_band(alpha, beta):
    if alpha == 1.0:
        pytest.skip("alpha = 1 uses its own integral")
    # |z|**(1/alpha) straddling the growth cap where the evaluator switches
    s_vals = np.linspace(0.25, 2.0, 9) * mlmod.SERIES_GROWTH_CAP
    z = -np.minimum(s_vals**alpha, mlmod.SERIES_RADIUS)
    s = mlmod._series(alpha, beta, z)
    i = mlmod._band(alpha, beta, z)
    assert np.max(np.abs(s - i) / np.abs(i)) < 1e-10


@pytest.mark.parametrize("alpha,beta", ORDERS)
def test_asymptotic_and_integral_agree_at_switch(alpha, beta):
    if alpha == 1.0:
        pytest.skip("alpha = 1 uses its own integral")
    z = np.linspace(-40.0, mlmod.ASYMPTOTIC_THRESHOLD, 7)
    val, err = mlmod._asymptotic(alpha, beta, z)
    ok = err <= 1e-12 * np.abs(val)
    if not np.any(ok):
        pytest.skip("expansion not converged in this band for these orders")
    i = mlmod._band(alpha, beta, z[ok])
    assert np.max(np.abs(val[ok] - i) / np.abs(i)) < 1e-10


# ---------------------------------------------------------------- errors


@pytest.mark.parametrize("alpha,beta", [(0.0, 1.0), (1.2, 1.0), (0.5, 0.0), (0.5, -1.0), (float("nan"), 1.0)])
def test_bad_params(alpha, beta):
    with pytest.raises(DomainError):
        MLParams(alpha, beta)


def test_overflow_and_nonfinite():
    with pytest.raises(MLOverflowError):
        ml(MLParams(0.5, 1.0), 51.0)
    with pytest.raises(DomainError):
        ml(MLParams(0.5, 1.0), float("nan"))
    with pytest.raises(DomainError):
        ml(0.5, 1.0)


def test_convenience_wrapper():
    assert mittag_leffler(-2.0, 0.5) == ml(MLParams(0.5, 1.0), -2.0)


# ---------------------------------------------------------------- relaxation and kernels


def test_relaxation_examples():
    assert relaxation(0.4, 3.0, 0.0) == 1.0
    assert relaxation(1.0, 2.0, 1.0) == pytest.approx(0.1353352832366127, rel=1e-14)
    assert relaxation(0.5, 1.0, 4.0) == pytest.approx(0.25539567631050574, rel=1e-13)


@pytest.mark.parametrize("bad", [(-1.0, 1.0), (1.0, -1.0)])
def test_relaxation_domain(bad):
    with pytest.raises(DomainError):
        relaxation(0.5, *bad)


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.8])
@pytest.mark.parametrize("lam", [0.1, 1.0, 10.0])
def test_relaxation_completely_monotone_samples(alpha, lam):
    y = relaxation(alpha, lam, np.linspace(0, 10, 1000))
    assert np.all(y > 0) and np.all(y <= 1)
    assert np.all(np.diff(y) <= 0)


def test_k_kernel_examples():
    t = np.array([0.1, 0.7, 2.0])
    assert np.allclose(k_kernel(1.0, 1.5, t), np.exp(-1.5 * t), rtol=1e-14)
    assert np.allclose(k_kernel(0.3, 0.0, t), t ** (-0.7) / gamma(0.3), rtol=1e-14)
    # 1/sqrt(pi) - e erfc(1)
    assert k_kernel(0.5, 1.0, 1.0) == pytest.approx(0.13660600739194928, rel=1e-14)
    with pytest.raises(DomainError):
        k_kernel(0.5, 1.0, 0.0)


def test_k_kernel_nonnegative():
    t = np.geomspace(1e-8, 1e3, 300)
    for alpha in (0.2, 0.5, 0.9):
        for lam in (0.0, 1.0, 1e4):
            assert np.all(k_kernel(alpha, lam, t) >= 0)


def test_k_segment_examples():
    alpha, lam, T = 0.6, 3.0, 2.0
    w = k_segment(alpha, lam, 0.0, T).value
    assert w == pytest.approx((1 - relaxation(alpha, lam, T)) / lam, rel=1e-13)
    assert lam * w <= 1.0
    assert k_segment(alpha, lam, 0.4, 0.4).value == 0.0
    assert k_segment(0.5, 0.0, 0.0, 1.0).value == pytest.approx(1.1283791670955126, rel=1e-14)
    with pytest.raises(OrderingError):
        k_segment(0.5, 1.0, 1.0, 0.5)


def test_k_segment_lambda_zero_by_quadrature():
    val, _ = integrate.quad(lambda s: 1.0 / gamma(0.5), 0, 1, weight="alg", wvar=(-0.5, 0))
    assert k_segment(0.5, 0.0, 0.0, 1.0).value == pytest.approx(val, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(
    alpha=st.floats(0.1, 1.0),
    lam=st.floats(0.0, 1e3),
    cuts=st.lists(st.floats(0.0, 5.0), min_size=3, max_size=3),
)
def test_k_segment_additive(alpha, lam, cuts):
    a, b, c = sorted(cuts)
    lhs = k_segment(alpha, lam, a, b).value + k_segment(alpha, lam, b, c).value
    rhs = k_segment(alpha, lam, a, c).value
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs))
    assert rhs >= 0


def test_k_segment_against_quadrature():
    rng = np.random.default_rng(3)
    for _ in range(10):
        alpha, lam = rng.uniform(0.2, 0.95), 10 ** rng.uniform(-1, 2)
        lo = rng.uniform(0, 1)
        hi = lo + rng.uniform(0.01, 1)
        if lo == 0 or rng.random() < 0.3:
            # singular end: integrate (s**(alpha-1)) * E_{a,a}(-lam s**a) with an algebraic weight
            val, _ = integrate.quad(
                lambda s: ml(MLParams(alpha, alpha), -lam * s**alpha), 0, hi, weight="alg", wvar=(alpha - 1, 0),
                epsabs=1e-14, epsrel=1e-13, limit=200,
            )
            lo = 0.0
        else:
            val, _ = integrate.quad(lambda s: k_kernel(alpha, lam, s), lo, hi, epsabs=1e-14, epsrel=1e-13, limit=200)
        assert k_segment(alpha, lam, lo, hi).value == pytest.approx(val, rel=1e-9, abs=1e-12)


def test_antiderivatives_differentiate_to_kernel():
    alpha, lam = 0.45, 2.5
    x = np.linspace(0.2, 3.0, 15)
    h = 1e-5
    p1p, p2p = kernel_antiderivatives(alpha, lam, x + h)
    p1m, p2m = kernel_antiderivatives(alpha, lam, x - h)
    p1, _ = kernel_antiderivatives(alpha, lam, x)
    assert np.allclose((p1p - p1m) / (2 * h), k_kernel(alpha, lam, x), rtol=1e-8)
    assert np.allclose((p2p - p2m) / (2 * h), p1, rtol=1e-8)


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.8])
def test_decay_bound_fit_then_verify(alpha):
    lams = np.geomspace(1e-2, 1e4, 25)
    C = decay_bound_constant(alpha, lams, np.linspace(0, 10, 200))
    assert 1.0 <= C < 10.0
    # verify on a different sample set (with a small allowance for unsampled peaks)
    other = np.geomspace(3e-3, 3e4, 31)
    C2 = decay_bound_constant(alpha, other, np.geomspace(1e-4, 20, 333))
    assert C2 <= 1.05 * C


def test_thread_safe():
    z = -np.geomspace(1e-3, 1e5, 400)
    serial = [ml(MLParams(0.35, 0.35), v) for v in z]
    with ThreadPoolExecutor(8) as pool:
        par = list(pool.map(lambda v: ml(MLParams(0.35, 0.35), v), z))
    assert serial == par
