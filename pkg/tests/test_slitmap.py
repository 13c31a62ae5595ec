import math

import numpy as np
import pytest
from scipy import integrate, optimize

from hlcompete.errors import DomainError
from hlcompete.slitmap import (
    canonical_angle, capacity_from_slit_length, capacity_residual, gamma, gamma_rotated,
    gamma_taylor, gamma_tilde, slit_length_from_capacity, slit_lengths, slit_map,
    slit_map_rotated,
)


def bisect_slit_length(c):
    # oracle: solve the capacity relation directly, no closed form
    return optimize.bisect(lambda d: math.expm1(c) - d * d / (4.0 * (1.0 + d)), 1e-12, 1e3,
                           xtol=1e-300, rtol=4 * np.finfo(float).eps)


def naive_gamma(c, x):
    # the closed form evaluated literally; fine away from 0 and +-1 at moderate c
    t = math.tan(math.pi * x / 2.0)
    return 2.0 / math.pi * math.copysign(1.0, x) * math.atan(
        math.sqrt(math.exp(c) * t * t + math.exp(c) - 1.0))


def invert_boundary(c, x):
    # oracle for gamma_c(x): the angle y whose image under f_c sits at angle x
    def arg_err(y):
        return np.angle(slit_map(c, np.exp(1j * math.pi * y))) / math.pi - x
    return optimize.brentq(arg_err, 1e-12, 1.0 - 1e-12, xtol=1e-15)


@pytest.mark.parametrize("c", [1e-8, 1e-4, 1e-2, 0.3, 1.0, 5.0])
def test_slit_length_matches_bisection(c):
    d = slit_length_from_capacity(c)
    assert d == pytest.approx(bisect_slit_length(c), rel=1e-12)


def test_slit_length_reference_value():
    assert slit_length_from_capacity(0.01) == pytest.approx(0.22161, abs=5e-6)


def test_slit_length_small_c_asymptotics():
    c = 1e-10
    assert slit_length_from_capacity(c) / math.sqrt(c) == pytest.approx(2.0, rel=1e-4)


def test_capacity_roundtrip():
    for c in np.geomspace(1e-9, 3.0, 50):
        d = slit_length_from_capacity(c)
        assert capacity_from_slit_length(d) == pytest.approx(c, rel=1e-12)


def test_capacity_residual_vectorised():
    c = np.geomspace(1e-8, 1.0, 100_000)
    d = slit_lengths(c)
    assert np.all(np.abs(capacity_residual(c, d)) <= 1e-12 * np.exp(c))
    assert np.all(np.diff(d) > 0)


@pytest.mark.parametrize("bad", [0.0, -1.0, math.inf, math.nan])
def test_bad_capacity_raises(bad):
    with pytest.raises(DomainError):
        slit_length_from_capacity(bad)
    with pytest.raises(DomainError):
        gamma_tilde(bad, 0.3)


def test_canonical_angle_range():
    x = np.array([-3.0, -1.0, -0.5, 0.0, 1.0, 1.5, 3.0 - 1e-16, 7.25])
    y = canonical_angle(x)
    assert np.all((y >= -1.0) & (y < 1.0))
    assert np.allclose(np.mod(x - y, 2.0) % 2.0, 0.0, atol=1e-12)


def test_gamma_matches_naive_form_at_moderate_capacity():
    c = 0.1
    for x in np.linspace(0.05, 0.9, 30):
        assert gamma(c, x) == pytest.approx(naive_gamma(c, x), rel=1e-12)
        assert gamma(c, -x) == pytest.approx(-naive_gamma(c, x), rel=1e-12)


@pytest.mark.parametrize("c", [1e-4, 1e-2])
@pytest.mark.parametrize("x", [0.02, 0.3, 0.5, 0.9])
def test_gamma_inverts_slit_map(c, x):
    assert gamma(c, x) == pytest.approx(invert_boundary(c, x), abs=1e-11)


def test_gamma_tilde_odd_and_periodic():
    c = 1e-3
    x = np.linspace(0.001, 0.999, 500)
    assert np.allclose(gamma_tilde(c, -x), -gamma_tilde(c, x), atol=0, rtol=1e-14)
    assert np.allclose(gamma_tilde(c, x + 2.0), gamma_tilde(c, x), atol=1e-15)
    assert np.allclose(gamma_tilde(c, x - 4.0), gamma_tilde(c, x), atol=1e-15)


def test_gamma_right_continuous_at_zero():
    c = 1e-2
    assert gamma_tilde(c, 0.0) > 0.0
    assert gamma_tilde(c, 1e-15) == pytest.approx(gamma_tilde(c, 0.0), rel=1e-10)
    assert gamma_tilde(c, -1e-15) == pytest.approx(-gamma_tilde(c, 0.0), rel=1e-10)


def test_gamma_monotone_and_extends():
    c = 1e-2
    x = np.linspace(-3.0, 3.0, 20001)
    g = gamma(c, x)
    # the jump at the attachment point is upward too
    assert np.all(np.diff(g) >= 0.0)
    assert gamma(c, 1.3 + 2.0) == pytest.approx(gamma(c, 1.3) + 2.0, abs=1e-14)


def test_gamma_tilde_integrates_to_zero():
    # odd displacement on the circle: harmonic measure is preserved on average
    c = 1e-2
    val, _ = integrate.quad(lambda y: gamma_tilde(c, y), -1.0, 1.0,
                            points=[0.0], limit=200)
    assert abs(val) < 1e-12


def test_gamma_tilde_stable_near_odd_points():
    c = 1e-6
    x = 1.0 - np.geomspace(1e-14, 1e-3, 50)
    v = gamma_tilde(c, x)
    assert np.all(np.isfinite(v))
    assert np.all(v > 0.0)
    # displacement vanishes linearly at x = 1
    assert np.all(v <= 2.0 * c / math.pi * (1.0 - x) * 1.01 + 1e-300)


@pytest.mark.parametrize("c", [1e-6, 1e-8])
def test_gamma_taylor_regimes(c):
    split = math.sqrt(c) * math.log(1.0 / c)
    near = np.linspace(0.0, 0.5 * split, 20)
    far = np.linspace(4.0 * split, 0.9, 20)
    assert np.allclose(gamma(c, near), gamma_taylor(c, near), rtol=0, atol=10 * c)
    assert np.allclose(gamma(c, far), gamma_taylor(c, far), rtol=0, atol=5 * c)


def test_gamma_taylor_domain():
    with pytest.raises(DomainError):
        gamma_taylor(1e-3, 1.0)


def test_gamma_rotated_fixes_attachment_shift():
    c, th = 1e-2, 0.37
    x = np.linspace(-1, 1, 11)
    assert np.allclose(gamma_rotated(c, th, x), th + gamma(c, x - th))


def test_slit_map_tip_and_base():
    c = 1e-2
    d = slit_length_from_capacity(c)
    assert slit_map(c, 1.0) == pytest.approx(1.0 + d, rel=1e-14)
    assert abs(slit_map(c, -1.0) - (-1.0)) < 1e-15


def test_slit_map_at_infinity():
    c = 0.05
    for R in (1e5, 1e7):
        # f(z) = e^c z + O(1): the difference quotient removes the constant term
        slope = (slit_map(c, 2 * R) - slit_map(c, R)) / R
        assert abs(slope - math.exp(c)) < 1e-8
    assert np.isinf(slit_map(c, complex(math.inf, 0.0)))


def test_slit_map_outside_and_conjugation():
    rng = np.random.default_rng(0)
    z = (1.0 + rng.exponential(1.0, 2000)) * np.exp(2j * math.pi * rng.random(2000))
    w = slit_map(1e-2, z)
    assert np.all(np.abs(w) >= 1.0 - 1e-12)
    assert np.allclose(slit_map(1e-2, np.conj(z)), np.conj(w), atol=1e-14)


@pytest.mark.parametrize("c", [1e-2, 1e-4])
def test_boundary_correspondence(c):
    x = np.linspace(0.05, 1.95, 381)
    w = slit_map(c, np.exp(1j * math.pi * gamma(c, x)))
    assert np.max(np.abs(w - np.exp(1j * math.pi * x))) <= 1e-9


def test_slit_map_domain():
    with pytest.raises(DomainError):
        slit_map(1e-2, 0.5)


def test_slit_map_rotated():
    c, th = 1e-2, 0.25
    d = slit_length_from_capacity(c)
    tip = slit_map_rotated(c, th, np.exp(1j * math.pi * th))
    assert abs(tip - (1 + d) * np.exp(1j * math.pi * th)) < 1e-14
    z = np.array([2.0 + 1j, -3.0])
    assert np.allclose(slit_map_rotated(c, 0.0, z), slit_map(c, z))
