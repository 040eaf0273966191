import math

import mpmath
import pytest

from tools import special_functions as sf
from tools.errors import DegenerateParameterError, PoleError

mpmath.mp.dps = 40

RTOL = 1e-10


def _rel(ours: complex, reference) -> float:
    ref = complex(reference)
    return abs(ours - ref) / abs(ref)


def _series_phi(a: complex, c: complex, y: complex) -> complex:
    """Phi by a direct 40-digit power series, independent of the shipped kernel."""
    a, c, y = mpmath.mpc(a), mpmath.mpc(c), mpmath.mpc(y)
    term = mpmath.mpc(1)
    total = mpmath.mpc(1)
    n = 0
    while True:
        term *= (a + n) / (c + n) * y / (n + 1)
        total += term
        n += 1
        if n > 20 and abs(term) < mpmath.mpf(10) ** -35 * abs(total):
            return complex(total)


@pytest.mark.parametrize(
    "z",
    [0.5, 3.7, 10.0, complex(0.3, 4.0), complex(-2.5, 0.7), complex(1.0, -8.0), complex(0.5, 30.0), complex(-40.5, 1.0)],
)
def test_gamma_matches_mpmath(z):
    assert _rel(sf.gamma_complex(z), mpmath.gamma(z)) < RTOL


@pytest.mark.parametrize("z", [complex(0.25, 1.5), complex(-3.3, 2.0), complex(7.0, -0.4)])
def test_gamma_recurrence_and_reflection(z):
    assert _rel(sf.gamma_complex(z + 1), z * sf.gamma_complex(z)) < RTOL
    product = sf.gamma_complex(z) * sf.gamma_complex(1 - z)
    assert _rel(product, mpmath.pi / mpmath.sin(mpmath.pi * z)) < RTOL


@pytest.mark.parametrize("z", [0, -1, -3, complex(-7, 0)])
def test_gamma_poles_raise(z):
    with pytest.raises(PoleError):
        sf.gamma_complex(z)
    assert sf.rgamma_complex(z) == 0


def test_gamma_ratio_large_arguments():
    # Gamma(2a)/Gamma(a) at a = 60i overflows term by term only if done naively
    a = 60j
    ref = mpmath.gamma(2 * a) / mpmath.gamma(a)
    assert _rel(sf.gamma_ratio((2 * a,), (a,)), ref) < 1e-9


@pytest.mark.parametrize("p", [0.5, 4.0, 12.0])
@pytest.mark.parametrize("y", [0.1, 1.0, 7.5, 30.0])
def test_kummer_on_builder_path(p, y):
    a = 1j * p
    for aa, cc in ((a, 2 * a), (a + 1, 2 * a + 2), (1 - a, 2 - 2 * a), (-a, -2 * a)):
        assert _rel(sf.kummer(aa, cc, y), mpmath.hyp1f1(aa, cc, y)) < RTOL


@pytest.mark.parametrize("y", [0.5, 5.0, 25.0])
def test_kummer_matches_direct_series(y):
    a = complex(0.5, -2.0)
    assert _rel(sf.kummer(a, 2 * a, y), _series_phi(a, 2 * a, y)) < RTOL


def test_kummer_negative_argument_uses_transformed_series():
    a = complex(0.5, -3.0)
    assert _rel(sf.kummer(a, 2 * a, -20.0), mpmath.hyp1f1(a, 2 * a, -20.0)) < RTOL


def test_kummer_scaled_stays_finite_at_huge_y():
    a = 4j
    value = sf.kummer_scaled(a, 2 * a, 1500.0)
    assert math.isfinite(abs(value))
    ref = mpmath.hyp1f1(a, 2 * a, 1500) * mpmath.exp(-750)
    assert _rel(value, ref) < 1e-9


def test_kummer_seam_between_series_and_asymptotic():
    a = 4j
    y = 45.0
    series = sf.kummer_scaled(a, 2 * a, y, method="series")
    asymptotic = sf.kummer_scaled(a, 2 * a, y, method="asymptotic")
    assert abs(series - asymptotic) / abs(series) < 1e-8


def test_kummer_derivative_contiguous_relation():
    a, c, y = 2j, 4j, 3.0
    ref = mpmath.diff(lambda t: mpmath.hyp1f1(a, c, t), y)
    assert _rel(sf.kummer_derivative(a, c, y), ref) < 1e-9


@pytest.mark.parametrize("eps", [2.0, 5.0, 20.0])
@pytest.mark.parametrize("y", [0.5, 4.0, 20.0, 55.0])
def test_tricomi_matches_mpmath(eps, y):
    a = complex(0.5, -math.sqrt(eps - 1))
    assert _rel(sf.tricomi(a, 2 * a, y), mpmath.hyperu(a, 2 * a, y)) < RTOL


def test_connection_coefficients_reject_integer_c():
    with pytest.raises(DegenerateParameterError):
        sf.connection_coefficients(1.0, 2.0)


NU = complex(-0.5, -4.0)


@pytest.mark.parametrize("X", [0.1, 1.0, 5.0, 10.0, 30.0])
def test_besselj_and_neumann_on_imaginary_axis(X):
    x = 1j * X
    assert _rel(sf.besselj(NU, x), mpmath.besselj(NU, x)) < RTOL
    assert _rel(sf.besselj(-NU, x), mpmath.besselj(-NU, x)) < RTOL
    assert _rel(sf.neumann(NU, x), mpmath.bessely(NU, x)) < RTOL


@pytest.mark.parametrize("X", [0.5, 2.0, 30.0, 60.0])
def test_hankel_functions(X):
    x = 1j * X
    assert _rel(sf.hankel1(NU, x), mpmath.hankel1(NU, x)) < RTOL
    assert _rel(sf.hankel2(NU, x), mpmath.hankel2(NU, x)) < RTOL


def test_hankel_seam():
    x = 26j
    series = sf.hankel2(NU, x, method="series")
    asymptotic = sf.hankel2(NU, x, method="asymptotic")
    assert abs(series - asymptotic) / abs(asymptotic) < 1e-8


@pytest.mark.parametrize("kind", ["bessel", "hankel1", "hankel2", "neumann"])
def test_cylinder_derivative_directions_agree(kind):
    x = 3j
    up = sf.cylinder_derivative(kind, NU, x, direction="up")
    down = sf.cylinder_derivative(kind, NU, x, direction="down")
    assert abs(up - down) / abs(up) < 1e-10


def test_cylinder_second_derivative_satisfies_bessel_equation():
    x = 2.5j
    f = sf.besselj(NU, x)
    d1 = sf.cylinder_derivative("bessel", NU, x)
    d2 = sf.cylinder_derivative("bessel", NU, x, order=2)
    residual = x * x * d2 + x * d1 + (x * x - NU * NU) * f
    assert abs(residual) / abs(x * x * f) < 1e-10


def test_param_wrappers():
    kp = sf.KummerParams.paired(2j, 3.0)
    assert kp.c == 4j
    assert sf.kummer_phi(kp) == pytest.approx(sf.kummer(2j, 4j, 3.0), rel=1e-15)
    bp = sf.BesselParams(NU, 2j)
    assert sf.hankel_h1(bp) == pytest.approx(sf.hankel1(NU, 2j), rel=1e-15)
    assert sf.neumann_n(bp) == pytest.approx(sf.neumann(NU, 2j), rel=1e-15)


def test_configure_round_trip():
    before = sf.configure()
    try:
        after = sf.configure(kummer_switch_radius=50.0)
        assert after["kummer_switch_radius"] == 50.0
    finally:
        sf.configure(**before)
    assert sf.KUMMER_SWITCH_RADIUS == before["kummer_switch_radius"]
