"""
Complex special functions for the closed-form wave solutions.

Gamma (Lanczos g=7, reflected for Re z < 1/2), Kummer Phi, Tricomi Psi and
the cylinder functions J, H1, H2, N of complex order. Everything works on
plain Python complex numbers in binary64; callers vectorize over grids.

Branch convention: principal logarithm for every complex power.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from tools.errors import ConvergenceError, DegenerateParameterError, PoleError
from tools.log_context import slog

# ---------------------------------------------------------------------------
# Kernel constants
# ---------------------------------------------------------------------------
SERIES_RTOL = 1e-16
SERIES_QUIET_TERMS = 3
SERIES_MAX_TERMS = 10_000
ASYMPTOTIC_RTOL = 1e-15
KUMMER_SWITCH_RADIUS = 40.0
BESSEL_SWITCH_RADIUS = 25.0
POLE_TOL = 1e-12
# above this |y| the Psi connection formula cancels e^y against e^y
TRICOMI_CONNECTION_RADIUS = 8.0
_ASYMPTOTIC_MAX_TERM = 1e3
_LAPLACE_STEP = 0.05
_LAPLACE_TAIL = 1e-18


def configure(
    kummer_switch_radius: float | None = None,
    bessel_switch_radius: float | None = None,
    asymptotic_rtol: float | None = None,
) -> dict[str, float]:
    """Override the branch-switch constants (config section ``kernel``); returns the effective values."""
    global KUMMER_SWITCH_RADIUS, BESSEL_SWITCH_RADIUS, ASYMPTOTIC_RTOL
    if kummer_switch_radius is not None:
        KUMMER_SWITCH_RADIUS = float(kummer_switch_radius)
    if bessel_switch_radius is not None:
        BESSEL_SWITCH_RADIUS = float(bessel_switch_radius)
    if asymptotic_rtol is not None:
        ASYMPTOTIC_RTOL = float(asymptotic_rtol)
    return {
        "kummer_switch_radius": KUMMER_SWITCH_RADIUS,
        "bessel_switch_radius": BESSEL_SWITCH_RADIUS,
        "asymptotic_rtol": ASYMPTOTIC_RTOL,
    }


Method = Literal["auto", "series", "asymptotic"]

_LANCZOS_G = 7
_LANCZOS_COEFFS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_TWO_PI = 0.5 * math.log(2.0 * math.pi)
# beyond this |z| the direct Lanczos product overflows; go through logs
_DIRECT_GAMMA_LIMIT = 140.0


@dataclass(frozen=True)
class KummerParams:
    a: complex
    c: complex
    y: complex

    @classmethod
    def paired(cls, a: complex, y: complex) -> "KummerParams":
        """Parameters on the c = 2a path every builder uses."""
        return cls(a=complex(a), c=2 * complex(a), y=complex(y))


@dataclass(frozen=True)
class BesselParams:
    nu: complex
    x: complex


# ---------------------------------------------------------------------------
# Gamma
# ---------------------------------------------------------------------------
def _near_nonpositive_integer(z: complex, tol: float = POLE_TOL) -> bool:
    n = round(z.real)
    return n <= 0 and abs(z - n) < tol


def _is_integer(z: complex, tol: float = POLE_TOL) -> bool:
    return abs(z - round(z.real)) < tol


def _lanczos_sum(z: complex) -> complex:
    x = _LANCZOS_COEFFS[0]
    for i in range(1, len(_LANCZOS_COEFFS)):
        x += _LANCZOS_COEFFS[i] / (z + i)
    return x


def _log_sin_pi(z: complex) -> complex:
    """log(sin(pi z)) on some branch; only exp() of it is ever used."""
    w = math.pi * z
    if abs(w.imag) < 20.0:
        return cmath.log(cmath.sin(w))
    if w.imag > 0:
        return -1j * w + cmath.log(0.5j) + cmath.log(1 - cmath.exp(2j * w))
    return 1j * w + cmath.log(-0.5j) + cmath.log(1 - cmath.exp(-2j * w))


def log_gamma_complex(z: complex) -> complex:
    """log Gamma(z) up to a multiple of 2*pi*i in the imaginary part."""
    z = complex(z)
    if _near_nonpositive_integer(z):
        raise PoleError("gamma pole", z=z)
    if z.real < 0.5:
        return math.log(math.pi) - _log_sin_pi(z) - log_gamma_complex(1 - z)
    z -= 1
    t = z + _LANCZOS_G + 0.5
    return _HALF_LOG_TWO_PI + (z + 0.5) * cmath.log(t) - t + cmath.log(_lanczos_sum(z))


def gamma_complex(z: complex) -> complex:
    """Gamma(z) for complex z; PoleError within 1e-12 of 0, -1, -2, ..."""
    z = complex(z)
    if _near_nonpositive_integer(z):
        raise PoleError("gamma pole", z=z)
    if abs(z) > _DIRECT_GAMMA_LIMIT:
        return cmath.exp(log_gamma_complex(z))
    if z.real < 0.5:
        return math.pi / (cmath.sin(math.pi * z) * gamma_complex(1 - z))
    z -= 1
    t = z + _LANCZOS_G + 0.5
    return math.sqrt(2 * math.pi) * t ** (z + 0.5) * cmath.exp(-t) * _lanczos_sum(z)


def rgamma_complex(z: complex) -> complex:
    """1/Gamma(z), zero at the poles."""
    z = complex(z)
    if _near_nonpositive_integer(z):
        return 0j
    return 1 / gamma_complex(z)


def gamma_ratio(num: tuple[complex, ...], den: tuple[complex, ...]) -> complex:
    """prod Gamma(num) / prod Gamma(den), through logs when arguments are large."""
    if max(abs(complex(v)) for v in num + den) <= _DIRECT_GAMMA_LIMIT / 2:
        out = 1 + 0j
        for v in num:
            out *= gamma_complex(v)
        for v in den:
            out /= gamma_complex(v)
        return out
    s = sum(log_gamma_complex(v) for v in num) - sum(log_gamma_complex(v) for v in den)
    return cmath.exp(s)


# ---------------------------------------------------------------------------
# Series helpers
# ---------------------------------------------------------------------------
def _sum_series(first: complex, ratio, what: str, **ctx) -> complex:
    """Sum first * prod(ratio(n)) with the quiet-terms truncation rule."""
    term = first
    total = first
    quiet = 0
    for n in range(SERIES_MAX_TERMS):
        term = term * ratio(n)
        total += term
        if abs(term) <= SERIES_RTOL * abs(total):
            quiet += 1
            if quiet >= SERIES_QUIET_TERMS:
                return total
        else:
            quiet = 0
    raise ConvergenceError(f"{what} series did not converge", terms=SERIES_MAX_TERMS, **ctx)


def _sum_asymptotic(ratio) -> complex | None:
    """Sum 1 + sum prod(ratio) until a term drops below ASYMPTOTIC_RTOL.

    Returns None when the divergent tail starts before that, or when early
    terms grow large enough to cost digits: the expansion is not usable at
    this argument.
    """
    term = 1 + 0j
    total = 1 + 0j
    shrinking = False
    for n in range(SERIES_MAX_TERMS):
        nxt = term * ratio(n)
        if nxt == 0 or abs(nxt) <= ASYMPTOTIC_RTOL * abs(total):
            return total + nxt
        if abs(nxt) > abs(term):
            if shrinking or abs(nxt) > _ASYMPTOTIC_MAX_TERM:
                return None
        else:
            shrinking = True
        term = nxt
        total += term
    return None


# ---------------------------------------------------------------------------
# Kummer Phi
# ---------------------------------------------------------------------------
def _kummer_series_scaled(a: complex, c: complex, y: complex, log_scale: complex) -> complex:
    """exp(-log_scale) * Phi(a, c, y) by the power series."""
    first = cmath.exp(-log_scale)
    return _sum_series(first, lambda n: (a + n) / (c + n) * y / (n + 1), "kummer", a=a, c=c, y=y)


def _kummer_asymptotic_scaled(a: complex, c: complex, y: complex, log_scale: complex) -> complex | None:
    """exp(-log_scale) * Gamma(c)/Gamma(a) e^y y^(a-c) sum (c-a)_n (1-a)_n / n! y^-n."""
    if _near_nonpositive_integer(a):
        return None
    s = _sum_asymptotic(lambda n: (c - a + n) * (1 - a + n) / ((n + 1) * y))
    if s is None:
        return None
    lead = log_gamma_complex(c) - log_gamma_complex(a) + y + (a - c) * cmath.log(y) - log_scale
    return cmath.exp(lead) * s


def _kummer(a: complex, c: complex, y: complex, log_scale: complex, method: Method) -> complex:
    a, c, y = complex(a), complex(c), complex(y)
    if _near_nonpositive_integer(c):
        raise PoleError("kummer parameter c at a gamma pole", c=c)
    if y == 0:
        return cmath.exp(-log_scale)
    if method == "series":
        return _kummer_series_scaled(a, c, y, log_scale)
    if y.real < 0:
        # Kummer transformation keeps the series free of cancellation
        return _kummer(c - a, c, -y, log_scale - y, method)
    if method == "asymptotic":
        out = _kummer_asymptotic_scaled(a, c, y, log_scale)
        if out is None:
            raise ConvergenceError("kummer asymptotic expansion not usable", a=a, c=c, y=y)
        return out
    if abs(y) >= KUMMER_SWITCH_RADIUS:
        out = _kummer_asymptotic_scaled(a, c, y, log_scale)
        if out is not None:
            return out
        slog.debug("kernel.fallback", function="kummer", a=a, c=c, y=y)
    return _kummer_series_scaled(a, c, y, log_scale)


def kummer(a: complex, c: complex, y: complex, method: Method = "auto") -> complex:
    """Phi(a, c, y) = 1F1(a; c; y)."""
    return _kummer(a, c, y, 0j, method)


def kummer_scaled(a: complex, c: complex, y: complex, method: Method = "auto") -> complex:
    """exp(-y/2) * Phi(a, c, y), finite where Phi itself would overflow."""
    y = complex(y)
    return _kummer(a, c, y, y / 2, method)


def kummer_log_scaled(a: complex, c: complex, y: complex, log_scale: complex, method: Method = "auto") -> complex:
    """exp(-log_scale) * Phi(a, c, y) for an arbitrary scale; ratios at huge y stay finite."""
    return _kummer(a, c, y, complex(log_scale), method)


def kummer_phi(p: KummerParams, method: Method = "auto") -> complex:
    return kummer(p.a, p.c, p.y, method)


def kummer_derivative(a: complex, c: complex, y: complex, order: int = 1) -> complex:
    """d^n/dy^n Phi(a, c, y) = (a)_n/(c)_n Phi(a+n, c+n, y)."""
    coef = 1 + 0j
    for k in range(order):
        coef *= (a + k) / (c + k)
    return coef * kummer(a + order, c + order, y)


# ---------------------------------------------------------------------------
# Tricomi Psi
# ---------------------------------------------------------------------------
def connection_coefficients(a: complex, c: complex) -> tuple[complex, complex]:
    """Coefficients (A, B) of Psi(a,c,y) = A Phi(a,c,y) + B y^(1-c) Phi(a-c+1, 2-c, y)."""
    a, c = complex(a), complex(c)
    if _is_integer(c):
        raise DegenerateParameterError("connection formula singular for integer c", c=c)
    A = gamma_ratio((1 - c,), (a - c + 1,))
    B = gamma_ratio((c - 1,), (a,))
    return A, B


def _tricomi_asymptotic(a: complex, c: complex, y: complex) -> complex | None:
    s = _sum_asymptotic(lambda n: -(a + n) * (a - c + 1 + n) / ((n + 1) * y))
    if s is None:
        return None
    return cmath.exp(-a * cmath.log(y)) * s


def _tricomi_laplace(a: complex, c: complex, y: complex) -> complex:
    """Psi from its Laplace integral, t = e^v, summed by the trapezoidal rule.

    Psi(a,c,y) Gamma(a) = int exp(a v - y e^v + (c-a-1) log(1+e^v)) dv over the
    real line. Needs Re a > 0 and Re y > 0; the integrand is analytic in a
    strip, so the rule converges geometrically in the step.
    """
    step = min(_LAPLACE_STEP, math.pi / (4 * (1 + abs(a.imag) + abs(c.imag))))
    v_lo = math.log(_LAPLACE_TAIL) / a.real
    v_hi = math.log((60 + abs(c - a - 1)) / y.real) + 1
    v = np.arange(v_lo, v_hi + step, step)
    exponent = a * v - y * np.exp(v) + (c - a - 1) * np.logaddexp(0.0, v) - log_gamma_complex(a)
    return complex(np.sum(np.exp(exponent)) * step)


def tricomi(a: complex, c: complex, y: complex, method: Method = "auto") -> complex:
    """Psi(a, c, y) = U(a, c, y) on the principal branch."""
    a, c, y = complex(a), complex(c), complex(y)
    if method != "series" and abs(y) >= KUMMER_SWITCH_RADIUS:
        out = _tricomi_asymptotic(a, c, y)
        if out is not None:
            return out
        if method == "asymptotic":
            raise ConvergenceError("tricomi asymptotic expansion not usable", a=a, c=c, y=y)
        slog.debug("kernel.fallback", function="tricomi", a=a, c=c, y=y)
    if method == "auto" and abs(y) > TRICOMI_CONNECTION_RADIUS and a.real > 0 and y.real > 0:
        return _tricomi_laplace(a, c, y)
    A, B = connection_coefficients(a, c)
    y_pow = cmath.exp((1 - c) * cmath.log(y))
    return A * kummer(a, c, y) + B * y_pow * kummer(a - c + 1, 2 - c, y)


def tricomi_scaled(a: complex, c: complex, y: complex) -> complex:
    """exp(-y/2) * Psi(a, c, y) for real positive y."""
    y = complex(y)
    return cmath.exp(-y / 2) * tricomi(a, c, y)


def tricomi_derivative(a: complex, c: complex, y: complex, order: int = 1) -> complex:
    """d^n/dy^n Psi(a, c, y) = (-1)^n (a)_n Psi(a+n, c+n, y)."""
    coef = 1 + 0j
    for k in range(order):
        coef *= -(a + k)
    return coef * tricomi(a + order, c + order, y)


def tricomi_psi(p: KummerParams, method: Method = "auto") -> complex:
    if _is_integer(p.c):
        raise DegenerateParameterError("2a is an integer; connection formula singular", a=p.a)
    return tricomi(p.a, p.c, p.y, method)


# ---------------------------------------------------------------------------
# Cylinder functions
# ---------------------------------------------------------------------------
def _besselj_series(nu: complex, x: complex) -> complex:
    if _near_nonpositive_integer(nu) and abs(nu) > POLE_TOL:
        raise DegenerateParameterError("negative integer order", nu=nu)
    half = x / 2
    first = cmath.exp(nu * cmath.log(half)) * rgamma_complex(nu + 1)
    q = -half * half
    return _sum_series(first, lambda n: q / ((n + 1) * (nu + n + 1)), "bessel", nu=nu, x=x)


def _hankel_asymptotic(nu: complex, x: complex, kind: int) -> complex | None:
    mu = 4 * nu * nu
    sgn = 1j if kind == 1 else -1j
    s = _sum_asymptotic(lambda k: sgn * (mu - (2 * k + 1) ** 2) / (8 * (k + 1) * x))
    if s is None:
        return None
    phase = x - nu * math.pi / 2 - math.pi / 4
    return cmath.sqrt(2 / (math.pi * x)) * cmath.exp(sgn * phase) * s


def _hankel_pair(nu: complex, x: complex) -> tuple[complex, complex] | None:
    h1 = _hankel_asymptotic(nu, x, 1)
    h2 = _hankel_asymptotic(nu, x, 2)
    if h1 is None or h2 is None:
        return None
    return h1, h2


def _use_asymptotic(nu: complex, x: complex, method: Method) -> tuple[complex, complex] | None:
    if method == "series":
        return None
    if method == "asymptotic":
        pair = _hankel_pair(nu, x)
        if pair is None:
            raise ConvergenceError("hankel asymptotic expansion not usable", nu=nu, x=x)
        return pair
    if abs(x) >= BESSEL_SWITCH_RADIUS:
        pair = _hankel_pair(nu, x)
        if pair is None:
            slog.debug("kernel.fallback", function="bessel", nu=nu, x=x)
        return pair
    return None


def besselj(nu: complex, x: complex, method: Method = "auto") -> complex:
    nu, x = complex(nu), complex(x)
    if x == 0:
        return 1 + 0j if nu == 0 else 0j
    pair = _use_asymptotic(nu, x, method)
    if pair is not None:
        return (pair[0] + pair[1]) / 2
    return _besselj_series(nu, x)


def _sin_nu_pi(nu: complex) -> complex:
    s = cmath.sin(math.pi * nu)
    if abs(s) < POLE_TOL:
        raise DegenerateParameterError("integer order; J and J_-nu are dependent", nu=nu)
    return s


def hankel1(nu: complex, x: complex, method: Method = "auto") -> complex:
    nu, x = complex(nu), complex(x)
    s = _sin_nu_pi(nu)
    pair = _use_asymptotic(nu, x, method)
    if pair is not None:
        return pair[0]
    return 1j / s * (cmath.exp(-1j * nu * math.pi) * _besselj_series(nu, x) - _besselj_series(-nu, x))


def hankel2(nu: complex, x: complex, method: Method = "auto") -> complex:
    nu, x = complex(nu), complex(x)
    s = _sin_nu_pi(nu)
    pair = _use_asymptotic(nu, x, method)
    if pair is not None:
        return pair[1]
    return -1j / s * (cmath.exp(1j * nu * math.pi) * _besselj_series(nu, x) - _besselj_series(-nu, x))


def neumann(nu: complex, x: complex, method: Method = "auto") -> complex:
    nu, x = complex(nu), complex(x)
    s = _sin_nu_pi(nu)
    pair = _use_asymptotic(nu, x, method)
    if pair is not None:
        return (pair[0] - pair[1]) / 2j
    return (cmath.cos(nu * math.pi) * _besselj_series(nu, x) - _besselj_series(-nu, x)) / s


def bessel_j(p: BesselParams, method: Method = "auto") -> complex:
    return besselj(p.nu, p.x, method)


def hankel_h1(p: BesselParams, method: Method = "auto") -> complex:
    return hankel1(p.nu, p.x, method)


def hankel_h2(p: BesselParams, method: Method = "auto") -> complex:
    return hankel2(p.nu, p.x, method)


def neumann_n(p: BesselParams, method: Method = "auto") -> complex:
    return neumann(p.nu, p.x, method)


CYLINDER_FUNCTIONS = {
    "bessel": besselj,
    "hankel1": hankel1,
    "hankel2": hankel2,
    "neumann": neumann,
}


def cylinder_derivative(kind: str, nu: complex, x: complex, order: int = 1, direction: str = "up") -> complex:
    """d^n C_nu/dx^n for any cylinder function C from the order recurrences.

    First derivative: x C' = nu C - x C_{nu+1} ("up") or x C' = x C_{nu-1} - nu C
    ("down"). Second: C'' = (C_{nu-2} - 2 C_nu + C_{nu+2})/4.
    """
    fn = CYLINDER_FUNCTIONS[kind]
    if order == 2:
        return (fn(nu - 2, x) - 2 * fn(nu, x) + fn(nu + 2, x)) / 4
    if order != 1:
        raise ValueError(f"unsupported derivative order {order}")
    if direction == "down":
        return fn(nu - 1, x) - nu / x * fn(nu, x)
    return nu / x * fn(nu, x) - fn(nu + 1, x)
