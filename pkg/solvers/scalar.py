"""
Scalar particle on the exponential barrier.

    f'' - 2 f' + (eps - |k|^2 e^{2z}) f = 0,      phi = e^{-z} f
    phi'' + (eps - U(z)) phi = 0,                  U(z) = 1 + |k|^2 e^{2z}

With y = 2|k| e^z and a = 1/2 - i sqrt(eps - 1) every solution is
f = y^{a+1/2} e^{-y/2} Y(y), Y solving Kummer's equation with c = 2a.
Variants: F1 = Phi(a,2a,y), F2 = y^{1-2a} Phi(1-a,2-2a,y), F5 = Psi(a,2a,y)
and F7 = A Y1 - B Y2, the companion of F5 that grows behind the barrier.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np

from solvers.base_solver import BaseSolver, PointEval, SolutionSelector, confluent_point, power
from tools import special_functions as sf
from tools.errors import ConfigError
from tools.log_context import slog
from tools.oracle import (
    ResidualReport,
    SystemId,
    SystemSpec,
    register_system,
    report_from_terms,
    residual_from_derivatives,
    residual_norm,
)

VARIANTS: tuple[str, ...] = ("F1", "F2", "F5", "F7")
# variants whose growth behind the barrier has no physical reading
UNPHYSICAL_GROWTH = frozenset({"F7"})


@dataclass(frozen=True)
class ScalarParams:
    epsilon: float
    k1: float = 0.0
    k2: float = 0.0

    def __post_init__(self) -> None:
        for name in ("epsilon", "k1", "k2"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError("parameter must be finite", parameter=name, value=getattr(self, name))
        if self.epsilon <= 1:
            raise ConfigError("propagating regime needs epsilon > 1", parameter="epsilon", value=self.epsilon)

    @property
    def root(self) -> float:
        """sqrt(eps - 1), the asymptotic wavenumber."""
        return math.sqrt(self.epsilon - 1)

    @property
    def a(self) -> complex:
        return complex(0.5, -self.root)

    @property
    def kperp2(self) -> float:
        return self.k1**2 + self.k2**2

    @property
    def kperp(self) -> float:
        return math.sqrt(self.kperp2)

    def y(self, z: Any) -> Any:
        return 2 * self.kperp * np.exp(z)

    def as_dict(self) -> dict[str, Any]:
        return {"epsilon": self.epsilon, "k1": self.k1, "k2": self.k2}


@dataclass(frozen=True)
class ScalarSolutionVariant:
    tag: str

    def __post_init__(self) -> None:
        if self.tag not in VARIANTS:
            raise ConfigError("unknown scalar variant", parameter="variant", value=self.tag)

    @property
    def unphysical_growth(self) -> bool:
        return self.tag in UNPHYSICAL_GROWTH


def potential(z: Any, p: ScalarParams) -> Any:
    """U(z) = 1 + |k|^2 e^{2z}."""
    with np.errstate(over="raise"):
        try:
            return 1 + p.kperp2 * np.exp(2 * np.asarray(z, dtype=float))
        except FloatingPointError:
            raise ConfigError("potential overflows at this z", parameter="z", value=z) from None


def critical_point(p: ScalarParams) -> float:
    """z0 where the barrier reaches the energy: eps - 1 = |k|^2 e^{2 z0}."""
    if p.kperp2 == 0:
        raise ConfigError("no critical point on the axis", parameter="k", value=0.0)
    return 0.5 * math.log((p.epsilon - 1) / p.kperp2)


def critical_point_dimensional(
    E: float, M: float, rho: float, K1: float, K2: float, hbar: float = 1.0
) -> float:
    """z0 in length units: rho * ln sqrt((2 M E rho^2/hbar^2 - 1)/((K1^2 + K2^2) rho^2))."""
    eps = 2 * M * E * rho**2 / hbar**2
    if eps <= 1:
        raise ConfigError("dimensionless energy must exceed 1", parameter="E", value=E, epsilon=eps)
    kk = (K1**2 + K2**2) * rho**2
    if kk == 0:
        raise ConfigError("no critical point on the axis", parameter="K", value=0.0)
    return rho * 0.5 * math.log((eps - 1) / kk)


def connection_coefficients(p: ScalarParams) -> tuple[complex, complex]:
    """A = Gamma(1-2a)/Gamma(1-a), B = Gamma(2a-1)/Gamma(a)."""
    return sf.connection_coefficients(p.a, 2 * p.a)


class ScalarSolver(BaseSolver):
    """Components: f and phi = e^{-z} f."""

    name = "scalar"
    labels = ("f", "phi")

    def __init__(self, params: ScalarParams, variant: ScalarSolutionVariant) -> None:
        super().__init__(params, SolutionSelector(equation="scalar", variant=variant.tag))
        if params.kperp2 == 0:
            raise ConfigError("k = 0 has the plane-wave solution; use axial_scalar", parameter="k", value=0.0)
        self.variant = variant
        self._A, self._B = connection_coefficients(params)

    def _f(self, y: float) -> tuple[complex, complex, complex]:
        a = self.params.a
        tag = self.variant.tag
        if tag == "F1":
            return confluent_point("phi", a, 2 * a, a + 0.5, y)
        if tag == "F2":
            return confluent_point("phi", 1 - a, 2 - 2 * a, 1.5 - a, y)
        if tag == "F5":
            return confluent_point("psi", a, 2 * a, a + 0.5, y)
        # F7: e^y Psi(a,2a,-y) with the minus sign of the connection relation
        u = confluent_point("phi", a, 2 * a, a + 0.5, y, sign=-1)
        v = confluent_point("phi", 1 - a, 2 - 2 * a, 1.5 - a, y, sign=-1)
        return tuple(self._A * ui - self._B * vi for ui, vi in zip(u, v))  # type: ignore[return-value]

    def point(self, z: float) -> PointEval:
        f, df, d2f = self._f(float(self.params.y(z)))
        emz = math.exp(-z)
        phi = emz * f
        dphi = emz * (df - f)
        d2phi = emz * (d2f - 2 * df + f)
        return PointEval(values=(f, phi), d1=(df, dphi), d2=(d2f, d2phi))

    def describe(self) -> dict[str, Any]:
        out = super().describe()
        out["unphysical_growth"] = self.variant.unphysical_growth
        return out


def scalar_solution(v: ScalarSolutionVariant | str, p: ScalarParams, z: float) -> complex:
    if isinstance(v, str):
        v = ScalarSolutionVariant(v)
    return ScalarSolver(p, v).point(z).values[0]


def phi_solution(v: ScalarSolutionVariant | str, p: ScalarParams, z: float) -> complex:
    if isinstance(v, str):
        v = ScalarSolutionVariant(v)
    return ScalarSolver(p, v).point(z).values[1]


def axial_scalar(p: ScalarParams, sign: int, z: Any) -> Any:
    """Plane wave f = e^{(1 +- i sqrt(eps-1)) z} of the k = 0 problem."""
    if sign not in (1, -1):
        raise ConfigError("sign must be +1 or -1", parameter="sign", value=sign)
    if p.kperp2 != 0:
        raise ConfigError("axial solution needs k1 = k2 = 0", parameter="k", value=p.kperp)
    return np.exp((1 + sign * 1j * p.root) * np.asarray(z, dtype=float))


class AxialScalarSolver(BaseSolver):
    name = "scalar-axial"
    labels = ("f", "phi")

    def __init__(self, params: ScalarParams, sign: int) -> None:
        super().__init__(params, SolutionSelector(equation="scalar", variant=f"axial{'+' if sign > 0 else '-'}"))
        self.sign = sign
        self.exponent = 1 + sign * 1j * params.root

    def point(self, z: float) -> PointEval:
        f = complex(axial_scalar(self.params, self.sign, z))
        k = self.exponent
        phi = f * math.exp(-z)
        kp = k - 1
        return PointEval(values=(f, phi), d1=(k * f, kp * phi), d2=(k * k * f, kp * kp * phi))


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------
def kummer_connection_check(p: ScalarParams, z_grid: Any) -> float:
    """Max relative mismatch of f5 = A f1 + B f2 and f7 = A f1 - B f2 over the grid.

    Only the f5 line is evidence: F7 is assembled from Phi(., ., -y), which
    Kummer's transformation turns back into f1 and f2, so the f7 line holds by
    construction. ``principal_branch_check`` tests F7 against Psi(a,2a,-y).
    """
    z = np.asarray(z_grid, dtype=float)
    A, B = connection_coefficients(p)
    f1 = ScalarSolver(p, ScalarSolutionVariant("F1")).profile(z)["f"]
    f2 = ScalarSolver(p, ScalarSolutionVariant("F2")).profile(z)["f"]
    f5 = ScalarSolver(p, ScalarSolutionVariant("F5")).profile(z)["f"]
    f7 = ScalarSolver(p, ScalarSolutionVariant("F7")).profile(z)["f"]
    line5 = np.abs(f5 - (A * f1 + B * f2)) / np.abs(f5)
    line7 = np.abs(f7 - (A * f1 - B * f2)) / np.abs(f7)
    worst = float(max(line5.max(), line7.max()))
    slog.debug("scalar.connection_check", epsilon=p.epsilon, worst=worst)
    return worst


def principal_branch_factor(p: ScalarParams) -> complex:
    """Coefficient of Y2 in e^y Psi(a,2a,-y) = A Y1 + factor * B Y2 when arg(-y) = pi.

    Equals e^{i pi (1-2a)} = e^{-2 pi sqrt(eps-1)}; F7 is built with the
    factor -1 instead, so it is a solution but not Psi(a,2a,-y) itself.
    """
    return cmath.exp(1j * math.pi * (1 - 2 * p.a))


def continued_psi(p: ScalarParams, z_grid: Any) -> np.ndarray:
    """e^{y/2} y^{a+1/2} Psi(a,2a,-y) on the principal branch, from the Tricomi kernel."""
    y = np.asarray(p.y(np.asarray(z_grid, dtype=float)), dtype=float)
    a = p.a
    psi = np.array([sf.tricomi(a, 2 * a, complex(-yi, 0.0)) for yi in y])
    return np.exp(y / 2) * np.array([power(yi, a + 0.5) for yi in y]) * psi


def principal_branch_check(p: ScalarParams, z_grid: Any) -> dict[str, float]:
    """Continued Psi against A f1 + factor B f2, and how far F7 sits from it.

    ``principal`` is the max relative mismatch with ``principal_branch_factor``;
    ``f7_gap`` is the relative distance of F7 (factor -1) from the same function.
    """
    z = np.asarray(z_grid, dtype=float)
    A, B = connection_coefficients(p)
    f1 = ScalarSolver(p, ScalarSolutionVariant("F1")).profile(z)["f"]
    f2 = ScalarSolver(p, ScalarSolutionVariant("F2")).profile(z)["f"]
    f7 = ScalarSolver(p, ScalarSolutionVariant("F7")).profile(z)["f"]
    g = continued_psi(p, z)
    scale = np.abs(g)
    out = {
        "principal": float(np.max(np.abs(g - (A * f1 + principal_branch_factor(p) * B * f2)) / scale)),
        "f7_gap": float(np.max(np.abs(g - f7) / scale)),
    }
    slog.debug("scalar.principal_branch_check", epsilon=p.epsilon, **out)
    return out


@dataclass(frozen=True)
class ReflectionResult:
    epsilon: float
    R: float
    amplitude_minus: Optional[complex] = None
    amplitude_plus: Optional[complex] = None

    @property
    def deviation(self) -> float:
        return abs(self.R - 1)

    @property
    def amplitude_ratio(self) -> Optional[float]:
        if self.amplitude_minus is None or self.amplitude_plus is None:
            return None
        return abs(self.amplitude_minus) / abs(self.amplitude_plus)

    def as_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"epsilon": self.epsilon, "R": self.R, "deviation": self.deviation}
        if self.amplitude_minus is not None:
            out["abs_M_minus"] = abs(self.amplitude_minus)
            out["abs_M_plus"] = abs(self.amplitude_plus)
        return out


def asymptotic_amplitudes(p: ScalarParams) -> tuple[complex, complex]:
    """Plane-wave amplitudes of phi5 ~ M- e^{-i s z} + M+ e^{+i s z} for z -> -inf."""
    if p.kperp2 == 0:
        raise ConfigError("amplitudes need k != 0", parameter="k", value=0.0)
    A, B = connection_coefficients(p)
    s = p.root
    two_k = 2 * p.kperp
    return A * power(two_k, 1 - 1j * s), B * power(two_k, 1 + 1j * s)


def reflection_coefficient(epsilon: float, k1: Optional[float] = None, k2: Optional[float] = None) -> ReflectionResult:
    """R = |Gamma(1-2a) Gamma(a) / (Gamma(2a-1) Gamma(1-a))|^2 from the gamma values."""
    if not epsilon > 1:
        raise ConfigError("reflection coefficient needs epsilon > 1", parameter="epsilon", value=epsilon)
    kk1 = 0.0 if k1 is None else k1
    kk2 = 0.0 if k2 is None else k2
    p = ScalarParams(epsilon, kk1, kk2)
    a = p.a
    ratio = sf.gamma_ratio((1 - 2 * a, a), (2 * a - 1, 1 - a))
    R = abs(ratio) ** 2
    if k1 is None and k2 is None or p.kperp2 == 0:
        return ReflectionResult(epsilon=epsilon, R=R)
    m_minus, m_plus = asymptotic_amplitudes(p)
    return ReflectionResult(epsilon=epsilon, R=R, amplitude_minus=m_minus, amplitude_plus=m_plus)


def large_y_growth(p: ScalarParams, z: float) -> dict[str, float]:
    """Ratios of f1, f5, f7 to their leading large-y forms; each tends to 1 as y grows.

    f1 ~ Gamma(2a)/Gamma(a) y^{1/2} e^{y/2}, f5 ~ y^{1/2} e^{-y/2},
    f7 ~ (A Gamma(2a)/Gamma(a) - B Gamma(2-2a)/Gamma(1-a)) y^{1/2} e^{y/2}.
    """
    a = p.a
    y = float(p.y(z))
    A, B = connection_coefficients(p)
    g1 = sf.gamma_ratio((2 * a,), (a,))
    g2 = sf.gamma_ratio((2 - 2 * a,), (1 - a,))
    root_y = math.sqrt(y)
    half = y / 2
    out: dict[str, float] = {"y": y}
    for tag, lead, sign in (("F1", g1, 1), ("F5", 1.0, -1), ("F7", A * g1 - B * g2, 1)):
        f = scalar_solution(tag, p, z)
        # compare in logs; e^{y/2} may overflow for the growing ones
        log_ratio = cmath.log(f) - cmath.log(lead) - math.log(root_y) - sign * half
        out[tag] = abs(cmath.exp(log_ratio))
    return out


# ---------------------------------------------------------------------------
# Residual operators
# ---------------------------------------------------------------------------
def _terms_barrier(t, values, d1, d2, p: ScalarParams):
    f = values[0]
    barrier = p.kperp2 * np.exp(2 * t)
    return [[d2[0], -2 * d1[0], p.epsilon * f, -barrier * f]]


def _rhs_barrier(t, state, p: ScalarParams):
    f, df = state
    return np.array([df, 2 * df - (p.epsilon - p.kperp2 * math.exp(2 * t)) * f])


def _terms_schrodinger(t, values, d1, d2, p: ScalarParams):
    phi = values[0]
    return [[d2[0], (p.epsilon - 1) * phi, -p.kperp2 * np.exp(2 * t) * phi]]


def _rhs_schrodinger(t, state, p: ScalarParams):
    phi, dphi = state
    return np.array([dphi, -(p.epsilon - 1 - p.kperp2 * math.exp(2 * t)) * phi])


def _rate(t, p: ScalarParams):
    return np.maximum(p.root, p.kperp * np.exp(t))


def _terms_kummer(t, values, d1, d2, kp: sf.KummerParams):
    # independent variable is y here
    return [[t * d2[0], kp.c * d1[0], -t * d1[0], -kp.a * values[0]]]


def _rhs_kummer(t, state, kp: sf.KummerParams):
    u, du = state
    return np.array([du, ((t - kp.c) * du + kp.a * u) / t])


register_system(
    SystemSpec(
        system=SystemId.SCALAR_BARRIER,
        n_functions=1,
        order=2,
        terms=_terms_barrier,
        rhs=_rhs_barrier,
        wavenumber=lambda p: p.root,
        local_rate=_rate,
    )
)
register_system(
    SystemSpec(
        system=SystemId.SCALAR_SCHRODINGER,
        n_functions=1,
        order=2,
        terms=_terms_schrodinger,
        rhs=_rhs_schrodinger,
        wavenumber=lambda p: p.root,
        local_rate=_rate,
    )
)
register_system(
    SystemSpec(
        system=SystemId.KUMMER_ODE,
        n_functions=1,
        order=2,
        terms=_terms_kummer,
        rhs=_rhs_kummer,
        wavenumber=lambda kp: 0.0,
        local_rate=lambda t, kp: np.ones_like(t),
    )
)


def make_solver(p: ScalarParams, variant: str | ScalarSolutionVariant, sign: int = 1) -> BaseSolver:
    if p.kperp2 == 0:
        return AxialScalarSolver(p, sign)
    if isinstance(variant, str):
        variant = ScalarSolutionVariant(variant)
    return ScalarSolver(p, variant)


def scalar_residual(
    variant: str,
    p: ScalarParams,
    z_grid: Any,
    method: str = "analytic",
    tol: Optional[float] = None,
    phi_form: bool = False,
    fd_step: Optional[float] = None,
) -> ResidualReport:
    """Residual of f in the barrier equation (or of phi in its Schrodinger form)."""
    solver = make_solver(p, variant)
    system = SystemId.SCALAR_SCHRODINGER if phi_form else SystemId.SCALAR_BARRIER
    label = "phi" if phi_form else "f"
    z = np.asarray(z_grid, dtype=float)
    if method == "analytic":
        prof = solver.profile(z)
        i = prof.labels.index(label)
        return residual_from_derivatives(
            system, z, prof.values[i : i + 1], prof.d1[i : i + 1], prof.d2[i : i + 1], p,
            tol=1e-8 if tol is None else tol, label=f"{variant}:{label}",
        )
    return residual_norm(
        system, solver.sampler([label]), z, p,
        tol=1e-6 if tol is None else tol, fd_step=fd_step, label=f"{variant}:{label}",
    )


def reduced_form_residual(variant: str, p: ScalarParams, z_grid: Any, tol: float = 1e-8) -> ResidualReport:
    """Residual in Z = |k| e^z: f_ZZ - f_Z/Z + (eps/Z^2 - 1) f = 0."""
    z = np.asarray(z_grid, dtype=float)
    prof = make_solver(p, variant).profile(z)
    Z = p.kperp * np.exp(z)
    f, Df, D2f = prof["f"], prof.derivative("f"), prof.derivative("f", 2)
    f_Z = Df / Z
    f_ZZ = (D2f - Df) / Z**2
    terms = [f_ZZ, -f_Z / Z, p.epsilon * f / Z**2, -f]
    return report_from_terms(SystemId.SCALAR_BARRIER, z, [terms], tol, label=f"{variant}:reduced")


def standard_grid(p: ScalarParams, points: int = 512) -> np.ndarray:
    z0 = critical_point(p)
    return np.linspace(z0 - 8, z0 + 4, points)
