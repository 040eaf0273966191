"""
Dirac particle in the exponential (horospherical) coordinates.

After separating t, x1, x2 the upper pair (f1, f2) obeys

    (D - 1 - i p) f1 + e^z (i k1 + k2) f2 = 0
    (D - 1 + i p) f2 - e^z (i k1 - k2) f1 = 0,         D = d/dz,

with p = +-sqrt(eps^2 - m^2) the helicity eigenvalue, and the lower pair is
f3 = r f1, f4 = r f2 with r = (eps - p)/m. With y = 2|k| e^z and a = i p:

    type I   f1 = M+ e^{-y/2} y^{1+a} Phi(a, 2a, y),      f2 = e^{-y/2} y^{2+a} Phi(a+1, 2a+2, y)
    type II  f1 = M- e^{-y/2} y^{2-a} Phi(1-a, 2-2a, y),  f2 = e^{-y/2} y^{1-a} Phi(-a, -2a, y)

M+ = -2w(1+2a), M- = -w/(2(1-2a)), w = (k2 + i k1)/|k|.

The module also carries the axial (k = 0) plane waves, the flat-space
reference waves, the flat-limit study and the nonrelativistic reduction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from solvers.base_solver import (
    BaseSolver,
    PointEval,
    Profile,
    SolutionSelector,
    SpinorSample,
    WaveParams,
    confluent_point,
    power,
)
from tools import special_functions as sf
from tools.errors import ConfigError, DegenerateParameterError
from tools.log_context import Timer, slog
from tools.oracle import (
    ResidualReport,
    SystemId,
    SystemSpec,
    register_system,
    report_from_terms,
    residual_from_derivatives,
)

DEFAULT_TOL = 1e-8
FLAT_TOL = 1e-12
IDENTITY_TOL = 1e-10
# |det| / (|f1I f2II| + |f1II f2I|) below this means types I and II collapsed
INDEPENDENCE_FLOOR = 1e-10
# largest y = 2 R K e^{x3/R} the flat-limit study evaluates
FLAT_LIMIT_Y_MAX = 600.0

AXIAL_BRANCHES: tuple[str, ...] = ("C1", "C2")


# ---------------------------------------------------------------------------
# Relative factors
# ---------------------------------------------------------------------------
def _check_type(solution_type: str) -> None:
    if solution_type not in ("I", "II"):
        raise ConfigError("type must be I or II", parameter="type", value=solution_type)


def relative_factor(solution_type: str, a: complex, coupling: complex) -> complex:
    """M+ = -2w(1+2a) for type I, M- = -w/(2(1-2a)) for type II."""
    _check_type(solution_type)
    if solution_type == "I":
        return -2 * coupling * (1 + 2 * a)
    return -coupling / (2 * (1 - 2 * a))


def phase_relative_factor(solution_type: str, params: WaveParams) -> complex:
    """2 e^{+i alpha}(1+2a) and 2 e^{-i alpha}(1-2a); kept for comparison only.

    Neither satisfies the first-order system (residual is O(1)).
    """
    _check_type(solution_type)
    e = params.alpha_phase
    if solution_type == "I":
        return 2 * e * (1 + 2 * params.a)
    return 2 / e * (1 - 2 * params.a)


def pair_point(
    solution_type: str, p_value: float, coupling: complex, y: float, factor: complex
) -> tuple[tuple[complex, complex, complex], tuple[complex, complex, complex]]:
    """(f1, Df1, D^2 f1) and (f2, Df2, D^2 f2) at y = 2|k| e^z."""
    a = 1j * p_value
    if solution_type == "I":
        g1 = confluent_point("phi", a, 2 * a, 1 + a, y)
        g2 = confluent_point("phi", a + 1, 2 * a + 2, 2 + a, y)
    else:
        g1 = confluent_point("phi", 1 - a, 2 - 2 * a, 2 - a, y)
        g2 = confluent_point("phi", -a, -2 * a, 1 - a, y)
    return tuple(factor * v for v in g1), g2  # type: ignore[return-value]


# ---------------------------------------------------------------------------
# Solvers
# ---------------------------------------------------------------------------
class PairSolver(BaseSolver):
    """Upper pair (f1, f2) for one helicity eigenvalue; the mass never enters.

    ``params`` needs ``p``, ``k1``, ``k2``, ``kperp``, ``coupling``, ``y`` and
    ``as_dict``; both WaveParams and WeylParams qualify.
    """

    name = "dirac-pair"
    labels: tuple[str, ...] = ("f1", "f2")
    system = SystemId.DIRAC_FIRST_ORDER

    def __init__(
        self,
        params: Any,
        solution_type: str = "I",
        factor: Optional[complex] = None,
        equation: str = "dirac",
    ) -> None:
        _check_type(solution_type)
        super().__init__(params, SolutionSelector(equation=equation, type=solution_type))
        if params.kperp == 0:
            raise ConfigError("k = 0 has plane-wave solutions; use axial_solution", parameter="k", value=0.0)
        self.solution_type = solution_type
        self.factor = relative_factor(solution_type, 1j * params.p, params.coupling) if factor is None else factor

    def pair(self, z: float):
        return pair_point(self.solution_type, self.params.p, self.params.coupling, float(self.params.y(z)), self.factor)

    def point(self, z: float) -> PointEval:
        (f1, d1, dd1), (f2, d2, dd2) = self.pair(z)
        return PointEval(values=(f1, f2), d1=(d1, d2), d2=(dd1, dd2))


class DiracSolver(PairSolver):
    """Four components; the lower pair is the upper pair times (eps - p)/m."""

    name = "dirac"
    labels = ("f1", "f2", "f3", "f4")

    def __init__(self, params: WaveParams, solution_type: str = "I", factor: Optional[complex] = None) -> None:
        if params.m == 0:
            raise ConfigError("massless spinors belong to the weyl module", parameter="m", value=0.0)
        super().__init__(params, solution_type, factor)
        self.ratio = params.small_ratio

    def point(self, z: float) -> PointEval:
        (f1, d1, dd1), (f2, d2, dd2) = self.pair(z)
        r = self.ratio
        return PointEval(
            values=(f1, f2, r * f1, r * f2),
            d1=(d1, d2, r * d1, r * d2),
            d2=(dd1, dd2, r * dd1, r * dd2),
        )


def _axial_ratio(params: WaveParams) -> float:
    if params.m > 0:
        return params.small_ratio
    if params.p > 0:
        # m/(eps + p) at m = 0
        return 0.0
    raise ConfigError("lower components undefined for m = 0 and p = -eps", parameter="m", value=0.0)


class AxialDiracSolver(BaseSolver):
    """k = 0: f1 = e^z e^{+ipz} (C1) or f2 = e^z e^{-ipz} (C2)."""

    name = "dirac-axial"
    labels = ("f1", "f2", "f3", "f4")
    system = SystemId.DIRAC_FIRST_ORDER

    def __init__(self, params: WaveParams, branch: str = "C1") -> None:
        if branch not in AXIAL_BRANCHES:
            raise ConfigError("axial branch must be C1 or C2", parameter="branch", value=branch)
        if params.kperp != 0:
            raise ConfigError("axial solution needs k1 = k2 = 0", parameter="k", value=params.kperp)
        super().__init__(params, SolutionSelector(equation="dirac", type="I" if branch == "C1" else "II", variant=branch))
        self.branch = branch
        self.ratio = _axial_ratio(params)
        self.exponent = 1 + 1j * params.p if branch == "C1" else 1 - 1j * params.p

    def point(self, z: float) -> PointEval:
        lam = self.exponent
        f = complex(np.exp(lam * z))
        r = self.ratio
        if self.branch == "C1":
            vals = (f, 0j, r * f, 0j)
        else:
            vals = (0j, f, 0j, r * f)
        return PointEval(
            values=vals,
            d1=tuple(lam * v for v in vals),
            d2=tuple(lam * lam * v for v in vals),
        )


def make_solver(params: WaveParams, solution_type: str = "I", factor: Optional[complex] = None) -> BaseSolver:
    """Type I/II builder; k = 0 goes to the axial branch (I -> C1, II -> C2)."""
    _check_type(solution_type)
    if params.kperp == 0:
        return AxialDiracSolver(params, "C1" if solution_type == "I" else "C2")
    return DiracSolver(params, solution_type, factor)


def build_solution(solution_type: str, params: WaveParams, z: float) -> SpinorSample:
    return make_solver(params, solution_type).sample(z)


def axial_solution(params: WaveParams, which: str, z: float) -> SpinorSample:
    return AxialDiracSolver(params, which).sample(z)


# ---------------------------------------------------------------------------
# Equation terms
# ---------------------------------------------------------------------------
def first_order_terms(t, values, d1, p_value: float, k1: float, k2: float) -> list[list[np.ndarray]]:
    f1, f2 = values[0], values[1]
    ez = np.exp(t)
    u = complex(k2, k1)
    v = complex(-k2, k1)
    return [
        [d1[0], -f1, -1j * p_value * f1, ez * u * f2],
        [d1[1], -f2, 1j * p_value * f2, -ez * v * f1],
    ]


def _terms_first_order(t, values, d1, d2, params):
    return first_order_terms(t, values, d1, params.p, params.k1, params.k2)


def first_order_rhs(t, state, params):
    f1, f2 = state
    ez = math.exp(t)
    p = params.p
    return np.array(
        [
            (1 + 1j * p) * f1 - ez * complex(params.k2, params.k1) * f2,
            (1 - 1j * p) * f2 + ez * complex(-params.k2, params.k1) * f1,
        ]
    )


def second_order_terms(t, f, df, d2f, p_value: float, kperp: float, sign: int) -> list[np.ndarray]:
    """D^2 f - 3 Df + (p^2 + sign*i p + 2 - |k|^2 e^{2z}) f."""
    return [d2f, -3 * df, (p_value**2 + sign * 1j * p_value + 2) * f, -(kperp**2) * np.exp(2 * t) * f]


def _terms_second_order(t, values, d1, d2, params):
    return [
        second_order_terms(t, values[0], d1[0], d2[0], params.p, params.kperp, 1),
        second_order_terms(t, values[1], d1[1], d2[1], params.p, params.kperp, -1),
    ]


def _rhs_second_order(t, state, params):
    f1, df1, f2, df2 = state
    p = params.p
    barrier = params.kperp**2 * math.exp(2 * t)
    return np.array(
        [
            df1,
            3 * df1 - (p * p + 1j * p + 2 - barrier) * f1,
            df2,
            3 * df2 - (p * p - 1j * p + 2 - barrier) * f2,
        ]
    )


def _rate(t, params):
    return np.maximum(abs(params.p), params.kperp * np.exp(t))


register_system(
    SystemSpec(
        system=SystemId.DIRAC_FIRST_ORDER,
        n_functions=2,
        order=1,
        terms=_terms_first_order,
        rhs=first_order_rhs,
        wavenumber=lambda params: abs(params.p),
        local_rate=_rate,
    )
)
register_system(
    SystemSpec(
        system=SystemId.DIRAC_SECOND_ORDER,
        n_functions=2,
        order=2,
        terms=_terms_second_order,
        rhs=_rhs_second_order,
        wavenumber=lambda params: abs(params.p),
        local_rate=_rate,
    )
)


# ---------------------------------------------------------------------------
# Residual operators
# ---------------------------------------------------------------------------
def _profile(params: WaveParams, solution_type: str, z_grid: Any, factor: Optional[complex] = None) -> Profile:
    return make_solver(params, solution_type, factor).profile(np.asarray(z_grid, dtype=float))


def separated_system_residual(
    solution_type: str, params: WaveParams, z_grid: Any, tol: float = DEFAULT_TOL, factor: Optional[complex] = None
) -> ResidualReport:
    """All four lines of the separated first-order system in (f1, f2, f3, f4)."""
    prof = _profile(params, solution_type, z_grid, factor)
    z = prof.z
    f1, f2, f3, f4 = prof.values
    d1, d2, d3, d4 = prof.d1
    eps, m = params.epsilon, params.m
    ez = np.exp(z)
    k1, k2 = params.k1, params.k2
    lines = [
        [-1j * eps * f3, -1j * k1 * ez * f4, -k2 * ez * f4, -d3, f3, 1j * m * f1],
        [-1j * eps * f4, -1j * k1 * ez * f3, k2 * ez * f3, d4, -f4, 1j * m * f2],
        [-1j * eps * f1, 1j * k1 * ez * f2, k2 * ez * f2, d1, -f1, 1j * m * f3],
        [-1j * eps * f2, 1j * k1 * ez * f1, -k2 * ez * f1, -d2, f2, 1j * m * f4],
    ]
    return report_from_terms(SystemId.DIRAC_FIRST_ORDER, z, lines, tol, label=f"separated:{solution_type}")


def helicity_residual(
    solution_type: str,
    params: WaveParams,
    z_grid: Any,
    tol: float = DEFAULT_TOL,
    p_override: Optional[float] = None,
) -> ResidualReport:
    """Eigenvalue equations of the helicity operator; ``p_override`` tests a wrong eigenvalue."""
    prof = _profile(params, solution_type, z_grid)
    z = prof.z
    ez = np.exp(z)
    p = params.p if p_override is None else p_override
    k1, k2 = params.k1, params.k2
    lines = []
    for upper, lower in ((0, 1), (2, 3)):
        fa, fb = prof.values[upper], prof.values[lower]
        da, db = prof.d1[upper], prof.d1[lower]
        lines.append([k1 * ez * fb, -1j * k2 * ez * fb, -1j * da, 1j * fa, -p * fa])
        lines.append([k1 * ez * fa, 1j * k2 * ez * fa, 1j * db, -1j * fb, -p * fb])
    return report_from_terms(SystemId.DIRAC_FIRST_ORDER, z, lines, tol, label=f"helicity:{solution_type}")


def first_order_residual(
    solution_type: str,
    params: WaveParams,
    z_grid: Any,
    tol: float = DEFAULT_TOL,
    factor: Optional[complex] = None,
    perturbation: float = 0.0,
) -> ResidualReport:
    """Residual of the (f1, f2) system; ``perturbation`` scales the relative factor by (1 + perturbation)."""
    if factor is None and params.kperp != 0:
        factor = relative_factor(solution_type, params.a, params.coupling)
    if factor is not None:
        factor = factor * (1 + perturbation)
    prof = _profile(params, solution_type, z_grid, factor)
    return residual_from_derivatives(
        SystemId.DIRAC_FIRST_ORDER, prof.z, prof.values[:2], prof.d1[:2], None, params,
        tol=tol, label=f"first-order:{solution_type}",
    )


def second_order_residual(
    which: str,
    solution_type: str,
    params: WaveParams,
    z_grid: Any,
    tol: float = DEFAULT_TOL,
    swap: bool = False,
) -> ResidualReport:
    """Decoupled second-order residual of f1 or f2.

    With ``swap`` the component is tested in the other component's equation
    with p -> -p, which must give the same operator.
    """
    if which not in ("f1", "f2"):
        raise ConfigError("which must be f1 or f2", parameter="which", value=which)
    prof = _profile(params, solution_type, z_grid)
    sign = 1 if which == "f1" else -1
    p_value = params.p
    if swap:
        sign, p_value = -sign, -p_value
    terms = second_order_terms(
        prof.z, prof[which], prof.derivative(which), prof.derivative(which, 2), p_value, params.kperp, sign
    )
    label = f"second-order:{solution_type}:{which}{':swapped' if swap else ''}"
    return report_from_terms(SystemId.DIRAC_SECOND_ORDER, prof.z, [terms], tol, label=label)


def symmetry_residual(params: WaveParams, z_grid: Any, tol: float = DEFAULT_TOL) -> ResidualReport:
    """Swap f1 <-> f2 of a type I pair; the result solves the system with p -> -p, k1 -> -k1."""
    z = np.asarray(z_grid, dtype=float)
    prof = PairSolver(params, "I").profile(z)
    swapped_values = prof.values[::-1]
    swapped_d1 = prof.d1[::-1]
    lines = first_order_terms(z, swapped_values, swapped_d1, -params.p, -params.k1, params.k2)
    return report_from_terms(SystemId.DIRAC_FIRST_ORDER, z, lines, tol, label="symmetry")


def ratio_invariant(solution_type: str, params: WaveParams, z_grid: Any, floor: float = 1e-10) -> float:
    """Max deviation of f3/f1 and f4/f2 from (eps - p)/m where the denominators exceed ``floor``."""
    prof = _profile(params, solution_type, z_grid)
    r = params.small_ratio
    worst = 0.0
    for upper, lower in ((0, 2), (1, 3)):
        den = prof.values[upper]
        mask = np.abs(den) > floor
        if np.any(mask):
            worst = max(worst, float(np.max(np.abs(prof.values[lower][mask] / den[mask] - r))))
    return worst


@dataclass(frozen=True)
class IndependenceReport:
    min_normalized_det: float
    wronskian_spread: float

    def as_dict(self) -> dict[str, float]:
        return {"min_normalized_det": self.min_normalized_det, "wronskian_spread": self.wronskian_spread}


def independence_determinant(params: Any, z_grid: Any, equation: str = "dirac") -> IndependenceReport:
    """det [f1I f1II; f2I f2II] over the grid.

    The determinant of two solutions of the first-order pair is C e^{2z};
    ``wronskian_spread`` is the relative spread of det e^{-2z}.
    """
    z = np.asarray(z_grid, dtype=float)
    one = PairSolver(params, "I", equation=equation).profile(z).values
    two = PairSolver(params, "II", equation=equation).profile(z).values
    det = one[0] * two[1] - two[0] * one[1]
    scale = np.abs(one[0] * two[1]) + np.abs(two[0] * one[1])
    normalized = np.abs(det) / np.where(scale > 0, scale, 1.0)
    reduced = det * np.exp(-2 * z)
    mean = reduced.mean()
    spread = float(np.max(np.abs(reduced - mean)) / abs(mean)) if mean != 0 else math.inf
    report = IndependenceReport(float(normalized.min()), spread)
    if report.min_normalized_det < INDEPENDENCE_FLOOR:
        raise DegenerateParameterError("type I and II solutions are not independent here", **report.as_dict())
    return report


# ---------------------------------------------------------------------------
# Asymptotics
# ---------------------------------------------------------------------------
def large_z_amplitudes(solution_type: str, params: WaveParams) -> tuple[complex, complex]:
    """(c1, c2) with f1 ~ c1 e^{y/2} y and f2 ~ c2 e^{y/2} y as y grows."""
    a = params.a
    M = relative_factor(solution_type, a, params.coupling)
    if solution_type == "I":
        return M * sf.gamma_ratio((2 * a,), (a,)), sf.gamma_ratio((2 * a + 2,), (a + 1,))
    return M * sf.gamma_ratio((2 - 2 * a,), (1 - a,)), sf.gamma_ratio((-2 * a,), (-a,))


def large_z_ratio(solution_type: str, params: WaveParams, z: float) -> complex:
    """f1/f2 at z, evaluated with a common e^{-y} scale so huge y stays finite."""
    _check_type(solution_type)
    a = params.a
    y = float(params.y(z))
    M = relative_factor(solution_type, a, params.coupling)
    if solution_type == "I":
        top = sf.kummer_log_scaled(a, 2 * a, y, y)
        bottom = sf.kummer_log_scaled(a + 1, 2 * a + 2, y, y)
        return M / y * top / bottom
    top = sf.kummer_log_scaled(1 - a, 2 - 2 * a, y, y)
    bottom = sf.kummer_log_scaled(-a, -2 * a, y, y)
    return M * y * top / bottom


def small_z_exponent(solution_type: str, params: WaveParams, z: float) -> complex:
    """d ln f/dz of the leading component (f1 for type I, f2 for type II)."""
    ev = make_solver(params, solution_type).point(z)
    i = 0 if solution_type == "I" else 1
    return ev.d1[i] / ev.values[i]


# ---------------------------------------------------------------------------
# Flat space
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class FlatWave:
    """f1 = e^{i branch k3 z}, f2 = ratio * f1."""

    params: WaveParams
    branch: int
    k3: float
    ratio: complex

    @property
    def wavenumber(self) -> float:
        return self.branch * self.k3

    def values(self, z: Any) -> np.ndarray:
        f1 = np.exp(1j * self.wavenumber * np.asarray(z, dtype=float))
        return np.array([f1, self.ratio * f1])

    def derivative(self, z: Any, order: int = 1) -> np.ndarray:
        return (1j * self.wavenumber) ** order * self.values(z)


def flat_space_solution(params: WaveParams, branch: int) -> FlatWave:
    if branch not in (1, -1):
        raise ConfigError("branch must be +1 or -1", parameter="branch", value=branch)
    k3_sq = params.p**2 - params.kperp**2
    if k3_sq <= 0:
        raise ConfigError(
            "evanescent mode: eps^2 - m^2 - k1^2 - k2^2 must be positive", parameter="k", value=params.kperp, k3_sq=k3_sq
        )
    if params.kperp == 0:
        raise ConfigError("component ratio needs k != 0", parameter="k", value=0.0)
    k3 = math.sqrt(k3_sq)
    ratio = -(1j * branch * k3 - 1j * params.p) / complex(params.k2, params.k1)
    return FlatWave(params=params, branch=branch, k3=k3, ratio=ratio)


def flat_space_residual(params: WaveParams, branch: int, z_grid: Any, tol: float = FLAT_TOL) -> ResidualReport:
    """Flat first-order pair plus the second-order form for f1."""
    wave = flat_space_solution(params, branch)
    z = np.asarray(z_grid, dtype=float)
    f1, f2 = wave.values(z)
    d1, d2 = wave.derivative(z)
    dd1 = wave.derivative(z, 2)[0]
    p = params.p
    lines = [
        [d1, -1j * p * f1, complex(params.k2, params.k1) * f2],
        [d2, 1j * p * f2, -complex(-params.k2, params.k1) * f1],
        [dd1, (p * p - params.kperp**2) * f1],
    ]
    return report_from_terms(SystemId.DIRAC_FIRST_ORDER, z, lines, tol, label=f"flat:{branch:+d}")


# ---------------------------------------------------------------------------
# Flat limit R -> infinity
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class FlatLimitRow:
    radius: float
    solution_type: str
    wavenumber: float
    target: float
    error: float
    error_vs_p0: float
    capped: bool = False

    def as_dict(self) -> dict[str, Any]:
        return {
            "R": self.radius,
            "type": self.solution_type,
            "wavenumber": self.wavenumber,
            "target": self.target,
            "error": self.error,
            "error_vs_p0": self.error_vs_p0,
            "capped": self.capped,
        }


@dataclass
class FlatLimitTable:
    p0: float
    k3: float
    rows: list[FlatLimitRow] = field(default_factory=list)

    def errors(self, solution_type: str) -> list[float]:
        return [r.error for r in self.rows if r.solution_type == solution_type and not r.capped]

    def monotone(self, solution_type: str) -> bool:
        errs = self.errors(solution_type)
        return all(b < a for a, b in zip(errs, errs[1:]))

    def as_dicts(self) -> list[dict[str, Any]]:
        return [r.as_dict() for r in self.rows]


def flat_limit_params(E: float, M: float, P1: float, P2: float, radius: float, helicity: int = 1) -> WaveParams:
    """Dimensionless parameters eps = E R, m = M R, k = P R (units with hbar = c = 1)."""
    return WaveParams(E * radius, P1 * radius, P2 * radius, M * radius, helicity, radius)


def flat_limit_study(
    E: float,
    M: float,
    P1: float,
    P2: float,
    radii: Sequence[float],
    x3_grid: Any,
    types: Sequence[str] = ("I", "II"),
    helicity: int = 1,
) -> FlatLimitTable:
    """Local wavenumber of f1 along z = x3/R for growing R.

    The reference is the flat k3 = sqrt(p0^2 - P^2), signed +k3 for type I and
    -k3 for type II; ``error_vs_p0`` measures the same against +-p0. Radii
    where y leaves the kernel range are reported as capped rows.
    """
    if not (E > M >= 0):
        raise ConfigError("flat limit needs E > M >= 0", parameter="E", value=E, M=M)
    radii = [float(r) for r in radii]
    if any(b <= a for a, b in zip(radii, radii[1:])) or radii[0] <= 0:
        raise ConfigError("radii must be positive and increasing", parameter="radii", value=radii)
    p0 = math.sqrt(E * E - M * M)
    kperp = math.hypot(P1, P2)
    if kperp == 0 or kperp >= p0:
        raise ConfigError("flat limit needs 0 < |P| < p0", parameter="P", value=kperp, p0=p0)
    k3 = math.sqrt(p0 * p0 - kperp * kperp)
    x3 = np.asarray(x3_grid, dtype=float)
    table = FlatLimitTable(p0=p0, k3=k3)
    timer = Timer()
    with timer:
        for radius in radii:
            params = flat_limit_params(E, M, P1, P2, radius, helicity)
            z = x3 / radius
            y_max = float(params.y(z.max()))
            for solution_type in types:
                sign = 1 if solution_type == "I" else -1
                if y_max > FLAT_LIMIT_Y_MAX:
                    slog.warning("dirac.flat_limit.capped", R=radius, y_max=y_max)
                    table.rows.append(
                        FlatLimitRow(radius, solution_type, math.nan, sign * helicity * k3, math.nan, math.nan, True)
                    )
                    continue
                prof = PairSolver(params, solution_type).profile(z)
                local = np.imag(prof.log_derivative("f1")) / radius
                target = sign * helicity * k3
                table.rows.append(
                    FlatLimitRow(
                        radius=radius,
                        solution_type=solution_type,
                        wavenumber=float(local.mean()),
                        target=target,
                        error=float(np.max(np.abs(local - target)) / p0),
                        error_vs_p0=float(np.max(np.abs(local - sign * helicity * p0)) / p0),
                    )
                )
    slog.debug("dirac.flat_limit.ok", rows=len(table.rows), latency_ms=timer.elapsed_ms)
    return table


def flat_series_limit(radius: float, p0: float, kperp: float, n_terms: int = 4) -> dict[str, Any]:
    """Leading Phi(a,2a,y) coefficients at a = i R p0, y = 2 R kperp against (R kperp)^n/n!.

    The n-th ratio is (a)_n 2^n/(2a)_n, which tends to 1 as R grows.
    """
    a = 1j * radius * p0
    ratios = []
    r = 1 + 0j
    for n in range(n_terms):
        r *= 2 * (a + n) / (2 * a + n)
        ratios.append(r)
    return {
        "R": radius,
        "y": 2 * radius * kperp,
        "ratios": ratios,
        "max_deviation": max(abs(v - 1) for v in ratios),
    }


# ---------------------------------------------------------------------------
# Nonrelativistic reduction
# ---------------------------------------------------------------------------
def pauli_params(m: float, E: float, k1: float, k2: float, helicity: int = 1) -> WaveParams:
    """eps = m + E with kinetic energy E > 0."""
    if not E > 0:
        raise ConfigError("kinetic energy must be positive", parameter="E", value=E)
    return WaveParams(m + E, k1, k2, m, helicity)


@dataclass
class PauliReport:
    exact: ResidualReport
    shifted: ResidualReport
    second_order: ResidualReport
    second_order_approx: ResidualReport
    identity: ResidualReport
    elimination_exact: float
    elimination_approx: float
    small_large_ratio: float
    ratio_estimate: float
    p_gap: float
    p_gap_bound: float

    @property
    def passed(self) -> bool:
        return (
            self.exact.passed
            and self.shifted.passed
            and self.second_order.passed
            and self.identity.passed
            and self.elimination_exact < DEFAULT_TOL
            and self.p_gap < self.p_gap_bound
        )

    def as_dict(self) -> dict[str, Any]:
        return {
            "exact": self.exact.as_dict(),
            "shifted": self.shifted.as_dict(),
            "second_order": self.second_order.as_dict(),
            "second_order_approx": self.second_order_approx.as_dict(),
            "identity": self.identity.as_dict(),
            "elimination_exact": self.elimination_exact,
            "elimination_approx": self.elimination_approx,
            "small_large_ratio": self.small_large_ratio,
            "ratio_estimate": self.ratio_estimate,
            "p_gap": self.p_gap,
            "p_gap_bound": self.p_gap_bound,
            "passed": self.passed,
        }


def _big_small_system(z, f, F, g, G, df, dF, dg, dG, u, v, minus, plus):
    ez = np.exp(z)
    return [
        [dG, -G, -ez * v * g, minus * F],
        [dF, -F, -ez * v * f, -plus * G],
        [dg, -g, ez * u * G, -minus * f],
        [df, -f, ez * u * F, plus * g],
    ]


def pauli_reduction_check(
    params: WaveParams,
    z_grid: Any,
    solution_type: str = "I",
    tol: float = DEFAULT_TOL,
    perturbation: float = 0.0,
) -> PauliReport:
    """Big/small components f, F, g, G of a Dirac solution and the reduced equations they obey.

    ``identity`` applies the factorized second-order operator to (f1, f2) with
    second derivatives eliminated through the first-order system, so it
    vanishes to rounding for a true solution and not otherwise.
    ``perturbation`` scales the relative factor as in ``first_order_residual``.
    """
    factor: Optional[complex] = None
    if params.kperp != 0:
        factor = relative_factor(solution_type, params.a, params.coupling) * (1 + perturbation)
    prof = _profile(params, solution_type, z_grid, factor)
    z = prof.z
    m = params.m
    E = params.epsilon - m
    f1, f2, f3, f4 = prof.values
    d1, d2, d3, d4 = prof.d1
    dd1, dd2 = prof.d2[0], prof.d2[1]

    f, F = (f1 + f3) / 2, (f2 + f4) / 2
    g, G = (f1 - f3) / 2j, (f2 - f4) / 2j
    df, dF = (d1 + d3) / 2, (d2 + d4) / 2
    dg, dG = (d1 - d3) / 2j, (d2 - d4) / 2j

    u = complex(params.k2, params.k1)
    v = complex(-params.k2, params.k1)
    ez = np.exp(z)
    sid = SystemId.DIRAC_FIRST_ORDER

    exact = report_from_terms(
        sid, z, _big_small_system(z, f, F, g, G, df, dF, dg, dG, u, v, params.epsilon - m, params.epsilon + m), tol,
        label="pauli:exact",
    )
    shifted = report_from_terms(
        sid, z, _big_small_system(z, f, F, g, G, df, dF, dg, dG, u, v, E, E + 2 * m), tol, label="pauli:shifted"
    )

    def _elimination(den: float) -> float:
        G_el = ((dF - F) - ez * v * f) / den
        g_el = -((df - f) + ez * u * F) / den
        return max(
            float(np.max(np.abs(G - G_el)) / np.max(np.abs(G))),
            float(np.max(np.abs(g - g_el)) / np.max(np.abs(g))),
        )

    p = params.p
    barrier = params.kperp**2 * np.exp(2 * z)

    def _second(p_sq: complex) -> list[list[np.ndarray]]:
        return [
            [dd1, -2 * d1, f1, p_sq * f1, -barrier * f1, ez * u * f2],
            [dd2, -2 * d2, f2, p_sq * f2, -barrier * f2, -ez * v * f1],
        ]

    second = report_from_terms(sid, z, _second(p * p), tol, label="pauli:second-order")
    second_approx = report_from_terms(sid, z, _second(2 * m * E), E / m, label="pauli:second-order-2mE")

    # (D-1-ip)(D-1+ip) f - e^{2z}|k|^2 f with D^2 f taken from the first-order
    # system and Df from the solution itself; zero only if that system holds.
    dd1_sys = (1 + 1j * p) * d1 - ez * u * (f2 + d2)
    dd2_sys = (1 - 1j * p) * d2 + ez * v * (f1 + d1)
    identity = report_from_terms(
        sid,
        z,
        [
            [dd1_sys, -2 * d1, (1 + p * p) * f1, -barrier * f1, ez * u * f2],
            [dd2_sys, -2 * d2, (1 + p * p) * f2, -barrier * f2, -ez * v * f1],
        ],
        IDENTITY_TOL,
        label="pauli:identity",
    )

    mask = np.abs(f) > 0
    report = PauliReport(
        exact=exact,
        shifted=shifted,
        second_order=second,
        second_order_approx=second_approx,
        identity=identity,
        elimination_exact=_elimination(E + 2 * m),
        elimination_approx=_elimination(2 * m),
        small_large_ratio=float(np.max(np.abs(g[mask]) / np.abs(f[mask]))),
        ratio_estimate=abs(p) / (2 * m),
        p_gap=abs(math.sqrt(2 * m * E) - abs(p)) / abs(p),
        p_gap_bound=E / (4 * m),
    )
    slog.debug("dirac.pauli.ok", passed=report.passed, identity=identity.max_rel_residual)
    return report


def small_y_power(solution_type: str, params: WaveParams, y: float) -> complex:
    """Leading small-y term of the leading component: M+ y^{1+a} (I) or y^{1-a} (II)."""
    a = params.a
    if solution_type == "I":
        return relative_factor("I", a, params.coupling) * power(y, 1 + a)
    return power(y, 1 - a)
