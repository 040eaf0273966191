"""
Independent numerical checks for the closed-form solutions.

Each equation family is a ``SystemId`` bound to a ``SystemSpec`` that the
owning solver module registers on import (the same registry idea as a tool
table: name -> callable). The oracle then offers three operations:

    integrate(system, params, z_start, z_end, initial_state)  adaptive RK with dense output
    residual_norm(system, sampler, z_grid, params)             max normalized equation residual
    compare(sampler, trajectory, z_grid)                       max component-wise deviation
"""

from __future__ import annotations

import enum
import importlib
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

from tools.errors import ConfigError, IntegrationError, UnderResolvedGridError
from tools.log_context import Timer, slog

RTOL = 1e-12
ATOL = 1e-14
COMPARE_FLOOR = 1e-13
POINTS_PER_WAVELENGTH = 16
# largest h * local_rate used by the finite-difference stencils
FD_STEP_CAP = 0.05


class SystemId(str, enum.Enum):
    SCALAR_BARRIER = "scalar-barrier"
    SCALAR_SCHRODINGER = "scalar-schrodinger"
    DIRAC_FIRST_ORDER = "dirac-first-order"
    DIRAC_SECOND_ORDER = "dirac-second-order"
    WEYL = "weyl"
    PHI_SYSTEM = "phi-system"
    KUMMER_ODE = "kummer-ode"
    BESSEL_ODE = "bessel-ode"


# Terms(t, values, d1, d2, params) -> one list of term arrays per equation.
TermsFn = Callable[[np.ndarray, np.ndarray, np.ndarray, np.ndarray, Any], list[list[np.ndarray]]]
# Rhs(t, state, params) -> d state / dt for the first-order form of the system.
RhsFn = Callable[[float, np.ndarray, Any], np.ndarray]


@dataclass(frozen=True)
class SystemSpec:
    """Coefficients of one equation family.

    ``n_functions`` unknown functions of order ``order``; the integration
    state stacks (f, f') per function for second-order systems.
    """

    system: SystemId
    n_functions: int
    order: int
    terms: TermsFn
    rhs: RhsFn
    wavenumber: Callable[[Any], float]
    local_rate: Callable[[np.ndarray, Any], np.ndarray]

    @property
    def state_dim(self) -> int:
        return self.n_functions * self.order


@dataclass
class ResidualReport:
    system: SystemId
    grid: np.ndarray
    max_rel_residual: float
    argmax_z: float
    tolerance_used: float
    per_equation: list[float] = field(default_factory=list)
    label: str = ""

    def __post_init__(self) -> None:
        if self.max_rel_residual < 0:
            raise ValueError("residual must be non-negative")
        if len(self.grid) > 1 and np.any(np.diff(self.grid) <= 0):
            raise ConfigError("residual grid must be strictly increasing")

    @property
    def passed(self) -> bool:
        return bool(self.max_rel_residual < self.tolerance_used)

    def as_dict(self) -> dict[str, Any]:
        return {
            "system": self.system.value,
            "label": self.label,
            "points": int(len(self.grid)),
            "z_min": float(self.grid[0]),
            "z_max": float(self.grid[-1]),
            "max_rel_residual": float(self.max_rel_residual),
            "argmax_z": float(self.argmax_z),
            "tolerance": float(self.tolerance_used),
            "per_equation": [float(v) for v in self.per_equation],
            "passed": self.passed,
        }


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------
_REGISTRY: dict[SystemId, SystemSpec] = {}
_OWNER_MODULES = ("solvers.scalar", "solvers.dirac", "solvers.weyl", "solvers.bessel_repr")


def register_system(spec: SystemSpec) -> None:
    _REGISTRY[spec.system] = spec


def get_system(system: SystemId) -> SystemSpec:
    if system not in _REGISTRY:
        for name in _OWNER_MODULES:
            importlib.import_module(name)
    return _REGISTRY[SystemId(system)]


# ---------------------------------------------------------------------------
# Residuals
# ---------------------------------------------------------------------------
def relative_residual(t: np.ndarray, equations: list[list[np.ndarray]]) -> tuple[np.ndarray, list[float]]:
    """Normalized residual per grid point (max over equations) and per-equation maxima.

    Each equation's residual at a point is |sum of terms| / max |term|.
    """
    per_point = np.zeros(len(t))
    per_equation: list[float] = []
    for terms in equations:
        stacked = np.array([np.broadcast_to(term, t.shape) for term in terms])
        scale = np.max(np.abs(stacked), axis=0)
        scale = np.where(scale > 0, scale, 1.0)
        rel = np.abs(stacked.sum(axis=0)) / scale
        per_equation.append(float(np.max(rel)))
        per_point = np.maximum(per_point, rel)
    return per_point, per_equation


def evaluate_terms(
    system: SystemId,
    t: np.ndarray,
    values: np.ndarray,
    d1: np.ndarray,
    d2: Optional[np.ndarray],
    params: Any,
) -> tuple[np.ndarray, list[float]]:
    spec = get_system(system)
    if d2 is None:
        d2 = np.zeros_like(values)
    return relative_residual(t, spec.terms(t, values, d1, d2, params))


def report_from_terms(
    system: SystemId, t: np.ndarray, equations: list[list[np.ndarray]], tol: float, label: str = ""
) -> ResidualReport:
    """Residual report for equations assembled outside the registry."""
    t = np.asarray(t, dtype=float)
    per_point, per_equation = relative_residual(t, equations)
    return _report(system, t, per_point, per_equation, tol, label)


def _report(system: SystemId, t: np.ndarray, per_point: np.ndarray, per_equation: list[float], tol: float, label: str) -> ResidualReport:
    idx = int(np.argmax(per_point))
    return ResidualReport(
        system=system,
        grid=t,
        max_rel_residual=float(per_point[idx]),
        argmax_z=float(t[idx]),
        tolerance_used=tol,
        per_equation=per_equation,
        label=label,
    )


def residual_from_derivatives(
    system: SystemId,
    t: np.ndarray,
    values: np.ndarray,
    d1: np.ndarray,
    d2: Optional[np.ndarray],
    params: Any,
    tol: float = 1e-8,
    label: str = "",
) -> ResidualReport:
    """Residual from analytically supplied derivatives (shape: functions x points)."""
    t = np.asarray(t, dtype=float)
    per_point, per_equation = evaluate_terms(system, t, values, d1, d2, params)
    return _report(system, t, per_point, per_equation, tol, label)


def fd_derivatives(
    sampler: Callable[[np.ndarray], np.ndarray], t: np.ndarray, steps: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Fourth-order central differences of a sampler, one step per point."""
    f0 = sampler(t)
    fp1, fm1 = sampler(t + steps), sampler(t - steps)
    fp2, fm2 = sampler(t + 2 * steps), sampler(t - 2 * steps)
    h = steps[np.newaxis, :]
    d1 = (fm2 - 8 * fm1 + 8 * fp1 - fp2) / (12 * h)
    d2 = (-fm2 + 16 * fm1 - 30 * f0 + 16 * fp1 - fp2) / (12 * h * h)
    return f0, d1, d2


def check_resolution(system: SystemId, t: np.ndarray, params: Any) -> None:
    k = abs(get_system(system).wavenumber(params))
    if k == 0 or len(t) < 2:
        return
    spacing = float(np.max(np.diff(t)))
    wavelength = 2 * np.pi / k
    if spacing > wavelength / POINTS_PER_WAVELENGTH:
        raise UnderResolvedGridError(
            "grid under-resolves the oscillation",
            spacing=spacing,
            wavelength=wavelength,
            points_per_wavelength=POINTS_PER_WAVELENGTH,
        )


def residual_norm(
    system: SystemId,
    sampler: Callable[[np.ndarray], np.ndarray],
    z_grid: np.ndarray,
    params: Any,
    tol: float = 1e-6,
    fd_step: Optional[float] = None,
    label: str = "",
) -> ResidualReport:
    """Residual of ``system`` for a sampler by fourth-order central differences.

    ``sampler(t)`` returns an array (functions x len(t)). Without ``fd_step``
    the step is the grid spacing, capped where the solution varies fast.
    """
    t = np.asarray(z_grid, dtype=float)
    check_resolution(system, t, params)
    spec = get_system(system)
    if fd_step is None:
        spacing = float(np.min(np.diff(t))) if len(t) > 1 else FD_STEP_CAP
        rate = np.maximum(np.asarray(spec.local_rate(t, params), dtype=float), 1.0)
        steps = np.minimum(spacing, FD_STEP_CAP / rate)
    else:
        steps = np.full(len(t), float(fd_step))
    values, d1, d2 = fd_derivatives(sampler, t, steps)
    per_point, per_equation = evaluate_terms(system, t, values, d1, d2, params)
    return _report(system, t, per_point, per_equation, tol, label)


# ---------------------------------------------------------------------------
# Integration
# ---------------------------------------------------------------------------
@dataclass
class Trajectory:
    system: SystemId
    z_start: float
    z_end: float
    _dense: Any
    n_functions: int
    order: int
    nfev: int = 0

    def state(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(self._dense(np.asarray(z, dtype=float)))

    def __call__(self, z: np.ndarray) -> np.ndarray:
        """Function values only (functions x points)."""
        s = self.state(z)
        return s[:: self.order] if self.order > 1 else s


def integrate(
    system: SystemId,
    params: Any,
    z_start: float,
    z_end: float,
    initial_state: np.ndarray,
    method: str = "DOP853",
    rtol: float = RTOL,
    atol: float = ATOL,
) -> Trajectory:
    """Adaptive embedded Runge-Kutta integration with dense output."""
    spec = get_system(system)
    y0 = np.asarray(initial_state, dtype=complex).ravel()
    if y0.shape[0] != spec.state_dim:
        raise ConfigError(
            "initial state has the wrong dimension",
            system=system.value,
            expected=spec.state_dim,
            got=y0.shape[0],
        )
    timer = Timer()
    with timer:
        sol = solve_ivp(
            lambda t, y: spec.rhs(t, y, params),
            (float(z_start), float(z_end)),
            y0,
            method=method,
            rtol=rtol,
            atol=atol,
            dense_output=True,
        )
    if not sol.success:
        z_fail = float(sol.t[-1]) if len(sol.t) else float(z_start)
        slog.error("oracle.integrate.error", system=system.value, z=z_fail, message=sol.message)
        raise IntegrationError("integration failed", system=system.value, z=z_fail, reason=sol.message)
    slog.debug(
        "oracle.integrate.ok",
        system=system.value,
        z_start=z_start,
        z_end=z_end,
        nfev=sol.nfev,
        latency_ms=timer.elapsed_ms,
    )
    return Trajectory(
        system=system,
        z_start=float(z_start),
        z_end=float(z_end),
        _dense=sol.sol,
        n_functions=spec.n_functions,
        order=spec.order,
        nfev=int(sol.nfev),
    )


def compare(
    closed_form: Callable[[np.ndarray], np.ndarray],
    trajectory: Callable[[np.ndarray], np.ndarray],
    z_grid: np.ndarray,
    floor: float = COMPARE_FLOOR,
) -> float:
    """Max over the grid of component-wise relative deviation."""
    t = np.asarray(z_grid, dtype=float)
    a = np.atleast_2d(closed_form(t))
    b = np.atleast_2d(trajectory(t))
    den = np.maximum(np.abs(a), floor)
    return float(np.max(np.abs(a - b) / den))


def first_order_state(values: np.ndarray, d1: np.ndarray, order: int) -> np.ndarray:
    """Stack values (and first derivatives for order 2) into an integration state at one point."""
    if order == 1:
        return np.asarray(values, dtype=complex)
    out = []
    for v, d in zip(values, d1):
        out.extend([v, d])
    return np.asarray(out, dtype=complex)
