"""
Shared pieces of every closed-form solver: parameter types, the per-point
evaluation loop, grid profiles and local exponent extraction.
"""

from __future__ import annotations

import cmath
import concurrent.futures
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Literal, Optional, Sequence

import numpy as np

from tools import special_functions as sf
from tools.errors import ConfigError, HSpinorError
from tools.log_context import Timer, in_context, slog

# Shared pool for grid evaluation. Suites use their own pool, so a suite job
# waiting on a grid never starves this one.
_GRID_EXECUTOR = concurrent.futures.ThreadPoolExecutor(max_workers=4)

MIN_POINTS = 16

Equation = Literal["scalar", "dirac", "weyl"]
SolutionType = Literal["I", "II"]
Representation = Literal["kummer", "bessel", "hankel", "neumann"]

EQUATIONS: tuple[str, ...] = ("scalar", "dirac", "weyl")
SOLUTION_TYPES: tuple[str, ...] = ("I", "II")
REPRESENTATIONS: tuple[str, ...] = ("kummer", "bessel", "hankel", "neumann")


def _finite(**values: float) -> None:
    for name, v in values.items():
        if not math.isfinite(v):
            raise ConfigError("parameter must be finite", parameter=name, value=v)


@dataclass(frozen=True)
class WaveParams:
    """Quantum numbers (epsilon, k1, k2, m, helicity) of one spinor family.

    Curvature radius is 1 everywhere; ``radius`` is carried for metadata and
    the flat-limit rescaling only.
    """

    epsilon: float
    k1: float
    k2: float
    m: float = 0.0
    helicity: int = 1
    radius: float = 1.0

    def __post_init__(self) -> None:
        _finite(epsilon=self.epsilon, k1=self.k1, k2=self.k2, m=self.m)
        if self.helicity not in (1, -1):
            raise ConfigError("helicity must be +1 or -1", parameter="helicity", value=self.helicity)
        if self.m < 0:
            raise ConfigError("mass must be non-negative", parameter="m", value=self.m)
        if self.epsilon**2 <= self.m**2:
            raise ConfigError(
                "propagating regime needs epsilon^2 > m^2",
                parameter="epsilon",
                value=self.epsilon,
                m=self.m,
            )

    @property
    def p(self) -> float:
        """Helicity eigenvalue, p = helicity * sqrt(eps^2 - m^2)."""
        return self.helicity * math.sqrt((self.epsilon - self.m) * (self.epsilon + self.m))

    @property
    def a(self) -> complex:
        return 1j * self.p

    @property
    def kperp(self) -> float:
        return math.hypot(self.k1, self.k2)

    @property
    def lam(self) -> float:
        return self.kperp / 2

    @property
    def alpha_phase(self) -> complex:
        """e^{i alpha} = principal sqrt((k2 + i k1)/(k2 - i k1))."""
        if self.kperp == 0:
            return 1 + 0j
        return cmath.sqrt(complex(self.k2, self.k1) / complex(self.k2, -self.k1))

    @property
    def coupling(self) -> complex:
        """Unit phase w = (k2 + i k1)/|k| of the transverse coupling."""
        if self.kperp == 0:
            return 1 + 0j
        return complex(self.k2, self.k1) / self.kperp

    @property
    def small_ratio(self) -> float:
        """(eps - p)/m, written as m/(eps + p) when that is better conditioned."""
        if self.m == 0:
            raise ConfigError("ratio (eps - p)/m undefined for m = 0", parameter="m", value=self.m)
        if self.p > 0:
            return self.m / (self.epsilon + self.p)
        return (self.epsilon - self.p) / self.m

    @property
    def order(self) -> complex:
        """Bessel order nu = i p - 1/2 (nu = -i|p| - 1/2 for helicity -1)."""
        return 1j * self.p - 0.5

    def y(self, z: Any) -> Any:
        return 2 * self.kperp * np.exp(z)

    def turning_point(self) -> float:
        """z where |p| = |k| e^z."""
        if self.kperp == 0:
            raise ConfigError("no turning point on the axis", parameter="k", value=0.0)
        return math.log(abs(self.p) / self.kperp)

    def with_helicity(self, helicity: int) -> "WaveParams":
        return WaveParams(self.epsilon, self.k1, self.k2, self.m, helicity, self.radius)

    def as_dict(self) -> dict[str, Any]:
        return {
            "epsilon": self.epsilon,
            "k1": self.k1,
            "k2": self.k2,
            "m": self.m,
            "helicity": self.helicity,
            "p": self.p,
        }


@dataclass(frozen=True)
class SolutionSelector:
    equation: str = "dirac"
    type: str = "I"
    representation: str = "kummer"
    variant: Optional[str] = None

    def __post_init__(self) -> None:
        if self.equation not in EQUATIONS:
            raise ConfigError("unknown equation", parameter="equation", value=self.equation)
        if self.type not in SOLUTION_TYPES:
            raise ConfigError("type must be I or II", parameter="type", value=self.type)
        if self.representation not in REPRESENTATIONS:
            raise ConfigError("unknown representation", parameter="rep", value=self.representation)
        if self.representation != "kummer" and self.equation == "scalar":
            raise ConfigError("scalar solutions only have the kummer form", parameter="rep", value=self.representation)

    def as_dict(self) -> dict[str, Any]:
        out = {"equation": self.equation, "type": self.type, "representation": self.representation}
        if self.variant is not None:
            out["variant"] = self.variant
        return out


@dataclass(frozen=True)
class SpinorSample:
    z: float
    components: tuple[complex, ...]
    labels: tuple[str, ...]

    def __getitem__(self, label: str) -> complex:
        return self.components[self.labels.index(label)]


@dataclass(frozen=True)
class PointEval:
    """Values and first/second z-derivatives of every component at one z."""

    values: tuple[complex, ...]
    d1: tuple[complex, ...]
    d2: tuple[complex, ...] = ()


@dataclass
class Profile:
    z: np.ndarray
    values: np.ndarray
    d1: np.ndarray
    d2: Optional[np.ndarray]
    labels: tuple[str, ...]
    meta: dict[str, Any] = field(default_factory=dict)

    def __getitem__(self, label: str) -> np.ndarray:
        return self.values[self.labels.index(label)]

    def derivative(self, label: str, order: int = 1) -> np.ndarray:
        src = self.d1 if order == 1 else self.d2
        if src is None:
            raise HSpinorError("second derivatives were not computed", label=label)
        return src[self.labels.index(label)]

    def log_derivative(self, label: str) -> np.ndarray:
        """d ln f/dz: real part is the envelope slope, imaginary part the wavenumber."""
        return log_derivative(self[label], self.derivative(label))

    def samples(self) -> list[SpinorSample]:
        return [
            SpinorSample(z=float(z), components=tuple(complex(v) for v in self.values[:, i]), labels=self.labels)
            for i, z in enumerate(self.z)
        ]


# ---------------------------------------------------------------------------
# Grids and exponents
# ---------------------------------------------------------------------------
def make_grid(z_min: float, z_max: float, points: int) -> np.ndarray:
    if points < MIN_POINTS:
        raise ConfigError("grid needs at least 16 points", parameter="points", value=points)
    if not z_min < z_max:
        raise ConfigError("grid needs z_min < z_max", parameter="zmin", value=z_min, zmax=z_max)
    return np.linspace(z_min, z_max, points)


def log_derivative(values: np.ndarray, d1: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.asarray(d1, dtype=complex) / values


def numeric_log_derivative(z: np.ndarray, values: np.ndarray) -> np.ndarray:
    """d ln f/dz from samples alone: gradient of ln|f| plus i times the unwrapped phase slope."""
    values = np.asarray(values, dtype=complex)
    slope = np.gradient(np.log(np.abs(values)), z)
    wavenumber = np.gradient(np.unwrap(np.angle(values)), z)
    return slope + 1j * wavenumber


def unwrapped_phase(values: np.ndarray) -> np.ndarray:
    return np.unwrap(np.angle(np.asarray(values, dtype=complex)))


def power(y: complex, b: complex) -> complex:
    """y^b on the principal branch."""
    return cmath.exp(b * cmath.log(y))


# ---------------------------------------------------------------------------
# Confluent building block g = e^{-y/2} y^b K(alpha, gamma, y), D = y d/dy = d/dz
# ---------------------------------------------------------------------------
def confluent_point(
    kind: str, alpha: complex, gamma: complex, b: complex, y: float, sign: int = 1
) -> tuple[complex, complex, complex]:
    """(g, Dg, D^2 g) for g = e^{-sign*y/2} y^b K(alpha, gamma, sign*y).

    K is Phi (kind "phi") or Psi (kind "psi", sign +1 only). Scaled kernels
    keep the product finite; derivatives come from the contiguous relations
    Phi' = (alpha/gamma) Phi(alpha+1, gamma+1) and Psi' = -alpha Psi(alpha+1, gamma+1).
    """
    arg = sign * y
    if kind == "phi":
        s0 = sf.kummer_scaled(alpha, gamma, arg)
        s1 = sign * alpha / gamma * sf.kummer_scaled(alpha + 1, gamma + 1, arg)
        s2 = alpha * (alpha + 1) / (gamma * (gamma + 1)) * sf.kummer_scaled(alpha + 2, gamma + 2, arg)
    elif kind == "psi" and sign == 1:
        s0 = sf.tricomi_scaled(alpha, gamma, y)
        s1 = -alpha * sf.tricomi_scaled(alpha + 1, gamma + 1, y)
        s2 = alpha * (alpha + 1) * sf.tricomi_scaled(alpha + 2, gamma + 2, y)
    else:
        raise ValueError(f"unsupported confluent kind {kind!r} with sign {sign}")
    pw = power(y, b)
    lead = b - sign * y / 2
    h = lead * s0 + y * s1
    dh = -sign * s0 / 2 + lead * s1 + s1 + y * s2
    return pw * s0, pw * h, pw * (lead * h + y * dh)


# ---------------------------------------------------------------------------
# Base solver
# ---------------------------------------------------------------------------
class BaseSolver:
    """Evaluates a closed-form family component by component on z grids.

    Subclasses set ``labels`` and implement ``point(z)``.
    """

    name: str = "solver"
    labels: tuple[str, ...] = ()
    system: Any = None

    def __init__(self, params: Any, selector: SolutionSelector) -> None:
        self.params = params
        self.selector = selector

    def point(self, z: float) -> PointEval:
        raise NotImplementedError

    def describe(self) -> dict[str, Any]:
        return {"solver": self.name, **self.selector.as_dict(), **self.params.as_dict()}

    def _evaluate(self, zs: Sequence[float]) -> list[PointEval]:
        return list(_GRID_EXECUTOR.map(in_context(self.point), (float(z) for z in zs)))

    def profile(self, z_grid: Sequence[float]) -> Profile:
        z = np.asarray(z_grid, dtype=float)
        timer = Timer()
        try:
            with timer:
                points = self._evaluate(z)
        except HSpinorError as exc:
            slog.error("solver.profile.error", solver=self.name, error=str(exc), **self.selector.as_dict())
            raise
        values = np.array([p.values for p in points], dtype=complex).T
        d1 = np.array([p.d1 for p in points], dtype=complex).T
        d2 = np.array([p.d2 for p in points], dtype=complex).T if points and points[0].d2 else None
        slog.debug("solver.profile.ok", solver=self.name, points=len(z), latency_ms=timer.elapsed_ms)
        return Profile(z=z, values=values, d1=d1, d2=d2, labels=self.labels, meta=self.describe())

    def sample(self, z: float) -> SpinorSample:
        return SpinorSample(z=float(z), components=self.point(float(z)).values, labels=self.labels)

    def sampler(self, labels: Optional[Sequence[str]] = None) -> Callable[[np.ndarray], np.ndarray]:
        """Values-only callable (components x points) for the finite-difference oracle."""
        idx = [self.labels.index(lbl) for lbl in labels] if labels else list(range(len(self.labels)))

        def _sample(zs: np.ndarray) -> np.ndarray:
            flat = np.asarray(zs, dtype=float).ravel()
            points = self._evaluate(flat)
            return np.array([[p.values[i] for p in points] for i in idx], dtype=complex)

        return _sample
