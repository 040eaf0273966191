"""
Massless two-component (Weyl) spinor.

The separated pair is the Dirac upper pair with p -> -eps (helicity -1,
the default) or p -> +eps, so the builders are shared with ``solvers.dirac``:

    (D - 1 + i eps) h1 + e^z (i k1 + k2) h2 = 0
    (D - 1 - i eps) h2 - e^z (i k1 - k2) h1 = 0

The solution depends on (eps, k1, k2) only.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np

from solvers.base_solver import WaveParams
from solvers.dirac import (
    DEFAULT_TOL,
    IndependenceReport,
    PairSolver,
    first_order_rhs,
    first_order_terms,
    independence_determinant,
    relative_factor,
)
from tools.errors import ConfigError
from tools.oracle import ResidualReport, SystemId, SystemSpec, register_system, relative_residual, residual_from_derivatives


@dataclass(frozen=True)
class WeylParams:
    epsilon: float
    k1: float
    k2: float
    helicity: int = -1

    def __post_init__(self) -> None:
        for name in ("epsilon", "k1", "k2"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError("parameter must be finite", parameter=name, value=getattr(self, name))
        if self.epsilon <= 0:
            raise ConfigError("weyl energy must be positive", parameter="epsilon", value=self.epsilon)
        if self.helicity not in (1, -1):
            raise ConfigError("helicity must be +1 or -1", parameter="helicity", value=self.helicity)

    @classmethod
    def from_wave(cls, params: WaveParams) -> "WeylParams":
        """Drop the mass; only (eps, k1, k2) and the helicity survive."""
        return cls(params.epsilon, params.k1, params.k2, params.helicity)

    @property
    def p(self) -> float:
        return self.helicity * self.epsilon

    @property
    def a(self) -> complex:
        return 1j * self.p

    @property
    def c(self) -> complex:
        return 2 * self.a

    @property
    def kperp(self) -> float:
        return math.hypot(self.k1, self.k2)

    @property
    def coupling(self) -> complex:
        if self.kperp == 0:
            return 1 + 0j
        return complex(self.k2, self.k1) / self.kperp

    @property
    def alpha_phase(self) -> complex:
        if self.kperp == 0:
            return 1 + 0j
        return cmath.sqrt(complex(self.k2, self.k1) / complex(self.k2, -self.k1))

    def y(self, z: Any) -> Any:
        return 2 * self.kperp * np.exp(z)

    def as_dict(self) -> dict[str, Any]:
        return {"epsilon": self.epsilon, "k1": self.k1, "k2": self.k2, "helicity": self.helicity, "p": self.p}


class WeylSolver(PairSolver):
    name = "weyl"
    labels = ("h1", "h2")
    system = SystemId.WEYL

    def __init__(self, params: WeylParams, solution_type: str = "I", factor: Optional[complex] = None) -> None:
        super().__init__(params, solution_type, factor, equation="weyl")


def build_weyl(solution_type: str, params: WeylParams, z: float) -> tuple[complex, complex]:
    h1, h2 = WeylSolver(params, solution_type).point(z).values
    return h1, h2


def _terms_weyl(t, values, d1, d2, params: WeylParams):
    return first_order_terms(t, values, d1, params.p, params.k1, params.k2)


register_system(
    SystemSpec(
        system=SystemId.WEYL,
        n_functions=2,
        order=1,
        terms=_terms_weyl,
        rhs=first_order_rhs,
        wavenumber=lambda params: params.epsilon,
        local_rate=lambda t, params: np.maximum(params.epsilon, params.kperp * np.exp(t)),
    )
)


def weyl_system_residual(
    solution_type: str,
    params: WeylParams,
    z_grid: Any,
    tol: float = DEFAULT_TOL,
    perturbation: float = 0.0,
) -> ResidualReport:
    factor = relative_factor(solution_type, params.a, params.coupling) * (1 + perturbation)
    z = np.asarray(z_grid, dtype=float)
    prof = WeylSolver(params, solution_type, factor).profile(z)
    return residual_from_derivatives(
        SystemId.WEYL, z, prof.values, prof.d1, None, params, tol=tol, label=f"weyl:{solution_type}"
    )


def operator_agreement(params: WeylParams, z_grid: Any, seed: int = 0) -> float:
    """Largest gap between the weyl and dirac residual operators on the same random pair.

    The dirac operator is evaluated at m = 0 with p = helicity * eps.
    """
    z = np.asarray(z_grid, dtype=float)
    rng = np.random.default_rng(seed)
    values = rng.standard_normal((2, len(z))) + 1j * rng.standard_normal((2, len(z)))
    d1 = rng.standard_normal((2, len(z))) + 1j * rng.standard_normal((2, len(z)))
    dirac_params = WaveParams(params.epsilon, params.k1, params.k2, 0.0, params.helicity)
    mine, _ = relative_residual(z, _terms_weyl(z, values, d1, None, params))
    theirs, _ = relative_residual(z, first_order_terms(z, values, d1, dirac_params.p, dirac_params.k1, dirac_params.k2))
    return float(np.max(np.abs(mine - theirs)))


def dirac_agreement(solution_type: str, params: WeylParams, z_grid: Any) -> float:
    """Component-wise relative gap to the massless dirac pair builder."""
    z = np.asarray(z_grid, dtype=float)
    mine = WeylSolver(params, solution_type).profile(z).values
    dirac_params = WaveParams(params.epsilon, params.k1, params.k2, 0.0, params.helicity)
    theirs = PairSolver(dirac_params, solution_type).profile(z).values
    return float(np.max(np.abs(mine - theirs) / np.abs(theirs)))


def weyl_independence(params: WeylParams, z_grid: Any) -> IndependenceReport:
    return independence_determinant(params, z_grid, equation="weyl")
