"""
Coordinate maps of the hyperbolic space (curvature radius 1).

quasi-cartesian (x, y, z)  <->  hyperboloid u0^2 - u^2 = 1  <->  Poincare ball |q| < 1
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from tools.errors import ConfigError, NumericalError

BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class QuasiCartesian:
    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise ConfigError("quasi-cartesian point must be finite", x=self.x, y=self.y, z=self.z)


@dataclass(frozen=True)
class HyperboloidPoint:
    u0: float
    u1: float
    u2: float
    u3: float

    def invariant(self) -> float:
        """u0^2 - u1^2 - u2^2 - u3^2, equal to 1 on the sheet."""
        return self.u0**2 - self.u1**2 - self.u2**2 - self.u3**2


@dataclass(frozen=True)
class PoincarePoint:
    q1: float
    q2: float
    q3: float

    def norm_squared(self) -> float:
        return self.q1**2 + self.q2**2 + self.q3**2


def _exp(z: float) -> float:
    try:
        return math.exp(z)
    except OverflowError:
        raise NumericalError("exp(z) overflows binary64", z=z) from None


def to_hyperboloid(p: QuasiCartesian) -> HyperboloidPoint:
    ez = _exp(p.z)
    emz = _exp(-p.z)
    r2 = p.x * p.x + p.y * p.y
    return HyperboloidPoint(
        u0=0.5 * ((ez + emz) + r2 * emz),
        u1=p.x * emz,
        u2=p.y * emz,
        u3=0.5 * ((ez - emz) + r2 * emz),
    )


def to_poincare(p: QuasiCartesian) -> PoincarePoint:
    e2z = _exp(2 * p.z)
    r2 = p.x * p.x + p.y * p.y
    den = r2 + e2z + 1
    # q3 written as 1 - 2/den keeps the ball invariant strict for large z
    q3 = (r2 + e2z - 1) / den if abs(r2 + e2z - 1) < 0.5 * den else 1 - 2 / den
    return PoincarePoint(q1=2 * p.x / den, q2=2 * p.y / den, q3=q3)


def from_poincare(q: PoincarePoint) -> QuasiCartesian:
    if q.norm_squared() >= 1:
        raise ConfigError("point outside the unit ball", q1=q.q1, q2=q.q2, q3=q.q3)
    if q.q3 >= 1 - BOUNDARY_TOL:
        raise NumericalError("inverse map singular at q3 -> 1", q3=q.q3)
    one_minus = 1 - q.q3
    ez = math.sqrt(1 - q.norm_squared()) / one_minus
    return QuasiCartesian(x=q.q1 / one_minus, y=q.q2 / one_minus, z=math.log(ez))


def axis_exp_z(q3: float) -> float:
    """e^z on the axis q1 = q2 = 0."""
    return math.sqrt((1 + q3) / (1 - q3))
