"""
Cylinder-function form of the Dirac pair.

With phi1 = e^{-z} s1 f1, phi2 = e^{-z} s2 f2 (s1 = sqrt(k2 - i k1),
s2 = |k|/s1) and Z = |k| e^z the pair becomes

    (Z d/dZ - i p) phi1 + Z phi2 = 0
    (Z d/dZ + i p) phi2 + Z phi1 = 0

and on x = iZ, (phi1, phi2) = sqrt(x) (F1, -F2) with F a pair of cylinder
functions of order nu = i p - 1/2 and nu + 1:

    rep       type I                      type II
    bessel    J_nu,  -i J_{nu+1}          J_-nu,  +i J_{-nu-1}
    hankel    H1_nu, -i H1_{nu+1}         H2_nu,  -i H2_{nu+1}
    neumann   N_nu,  -i N_{nu+1}          N_-nu,  +i N_{-nu-1}
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
import scipy.linalg

from solvers.base_solver import BaseSolver, PointEval, SolutionSelector, WaveParams
from solvers.dirac import PairSolver, independence_determinant
from tools import special_functions as sf
from tools.errors import ClassificationError, ConfigError
from tools.log_context import Timer, slog
from tools.oracle import ResidualReport, SystemId, SystemSpec, register_system, report_from_terms

RECURRENCE_TOL = 1e-9
BESSEL_ODE_TOL = 1e-9
CROSS_FIT_TOL = 1e-7
# |measured/expected - 1| allowed when naming an asymptotic behaviour
CLASSIFY_TOL = 0.05
# small-z column sits at X = exp(-2 pi |p| - SMALL_X_MARGIN); large-z column at X = LARGE_X
SMALL_X_MARGIN = 12.0
LARGE_X = 40.0

BESSEL_REPS: tuple[str, ...] = ("bessel", "hankel", "neumann")


@dataclass(frozen=True)
class Row:
    """Cylinder kind, orders and the coefficient of F2 for one rep/type row."""

    kind1: str
    kind2: str
    negate: bool
    coef2: complex

    def orders(self, nu: complex) -> tuple[complex, complex]:
        if self.negate:
            return -nu, -nu - 1
        return nu, nu + 1


ROWS: dict[tuple[str, str], Row] = {
    ("bessel", "I"): Row("bessel", "bessel", False, -1j),
    ("bessel", "II"): Row("bessel", "bessel", True, 1j),
    ("hankel", "I"): Row("hankel1", "hankel1", False, -1j),
    ("hankel", "II"): Row("hankel2", "hankel2", False, -1j),
    ("neumann", "I"): Row("neumann", "neumann", False, -1j),
    ("neumann", "II"): Row("neumann", "neumann", True, 1j),
}


def get_row(rep: str, solution_type: str) -> Row:
    try:
        return ROWS[(rep, solution_type)]
    except KeyError:
        raise ConfigError("unknown representation/type", parameter="rep", value=rep, type=solution_type) from None


# ---------------------------------------------------------------------------
# Variables
# ---------------------------------------------------------------------------
def phi_scales(k1: float, k2: float) -> tuple[complex, complex]:
    """(s1, s2) with s1 = sqrt(k2 - i k1) and s1 s2 = |k|."""
    kperp = math.hypot(k1, k2)
    if kperp == 0:
        raise ConfigError("phi variables need k != 0", parameter="k", value=0.0)
    s1 = cmath.sqrt(complex(k2, -k1))
    return s1, kperp / s1


def to_phi_variables(f1: Any, f2: Any, k1: float, k2: float, z: Any) -> tuple[Any, Any]:
    s1, s2 = phi_scales(k1, k2)
    emz = np.exp(-np.asarray(z, dtype=float))
    return emz * s1 * np.asarray(f1), emz * s2 * np.asarray(f2)


def from_phi(phi1: Any, phi2: Any, k1: float, k2: float, z: Any) -> tuple[Any, Any]:
    s1, s2 = phi_scales(k1, k2)
    ez = np.exp(np.asarray(z, dtype=float))
    return ez * np.asarray(phi1) / s1, ez * np.asarray(phi2) / s2


def order(params: WaveParams) -> complex:
    """nu = i p - 1/2 for the helicity eigenvalue p of ``params``."""
    return params.order


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class BesselSolution:
    representation: str
    type: str
    order: complex
    z: float
    phi1: complex
    phi2: complex

    def as_dict(self) -> dict[str, Any]:
        return {
            "rep": self.representation,
            "type": self.type,
            "order": self.order,
            "z": self.z,
            "phi1": self.phi1,
            "phi2": self.phi2,
        }


def cylinder_pair(rep: str, solution_type: str, nu: complex, x: complex) -> tuple[complex, complex]:
    """(F1, F2) of the row, satisfying (x d/dx - nu) F1 = -i x F2 and (x d/dx + nu + 1) F2 = -i x F1."""
    row = get_row(rep, solution_type)
    o1, o2 = row.orders(nu)
    return sf.CYLINDER_FUNCTIONS[row.kind1](o1, x), row.coef2 * sf.CYLINDER_FUNCTIONS[row.kind2](o2, x)


def _cylinder_triple(kind: str, o: complex, x: complex, coef: complex = 1.0) -> tuple[complex, complex, complex]:
    fn = sf.CYLINDER_FUNCTIONS[kind]
    return (
        coef * fn(o, x),
        coef * sf.cylinder_derivative(kind, o, x),
        coef * sf.cylinder_derivative(kind, o, x, order=2),
    )


def _phi_triple(F: complex, dF: complex, d2F: complex, x: complex) -> tuple[complex, complex, complex]:
    """(phi, D phi, D^2 phi) for phi = sqrt(x) F(x), D = x d/dx = d/dz."""
    root = cmath.sqrt(x)
    g = F / 2 + x * dF
    dg = 1.5 * dF + x * d2F
    return root * F, root * g, root * (g / 2 + x * dg)


class BesselSolver(BaseSolver):
    name = "bessel"
    labels = ("phi1", "phi2")
    system = SystemId.PHI_SYSTEM

    def __init__(self, params: WaveParams, rep: str = "bessel", solution_type: str = "I") -> None:
        if params.kperp == 0:
            raise ConfigError("cylinder form needs k != 0", parameter="k", value=0.0)
        super().__init__(params, SolutionSelector(equation="dirac", type=solution_type, representation=rep))
        self.rep = rep
        self.solution_type = solution_type
        self.row = get_row(rep, solution_type)
        self.nu = params.order

    def x(self, z: float) -> complex:
        return 1j * self.params.kperp * math.exp(z)

    def cylinder(self, z: float) -> tuple[tuple[complex, complex, complex], tuple[complex, complex, complex]]:
        """(F, dF/dx, d^2F/dx^2) for F1 and F2 at z."""
        x = self.x(z)
        o1, o2 = self.row.orders(self.nu)
        return _cylinder_triple(self.row.kind1, o1, x), _cylinder_triple(self.row.kind2, o2, x, self.row.coef2)

    def point(self, z: float) -> PointEval:
        x = self.x(z)
        (F1, dF1, d2F1), (F2, dF2, d2F2) = self.cylinder(z)
        p1 = _phi_triple(F1, dF1, d2F1, x)
        # phi2 = -sqrt(x) F2
        p2 = tuple(-v for v in _phi_triple(F2, dF2, d2F2, x))
        return PointEval(values=(p1[0], p2[0]), d1=(p1[1], p2[1]), d2=(p1[2], p2[2]))

    def spinor_pair(self, z_grid: Any) -> np.ndarray:
        """(f1, f2) on a grid, mapped back from the phi variables."""
        z = np.asarray(z_grid, dtype=float)
        prof = self.profile(z)
        f1, f2 = from_phi(prof.values[0], prof.values[1], self.params.k1, self.params.k2, z)
        return np.array([f1, f2])


def build_bessel_solution(rep: str, solution_type: str, params: WaveParams, z: float) -> BesselSolution:
    solver = BesselSolver(params, rep, solution_type)
    phi1, phi2 = solver.point(z).values
    return BesselSolution(rep, solution_type, solver.nu, float(z), phi1, phi2)


# ---------------------------------------------------------------------------
# Equation terms
# ---------------------------------------------------------------------------
def _terms_phi(t, values, d1, d2, params: WaveParams):
    phi1, phi2 = values[0], values[1]
    Z = params.kperp * np.exp(t)
    p = params.p
    return [
        [d1[0], -1j * p * phi1, Z * phi2],
        [d1[1], 1j * p * phi2, Z * phi1],
    ]


def _rhs_phi(t, state, params: WaveParams):
    phi1, phi2 = state
    Z = params.kperp * math.exp(t)
    p = params.p
    return np.array([1j * p * phi1 - Z * phi2, -1j * p * phi2 - Z * phi1])


@dataclass(frozen=True)
class CylinderOrder:
    """One cylinder function of order ``nu`` at x = i |k| e^z."""

    nu: complex
    kperp: float


def _terms_bessel_ode(t, values, d1, d2, params: CylinderOrder):
    X2 = params.kperp**2 * np.exp(2 * t)
    return [[d2[0], -X2 * values[0], -(params.nu**2) * values[0]]]


def _rhs_bessel_ode(t, state, params: CylinderOrder):
    F, dF = state
    return np.array([dF, (params.kperp**2 * math.exp(2 * t) + params.nu**2) * F])


register_system(
    SystemSpec(
        system=SystemId.PHI_SYSTEM,
        n_functions=2,
        order=1,
        terms=_terms_phi,
        rhs=_rhs_phi,
        wavenumber=lambda params: abs(params.p),
        local_rate=lambda t, params: np.maximum(abs(params.p), params.kperp * np.exp(t)),
    )
)
register_system(
    SystemSpec(
        system=SystemId.BESSEL_ODE,
        n_functions=1,
        order=2,
        terms=_terms_bessel_ode,
        rhs=_rhs_bessel_ode,
        wavenumber=lambda params: abs(params.nu.imag),
        local_rate=lambda t, params: np.maximum(abs(params.nu), params.kperp * np.exp(t)),
    )
)


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------
def phi_residual(
    rep: str, solution_type: str, params: WaveParams, z_grid: Any, tol: float = 1e-8
) -> ResidualReport:
    """First-order phi system for one rep/type row."""
    z = np.asarray(z_grid, dtype=float)
    prof = BesselSolver(params, rep, solution_type).profile(z)
    return report_from_terms(
        SystemId.PHI_SYSTEM, z, _terms_phi(z, prof.values, prof.d1, None, params), tol, label=f"phi:{rep}:{solution_type}"
    )


def recurrence_pairing_check(
    rep: str, solution_type: str, params: WaveParams, z_grid: Any, tol: float = RECURRENCE_TOL
) -> ResidualReport:
    """(x d/dx - nu) F1 + i x F2 = 0 and (x d/dx + nu + 1) F2 + i x F1 = 0.

    Derivatives come from the lowering recurrence, so the first line is not
    the raising recurrence restated.
    """
    z = np.asarray(z_grid, dtype=float)
    row = get_row(rep, solution_type)
    nu = params.order
    o1, o2 = row.orders(nu)
    xs = 1j * params.kperp * np.exp(z)
    F1 = np.array([sf.CYLINDER_FUNCTIONS[row.kind1](o1, x) for x in xs])
    F2 = row.coef2 * np.array([sf.CYLINDER_FUNCTIONS[row.kind2](o2, x) for x in xs])
    dF1 = np.array([sf.cylinder_derivative(row.kind1, o1, x, direction="down") for x in xs])
    dF2 = row.coef2 * np.array([sf.cylinder_derivative(row.kind2, o2, x, direction="down") for x in xs])
    lines = [
        [xs * dF1, -nu * F1, 1j * xs * F2],
        [xs * dF2, (nu + 1) * F2, 1j * xs * F1],
    ]
    return report_from_terms(SystemId.PHI_SYSTEM, z, lines, tol, label=f"recurrence:{rep}:{solution_type}")


def bessel_ode_residual(
    rep: str, solution_type: str, params: WaveParams, z_grid: Any, tol: float = BESSEL_ODE_TOL
) -> ResidualReport:
    """D^2 F - (X^2 + order^2) F for both components, D = d/dz."""
    z = np.asarray(z_grid, dtype=float)
    solver = BesselSolver(params, rep, solution_type)
    o1, o2 = solver.row.orders(solver.nu)
    lines: list[list[np.ndarray]] = [[], []]
    cols = [solver.cylinder(float(t)) for t in z]
    xs = 1j * params.kperp * np.exp(z)
    X2 = params.kperp**2 * np.exp(2 * z)
    for i, o in enumerate((o1, o2)):
        F = np.array([c[i][0] for c in cols])
        dF = np.array([c[i][1] for c in cols])
        d2F = np.array([c[i][2] for c in cols])
        D2F = xs * dF + xs * xs * d2F
        lines[i] = [D2F, -X2 * F, -(o**2) * F]
    return report_from_terms(SystemId.BESSEL_ODE, z, lines, tol, label=f"bessel-ode:{rep}:{solution_type}")


# ---------------------------------------------------------------------------
# Asymptotic classification
# ---------------------------------------------------------------------------
# (small-z wavenumber sign in units of |p|, large-z envelope sign) per component
# for helicity -1.
EXPECTED_NEGATIVE_HELICITY: dict[tuple[str, str], tuple[tuple[int, int], tuple[int, int]]] = {
    ("bessel", "I"): ((-1, 1), (-1, 1)),
    ("bessel", "II"): ((1, 1), (1, 1)),
    ("hankel", "I"): ((-1, -1), (1, -1)),
    ("hankel", "II"): ((-1, 1), (1, 1)),
    ("neumann", "I"): ((-1, 1), (1, 1)),
    ("neumann", "II"): ((-1, 1), (1, 1)),
}


def expected_signs(rep: str, solution_type: str, helicity: int) -> tuple[tuple[int, int], tuple[int, int]]:
    """Expected (wave, envelope) signs per component at either helicity.

    The flip (nu', mu') = (-mu, -nu) keeps Re of every order and negates Im,
    so each small-z wavenumber changes sign; the large-z envelope depends
    only on the cylinder kind and stays.
    """
    get_row(rep, solution_type)
    if helicity not in (1, -1):
        raise ConfigError("helicity must be +1 or -1", parameter="helicity", value=helicity)
    base = EXPECTED_NEGATIVE_HELICITY[(rep, solution_type)]
    if helicity < 0:
        return base
    (w1, e1), (w2, e2) = base
    return (-w1, e1), (-w2, e2)


@dataclass(frozen=True)
class AsymptoticRow:
    rep: str
    type: str
    component: str
    small_wavenumber: float
    small_slope: float
    large_slope: float
    small_label: str
    large_label: str
    expected_small: str
    expected_large: str

    @property
    def matches(self) -> bool:
        return self.small_label == self.expected_small and self.large_label == self.expected_large

    def as_dict(self) -> dict[str, Any]:
        return {
            "rep": self.rep,
            "type": self.type,
            "component": self.component,
            "small_wavenumber": self.small_wavenumber,
            "small_slope": self.small_slope,
            "large_slope": self.large_slope,
            "small": self.small_label,
            "large": self.large_label,
            "expected_small": self.expected_small,
            "expected_large": self.expected_large,
            "matches": self.matches,
        }


@dataclass
class AsymptoticTable:
    helicity: int
    z_minus: float
    z_plus: float
    rows: list[AsymptoticRow] = field(default_factory=list)

    @property
    def all_match(self) -> bool:
        return all(r.matches for r in self.rows)

    def as_dicts(self) -> list[dict[str, Any]]:
        return [r.as_dict() for r in self.rows]


def _wave_label(sign: int) -> str:
    return "e^{+ipz}" if sign > 0 else "e^{-ipz}"


def _envelope_label(sign: int) -> str:
    return "e^{+X}" if sign > 0 else "e^{-X}"


def _classify(value: float, unit: float, what: str, **ctx: Any) -> int:
    ratio = value / unit
    for sign in (1, -1):
        if abs(ratio - sign) < CLASSIFY_TOL:
            return sign
    raise ClassificationError(f"{what} matches neither branch", value=value, unit=unit, **ctx)


def default_table_points(params: WaveParams) -> tuple[float, float]:
    small_x = math.exp(-2 * math.pi * abs(params.p) - SMALL_X_MARGIN)
    return math.log(small_x / params.kperp), math.log(LARGE_X / params.kperp)


def asymptotic_table(
    params: WaveParams, z_minus: Optional[float] = None, z_plus: Optional[float] = None
) -> AsymptoticTable:
    """Small-z wavenumber and large-z envelope of every component of the six rows.

    Rows are built at the helicity of ``params`` and compared with
    ``expected_signs``. The small-z column is d arg(phi)/dz in units of |p|;
    the large-z column is d ln|phi|/dz in units of X = |k| e^z.
    """
    zm, zp = default_table_points(params)
    zm = zm if z_minus is None else z_minus
    zp = zp if z_plus is None else z_plus
    if not zm < zp:
        raise ConfigError("table needs z_minus < z_plus", parameter="z_minus", value=zm, z_plus=zp)
    unit = abs(params.p)
    X = params.kperp * math.exp(zp)
    table = AsymptoticTable(helicity=params.helicity, z_minus=zm, z_plus=zp)
    timer = Timer()
    with timer:
        for rep, solution_type in ROWS:
            solver = BesselSolver(params, rep, solution_type)
            small = solver.point(zm)
            large = solver.point(zp)
            expected = expected_signs(rep, solution_type, params.helicity)
            for i, label in enumerate(solver.labels):
                ld_small = small.d1[i] / small.values[i]
                ld_large = large.d1[i] / large.values[i]
                ctx = {"rep": rep, "type": solution_type, "component": label}
                wave = _classify(ld_small.imag, unit, "small-z wavenumber", **ctx)
                env = _classify(ld_large.real, X, "large-z envelope", **ctx)
                exp_wave, exp_env = expected[i]
                table.rows.append(
                    AsymptoticRow(
                        rep=rep,
                        type=solution_type,
                        component=label,
                        small_wavenumber=float(ld_small.imag),
                        small_slope=float(ld_small.real),
                        large_slope=float(ld_large.real),
                        small_label=_wave_label(wave),
                        large_label=_envelope_label(env),
                        expected_small=_wave_label(exp_wave),
                        expected_large=_envelope_label(exp_env),
                    )
                )
    slog.debug("bessel.table.ok", rows=len(table.rows), all_match=table.all_match, latency_ms=timer.elapsed_ms)
    return table


# ---------------------------------------------------------------------------
# Cross-representation fit
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class CrossFit:
    rep: str
    type: str
    residual: float
    coefficients: tuple[complex, complex]
    drift: float

    def as_dict(self) -> dict[str, Any]:
        return {
            "rep": self.rep,
            "type": self.type,
            "residual": self.residual,
            "c_I": self.coefficients[0],
            "c_II": self.coefficients[1],
            "drift": self.drift,
        }


def _fit(basis: np.ndarray, target: np.ndarray) -> tuple[np.ndarray, float]:
    """Weighted least squares target ~ basis @ c over stacked components."""
    A = np.stack([basis[0].reshape(-1), basis[1].reshape(-1)], axis=1)
    b = target.reshape(-1)
    weight = np.maximum(np.abs(b), np.max(np.abs(A), axis=1))
    weight = np.where(weight > 0, weight, 1.0)
    coef, *_ = scipy.linalg.lstsq(A / weight[:, None], b / weight)
    resid = float(np.max(np.abs(A @ coef - b) / weight))
    return coef, resid


def cross_representation_check(
    params: WaveParams, z_grid: Any, rep: str = "bessel", solution_type: str = "I"
) -> CrossFit:
    """Fit a cylinder-function pair as constant combination of the type I/II hypergeometric pairs.

    ``drift`` compares the coefficients fitted on the two halves of the grid.
    """
    z = np.asarray(z_grid, dtype=float)
    independence_determinant(params, z)
    target = BesselSolver(params, rep, solution_type).spinor_pair(z)
    one = PairSolver(params, "I").profile(z).values
    two = PairSolver(params, "II").profile(z).values
    basis = np.array([one, two])
    coef, resid = _fit(basis, target)
    half = len(z) // 2
    lo, _ = _fit(basis[:, :, :half], target[:, :half])
    hi, _ = _fit(basis[:, :, half:], target[:, half:])
    drift = float(np.max(np.abs(lo - hi)) / np.max(np.abs(coef)))
    fit = CrossFit(rep, solution_type, resid, (complex(coef[0]), complex(coef[1])), drift)
    slog.debug("bessel.cross_fit", **{k: v for k, v in fit.as_dict().items() if k in ("rep", "type", "residual", "drift")})
    return fit


# ---------------------------------------------------------------------------
# Identities
# ---------------------------------------------------------------------------
def hankel_reflection_identity_check(nu: complex, x: complex) -> dict[str, float]:
    """H1_{-nu} against e^{i nu pi} H2_nu (phase-swapped form) and the standard reflections.

    ``phase_swapped`` is recorded, not asserted; ``standard_h1`` (H1_{-nu} = e^{+i nu pi} H1_nu)
    and ``standard_h2`` (H2_{-nu} = e^{-i nu pi} H2_nu) hold to rounding.
    """
    e = cmath.exp(1j * nu * math.pi)
    h1m = sf.hankel1(-nu, x)
    h2m = sf.hankel2(-nu, x)
    h1 = sf.hankel1(nu, x)
    h2 = sf.hankel2(nu, x)
    return {
        "phase_swapped": abs(h1m - e * h2) / abs(h1m),
        "standard_h1": abs(h1m - e * h1) / abs(h1m),
        "standard_h2": abs(h2m - h2 / e) / abs(h2m),
    }


def hankel_sum_check(params: WaveParams, z_grid: Any) -> float:
    """Hankel I + Hankel II equals twice the Bessel I pair, component by component."""
    z = np.asarray(z_grid, dtype=float)
    h_one = BesselSolver(params, "hankel", "I").profile(z).values
    h_two = BesselSolver(params, "hankel", "II").profile(z).values
    j_one = BesselSolver(params, "bessel", "I").profile(z).values
    return float(np.max(np.abs(h_one + h_two - 2 * j_one) / np.abs(2 * j_one)))


def helicity_flip_check(params: WaveParams, z_grid: Any) -> float:
    """Orders under p -> -p become (nu', nu' + 1) = (-nu - 1, -nu).

    The Bessel type I pair of the flipped helicity is (-i F2, -i F1) of the
    type II pair of the original one.
    """
    z = np.asarray(z_grid, dtype=float)
    flipped = BesselSolver(params.with_helicity(-params.helicity), "bessel", "I")
    original = BesselSolver(params, "bessel", "II")
    worst = 0.0
    for t in z:
        (a1, _, _), (a2, _, _) = flipped.cylinder(float(t))
        (b1, _, _), (b2, _, _) = original.cylinder(float(t))
        worst = max(worst, abs(a1 + 1j * b2) / abs(a1), abs(a2 + 1j * b1) / abs(a2))
    return worst


def order_swap(params: WaveParams) -> dict[str, complex]:
    """(nu, mu) and the flipped-helicity (nu', mu') = (-mu, -nu)."""
    nu = params.order
    nu_f = params.with_helicity(-params.helicity).order
    return {"nu": nu, "mu": nu + 1, "nu_flipped": nu_f, "mu_flipped": nu_f + 1}
