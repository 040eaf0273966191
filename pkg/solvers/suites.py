"""
Verification suites behind ``hspinor verify``.

Every check is a plain function ``check(ctx) -> CheckResult`` listed in
AVAILABLE_CHECKS under a dotted name whose first part is its suite. Checks
run concurrently on their own pool and are reported in registry order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Optional, Sequence

import numpy as np

from solvers import bessel_repr, dirac, scalar, weyl
from solvers.base_solver import WaveParams
from tools import special_functions as sf
from tools.errors import ConfigError, HSpinorError
from tools.log_context import Timer, in_context, slog
from tools.oracle import SystemId, compare, first_order_state, get_system, integrate, residual_norm
from tools.result_cache import cached

SUITES: tuple[str, ...] = ("scalar", "dirac", "weyl", "bessel")

_SUITE_EXECUTOR = ThreadPoolExecutor(max_workers=4)

ORACLE_TOL = 1e-6
FD_TOL = 1e-6
CONNECTION_TOL = 1e-9
REFLECTION_TOL = 1e-8
AGREEMENT_TOL = 1e-10
OPERATOR_TOL = 1e-12
SENSITIVITY_FLOOR = 1e-3
FLAT_LIMIT_TOL = 1e-2
# oracle runs start this far left of the turning point
ORACLE_LEAD = 6.0
ORACLE_TAIL = 1.0


@dataclass(frozen=True)
class VerifyContext:
    """Parameters shared by every check; ``perturbation`` scales M+ in the first-order check."""

    epsilon: float = 5.0
    m: float = 3.0
    k1: float = 3.0
    k2: float = 4.0
    points: int = 512
    tol: float = dirac.DEFAULT_TOL
    perturbation: float = 0.0
    use_cache: bool = True
    cache_dir: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.tol > 0:
            raise ConfigError("tolerance must be positive", parameter="tol", value=self.tol)
        if self.points < 16:
            raise ConfigError("grid needs at least 16 points", parameter="points", value=self.points)

    def wave(self, helicity: int = 1) -> WaveParams:
        return WaveParams(self.epsilon, self.k1, self.k2, self.m, helicity)

    def weyl(self, helicity: int = -1) -> weyl.WeylParams:
        return weyl.WeylParams(self.epsilon, self.k1, self.k2, helicity)

    def scalar(self) -> scalar.ScalarParams:
        return scalar.ScalarParams(self.epsilon, self.k1, self.k2)

    def grid(self, params: Any) -> np.ndarray:
        z0 = params.turning_point()
        return np.linspace(z0 - ORACLE_LEAD, z0 + 1.5, self.points)

    def key(self) -> dict[str, Any]:
        out = asdict(self)
        out.pop("use_cache")
        out.pop("cache_dir")
        return out


@dataclass
class CheckResult:
    name: str
    value: float
    threshold: float
    passed: bool
    detail: dict[str, Any] = field(default_factory=dict)
    error: Optional[str] = None

    def as_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "value": self.value,
            "threshold": self.threshold,
            "passed": self.passed,
            "detail": self.detail,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "CheckResult":
        return cls(**data)


def _below(name: str, value: float, threshold: float, **detail: Any) -> CheckResult:
    return CheckResult(name, float(value), threshold, bool(value < threshold), detail)


def _worst(reports: Sequence[Any]) -> tuple[float, str]:
    worst = max(reports, key=lambda r: r.max_rel_residual)
    return worst.max_rel_residual, worst.label


# ---------------------------------------------------------------------------
# Oracle runs
# ---------------------------------------------------------------------------
Evaluate = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]


def _profile_evaluate(solver: Any, labels: Sequence[str]) -> Evaluate:
    idx = [solver.labels.index(label) for label in labels]

    def _evaluate(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        prof = solver.profile(z)
        return prof.values[idx], prof.d1[idx]

    return _evaluate


def oracle_agreement(
    system: SystemId, params: Any, evaluate: Evaluate, z_lo: float, z_hi: float, backward: bool = False, points: int = 96
) -> float:
    """Seed the integrator with the closed form at one end and compare on the whole span.

    ``backward`` starts at ``z_hi``, for solutions that decay as z grows.
    """
    spec = get_system(system)
    grid = np.linspace(z_lo, z_hi, points)
    values, d1 = evaluate(grid)
    start = -1 if backward else 0
    state = first_order_state(values[:, start], d1[:, start], spec.order)
    z_start, z_end = (z_hi, z_lo) if backward else (z_lo, z_hi)
    trajectory = integrate(system, params, z_start, z_end, state)
    return compare(lambda _: values, trajectory, grid)


def _kummer_evaluate(kp: sf.KummerParams) -> Evaluate:
    def _evaluate(y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        values = np.array([[sf.kummer(kp.a, kp.c, v) for v in y]])
        d1 = np.array([[sf.kummer_derivative(kp.a, kp.c, v) for v in y]])
        return values, d1

    return _evaluate


def _cylinder_evaluate(kind: str, order: bessel_repr.CylinderOrder) -> Evaluate:
    fn = sf.CYLINDER_FUNCTIONS[kind]

    def _evaluate(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        xs = 1j * order.kperp * np.exp(z)
        values = np.array([[fn(order.nu, x) for x in xs]])
        d1 = np.array([[x * sf.cylinder_derivative(kind, order.nu, x) for x in xs]])
        return values, d1

    return _evaluate


# ---------------------------------------------------------------------------
# scalar
# ---------------------------------------------------------------------------
def check_scalar_reflection(ctx: VerifyContext) -> CheckResult:
    eps = np.geomspace(1.001, 1000.0, 50)
    worst = max(scalar.reflection_coefficient(float(e)).deviation for e in eps)
    return _below("scalar.reflection", worst, REFLECTION_TOL, points=len(eps))


def check_scalar_connection(ctx: VerifyContext) -> CheckResult:
    worst = 0.0
    f7_gap = math.inf
    for eps in (2.0, 5.0, 20.0):
        p = scalar.ScalarParams(eps, ctx.k1, ctx.k2)
        z = np.log(np.linspace(0.1, 30.0, 200) / (2 * p.kperp))
        branch = scalar.principal_branch_check(p, z[::10])
        worst = max(worst, scalar.kummer_connection_check(p, z), branch["principal"])
        f7_gap = min(f7_gap, branch["f7_gap"])
    return _below("scalar.kummer_connection", worst, CONNECTION_TOL, f7_gap=f7_gap)


def check_scalar_residual(ctx: VerifyContext) -> CheckResult:
    p = ctx.scalar()
    z = scalar.standard_grid(p, ctx.points)
    reports = []
    for variant in scalar.VARIANTS:
        reports.append(scalar.scalar_residual(variant, p, z, tol=ctx.tol))
        reports.append(scalar.scalar_residual(variant, p, z, tol=ctx.tol, phi_form=True))
        reports.append(scalar.reduced_form_residual(variant, p, z, tol=ctx.tol))
    value, label = _worst(reports)
    return _below("scalar.residual", value, ctx.tol, worst=label)


def check_scalar_residual_fd(ctx: VerifyContext) -> CheckResult:
    p = ctx.scalar()
    z = scalar.standard_grid(p, ctx.points)
    reports = [scalar.scalar_residual(v, p, z, method="fd", tol=FD_TOL) for v in scalar.VARIANTS]
    value, label = _worst(reports)
    return _below("scalar.residual_fd", value, FD_TOL, worst=label)


def check_scalar_oracle(ctx: VerifyContext) -> CheckResult:
    p = ctx.scalar()
    z0 = scalar.critical_point(p)
    lo, hi = z0 - ORACLE_LEAD, z0 + ORACLE_TAIL
    runs: dict[str, float] = {}
    for variant, backward in (("F1", False), ("F5", True)):
        solver = scalar.make_solver(p, variant)
        runs[f"barrier:{variant}"] = oracle_agreement(
            SystemId.SCALAR_BARRIER, p, _profile_evaluate(solver, ["f"]), lo, hi, backward
        )
        runs[f"schrodinger:{variant}"] = oracle_agreement(
            SystemId.SCALAR_SCHRODINGER, p, _profile_evaluate(solver, ["phi"]), lo, hi, backward
        )
    kp = sf.KummerParams.paired(p.a, 1.0)
    runs["kummer"] = oracle_agreement(SystemId.KUMMER_ODE, kp, _kummer_evaluate(kp), 0.5, 10.0)
    return _below("scalar.oracle", max(runs.values()), ORACLE_TOL, runs=runs)


# ---------------------------------------------------------------------------
# dirac
# ---------------------------------------------------------------------------
def check_dirac_first_order(ctx: VerifyContext) -> CheckResult:
    params = ctx.wave()
    z = ctx.grid(params)
    reports = [
        dirac.first_order_residual(t, params, z, tol=ctx.tol, perturbation=ctx.perturbation if t == "I" else 0.0)
        for t in ("I", "II")
    ]
    value, label = _worst(reports)
    return _below("dirac.first_order_residual", value, ctx.tol, worst=label)


def check_dirac_sensitivity(ctx: VerifyContext) -> CheckResult:
    """A 1% error in M+ must show up in the first-order residual."""
    params = ctx.wave()
    report = dirac.first_order_residual("I", params, ctx.grid(params), perturbation=0.01)
    value = report.max_rel_residual
    return CheckResult("dirac.factor_sensitivity", value, SENSITIVITY_FLOOR, value > SENSITIVITY_FLOOR)


def check_dirac_phase_factor(ctx: VerifyContext) -> CheckResult:
    """The factors 2 e^{+-i alpha}(1 +- 2a) do not solve the system."""
    params = ctx.wave()
    z = ctx.grid(params)
    residuals = {
        t: dirac.first_order_residual(t, params, z, factor=dirac.phase_relative_factor(t, params)).max_rel_residual
        for t in ("I", "II")
    }
    value = min(residuals.values())
    return CheckResult(
        "dirac.phase_factor_deviation", value, SENSITIVITY_FLOOR, value > SENSITIVITY_FLOOR, {"residuals": residuals}
    )


def check_dirac_separated(ctx: VerifyContext) -> CheckResult:
    reports = []
    for helicity in (1, -1):
        params = ctx.wave(helicity)
        z = ctx.grid(params)
        for t in ("I", "II"):
            reports.append(dirac.separated_system_residual(t, params, z, tol=ctx.tol))
            reports.append(dirac.helicity_residual(t, params, z, tol=ctx.tol))
    value, label = _worst(reports)
    return _below("dirac.separated_system", value, ctx.tol, worst=label)


def check_dirac_second_order(ctx: VerifyContext) -> CheckResult:
    params = ctx.wave()
    z = ctx.grid(params)
    reports = [
        dirac.second_order_residual(which, t, params, z, tol=ctx.tol, swap=swap)
        for which in ("f1", "f2")
        for t in ("I", "II")
        for swap in (False, True)
    ]
    value, label = _worst(reports)
    return _below("dirac.second_order_residual", value, ctx.tol, worst=label)


def check_dirac_residual_fd(ctx: VerifyContext) -> CheckResult:
    params = ctx.wave()
    z = ctx.grid(params)
    reports = [
        residual_norm(
            SystemId.DIRAC_FIRST_ORDER, dirac.PairSolver(params, t).sampler(), z, params, tol=FD_TOL, label=f"fd:{t}"
        )
        for t in ("I", "II")
    ]
    value, label = _worst(reports)
    return _below("dirac.residual_fd", value, FD_TOL, worst=label)


def check_dirac_structure(ctx: VerifyContext) -> CheckResult:
    params = ctx.wave()
    z = ctx.grid(params)
    symmetry = dirac.symmetry_residual(params, z, tol=ctx.tol).max_rel_residual
    ratio = max(dirac.ratio_invariant(t, params, z) for t in ("I", "II"))
    independence = dirac.independence_determinant(params, z)
    value = max(symmetry, ratio, independence.wronskian_spread)
    return _below(
        "dirac.structure", value, ctx.tol, symmetry=symmetry, ratio=ratio, **independence.as_dict()
    )


def check_dirac_axial(ctx: VerifyContext) -> CheckResult:
    params = WaveParams(ctx.epsilon, 0.0, 0.0, ctx.m, 1)
    z = np.linspace(-5.0, 5.0, 64)
    worst = 0.0
    for branch in dirac.AXIAL_BRANCHES:
        prof = dirac.AxialDiracSolver(params, branch).profile(z)
        i = 0 if branch == "C1" else 1
        envelope = np.abs(prof.values[i] * np.exp(-z))
        worst = max(worst, float(np.max(np.abs(envelope - 1))))
    return _below("dirac.axial", worst, dirac.IDENTITY_TOL)


def check_dirac_flat_space(ctx: VerifyContext) -> CheckResult:
    # transverse momentum kept below p so the flat mode propagates
    params = WaveParams(ctx.epsilon, 1.0, 1.0, ctx.m, 1)
    z = np.linspace(-3.0, 3.0, 128)
    reports = [dirac.flat_space_residual(params, branch, z) for branch in (1, -1)]
    value, label = _worst(reports)
    return _below("dirac.flat_space", value, dirac.FLAT_TOL, worst=label)


def check_dirac_flat_limit(ctx: VerifyContext) -> CheckResult:
    table = dirac.flat_limit_study(5.0, 3.0, 0.1, 0.1, (10.0, 50.0, 250.0), np.linspace(-1.0, 1.0, 41))
    monotone = all(table.monotone(t) for t in ("I", "II"))
    last = max(table.errors(t)[-1] for t in ("I", "II"))
    return CheckResult(
        "dirac.flat_limit", last, FLAT_LIMIT_TOL, bool(monotone and last < FLAT_LIMIT_TOL), {"monotone": monotone}
    )


def check_dirac_pauli(ctx: VerifyContext) -> CheckResult:
    params = dirac.pauli_params(100.0, 0.5, ctx.k1, ctx.k2)
    report = dirac.pauli_reduction_check(params, ctx.grid(params), tol=ctx.tol, perturbation=ctx.perturbation)
    return CheckResult(
        "dirac.pauli_reduction",
        report.identity.max_rel_residual,
        dirac.IDENTITY_TOL,
        report.passed,
        {"p_gap": report.p_gap, "elimination_exact": report.elimination_exact},
    )


def check_dirac_oracle(ctx: VerifyContext) -> CheckResult:
    runs: dict[str, float] = {}
    for helicity in (1, -1):
        params = ctx.wave(helicity)
        z0 = params.turning_point()
        for t in ("I", "II"):
            solver = dirac.PairSolver(params, t)
            evaluate = _profile_evaluate(solver, ["f1", "f2"])
            for system in (SystemId.DIRAC_FIRST_ORDER, SystemId.DIRAC_SECOND_ORDER):
                runs[f"{system.value}:{t}:{helicity:+d}"] = oracle_agreement(
                    system, params, evaluate, z0 - ORACLE_LEAD, z0 + ORACLE_TAIL
                )
    return _below("dirac.oracle", max(runs.values()), ORACLE_TOL, runs=runs)


# ---------------------------------------------------------------------------
# weyl
# ---------------------------------------------------------------------------
def _weyl_grid(ctx: VerifyContext, params: weyl.WeylParams) -> np.ndarray:
    z0 = math.log(params.epsilon / params.kperp)
    return np.linspace(z0 - ORACLE_LEAD, z0 + 1.5, ctx.points)


def check_weyl_residual(ctx: VerifyContext) -> CheckResult:
    reports = []
    for helicity in (1, -1):
        params = ctx.weyl(helicity)
        z = _weyl_grid(ctx, params)
        for t in ("I", "II"):
            reports.append(weyl.weyl_system_residual(t, params, z, tol=ctx.tol))
        weyl.weyl_independence(params, z)
    value, label = _worst(reports)
    return _below("weyl.system_residual", value, ctx.tol, worst=label)


def check_weyl_agreement(ctx: VerifyContext) -> CheckResult:
    params = ctx.weyl()
    z = _weyl_grid(ctx, params)
    operator = weyl.operator_agreement(params, z)
    pair = max(weyl.dirac_agreement(t, params, z) for t in ("I", "II"))
    passed = operator < OPERATOR_TOL and pair < AGREEMENT_TOL
    return CheckResult(
        "weyl.dirac_agreement", pair, AGREEMENT_TOL, passed, {"operator": operator}
    )


def check_weyl_oracle(ctx: VerifyContext) -> CheckResult:
    runs: dict[str, float] = {}
    for helicity in (1, -1):
        params = ctx.weyl(helicity)
        z0 = math.log(params.epsilon / params.kperp)
        for t in ("I", "II"):
            evaluate = _profile_evaluate(weyl.WeylSolver(params, t), ["h1", "h2"])
            runs[f"{t}:{helicity:+d}"] = oracle_agreement(
                SystemId.WEYL, params, evaluate, z0 - ORACLE_LEAD, z0 + ORACLE_TAIL
            )
    return _below("weyl.oracle", max(runs.values()), ORACLE_TOL, runs=runs)


# ---------------------------------------------------------------------------
# bessel
# ---------------------------------------------------------------------------
def _bessel_params(ctx: VerifyContext) -> WaveParams:
    return ctx.wave(-1)


def check_bessel_phi(ctx: VerifyContext) -> CheckResult:
    params = _bessel_params(ctx)
    z = ctx.grid(params)
    reports = []
    for rep, t in bessel_repr.ROWS:
        reports.append(bessel_repr.phi_residual(rep, t, params, z, tol=ctx.tol))
        reports.append(bessel_repr.bessel_ode_residual(rep, t, params, z))
        reports.append(bessel_repr.recurrence_pairing_check(rep, t, params, z))
    value, label = _worst(reports)
    return _below("bessel.phi_residual", value, ctx.tol, worst=label)


def check_bessel_table(ctx: VerifyContext) -> CheckResult:
    mismatched: list[str] = []
    for helicity in (-1, 1):
        table = bessel_repr.asymptotic_table(ctx.wave(helicity))
        mismatched += [f"{helicity:+d}:{r.rep}:{r.type}:{r.component}" for r in table.rows if not r.matches]
    return CheckResult(
        "bessel.asymptotic_table", float(len(mismatched)), 1.0, not mismatched, {"mismatched": mismatched}
    )


def check_bessel_cross_fit(ctx: VerifyContext) -> CheckResult:
    params = _bessel_params(ctx)
    z = np.linspace(params.turning_point() - 3.0, params.turning_point() + 1.0, 96)
    fits = [bessel_repr.cross_representation_check(params, z, rep, t) for rep, t in bessel_repr.ROWS]
    value = max(max(f.residual, f.drift) for f in fits)
    return _below("bessel.cross_representation", value, bessel_repr.CROSS_FIT_TOL)


def check_bessel_identities(ctx: VerifyContext) -> CheckResult:
    params = _bessel_params(ctx)
    z = np.linspace(params.turning_point() - 3.0, params.turning_point() + 1.0, 48)
    reflection = bessel_repr.hankel_reflection_identity_check(params.order, 1j * params.kperp)
    values = {
        "hankel_sum": bessel_repr.hankel_sum_check(params, z),
        "helicity_flip": bessel_repr.helicity_flip_check(params, z),
        "standard_h1": reflection["standard_h1"],
        "standard_h2": reflection["standard_h2"],
    }
    return _below("bessel.identities", max(values.values()), 1e-9, phase_swapped=reflection["phase_swapped"], **values)


def check_bessel_oracle(ctx: VerifyContext) -> CheckResult:
    params = _bessel_params(ctx)
    z0 = params.turning_point()
    lo, hi = z0 - ORACLE_LEAD, z0 + ORACLE_TAIL
    runs: dict[str, float] = {}
    for rep, t in bessel_repr.ROWS:
        backward = (rep, t) == ("hankel", "I")
        solver = bessel_repr.BesselSolver(params, rep, t)
        runs[f"phi:{rep}:{t}"] = oracle_agreement(
            SystemId.PHI_SYSTEM, params, _profile_evaluate(solver, ["phi1", "phi2"]), lo, hi, backward
        )
        row = bessel_repr.get_row(rep, t)
        order = bessel_repr.CylinderOrder(row.orders(params.order)[0], params.kperp)
        runs[f"ode:{rep}:{t}"] = oracle_agreement(
            SystemId.BESSEL_ODE, order, _cylinder_evaluate(row.kind1, order), lo, hi, backward
        )
    return _below("bessel.oracle", max(runs.values()), ORACLE_TOL, runs=runs)


AVAILABLE_CHECKS: dict[str, Callable[[VerifyContext], CheckResult]] = {
    "scalar.reflection": check_scalar_reflection,
    "scalar.kummer_connection": check_scalar_connection,
    "scalar.residual": check_scalar_residual,
    "scalar.residual_fd": check_scalar_residual_fd,
    "scalar.oracle": check_scalar_oracle,
    "dirac.first_order_residual": check_dirac_first_order,
    "dirac.factor_sensitivity": check_dirac_sensitivity,
    "dirac.phase_factor_deviation": check_dirac_phase_factor,
    "dirac.separated_system": check_dirac_separated,
    "dirac.second_order_residual": check_dirac_second_order,
    "dirac.residual_fd": check_dirac_residual_fd,
    "dirac.structure": check_dirac_structure,
    "dirac.axial": check_dirac_axial,
    "dirac.flat_space": check_dirac_flat_space,
    "dirac.flat_limit": check_dirac_flat_limit,
    "dirac.pauli_reduction": check_dirac_pauli,
    "dirac.oracle": check_dirac_oracle,
    "weyl.system_residual": check_weyl_residual,
    "weyl.dirac_agreement": check_weyl_agreement,
    "weyl.oracle": check_weyl_oracle,
    "bessel.phi_residual": check_bessel_phi,
    "bessel.asymptotic_table": check_bessel_table,
    "bessel.cross_representation": check_bessel_cross_fit,
    "bessel.identities": check_bessel_identities,
    "bessel.oracle": check_bessel_oracle,
}


def select_checks(suite: str) -> list[str]:
    if suite == "all":
        return list(AVAILABLE_CHECKS)
    if suite not in SUITES:
        raise ConfigError("unknown suite", parameter="suite", value=suite, choices=("all",) + SUITES)
    return [name for name in AVAILABLE_CHECKS if name.split(".", 1)[0] == suite]


def run_check(name: str, ctx: VerifyContext) -> CheckResult:
    fn = AVAILABLE_CHECKS[name]
    slog.debug("suite.check.start", check=name)
    timer = Timer()

    def _compute() -> dict[str, Any]:
        try:
            with timer:
                return fn(ctx).as_dict()
        except HSpinorError as exc:
            timer.stop()
            return CheckResult(name, math.nan, math.nan, False, dict(exc.context), str(exc)).as_dict()

    result = CheckResult.from_dict(
        cached(f"verify.{name}", ctx.key(), _compute, enabled=ctx.use_cache, directory=ctx.cache_dir)
    )
    if result.passed:
        slog.info("suite.check.ok", check=name, value=result.value, latency_ms=timer.elapsed_ms)
    else:
        slog.warning("suite.check.fail", check=name, value=result.value, threshold=result.threshold, error=result.error)
    return result


def run_suite(suite: str, ctx: VerifyContext) -> list[CheckResult]:
    """Every check of ``suite`` ("all" for everything), in registry order."""
    names = select_checks(suite)
    results: list[Optional[CheckResult]] = [None] * len(names)

    def _run(index: int, name: str) -> None:
        results[index] = run_check(name, ctx)

    timer = Timer()
    with timer:
        list(_SUITE_EXECUTOR.map(in_context(_run), range(len(names)), names))
    failed = [r.name for r in results if r is not None and not r.passed]
    slog.info("suite.done", suite=suite, checks=len(names), failed=len(failed), latency_ms=timer.elapsed_ms)
    return [r for r in results if r is not None]
