import math

import numpy as np
import pytest

from solvers import bessel_repr, dirac, scalar, suites, weyl
from solvers.base_solver import WaveParams
from tools import special_functions as sf
from tools.errors import ConfigError, UnderResolvedGridError
from tools.oracle import (
    SystemId,
    compare,
    get_system,
    integrate,
    relative_residual,
    residual_norm,
)

WAVE = WaveParams(5.0, 3.0, 4.0, 3.0, 1)


@pytest.mark.parametrize("system", list(SystemId))
def test_every_system_is_registered(system):
    spec = get_system(system)
    assert spec.system == system
    assert spec.state_dim == spec.n_functions * spec.order


def test_wrong_state_dimension():
    with pytest.raises(ConfigError):
        integrate(SystemId.DIRAC_FIRST_ORDER, WAVE, 0.0, 1.0, np.zeros(3, dtype=complex))


def _span(z0):
    return z0 - suites.ORACLE_LEAD, z0 + suites.ORACLE_TAIL


def _scalar_case(system, variant, label, backward):
    p = scalar.ScalarParams(5.0, 3.0, 4.0)
    lo, hi = _span(scalar.critical_point(p))
    evaluate = suites._profile_evaluate(scalar.make_solver(p, variant), [label])
    return system, p, evaluate, lo, hi, backward


def _pair_case(system, params, solver, labels, z0, backward=False):
    lo, hi = _span(z0)
    return system, params, suites._profile_evaluate(solver, labels), lo, hi, backward


def _cases():
    weyl_params = weyl.WeylParams(5.0, 3.0, 4.0)
    negative = WAVE.with_helicity(-1)
    hankel = bessel_repr.get_row("hankel", "I")
    order = bessel_repr.CylinderOrder(hankel.orders(negative.order)[0], negative.kperp)
    kp = sf.KummerParams.paired(complex(0.5, -2.0), 1.0)
    lo, hi = _span(negative.turning_point())
    return {
        "barrier": _scalar_case(SystemId.SCALAR_BARRIER, "F1", "f", False),
        "schrodinger": _scalar_case(SystemId.SCALAR_SCHRODINGER, "F5", "phi", True),
        "dirac-first": _pair_case(
            SystemId.DIRAC_FIRST_ORDER, WAVE, dirac.PairSolver(WAVE, "I"), ["f1", "f2"], WAVE.turning_point()
        ),
        "dirac-second": _pair_case(
            SystemId.DIRAC_SECOND_ORDER, WAVE, dirac.PairSolver(WAVE, "II"), ["f1", "f2"], WAVE.turning_point()
        ),
        "weyl": _pair_case(
            SystemId.WEYL, weyl_params, weyl.WeylSolver(weyl_params, "I"), ["h1", "h2"], math.log(5.0 / 5.0)
        ),
        "phi": _pair_case(
            SystemId.PHI_SYSTEM,
            negative,
            bessel_repr.BesselSolver(negative, "hankel", "I"),
            ["phi1", "phi2"],
            negative.turning_point(),
            backward=True,
        ),
        "bessel-ode": (SystemId.BESSEL_ODE, order, suites._cylinder_evaluate("hankel1", order), lo, hi, True),
        "kummer": (SystemId.KUMMER_ODE, kp, suites._kummer_evaluate(kp), 0.5, 10.0, False),
    }


@pytest.mark.parametrize("case", list(_cases()))
def test_closed_forms_agree_with_integrator(case):
    system, params, evaluate, lo, hi, backward = _cases()[case]
    assert suites.oracle_agreement(system, params, evaluate, lo, hi, backward) < 1e-6


def test_under_resolved_grid_rejected():
    z = np.linspace(-6.0, 1.0, 16)
    sampler = dirac.PairSolver(WAVE, "I").sampler()
    with pytest.raises(UnderResolvedGridError):
        residual_norm(SystemId.DIRAC_FIRST_ORDER, sampler, z, WAVE)


def test_compare_identical_is_zero():
    z = np.linspace(0.0, 1.0, 11)
    values = np.array([np.exp(1j * z), np.zeros_like(z)])
    assert compare(lambda t: values, lambda t: values.copy(), z) == 0.0


def test_relative_residual_normalizes_by_largest_term():
    t = np.linspace(0.0, 1.0, 3)
    per_point, per_equation = relative_residual(t, [[np.full(3, 2.0), np.full(3, -1.0)]])
    assert np.allclose(per_point, 0.5)
    assert per_equation == [0.5]
    zero, _ = relative_residual(t, [[np.zeros(3), np.zeros(3)]])
    assert np.all(zero == 0)


def test_trajectory_reproduces_plane_wave():
    params = WaveParams(5.0, 0.0, 0.0, 3.0)
    traj = integrate(SystemId.DIRAC_FIRST_ORDER, params, 0.0, 2.0, np.array([1.0, 0.0], dtype=complex))
    z = np.linspace(0.0, 2.0, 9)
    expected = np.exp((1 + 1j * params.p) * z)
    assert np.allclose(traj(z)[0], expected, rtol=1e-9)
    assert traj.nfev > 0
