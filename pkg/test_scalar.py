import math

import mpmath
import numpy as np
import pytest

from solvers import scalar
from solvers.scalar import ScalarParams
from tools.errors import ConfigError


@pytest.fixture
def params():
    return ScalarParams(5.0, 3.0, 4.0)


@pytest.mark.parametrize("eps", [1.01, 2.0, 5.0, 100.0, 1e4])
def test_reflection_is_total(eps):
    assert scalar.reflection_coefficient(eps).deviation < 1e-8


def test_reflection_amplitudes_have_equal_modulus():
    result = scalar.reflection_coefficient(5.0, 3.0, 4.0)
    assert result.amplitude_ratio == pytest.approx(math.sqrt(result.R), rel=1e-12)
    assert result.amplitude_ratio == pytest.approx(1.0, abs=1e-8)
    assert "abs_M_minus" in result.as_dict()


@pytest.mark.parametrize("eps", [1.0, 0.5, -3.0])
def test_reflection_rejects_bound_regime(eps):
    with pytest.raises(ConfigError):
        scalar.reflection_coefficient(eps)


def test_params_validation():
    with pytest.raises(ConfigError):
        ScalarParams(1.0, 1.0, 1.0)
    with pytest.raises(ConfigError):
        ScalarParams(float("inf"), 1.0, 1.0)
    with pytest.raises(ConfigError):
        scalar.ScalarSolutionVariant("F3")


def test_critical_point(params):
    z0 = scalar.critical_point(params)
    assert z0 == pytest.approx(0.5 * math.log(4 / 25))
    assert scalar.potential(z0, params) == pytest.approx(params.epsilon)
    # rho = M = hbar = 1 and E = eps/2 reproduce the dimensionless value
    assert scalar.critical_point_dimensional(2.5, 1.0, 1.0, 3.0, 4.0) == pytest.approx(z0)
    with pytest.raises(ConfigError):
        scalar.critical_point(ScalarParams(5.0))


@pytest.mark.parametrize("eps", [2.0, 5.0, 20.0])
def test_kummer_connection(eps):
    p = ScalarParams(eps, 3.0, 4.0)
    z = np.log(np.linspace(0.1, 30.0, 120) / (2 * p.kperp))
    assert scalar.kummer_connection_check(p, z) < 1e-9


def _continued_psi_reference(p, y):
    with mpmath.workdps(30):
        a = mpmath.mpc(p.a.real, p.a.imag)
        value = mpmath.exp(y / 2) * mpmath.power(y, a + 0.5) * mpmath.hyperu(a, 2 * a, mpmath.mpc(-y, 0))
        return complex(value)


@pytest.mark.parametrize("eps", [2.0, 5.0])
def test_continued_psi_matches_reference(eps):
    p = ScalarParams(eps, 3.0, 4.0)
    y = np.array([0.5, 3.0, 12.0, 35.0, 55.0])
    ours = scalar.continued_psi(p, np.log(y / (2 * p.kperp)))
    for yi, value in zip(y, ours):
        ref = _continued_psi_reference(p, float(yi))
        assert abs(value - ref) / abs(ref) < 1e-8


def test_f7_differs_from_principal_psi(params):
    z = np.log(np.array([0.5, 3.0, 12.0, 35.0, 55.0]) / (2 * params.kperp))
    out = scalar.principal_branch_check(params, z)
    assert out["principal"] < 1e-8
    assert out["f7_gap"] > 1e-2


@pytest.mark.parametrize("variant", scalar.VARIANTS)
def test_analytic_residuals(params, variant):
    z = scalar.standard_grid(params, 256)
    for report in (
        scalar.scalar_residual(variant, params, z),
        scalar.scalar_residual(variant, params, z, phi_form=True),
        scalar.reduced_form_residual(variant, params, z),
    ):
        assert report.passed, report.as_dict()


@pytest.mark.parametrize("variant", scalar.VARIANTS)
def test_finite_difference_residuals(params, variant):
    z = scalar.standard_grid(params, 256)
    report = scalar.scalar_residual(variant, params, z, method="fd")
    assert report.max_rel_residual < 1e-6


def test_f5_decays_behind_barrier(params):
    z0 = scalar.critical_point(params)
    near = max(abs(scalar.scalar_solution("F5", params, z)) for z in np.linspace(z0 - 1, z0, 9))
    far = abs(scalar.scalar_solution("F5", params, z0 + 2.5))
    assert far < 1e-6 * near


def test_f7_flagged_as_unphysical(params):
    solver = scalar.make_solver(params, "F7")
    assert solver.describe()["unphysical_growth"] is True
    assert scalar.make_solver(params, "F5").describe()["unphysical_growth"] is False


def test_phi_is_scaled_f(params):
    z = -0.3
    assert scalar.phi_solution("F1", params, z) == pytest.approx(
        math.exp(-z) * scalar.scalar_solution("F1", params, z), rel=1e-14
    )


def test_axial_solution():
    p = ScalarParams(5.0)
    z = np.linspace(-3, 3, 64)
    for sign in (1, -1):
        phi = scalar.make_solver(p, "F1", sign).profile(z)["phi"]
        assert np.allclose(np.abs(phi), 1.0, atol=1e-12)
    assert scalar.scalar_residual("F1", p, z).passed
    with pytest.raises(ConfigError):
        scalar.axial_scalar(ScalarParams(5.0, 1.0, 0.0), 1, z)
    with pytest.raises(ConfigError):
        scalar.ScalarSolver(p, scalar.ScalarSolutionVariant("F1"))


def test_large_y_forms(params):
    z0 = scalar.critical_point(params)
    near = scalar.large_y_growth(params, z0 + 3)
    farther = scalar.large_y_growth(params, z0 + 4)
    for tag in ("F1", "F5", "F7"):
        assert near[tag] == pytest.approx(1.0, abs=0.1)
        assert abs(farther[tag] - 1) < abs(near[tag] - 1)


def test_principal_branch_factor(params):
    factor = scalar.principal_branch_factor(params)
    assert abs(factor) == pytest.approx(math.exp(-2 * math.pi * params.root), rel=1e-12)
    assert abs(factor.imag) < 1e-12 * abs(factor)
