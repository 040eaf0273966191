import math

import numpy as np
import pytest

from solvers import bessel_repr
from solvers.base_solver import WaveParams
from tools.errors import ConfigError

ROWS = list(bessel_repr.ROWS)


@pytest.fixture
def params():
    return WaveParams(5.0, 3.0, 4.0, 3.0, -1)


def _grid(params, points=128, lead=3.0, tail=1.0):
    z0 = params.turning_point()
    return np.linspace(z0 - lead, z0 + tail, points)


def test_phi_scales():
    s1, s2 = bessel_repr.phi_scales(3.0, 4.0)
    assert s1 * s2 == pytest.approx(5.0)
    assert s1 * s1 == pytest.approx(complex(4.0, -3.0))
    with pytest.raises(ConfigError):
        bessel_repr.phi_scales(0.0, 0.0)


def test_phi_variables_invert():
    z = np.linspace(-1.0, 1.0, 5)
    f1 = np.exp(1j * z)
    f2 = np.exp(-2j * z) * (1 + z)
    phi1, phi2 = bessel_repr.to_phi_variables(f1, f2, 3.0, 4.0, z)
    g1, g2 = bessel_repr.from_phi(phi1, phi2, 3.0, 4.0, z)
    assert np.allclose(g1, f1, rtol=1e-14)
    assert np.allclose(g2, f2, rtol=1e-14)


@pytest.mark.parametrize("rep,solution_type", ROWS)
def test_phi_system(params, rep, solution_type):
    z = _grid(params, 256, lead=6.0, tail=1.5)
    assert bessel_repr.phi_residual(rep, solution_type, params, z).passed


@pytest.mark.parametrize("rep,solution_type", ROWS)
def test_recurrence_and_bessel_equation(params, rep, solution_type):
    z = _grid(params, 64)
    assert bessel_repr.recurrence_pairing_check(rep, solution_type, params, z).passed
    assert bessel_repr.bessel_ode_residual(rep, solution_type, params, z).passed


@pytest.mark.parametrize("helicity", [1, -1])
def test_phi_system_both_helicities(helicity):
    params = WaveParams(5.0, 3.0, 4.0, 3.0, helicity)
    assert bessel_repr.phi_residual("hankel", "II", params, _grid(params)).passed


def test_asymptotic_table(params):
    table = bessel_repr.asymptotic_table(params)
    assert table.helicity == -1
    assert len(table.rows) == 12
    assert table.all_match, [r.as_dict() for r in table.rows if not r.matches]
    decaying = {
        (r.rep, r.type)
        for r in table.rows
        if r.large_label == "e^{-X}"
    }
    assert decaying == {("hankel", "I")}
    both = [r for r in table.rows if (r.rep, r.type) == ("hankel", "I")]
    assert all(r.large_label == "e^{-X}" for r in both)


def test_asymptotic_table_follows_helicity_flip(params):
    negative = bessel_repr.asymptotic_table(params)
    positive = bessel_repr.asymptotic_table(params.with_helicity(1))
    assert positive.helicity == 1
    assert positive.all_match, [r.as_dict() for r in positive.rows if not r.matches]
    for neg, pos in zip(negative.rows, positive.rows):
        assert (pos.rep, pos.type, pos.component) == (neg.rep, neg.type, neg.component)
        assert pos.small_wavenumber == pytest.approx(-neg.small_wavenumber, rel=0.1)
        assert pos.small_label != neg.small_label
        assert pos.large_label == neg.large_label
    decaying = {(r.rep, r.type) for r in positive.rows if r.large_label == "e^{-X}"}
    assert decaying == {("hankel", "I")}


def test_expected_signs_under_flip():
    assert bessel_repr.expected_signs("hankel", "I", -1) == ((-1, -1), (1, -1))
    assert bessel_repr.expected_signs("hankel", "I", 1) == ((1, -1), (-1, -1))
    with pytest.raises(ConfigError):
        bessel_repr.expected_signs("hankel", "I", 0)


def test_asymptotic_table_rejects_reversed_points(params):
    with pytest.raises(ConfigError):
        bessel_repr.asymptotic_table(params, z_minus=1.0, z_plus=0.0)


@pytest.mark.parametrize("rep,solution_type", ROWS)
def test_cross_representation(params, rep, solution_type):
    fit = bessel_repr.cross_representation_check(params, _grid(params, 96), rep, solution_type)
    assert fit.residual < bessel_repr.CROSS_FIT_TOL
    assert fit.drift < bessel_repr.CROSS_FIT_TOL


def test_hankel_sum(params):
    assert bessel_repr.hankel_sum_check(params, _grid(params, 48)) < 1e-9


@pytest.mark.parametrize("helicity", [1, -1])
def test_helicity_flip(helicity):
    params = WaveParams(5.0, 3.0, 4.0, 3.0, helicity)
    assert bessel_repr.helicity_flip_check(params, _grid(params, 16)) < 1e-9
    swap = bessel_repr.order_swap(params)
    assert swap["nu_flipped"] == pytest.approx(-swap["mu"])
    assert swap["mu_flipped"] == pytest.approx(-swap["nu"])


def test_hankel_reflection_identities(params):
    result = bessel_repr.hankel_reflection_identity_check(params.order, 1j * params.kperp)
    assert result["standard_h1"] < 1e-9
    assert result["standard_h2"] < 1e-9
    assert result["phase_swapped"] > 1e-3


def test_order(params):
    assert bessel_repr.order(params) == pytest.approx(complex(-0.5, -4.0))
    assert params.with_helicity(1).order == pytest.approx(complex(-0.5, 4.0))


def test_unknown_row():
    with pytest.raises(ConfigError):
        bessel_repr.get_row("airy", "I")
    with pytest.raises(ConfigError):
        bessel_repr.get_row("hankel", "III")


def test_build_bessel_solution(params):
    z = params.turning_point()
    sol = bessel_repr.build_bessel_solution("neumann", "II", params, z)
    ev = bessel_repr.BesselSolver(params, "neumann", "II").point(z)
    assert (sol.phi1, sol.phi2) == ev.values
    assert sol.as_dict()["rep"] == "neumann"
    assert math.isfinite(abs(sol.phi1))
