import math

import numpy as np
import pytest

from solvers import weyl
from solvers.base_solver import WaveParams
from solvers.weyl import WeylParams
from tools.errors import ConfigError


def _grid(params, points=512):
    z0 = math.log(params.epsilon / params.kperp)
    return np.linspace(z0 - 6.0, z0 + 1.5, points)


@pytest.fixture(params=[-1, 1], ids=["h-", "h+"])
def params(request):
    return WeylParams(5.0, 3.0, 4.0, request.param)


def test_params_validation():
    with pytest.raises(ConfigError):
        WeylParams(0.0, 3.0, 4.0)
    with pytest.raises(ConfigError):
        WeylParams(5.0, float("nan"), 4.0)
    with pytest.raises(ConfigError):
        WeylParams(5.0, 3.0, 4.0, helicity=0)


def test_default_helicity_is_negative():
    params = WeylParams(5.0, 3.0, 4.0)
    assert params.p == -5.0
    assert params.c == 2 * params.a


def test_from_wave_drops_mass():
    params = WeylParams.from_wave(WaveParams(5.0, 3.0, 4.0, 3.0, -1))
    assert params == WeylParams(5.0, 3.0, 4.0, -1)


@pytest.mark.parametrize("solution_type", ["I", "II"])
def test_system_residual(params, solution_type):
    report = weyl.weyl_system_residual(solution_type, params, _grid(params))
    assert report.passed, report.as_dict()


def test_perturbation_is_detected():
    params = WeylParams(5.0, 3.0, 4.0)
    report = weyl.weyl_system_residual("I", params, _grid(params), perturbation=0.01)
    assert report.max_rel_residual > 1e-3


def test_operator_matches_massless_dirac(params):
    assert weyl.operator_agreement(params, _grid(params, 64)) < 1e-12


@pytest.mark.parametrize("solution_type", ["I", "II"])
def test_solutions_match_massless_dirac(params, solution_type):
    assert weyl.dirac_agreement(solution_type, params, _grid(params, 128)) < 1e-10


def test_independence(params):
    report = weyl.weyl_independence(params, _grid(params, 128))
    assert report.wronskian_spread < 1e-8


def test_build_weyl_matches_solver():
    params = WeylParams(5.0, 3.0, 4.0)
    h1, h2 = weyl.build_weyl("II", params, 0.2)
    ev = weyl.WeylSolver(params, "II").point(0.2)
    assert (h1, h2) == ev.values


def test_axis_rejected():
    with pytest.raises(ConfigError):
        weyl.WeylSolver(WeylParams(5.0, 0.0, 0.0), "I")
