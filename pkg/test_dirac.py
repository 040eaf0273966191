import math

import numpy as np
import pytest

from solvers import dirac
from solvers.base_solver import Profile, WaveParams
from tools.errors import ConfigError
from tools.oracle import SystemId, residual_norm


def _grid(params, points=512):
    z0 = params.turning_point()
    return np.linspace(z0 - 6.0, z0 + 1.5, points)


@pytest.fixture(params=[1, -1], ids=["h+", "h-"])
def params(request):
    return WaveParams(5.0, 3.0, 4.0, 3.0, request.param)


def test_wave_params():
    p = WaveParams(5.0, 3.0, 4.0, 3.0)
    assert p.p == pytest.approx(4.0)
    assert p.with_helicity(-1).p == pytest.approx(-4.0)
    assert p.small_ratio == pytest.approx((5.0 - 4.0) / 3.0)
    assert abs(p.coupling) == pytest.approx(1.0)
    assert p.turning_point() == pytest.approx(math.log(4 / 5))
    with pytest.raises(ConfigError):
        WaveParams(3.0, 1.0, 1.0, 3.0)
    with pytest.raises(ConfigError):
        WaveParams(5.0, 1.0, 1.0, 3.0, helicity=2)


@pytest.mark.parametrize("solution_type", ["I", "II"])
def test_first_order_residual(params, solution_type):
    report = dirac.first_order_residual(solution_type, params, _grid(params))
    assert report.passed, report.as_dict()


@pytest.mark.parametrize("solution_type", ["I", "II"])
def test_finite_difference_residual(params, solution_type):
    z = _grid(params, 256)
    sampler = dirac.PairSolver(params, solution_type).sampler()
    report = residual_norm(SystemId.DIRAC_FIRST_ORDER, sampler, z, params)
    assert report.max_rel_residual < 1e-6


def test_perturbed_factor_is_detected():
    params = WaveParams(5.0, 3.0, 4.0, 3.0)
    report = dirac.first_order_residual("I", params, _grid(params), perturbation=0.01)
    assert report.max_rel_residual > 1e-3
    assert not report.passed


@pytest.mark.parametrize("solution_type", ["I", "II"])
def test_phase_factor_does_not_solve_the_system(solution_type):
    params = WaveParams(5.0, 3.0, 4.0, 3.0)
    factor = dirac.phase_relative_factor(solution_type, params)
    report = dirac.first_order_residual(solution_type, params, _grid(params), factor=factor)
    assert report.max_rel_residual > 1e-3


@pytest.mark.parametrize("solution_type", ["I", "II"])
def test_separated_system_and_helicity(params, solution_type):
    z = _grid(params)
    assert dirac.separated_system_residual(solution_type, params, z).passed
    assert dirac.helicity_residual(solution_type, params, z).passed
    wrong = dirac.helicity_residual(solution_type, params, z, p_override=-params.p)
    assert wrong.max_rel_residual > 1e-3


@pytest.mark.parametrize("which", ["f1", "f2"])
@pytest.mark.parametrize("solution_type", ["I", "II"])
def test_second_order_residual(params, which, solution_type):
    z = _grid(params)
    assert dirac.second_order_residual(which, solution_type, params, z).passed
    assert dirac.second_order_residual(which, solution_type, params, z, swap=True).passed


def test_second_order_rejects_lower_component(params):
    with pytest.raises(ConfigError):
        dirac.second_order_residual("f3", "I", params, _grid(params, 32))


def test_structure(params):
    z = _grid(params)
    assert dirac.symmetry_residual(params, z).passed
    for t in ("I", "II"):
        assert dirac.ratio_invariant(t, params, z) < 1e-12
    independence = dirac.independence_determinant(params, z)
    assert independence.min_normalized_det > dirac.INDEPENDENCE_FLOOR
    assert independence.wronskian_spread < 1e-8


def test_lower_pair_follows_upper():
    params = WaveParams(5.0, 3.0, 4.0, 3.0)
    sample = dirac.build_solution("II", params, -0.4)
    assert sample["f3"] == pytest.approx(params.small_ratio * sample["f1"], rel=1e-14)
    assert sample["f4"] == pytest.approx(params.small_ratio * sample["f2"], rel=1e-14)


def test_massless_rejected():
    with pytest.raises(ConfigError):
        dirac.DiracSolver(WaveParams(5.0, 3.0, 4.0, 0.0), "I")
    with pytest.raises(ConfigError):
        dirac.make_solver(WaveParams(5.0, 3.0, 4.0, 3.0), "III")


def test_axial_plane_waves():
    params = WaveParams(5.0, 0.0, 0.0, 3.0)
    z = np.linspace(-5.0, 5.0, 64)
    c1 = dirac.make_solver(params, "I").profile(z)
    c2 = dirac.make_solver(params, "II").profile(z)
    assert np.allclose(np.abs(c1["f1"] * np.exp(-z)), 1.0, atol=1e-10)
    assert np.allclose(np.abs(c2["f2"] * np.exp(-z)), 1.0, atol=1e-10)
    assert np.all(c1["f2"] == 0) and np.all(c2["f1"] == 0)
    assert dirac.axial_solution(params, "C1", 0.0)["f1"] == pytest.approx(1.0)
    assert dirac.first_order_residual("I", params, z).passed
    with pytest.raises(ConfigError):
        dirac.AxialDiracSolver(params, "C3")


def test_flat_space_waves():
    params = WaveParams(5.0, 1.0, 1.0, 3.0)
    z = np.linspace(-3.0, 3.0, 128)
    for branch in (1, -1):
        assert dirac.flat_space_residual(params, branch, z).max_rel_residual < 1e-12
    wave = dirac.flat_space_solution(params, 1)
    assert wave.k3 == pytest.approx(math.sqrt(16 - 2))


def test_flat_space_evanescent_mode_rejected():
    with pytest.raises(ConfigError):
        dirac.flat_space_solution(WaveParams(5.0, 3.0, 4.0, 3.0), 1)


def test_flat_limit_converges():
    table = dirac.flat_limit_study(5.0, 3.0, 0.1, 0.1, (10.0, 50.0, 250.0), np.linspace(-1.0, 1.0, 41))
    assert table.k3 == pytest.approx(math.sqrt(16 - 0.02))
    for t in ("I", "II"):
        errors = table.errors(t)
        assert len(errors) == 3
        assert table.monotone(t)
        assert errors[-1] < 1e-2
    assert len(table.as_dicts()) == 6


def test_flat_limit_rejects_bad_input():
    with pytest.raises(ConfigError):
        dirac.flat_limit_study(3.0, 5.0, 0.1, 0.1, (10.0,), np.linspace(-1, 1, 5))
    with pytest.raises(ConfigError):
        dirac.flat_limit_study(5.0, 3.0, 0.1, 0.1, (50.0, 10.0), np.linspace(-1, 1, 5))
    with pytest.raises(ConfigError):
        dirac.flat_limit_study(5.0, 3.0, 4.0, 4.0, (10.0,), np.linspace(-1, 1, 5))


def test_flat_series_coefficients_approach_exponential():
    small = dirac.flat_series_limit(10.0, 4.0, 0.1)
    large = dirac.flat_series_limit(1000.0, 4.0, 0.1)
    assert large["max_deviation"] < small["max_deviation"]
    assert large["max_deviation"] < 1e-3


@pytest.mark.parametrize("points", [64, 512])
def test_pauli_reduction(points):
    params = dirac.pauli_params(100.0, 0.5, 3.0, 4.0)
    report = dirac.pauli_reduction_check(params, _grid(params, points))
    assert report.identity.max_rel_residual < 1e-10
    assert report.p_gap < report.p_gap_bound
    assert report.passed, report.as_dict()


def test_pauli_needs_positive_kinetic_energy():
    with pytest.raises(ConfigError):
        dirac.pauli_params(100.0, 0.0, 3.0, 4.0)


def test_pauli_identity_detects_perturbed_factor():
    params = dirac.pauli_params(100.0, 0.5, 1.0, 1.0)
    z = _grid(params, 128)
    assert dirac.pauli_reduction_check(params, z).identity.max_rel_residual < 1e-10
    report = dirac.pauli_reduction_check(params, z, perturbation=0.01)
    assert report.identity.max_rel_residual > 1e-4
    assert not report.passed


def test_pauli_identity_rejects_arbitrary_data(monkeypatch):
    params = dirac.pauli_params(100.0, 0.5, 3.0, 4.0)
    z = np.linspace(-2.0, 0.5, 64)
    rng = np.random.default_rng(11)

    def _noise(shape):
        return rng.normal(size=shape) + 1j * rng.normal(size=shape)

    def _random_profile(params, solution_type, z_grid, factor=None):
        shape = (4, len(z_grid))
        return Profile(np.asarray(z_grid), _noise(shape), _noise(shape), _noise(shape), ("f1", "f2", "f3", "f4"))

    monkeypatch.setattr(dirac, "_profile", _random_profile)
    assert dirac.pauli_reduction_check(params, z).identity.max_rel_residual > 1e-3


@pytest.mark.parametrize("solution_type", ["I", "II"])
def test_large_z_ratio_matches_direct_evaluation(solution_type):
    params = WaveParams(5.0, 3.0, 4.0, 3.0)
    z = params.turning_point() + 1.0
    ev = dirac.PairSolver(params, solution_type).point(z)
    direct = ev.values[0] / ev.values[1]
    assert abs(dirac.large_z_ratio(solution_type, params, z) - direct) < 1e-9 * abs(direct)


@pytest.mark.parametrize("solution_type", ["I", "II"])
def test_large_z_ratio_tends_to_amplitude_ratio(solution_type):
    params = WaveParams(5.0, 3.0, 4.0, 3.0)
    c1, c2 = dirac.large_z_amplitudes(solution_type, params)
    target = c1 / c2

    def gap(y):
        z = math.log(y / (2 * params.kperp))
        return abs(dirac.large_z_ratio(solution_type, params, z) / target - 1)

    assert gap(600.0) < 0.1
    assert gap(600.0) < gap(100.0)


@pytest.mark.parametrize("solution_type", ["I", "II"])
def test_small_y_behaviour(solution_type):
    params = WaveParams(5.0, 3.0, 4.0, 3.0)
    y = 1e-6
    z = math.log(y / (2 * params.kperp))
    ev = dirac.PairSolver(params, solution_type).point(z)
    i = 0 if solution_type == "I" else 1
    assert ev.values[i] / dirac.small_y_power(solution_type, params, y) == pytest.approx(1.0, abs=1e-5)
    expected = 1 + params.a if solution_type == "I" else 1 - params.a
    assert dirac.small_z_exponent(solution_type, params, z) == pytest.approx(expected, abs=1e-5)
