# tests/test_asympt.py
import math

import numpy as np
import pytest

from core.asympt import (
    LimitFunction,
    boundary_limit_check,
    boundary_limit_value,
    check_transient_insensitivity,
    convolution_limit_check,
    steady_boundary_profile,
)
from errors import ParameterError
from models import DataFunctionSpec, OperatorParams


def _const(c: float) -> LimitFunction:
    return LimitFunction(
        f=lambda s: np.full_like(np.asarray(s, dtype=float), c),
        f_infinity=c,
        derivative_integrable=True,
        derivative=lambda s: np.zeros_like(np.asarray(s, dtype=float)),
        name=f"const{c:g}",
    )


def _approach(rate: float = 1.0, with_derivative: bool = True) -> LimitFunction:
    return LimitFunction(
        f=lambda s: -np.expm1(-rate * np.asarray(s, dtype=float)),
        f_infinity=1.0,
        derivative_integrable=True,
        derivative=(lambda s: rate * np.exp(-rate * np.asarray(s, dtype=float))) if with_derivative else None,
        name="approach",
    )


# ===== Régimes permanents =====

def test_dirichlet_profile_value(unit_params):
    value = steady_boundary_profile(unit_params, 1.0, "dirichlet", 1.0, 0.0, 0.5)
    s = math.sqrt(2.0)
    assert float(value) == pytest.approx(math.sinh(0.5 * s) / math.sinh(s), rel=1e-12)


def test_dirichlet_profile_walls_and_symmetry(skew_params):
    x = np.linspace(0.0, 1.0, 11)
    u = steady_boundary_profile(skew_params, 1.0, "dirichlet", 2.0, -1.0, x)
    assert u[0] == pytest.approx(2.0) and u[-1] == pytest.approx(-1.0)
    sym = steady_boundary_profile(skew_params, 1.0, "dirichlet", 1.0, 1.0, x)
    assert np.allclose(sym, sym[::-1], rtol=1e-12)


def test_profiles_solve_the_steady_equation(skew_params):
    h = 1e-3
    x = np.linspace(0.1, 0.9, 5)
    s2 = (skew_params.a + skew_params.b / skew_params.beta) / skew_params.epsilon
    for kind in ("dirichlet", "mixed", "neumann"):
        f = lambda y: steady_boundary_profile(skew_params, 1.0, kind, 0.7, -0.4, y)
        second = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
        assert np.allclose(second, s2 * f(x), rtol=1e-5, atol=1e-6)


def test_mixed_profile_boundary_conditions(unit_params):
    h = 1e-6
    f = lambda y: steady_boundary_profile(unit_params, 1.0, "mixed", 0.3, 0.8, np.asarray(y, dtype=float))
    assert float(f(0.0)) == pytest.approx(0.3, rel=1e-12)
    assert float((f(1.0) - f(1.0 - h)) / h) == pytest.approx(0.8, rel=1e-4)


def test_neumann_profile_fluxes(unit_params):
    h = 1e-6
    f = lambda y: steady_boundary_profile(unit_params, 1.0, "neumann", -0.5, 1.5, np.asarray(y, dtype=float))
    assert float((f(h) - f(0.0)) / h) == pytest.approx(-0.5, rel=1e-4)
    assert float((f(1.0) - f(1.0 - h)) / h) == pytest.approx(1.5, rel=1e-4)


def test_profile_stays_finite_for_thin_layers():
    p = OperatorParams(epsilon=1e-6, a=1.0, b=1.0, beta=1.0)
    u = steady_boundary_profile(p, 10.0, "dirichlet", 1.0, 1.0, np.linspace(0.0, 10.0, 101))
    assert np.all(np.isfinite(u))
    assert u[0] == pytest.approx(1.0) and u[50] == pytest.approx(0.0, abs=1e-12)


def test_unknown_profile_kind(unit_params):
    with pytest.raises(ParameterError):
        steady_boundary_profile(unit_params, 1.0, "robin", 1.0, 0.0, 0.5)


def test_boundary_limit_value_at_walls(skew_params, unit_strip):
    dirichlet = boundary_limit_value(skew_params, unit_strip, np.array([0.0, 1.0]), 1.0)
    assert dirichlet[0] == pytest.approx(-1.0 / (2.0 * skew_params.epsilon))
    assert dirichlet[1] == 0.0
    mixed = boundary_limit_value(skew_params, unit_strip, np.array([0.0]), 2.0, variant="mixed")
    assert mixed[0] == pytest.approx(-1.0 / skew_params.epsilon)


# ===== Limites de convolution =====

def test_constant_kernel_limit():
    report = convolution_limit_check(_const(3.0), _approach(), [10.0, 20.0, 30.0])
    assert report.passed
    assert report.checks[-1].name == "convolution_limit"
    assert report.checks[-1].status == "pass"


def test_exponential_pair_limit():
    chi = _approach(rate=2.0)
    report = convolution_limit_check(chi, _approach(), [10.0, 20.0, 30.0], tol=1e-4)
    assert all(c.status == "pass" for c in report.checks)


def test_slow_kernel_needs_looser_tolerance():
    chi = LimitFunction(f=lambda s: (2.0 / math.pi) * np.arctan(np.asarray(s, dtype=float)), f_infinity=1.0, name="arctan")
    report = convolution_limit_check(chi, _approach(), [25.0, 50.0, 100.0], tol=0.05)
    assert report.checks[-1].status == "pass"
    strict = convolution_limit_check(chi, _approach(), [25.0, 50.0, 100.0], tol=1e-4)
    assert strict.checks[-1].status == "inconclusive"


def _lf(f, f_infinity, derivative=None, name="custom") -> LimitFunction:
    return LimitFunction(
        f=lambda s: f(np.asarray(s, dtype=float)), f_infinity=f_infinity, derivative_integrable=True,
        derivative=(lambda s: derivative(np.asarray(s, dtype=float))) if derivative else None, name=name,
    )


EXPONENTIAL_PAIRS = {
    "offset-decay": (
        _lf(lambda s: 2.0 + np.exp(-s), 2.0),
        _lf(lambda s: -np.expm1(-s), 1.0, lambda s: np.exp(-s)),
    ),
    "slow-rise": (
        _lf(lambda s: -np.expm1(-2.0 * s), 1.0),
        _lf(lambda s: -3.0 * np.expm1(-0.5 * s), 3.0, lambda s: 1.5 * np.exp(-0.5 * s)),
    ),
    "damped-cosine": (
        _lf(lambda s: np.exp(-s) * np.cos(s), 0.0),
        _lf(lambda s: -np.expm1(-s), 1.0, lambda s: np.exp(-s)),
    ),
    "gamma-rise": (
        _lf(lambda s: 1.0 + np.exp(-3.0 * s), 1.0),
        _lf(lambda s: 1.0 - (1.0 + s) * np.exp(-s), 1.0, lambda s: s * np.exp(-s)),
    ),
}


@pytest.mark.parametrize("pair", sorted(EXPONENTIAL_PAIRS))
def test_exponential_pairs_reach_limit_at_long_horizon(pair):
    chi, h = EXPONENTIAL_PAIRS[pair]
    report = convolution_limit_check(chi, h, [25.0, 50.0, 100.0], tol=1e-4)
    assert report.passed, report.failures
    assert report.checks[-1].status == "pass"
    assert report.checks[-1].t == 100.0


def test_arctan_data_is_still_approaching_at_long_horizon():
    chi = _lf(lambda s: np.exp(-s) + 2.0, 2.0)
    h = _lf(np.arctan, 0.5 * math.pi, lambda s: 1.0 / (1.0 + s * s), name="arctan")
    report = convolution_limit_check(chi, h, [25.0, 50.0, 100.0], tol=1e-4)
    deviations = [c.lhs for c in report.checks[:-1]]
    assert deviations == sorted(deviations, reverse=True)
    assert deviations[0] == pytest.approx(0.078, abs=5e-3)
    assert deviations[-1] == pytest.approx(0.02, abs=2e-3)
    assert report.checks[-1].status == "inconclusive"


def test_constant_data_gives_zero_limit():
    report = convolution_limit_check(_approach(), _const(2.0), [5.0, 10.0])
    assert all(c.lhs == 0.0 for c in report.checks)
    assert report.passed


def test_uncertified_convolution_is_refused():
    no_limit = LimitFunction(f=lambda s: np.sin(s), f_infinity=None, name="sine")
    with pytest.raises(ParameterError):
        convolution_limit_check(no_limit, _approach(), [10.0])
    undeclared = LimitFunction(f=lambda s: -np.expm1(-np.asarray(s)), f_infinity=1.0, name="undeclared")
    with pytest.raises(ParameterError):
        convolution_limit_check(_const(1.0), undeclared, [10.0])


def test_central_difference_fallback():
    report = convolution_limit_check(_const(1.0), _approach(with_derivative=False), [10.0, 20.0])
    assert report.passed
    assert "différences centrées" in report.checks[0].note


def test_limit_function_from_named_data():
    approach = LimitFunction.from_spec(DataFunctionSpec(name="exp-approach", value=0.5, amplitude=2.0, rate=1.0))
    assert approach.f_infinity == pytest.approx(2.5)
    assert approach.derivative_integrable
    assert approach.tail_is_approaching([1.0, 5.0, 10.0])
    sine = LimitFunction.from_spec(DataFunctionSpec(name="sine"))
    assert sine.f_infinity is None and not sine.derivative_integrable
    assert not sine.tail_is_approaching([1.0, 2.0])


# ===== Limites de bord (horizons longs) =====

@pytest.mark.slow
def test_boundary_limit_dirichlet(unit_params, unit_strip):
    report = boundary_limit_check(unit_params, unit_strip, _const(1.0), [0.25, 0.5, 0.75], [10.0, 20.0, 30.0])
    assert report.passed, report.failures
    assert len(report.checks) == 3


@pytest.mark.slow
def test_boundary_limit_mixed(skew_params, unit_strip):
    report = boundary_limit_check(
        skew_params, unit_strip, _approach(), [0.25, 0.75], [5.0, 10.0, 15.0], variant="mixed"
    )
    assert report.passed, report.failures


@pytest.mark.slow
def test_transient_insensitivity(unit_params, unit_strip):
    report = check_transient_insensitivity(unit_params, unit_strip, _const(1.0), _approach(), [0.25, 0.5], 30.0)
    assert report.passed, report.failures


def test_transient_insensitivity_needs_shared_limit(unit_params, unit_strip):
    with pytest.raises(ParameterError):
        check_transient_insensitivity(unit_params, unit_strip, _const(1.0), _const(2.0), [0.5], 10.0)
