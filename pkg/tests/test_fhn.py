# tests/test_fhn.py
import logging

import numpy as np
import pytest

from core.fhn import (
    FHNSpec,
    check_v_recovery,
    cubic,
    cubic_lipschitz,
    fhn_check_estimates,
    fhn_compare,
    fhn_N_data_term,
    fhn_oracle,
    fhn_solve,
    fhn_source,
    fhn_steady_boundary,
    working_radius,
)
from core.fields import SourceSpec
from errors import ParameterError
from models import FDConfig, GridConfig, OperatorParams

FHN_PARAMS = OperatorParams(epsilon=1.0, a=0.5, b=1.0, beta=1.0)


@pytest.fixture(scope="module")
def subthreshold():
    spec = FHNSpec(params=FHN_PARAMS, L=1.0, T=2.0, u0=lambda x: 0.3 * np.sin(np.pi * np.asarray(x, dtype=float)))
    solution, report = fhn_solve(spec, GridConfig(nx=20, nt=200))
    return spec, solution, report


def test_cubic_roots():
    assert cubic(0.5, 0.0) == 0.0
    assert cubic(0.5, 1.0) == pytest.approx(0.5)
    assert cubic(0.5, 1.5) == pytest.approx(0.0)


def test_source_subtracts_decaying_recovery():
    spec = FHNSpec(params=FHN_PARAMS, L=1.0, T=1.0, v0=lambda x: np.full_like(np.asarray(x, dtype=float), 2.0))
    x = np.array([0.5])
    assert fhn_source(spec, x, 1.0, np.array([1.5]))[0] == pytest.approx(-2.0 * np.exp(-1.0))
    assert fhn_source(spec, x, 0.0, np.array([0.0]))[0] == pytest.approx(-2.0)


def test_lipschitz_bound_on_working_region():
    R = 2.0
    source = SourceSpec(F=lambda x, t, u: cubic(0.5, u), lipschitz_C=cubic_lipschitz(0.5, R), name="fhn-cubic")
    assert source.spot_check_lipschitz(L=1.0, T=1.0, bound=R)


def test_threshold_outside_unit_interval_warns(caplog):
    with caplog.at_level(logging.WARNING, logger="core.fhn"):
        FHNSpec(params=OperatorParams(epsilon=1.0, a=1.5, b=1.0, beta=1.0), L=1.0, T=1.0)
    assert any("hors de ]0, 1[" in r.message for r in caplog.records)


def test_working_radius():
    rest = FHNSpec(params=FHN_PARAMS, L=1.0, T=1.0)
    assert working_radius(rest) == 1.0
    fixed = FHNSpec(params=FHN_PARAMS, L=1.0, T=1.0, radius=3.0)
    assert working_radius(fixed) == 3.0
    with pytest.raises(ParameterError):
        FHNSpec(params=FHN_PARAMS, L=1.0, T=1.0, radius=-1.0)


def test_rest_state_stays_at_rest():
    spec = FHNSpec(params=FHN_PARAMS, L=1.0, T=0.5)
    solution, report = fhn_solve(spec, GridConfig(nx=10, nt=50))
    assert np.all(solution.u.values == 0.0)
    assert np.all(solution.v.values == 0.0)
    assert report.converged


def test_subthreshold_bump_decays(subthreshold):
    _, solution, report = subthreshold
    assert report.converged
    assert np.max(np.abs(solution.u.values[-1])) < 0.3
    assert np.all(solution.u.values[:, 0] == 0.0)
    # v démarre à v₀ = 0 puis suit u
    assert np.all(solution.v.values[0] == 0.0)
    assert np.max(solution.v.values) > 0.0


def test_a_priori_estimates(subthreshold):
    spec, solution, _ = subthreshold
    report = fhn_check_estimates(spec, solution)
    assert report.passed, report.failures
    assert {c.name for c in report.checks} == {"fhn_u_bound", "fhn_v_bound"}


def test_matches_full_system_oracle(subthreshold):
    spec, solution, _ = subthreshold
    oracle = fhn_oracle(spec, FDConfig(nx=64, nt=4000))
    assert check_v_recovery(spec, oracle).passed
    report = fhn_compare(solution, oracle, u_tol=2e-2, v_tol=1e-3)
    assert report.passed, report.failures
    assert {c.name for c in report.checks} == {"u_sup_rel", "u_l2_rel", "v_sup_rel", "v_l2_rel"}


def test_estimates_require_homogeneous_walls():
    spec = FHNSpec(params=FHN_PARAMS, L=1.0, T=0.2, g1=lambda s: 0.1 * np.ones_like(np.asarray(s, dtype=float)))
    solution, _ = fhn_solve(spec, GridConfig(nx=10, nt=20))
    with pytest.raises(ParameterError):
        fhn_check_estimates(spec, solution)


def test_data_term_vanishes_without_data():
    spec = FHNSpec(params=FHN_PARAMS, L=1.0, T=1.0)
    N = fhn_N_data_term(spec, [0.25, 0.5], 0.5, GridConfig(nx=10, nt=50))
    assert np.all(N == 0.0)


def test_data_term_sign_of_recovery_variable():
    spec = FHNSpec(params=FHN_PARAMS, L=1.0, T=1.0, v0=lambda x: np.ones_like(np.asarray(x, dtype=float)))
    N = fhn_N_data_term(spec, [0.25, 0.5, 0.75], 0.5, GridConfig(nx=10, nt=50))
    assert np.all(N < 0.0)


@pytest.mark.slow
def test_boundary_driven_steady_state():
    spec = FHNSpec(
        params=FHN_PARAMS, L=1.0, T=1.0,
        g1=lambda s: 0.2 * np.ones_like(np.asarray(s, dtype=float)), g1_limit=0.2, g2_limit=0.0,
    )
    u_inf, v_inf, report = fhn_steady_boundary(spec, [0.25, 0.5, 0.75], grid=GridConfig(nx=20, nt=200))
    assert report.passed, report.failures
    assert np.allclose(v_inf, u_inf * FHN_PARAMS.b / FHN_PARAMS.beta)
    assert np.all(np.diff(u_inf) < 0.0)
