# tests/test_greensolve.py
import math

import numpy as np
import pytest

from core.fields import ProblemSpec, SourceSpec
from core.greensolve import (
    GreenOperator,
    boundary_terms,
    check_decay_estimate,
    compute_boundary_response,
    solve_dirichlet,
    solve_mixed,
    solve_neumann,
)
from core.oracle import cross_validate, fd_solve
from errors import DivergenceError, ParameterError
from models import FDConfig, GridConfig, PicardConfig, StripGeometry


def _linear_source(c: float, radius: float = 10.0) -> SourceSpec:
    return SourceSpec(F=lambda x, t, u: c * u, lipschitz_C=abs(c), depends_on_u=True, radius=radius, name="linear")


def test_boundary_terms_table():
    left = boundary_terms("dirichlet", "left", 1.0, 0.5)
    assert left.coefficient == -1.0 and left.derivative and not left.star
    right = boundary_terms("neumann", "right", 2.0, 0.5)
    assert right.coefficient == 1.0 and right.shift == -2.0 and not right.derivative
    mixed = boundary_terms("mixed", "right", 1.0, 0.5)
    assert mixed.star and mixed.mirror and mixed.shift == 1.0 and not mixed.derivative
    with pytest.raises(ParameterError):
        boundary_terms("robin", "left", 1.0, 0.5)


def test_zero_data_gives_zero(unit_params, small_grid):
    spec = ProblemSpec(L=1.0, T=0.5, bc_kind="dirichlet")
    u, report = solve_dirichlet(unit_params, spec, small_grid)
    assert np.all(u.values == 0.0)
    assert report.iterations == 1


def test_wrong_kind_is_refused(unit_params, small_grid):
    spec = ProblemSpec(L=1.0, T=0.5, bc_kind="neumann")
    with pytest.raises(ParameterError):
        solve_dirichlet(unit_params, spec, small_grid)


def test_cell_weights_start_from_identity(unit_params, small_grid, sine_profile):
    spec = ProblemSpec(L=1.0, T=0.5, bc_kind="dirichlet", u0=sine_profile)
    op = GreenOperator(unit_params, spec, small_grid)
    W = op.cell_weights()
    assert W.shape == (small_grid.nt + 1, small_grid.nx + 1, small_grid.nx + 1)
    interior = np.arange(1, small_grid.nx)
    assert np.allclose(W[0][interior, interior], 1.0, atol=1e-12)


def test_linear_source_single_pass(unit_params, small_grid):
    source = SourceSpec(F=lambda x, t, u: np.full_like(u, 1.0), depends_on_u=False, sup_bound=1.0, name="constant")
    spec = ProblemSpec(L=1.0, T=0.5, bc_kind="dirichlet", source=source)
    u, report = solve_dirichlet(unit_params, spec, small_grid)
    assert report.iterations == 1 and report.window_count == 1
    assert np.all(u.values[-1, 1:-1] > 0.0)
    assert u.values[-1, 0] == 0.0 and u.values[-1, -1] == 0.0


def test_dirichlet_matches_oracle(unit_params, small_grid, sine_profile):
    spec = ProblemSpec(L=1.0, T=0.5, bc_kind="dirichlet", u0=sine_profile)
    u, _ = solve_dirichlet(unit_params, spec, small_grid)
    oracle = fd_solve(unit_params, spec, FDConfig(nx=64, nt=1000))
    report = cross_validate(u, oracle, mask_corner_cells=5, tol=2e-2)
    assert report.passed, report.failures


def test_boundary_data_matches_oracle(skew_params):
    g = lambda s: 1.0 - np.exp(-5.0 * np.asarray(s, dtype=float))
    spec = ProblemSpec(L=1.0, T=0.5, bc_kind="dirichlet", left_bc=g)
    u, _ = solve_dirichlet(skew_params, spec, GridConfig(nx=20, nt=100))
    assert np.allclose(u.values[1:, 0], g(u.t[1:]))
    oracle = fd_solve(skew_params, spec, FDConfig(nx=64, nt=2000))
    assert cross_validate(u, oracle, tol=2e-2).passed


def test_nonlinear_source_converges_and_matches_oracle(unit_params, small_grid, sine_profile):
    spec = ProblemSpec(L=1.0, T=0.5, bc_kind="dirichlet", u0=sine_profile, source=_linear_source(0.5))
    u, report = solve_dirichlet(unit_params, spec, small_grid, picard=PicardConfig(tol=1e-10))
    assert report.converged
    assert report.final_delta <= 1e-10
    assert all(len(d) >= 1 for d in report.delta_history)
    oracle = fd_solve(unit_params, spec, FDConfig(nx=64, nt=1000))
    assert cross_validate(u, oracle, tol=2e-2).passed


def test_small_windows_agree_with_single_window(unit_params, small_grid, sine_profile):
    spec = ProblemSpec(L=1.0, T=0.5, bc_kind="dirichlet", u0=sine_profile, source=_linear_source(0.5))
    full, _ = solve_dirichlet(unit_params, spec, small_grid, picard=PicardConfig(tol=1e-12))
    split, report = solve_dirichlet(unit_params, spec, small_grid, picard=PicardConfig(tol=1e-12, window_steps=7))
    assert report.window_count == math.ceil(small_grid.nt / 7)
    assert np.allclose(split.values, full.values, atol=1e-9)


def test_escape_from_working_region(unit_params, small_grid, sine_profile):
    source = SourceSpec(F=lambda x, t, u: u * u, lipschitz_C=2e-3, depends_on_u=True, radius=1e-3, name="quadratic")
    spec = ProblemSpec(L=1.0, T=0.5, bc_kind="dirichlet", u0=sine_profile, source=source)
    with pytest.raises(DivergenceError) as info:
        solve_dirichlet(unit_params, spec, small_grid)
    assert info.value.exit_code == 2


def test_decay_estimate_holds(unit_params, sine_profile):
    spec = ProblemSpec(L=1.0, T=2.0, bc_kind="dirichlet", u0=sine_profile)
    u, _ = solve_dirichlet(unit_params, spec, GridConfig(nx=20, nt=200))
    report = check_decay_estimate(unit_params, spec, u)
    assert report.passed, report.failures
    assert report.checks[0].t >= 1.0


def test_decay_estimate_skipped_before_onset(unit_params, small_grid, sine_profile):
    spec = ProblemSpec(L=1.0, T=0.5, bc_kind="dirichlet", u0=sine_profile)
    u, _ = solve_dirichlet(unit_params, spec, small_grid)
    report = check_decay_estimate(unit_params, spec, u, onset=1.0)
    assert report.checks[0].status == "skipped"


def test_decay_estimate_requires_homogeneous_walls(unit_params, small_grid):
    spec = ProblemSpec(L=1.0, T=0.5, bc_kind="dirichlet", left_bc=lambda s: np.ones_like(s))
    u, _ = solve_dirichlet(unit_params, spec, small_grid)
    with pytest.raises(ParameterError):
        check_decay_estimate(unit_params, spec, u)


def test_boundary_response_zero_data(unit_params, unit_strip):
    out = compute_boundary_response(unit_params, unit_strip, lambda s: np.zeros_like(s), "left", [0.2, 0.5], 1.0)
    assert np.all(out == 0.0)


def test_boundary_response_wall_value(unit_params, unit_strip):
    g = lambda s: np.full_like(np.asarray(s, dtype=float), 0.7)
    out = compute_boundary_response(unit_params, unit_strip, g, "left", [0.0, 0.5], 1.0)
    assert out[0] == 0.7
    assert 0.0 < out[1] < 0.7


def test_boundary_response_rejects_unknown_edge(unit_params, unit_strip):
    with pytest.raises(ParameterError):
        compute_boundary_response(unit_params, unit_strip, lambda s: s, "top", [0.5], 1.0)


@pytest.mark.slow
def test_neumann_matches_oracle(unit_params):
    spec = ProblemSpec(L=1.0, T=0.5, bc_kind="neumann", u0=lambda x: np.cos(np.pi * np.asarray(x, dtype=float)))
    u, _ = solve_neumann(unit_params, spec, GridConfig(nx=20, nt=100))
    oracle = fd_solve(unit_params, spec, FDConfig(nx=64, nt=1000))
    assert cross_validate(u, oracle, tol=2e-2).passed


@pytest.mark.slow
def test_mixed_matches_oracle(skew_params):
    spec = ProblemSpec(
        L=1.0, T=0.5, bc_kind="mixed", u0=lambda x: np.sin(0.5 * np.pi * np.asarray(x, dtype=float)),
        source=SourceSpec(F=lambda x, t, u: np.full_like(u, 0.5), depends_on_u=False, sup_bound=0.5),
    )
    u, _ = solve_mixed(skew_params, spec, GridConfig(nx=20, nt=100))
    oracle = fd_solve(skew_params, spec, FDConfig(nx=64, nt=1000))
    assert cross_validate(u, oracle, tol=2e-2).passed


@pytest.mark.slow
def test_boundary_response_reaches_steady_profile(unit_params, unit_strip):
    from core.asympt import steady_boundary_profile

    x = np.array([0.25, 0.5, 0.75])
    g = lambda s: np.ones_like(np.asarray(s, dtype=float))
    out = compute_boundary_response(unit_params, unit_strip, g, "left", x, 30.0)
    target = steady_boundary_profile(unit_params, 1.0, "dirichlet", 1.0, 0.0, x)
    assert np.allclose(out, target, atol=1e-3)


def test_picard_deltas_contract_in_every_window(unit_params, small_grid, sine_profile):
    spec = ProblemSpec(L=1.0, T=0.5, bc_kind="dirichlet", u0=sine_profile, source=_linear_source(0.5))
    tol = 1e-10
    _, report = solve_dirichlet(unit_params, spec, small_grid, picard=PicardConfig(tol=tol, window_steps=25))
    assert report.window_count >= 4
    assert report.final_delta <= tol
    for deltas in report.delta_history:
        assert deltas[-1] < tol
        ratios = [b / a for a, b in zip(deltas[1:], deltas[2:]) if a > 0.0]
        assert all(r < 1.0 for r in ratios[-2:])


def test_unconverged_picard_is_never_reported_as_success(unit_params, small_grid, sine_profile):
    spec = ProblemSpec(L=1.0, T=0.5, bc_kind="dirichlet", u0=sine_profile, source=_linear_source(0.5))
    with pytest.raises(DivergenceError) as info:
        solve_dirichlet(unit_params, spec, small_grid, picard=PicardConfig(tol=1e-15, max_iter=2))
    assert info.value.exit_code == 2


def test_linear_sources_superpose(unit_params, small_grid, sine_profile):
    pulse = SourceSpec(
        F=lambda x, t, u: np.exp(-((x - 0.4) ** 2) / 0.02 - t) * np.ones_like(u),
        depends_on_u=False, sup_bound=1.0, name="gaussian-pulse",
    )
    doubled = SourceSpec(F=lambda x, t, u: 2.0 * pulse(x, t, u), depends_on_u=False, sup_bound=2.0, name="double")
    g = lambda s: 0.3 * (1.0 - np.exp(-5.0 * np.asarray(s, dtype=float)))

    first, _ = solve_dirichlet(unit_params, ProblemSpec(L=1.0, T=0.5, bc_kind="dirichlet", u0=sine_profile), small_grid)
    second, _ = solve_dirichlet(
        unit_params, ProblemSpec(L=1.0, T=0.5, bc_kind="dirichlet", left_bc=g, source=pulse), small_grid
    )
    both, _ = solve_dirichlet(
        unit_params,
        ProblemSpec(L=1.0, T=0.5, bc_kind="dirichlet", u0=sine_profile, left_bc=g, source=pulse),
        small_grid,
    )
    assert np.allclose(both.values, first.values + second.values, atol=1e-12)
    twice, _ = solve_dirichlet(
        unit_params, ProblemSpec(L=1.0, T=0.5, bc_kind="dirichlet", source=doubled), small_grid
    )
    once, _ = solve_dirichlet(unit_params, ProblemSpec(L=1.0, T=0.5, bc_kind="dirichlet", source=pulse), small_grid)
    assert np.allclose(twice.values, 2.0 * once.values, atol=1e-12)


SOLVERS = {"dirichlet": solve_dirichlet, "neumann": solve_neumann, "mixed": solve_mixed}

MODES = {
    "dirichlet": lambda k, x: np.sin(k * np.pi * x),
    "neumann": lambda k, x: np.cos((k - 1) * np.pi * x),
    "mixed": lambda k, x: np.sin((k - 0.5) * np.pi * x),
}


def _random_problem(kind: str, seed: int) -> ProblemSpec:
    """Données lisses tirées au hasard : trois modes compatibles avec les bords, source constante"""
    rng = np.random.default_rng(seed)
    coeffs = rng.uniform(-1.0, 1.0, 3)
    coeffs[0] = math.copysign(max(abs(coeffs[0]), 0.5), coeffs[0])
    amp = float(rng.uniform(-0.5, 0.5))

    def u0(x):
        x = np.asarray(x, dtype=float)
        return sum(c * MODES[kind](k, x) for k, c in enumerate(coeffs, start=1))

    source = SourceSpec(F=lambda x, t, u: np.full_like(u, amp), depends_on_u=False, sup_bound=abs(amp), name="constant")
    left = lambda s: np.zeros_like(np.asarray(s, dtype=float))
    if kind == "dirichlet":
        d = float(rng.uniform(-1.0, 1.0))
        left = lambda s: d * (1.0 - np.exp(-5.0 * np.asarray(s, dtype=float)))
    return ProblemSpec(L=1.0, T=0.5, bc_kind=kind, u0=u0, left_bc=left, source=source)


@pytest.mark.slow
@pytest.mark.parametrize("kind", ["dirichlet", "neumann", "mixed"])
@pytest.mark.parametrize("seed", range(5))
def test_random_instances_match_oracle(unit_params, kind, seed):
    spec = _random_problem(kind, seed)
    u, _ = SOLVERS[kind](unit_params, spec, GridConfig(nx=20, nt=100))
    oracle = fd_solve(unit_params, spec, FDConfig(nx=64, nt=2000))
    report = cross_validate(u, oracle, tol=2e-2)
    assert report.passed, report.failures


@pytest.mark.slow
def test_gap_to_oracle_shrinks_under_refinement(unit_params, sine_profile):
    spec = ProblemSpec(L=1.0, T=0.5, bc_kind="dirichlet", u0=sine_profile)
    gaps = []
    for grid, fd in ((GridConfig(nx=10, nt=50), FDConfig(nx=32, nt=250)), (GridConfig(nx=20, nt=100), FDConfig(nx=64, nt=1000))):
        u, _ = solve_dirichlet(unit_params, spec, grid)
        report = cross_validate(u, fd_solve(unit_params, spec, fd))
        gaps.append(next(c.lhs for c in report.checks if c.name == "sup_rel"))
    assert gaps[1] * 1.5 <= gaps[0]
