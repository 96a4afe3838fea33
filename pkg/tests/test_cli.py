# tests/test_cli.py
import json
from pathlib import Path

import numpy as np
import pytest

from core.fields import Field
from main import build_parser, load_scenario, run
from errors import ParameterError
from storage import field_table, read_table

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

SMALL = """
[operator]
epsilon = 1.0
a = 1.0
b = 1.0
beta = 1.0

[geometry]
L = 1.0
T = 0.5

[grid]
nx = 10
nt = 50

[initial.u0]
name = "sine"

[fd]
nx = 32
nt = 500

[verify]
t_samples = [0.1, 1.0]
x_samples = [0.0, 0.5]
s_samples = [1.0, 2.0]
"""


def _jsonl(path):
    lines = path.read_text(encoding="utf-8").splitlines()
    return [json.loads(line) for line in lines if not line.startswith("#")]


def test_parser_requires_a_subcommand():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_load_scenario_errors(tmp_path):
    with pytest.raises(ParameterError):
        load_scenario(tmp_path / "absent.toml")
    broken = tmp_path / "broken.toml"
    broken.write_text("[operator\nepsilon = ", encoding="utf-8")
    with pytest.raises(ParameterError):
        load_scenario(broken)


def test_kernel_table(write_scenario, tmp_path):
    out = tmp_path / "res"
    assert run(["kernel", "-c", str(write_scenario(SMALL)), "-o", str(out)]) == 0
    columns, data = read_table(out / "memdiff_kernel.csv")
    assert columns == ["x", "t", "K0", "K0_dx", "K1", "K2"]
    assert data.shape == (4, 6)


def test_verify_kernel(write_scenario, tmp_path):
    out = tmp_path / "res"
    assert run(["verify", "kernel", "-c", str(write_scenario(SMALL)), "-o", str(out)]) == 0
    records = _jsonl(out / "memdiff_verify_kernel.jsonl")
    assert records
    assert {r["report"] for r in records} == {"kernel_bounds", "kernel_laplace"}


def test_invalid_parameters_exit_1_without_output(write_scenario, tmp_path):
    out = tmp_path / "res"
    path = write_scenario(SMALL.replace("epsilon = 1.0", "epsilon = -1.0"))
    assert run(["solve", "-c", str(path), "-o", str(out)]) == 1
    assert not out.exists()


def test_unknown_key_exit_1(write_scenario, tmp_path):
    path = write_scenario(SMALL + "\n[grid_extra]\nnx = 3\n")
    assert run(["solve", "-c", str(path), "-o", str(tmp_path / "res")]) == 1


def test_missing_scenario_exit_1(tmp_path):
    assert run(["solve", "-c", str(tmp_path / "absent.toml"), "-o", str(tmp_path / "res")]) == 1


def test_solve_writes_field_and_report(write_scenario, tmp_path):
    out = tmp_path / "res"
    assert run(["solve", "-c", str(write_scenario(SMALL)), "-o", str(out)]) == 0
    text = (out / "memdiff_solution.csv").read_text(encoding="utf-8")
    assert text.startswith("# memdiff ")
    assert "\r" not in text
    columns, data = read_table(out / "memdiff_solution.csv")
    assert columns == ["x", "t", "u"]
    assert data.shape == (11 * 51, 3)
    report = _jsonl(out / "memdiff_solve_report.jsonl")
    assert report[0]["iterations"] == 1


def test_solve_output_is_deterministic(write_scenario, tmp_path):
    path = write_scenario(SMALL)
    assert run(["solve", "-c", str(path), "-o", str(tmp_path / "a")]) == 0
    assert run(["solve", "-c", str(path), "-o", str(tmp_path / "b")]) == 0
    first = (tmp_path / "a" / "memdiff_solution.csv").read_bytes()
    second = (tmp_path / "b" / "memdiff_solution.csv").read_bytes()
    assert first == second


def test_compare_passes(write_scenario, tmp_path):
    out = tmp_path / "res"
    assert run(["compare", "-c", str(write_scenario(SMALL)), "-o", str(out)]) == 0
    records = _jsonl(out / "memdiff_compare.jsonl")
    assert {r["name"] for r in records} == {"sup_rel", "l2_rel"}


def test_compare_failure_exit_3(write_scenario, tmp_path):
    out = tmp_path / "res"
    path = write_scenario(SMALL + "\n[output]\ncompare_tol = 1e-12\n")
    assert run(["compare", "-c", str(path), "-o", str(out)]) == 3
    assert (out / "memdiff_compare.jsonl").exists()


def test_divergence_exit_2(write_scenario, tmp_path):
    path = write_scenario(SMALL + '\n[source]\nkind = "custom-polynomial"\ncoefficients = [0.0, 0.0, 1.0]\nradius = 1e-3\n')
    assert run(["solve", "-c", str(path), "-o", str(tmp_path / "res")]) == 2


def test_fhn_refuses_foreign_source(write_scenario, tmp_path):
    path = write_scenario(SMALL + '\n[source]\nkind = "constant"\nvalue = 1.0\n')
    assert run(["fhn", "-c", str(path), "-o", str(tmp_path / "res")]) == 1


def test_output_prefix(write_scenario, tmp_path):
    out = tmp_path / "res"
    path = write_scenario(SMALL + '\n[output]\nprefix = "run1"\n')
    assert run(["theta", "-c", str(path), "-o", str(out)]) == 0
    columns, data = read_table(out / "run1_theta.csv")
    assert columns[2:] == ["theta", "theta_star", "theta_dx", "theta_star_dx"]
    assert data.shape == (4, 6)


def test_output_dir_from_environment(write_scenario, tmp_path):
    # MEMDIFF_OUTPUT_DIR pointe vers tmp_path/out (conftest)
    assert run(["kernel", "-c", str(write_scenario(SMALL))]) == 0
    assert (tmp_path / "out" / "memdiff_kernel.csv").exists()


def test_field_table_orders_time_then_space():
    u = Field(x=np.array([0.0, 0.5, 1.0]), t=np.array([0.0, 1.0]), values=np.arange(6.0).reshape(2, 3))
    columns, data = field_table({"u": u})
    assert columns == ["x", "t", "u"]
    assert data[:, 0].tolist() == [0.0, 0.5, 1.0, 0.0, 0.5, 1.0]
    assert data[:, 1].tolist() == [0.0, 0.0, 0.0, 1.0, 1.0, 1.0]
    assert data[:, 2].tolist() == [0.0, 1.0, 2.0, 3.0, 4.0, 5.0]


# ===== Autres sous-commandes =====

FHN_SMALL = (
    SMALL.replace("\na = 1.0", "\na = 0.5").replace('name = "sine"', 'name = "sine"\namplitude = 0.3')
    + '\n[source]\nkind = "fhn-cubic"\n\n[fhn]\ncompare_oracle = false\n'
)


def _report_names(path):
    return {r["report"] for r in _jsonl(path) if "report" in r}


def test_oracle_writes_u_and_w(write_scenario, tmp_path):
    out = tmp_path / "res"
    assert run(["oracle", "-c", str(write_scenario(SMALL)), "-o", str(out)]) == 0
    columns, data = read_table(out / "memdiff_oracle.csv")
    assert columns == ["x", "t", "u", "w"]
    assert np.all(data[data[:, 1] == 0.0][:, 3] == 0.0)


def test_verify_decay(write_scenario, tmp_path):
    out = tmp_path / "res"
    assert run(["verify", "decay", "-c", str(write_scenario(SMALL)), "-o", str(out)]) == 0
    assert _report_names(out / "memdiff_verify_decay.jsonl") == {"decay_estimate"}


def test_fhn_without_oracle(write_scenario, tmp_path):
    out = tmp_path / "res"
    assert run(["fhn", "-c", str(write_scenario(FHN_SMALL)), "-o", str(out)]) == 0
    columns, data = read_table(out / "memdiff_fhn.csv")
    assert columns == ["x", "t", "u", "v"]
    assert data.shape == (11 * 51, 4)
    records = _jsonl(out / "memdiff_fhn_report.jsonl")
    assert records[0]["converged"]


def test_verify_fhn_runs_estimates_on_homogeneous_walls(write_scenario, tmp_path):
    out = tmp_path / "res"
    assert run(["verify", "fhn", "-c", str(write_scenario(FHN_SMALL)), "-o", str(out)]) == 0
    assert _report_names(out / "memdiff_verify_fhn.jsonl") == {"fhn_estimates"}


def test_verify_fhn_without_applicable_check(write_scenario, tmp_path):
    text = FHN_SMALL + '\n[boundary.left]\nname = "sine"\n'
    assert run(["verify", "fhn", "-c", str(write_scenario(text)), "-o", str(tmp_path / "res")]) == 1


@pytest.mark.slow
def test_fhn_compares_v_at_its_own_tolerance(tmp_path):
    out = tmp_path / "res"
    assert run(["fhn", "-c", str(SCENARIOS / "fhn_subthreshold.toml"), "-o", str(out)]) == 0
    records = _jsonl(out / "memdiff_fhn_report.jsonl")
    assert _report_names(out / "memdiff_fhn_report.jsonl") == {"fhn_oracle", "fhn_v_recovery"}
    v_sup = next(r for r in records if r.get("name") == "v_sup_rel")
    assert v_sup["rhs"] == 1e-3
    assert v_sup["status"] == "pass"


@pytest.mark.slow
def test_verify_fhn_steady_state(tmp_path):
    out = tmp_path / "res"
    assert run(["verify", "fhn", "-c", str(SCENARIOS / "fhn_steady.toml"), "-o", str(out)]) == 0
    records = _jsonl(out / "memdiff_verify_fhn.jsonl")
    assert {r["name"] for r in records} == {"steady_u", "steady_v"}
    assert all(r["report"] == "fhn_steady_boundary" for r in records)


@pytest.mark.slow
def test_asympt(write_scenario, tmp_path):
    out = tmp_path / "res"
    text = (SCENARIOS / "boundary_steady.toml").read_text(encoding="utf-8")
    path = write_scenario(text.replace("x_samples = [0.1, 0.3, 0.5, 0.7, 0.9]", "x_samples = [0.25, 0.5, 0.75]"))
    assert run(["asympt", "-c", str(path), "-o", str(out)]) == 0
    columns, data = read_table(out / "memdiff_asympt.csv")
    assert columns == ["x", "horizon", "numeric", "closed_form", "deviation"]
    assert data.shape == (9, 5)
    assert _report_names(out / "memdiff_asympt_report.jsonl") == {"boundary_limit_dirichlet"}


@pytest.mark.slow
def test_verify_theta(write_scenario, tmp_path):
    out = tmp_path / "res"
    assert run(["verify", "theta", "-c", str(write_scenario(SMALL)), "-o", str(out)]) == 0
    assert _report_names(out / "memdiff_verify_theta.jsonl") == {"theta_bounds", "theta_laplace"}


@pytest.mark.slow
def test_verify_limits(write_scenario, tmp_path):
    out = tmp_path / "res"
    path = write_scenario(SMALL + "\n[asympt]\nx_samples = [0.0, 0.1, 0.5, 0.9]\n")
    assert run(["verify", "limits", "-c", str(path), "-o", str(out)]) == 0
    assert _report_names(out / "memdiff_verify_limits.jsonl") == {"theta_limits"}
