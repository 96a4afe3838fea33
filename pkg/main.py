# main.py
"""Interface en ligne de commande : scénario TOML → calculs → fichiers CSV/JSON-lines"""
import argparse
import logging
import sys
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np
from pydantic import ValidationError

from config import get_settings
from core.asympt import LimitFunction, boundary_limit_check, boundary_limit_rows
from core.datafuncs import build_function, build_source, data_limit
from core.fhn import (
    FHNSpec,
    check_v_recovery,
    fhn_check_estimates,
    fhn_compare,
    fhn_oracle,
    fhn_solve,
    fhn_steady_boundary,
)
from core.fields import ProblemSpec
from core.greensolve import check_decay_estimate, solve_dirichlet, solve_mixed, solve_neumann
from core.kernel import check_kernel_bounds, eval_K0, eval_K0_dx, eval_K1, eval_K2, laplace_transform_check
from core.oracle import cross_validate, fd_solve
from core.params import omega
from core.theta import ThetaTable, check_theta_bounds, check_theta_limits, laplace_theta_check
from errors import MemdiffError, ParameterError, VerificationFailure
from models import ScenarioConfig, StripGeometry, VerificationReport
from storage import write_field, write_records, write_reports, write_table

LOG_FORMAT = "[%(asctime)s] %(levelname)s %(name)s: %(message)s"
LOG_DATEFMT = "%Y-%m-%d %H:%M:%S"

logger = logging.getLogger(__name__)
settings = get_settings()

SOLVERS = {"dirichlet": solve_dirichlet, "neumann": solve_neumann, "mixed": solve_mixed}


def configure_logging(level: str | None = None):
    default = "DEBUG" if settings.debug else settings.log_level
    logging.basicConfig(
        level=(level or default).upper(),
        format=LOG_FORMAT,
        datefmt=LOG_DATEFMT,
        force=True,
    )


def load_scenario(path: Path | None) -> ScenarioConfig:
    """
    Lit et valide le scénario (clés inconnues refusées).

    Raises:
        ParameterError: fichier absent ou TOML illisible
        ValidationError: schéma non respecté
    """
    if path is None:
        raise ParameterError("Aucun scénario fourni (--config)")
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ParameterError("Scénario introuvable", path=str(path))
    except tomllib.TOMLDecodeError as e:
        raise ParameterError(f"TOML invalide : {e}", path=str(path))
    return ScenarioConfig.model_validate(data)


@dataclass
class RunContext:
    """Scénario validé et destination des sorties"""

    scenario: ScenarioConfig
    output_dir: Path
    threads: int
    subcommand: str

    @property
    def geom(self) -> StripGeometry:
        return StripGeometry(L=self.scenario.geometry.L)

    @property
    def config(self) -> dict[str, Any]:
        return {"subcommand": self.subcommand, "threads": self.threads, **self.scenario.model_dump(mode="json")}

    def path(self, suffix: str) -> Path:
        return self.output_dir / f"{self.scenario.output.prefix}_{suffix}"


def build_problem(sc: ScenarioConfig) -> ProblemSpec:
    """Problème aux limites décrit par les sections [boundary], [initial], [source]"""
    L = sc.geometry.L
    return ProblemSpec(
        L=L,
        T=sc.geometry.T,
        bc_kind=sc.boundary.kind,
        left_bc=build_function(sc.boundary.left),
        right_bc=build_function(sc.boundary.right),
        u0=build_function(sc.initial.u0, scale=L),
        source=build_source(sc.source, L),
    )


def build_fhn_spec(sc: ScenarioConfig) -> FHNSpec:
    if sc.boundary.kind != "dirichlet":
        raise ParameterError("FitzHugh-Nagumo n'est traité qu'avec des bords de Dirichlet", kind=sc.boundary.kind)
    if sc.source.kind not in ("none", "fhn-cubic"):
        raise ParameterError("La sous-commande fhn impose sa propre source cubique", source=sc.source.kind)
    L = sc.geometry.L
    return FHNSpec(
        params=sc.operator,
        L=L,
        T=sc.geometry.T,
        u0=build_function(sc.initial.u0, scale=L),
        v0=build_function(sc.initial.v0, scale=L),
        g1=build_function(sc.boundary.left),
        g2=build_function(sc.boundary.right),
        radius=sc.fhn.radius,
        g1_limit=data_limit(sc.boundary.left),
        g2_limit=data_limit(sc.boundary.right),
    )


def _green_solve(ctx: RunContext):
    sc = ctx.scenario
    spec = build_problem(sc)
    solver = SOLVERS[spec.bc_kind]
    return spec, *solver(sc.operator, spec, sc.grid, sc.kernel, sc.picard, sc.series, ctx.threads)


# ===== SOUS-COMMANDES =====

def cmd_kernel(ctx: RunContext, args) -> list[VerificationReport]:
    """Table de K₀, ∂ₓK₀, K₁, K₂ aux échantillons (x, t) de [verify]"""
    sc = ctx.scenario
    p, cfg = sc.operator, sc.kernel
    rows = [
        (x, t, eval_K0(p, x, t, cfg), eval_K0_dx(p, x, t, cfg), eval_K1(p, x, t, cfg), eval_K2(p, x, t, cfg))
        for t in sc.verify.t_samples
        for x in sc.verify.x_samples
    ]
    write_table(ctx.path("kernel.csv"), ["x", "t", "K0", "K0_dx", "K1", "K2"], np.array(rows), ctx.config)
    return []


def cmd_theta(ctx: RunContext, args) -> list[VerificationReport]:
    """Table de θ, θ*, θₓ, θ*ₓ aux échantillons (x, t) de [verify]"""
    sc = ctx.scenario
    tt = ThetaTable(sc.operator, ctx.geom, sc.kernel, sc.series)
    x = np.asarray(sc.verify.x_samples, dtype=float)
    blocks = []
    for t in sc.verify.t_samples:
        blocks.append(np.column_stack([
            x,
            np.full_like(x, t),
            tt.values(x, t),
            tt.values(x, t, star=True),
            tt.values(x, t, derivative=True),
            tt.values(x, t, star=True, derivative=True),
        ]))
    columns = ["x", "t", "theta", "theta_star", "theta_dx", "theta_star_dx"]
    write_table(ctx.path("theta.csv"), columns, np.vstack(blocks), ctx.config)
    return []


def cmd_solve(ctx: RunContext, args) -> list[VerificationReport]:
    _, field, report = _green_solve(ctx)
    write_field(ctx.path("solution.csv"), field, ctx.config)
    write_reports(ctx.path("solve_report.jsonl"), [report], ctx.config)
    return []


def cmd_oracle(ctx: RunContext, args) -> list[VerificationReport]:
    sc = ctx.scenario
    solution = fd_solve(sc.operator, build_problem(sc), sc.fd)
    write_field(ctx.path("oracle.csv"), {"u": solution.u, "w": solution.w}, ctx.config)
    return []


def cmd_compare(ctx: RunContext, args) -> list[VerificationReport]:
    sc = ctx.scenario
    spec, field, _ = _green_solve(ctx)
    oracle = fd_solve(sc.operator, spec, sc.fd)
    report = cross_validate(field, oracle, mask_corner_cells=sc.output.mask_corner_cells, tol=sc.output.compare_tol)
    write_reports(ctx.path("compare.jsonl"), [report], ctx.config)
    return [report]


def cmd_fhn(ctx: RunContext, args) -> list[VerificationReport]:
    sc = ctx.scenario
    spec = build_fhn_spec(sc)
    solution, solve_report = fhn_solve(spec, sc.grid, sc.kernel, sc.picard, sc.series, ctx.threads)
    reports: list[VerificationReport] = []
    if sc.fhn.compare_oracle:
        oracle = fhn_oracle(spec, sc.fd)
        reports.append(fhn_compare(
            solution, oracle, sc.output.mask_corner_cells, u_tol=sc.output.compare_tol, v_tol=sc.fhn.v_tol
        ))
        reports.append(check_v_recovery(spec, oracle, sc.fhn.v_tol))
    write_field(ctx.path("fhn.csv"), {"u": solution.u, "v": solution.v}, ctx.config)
    write_reports(ctx.path("fhn_report.jsonl"), [solve_report, *reports], ctx.config)
    return reports


def cmd_asympt(ctx: RunContext, args) -> list[VerificationReport]:
    sc = ctx.scenario
    cfg = sc.asympt
    p = sc.operator
    g = LimitFunction.from_spec(cfg.g)
    horizons = [factor / omega(p) for factor in cfg.horizon_factors]
    rows = boundary_limit_rows(p, ctx.geom, g, cfg.x_samples, horizons, cfg.variant, cfg.steps_per_unit,
                               sc.kernel, sc.series, ctx.threads)
    report = boundary_limit_check(p, ctx.geom, g, cfg.x_samples, horizons, cfg.variant, cfg.tol, rows=rows)
    columns = ["x", "horizon", "numeric", "closed_form", "deviation"]
    write_records(ctx.path("asympt.csv"), rows, columns, ctx.config)
    write_reports(ctx.path("asympt_report.jsonl"), [report], ctx.config)
    return [report]


def verify_kernel(ctx: RunContext) -> list[VerificationReport]:
    sc = ctx.scenario
    return [
        check_kernel_bounds(sc.operator, sc.verify.t_samples, sc.kernel),
        laplace_transform_check(sc.operator, sc.verify.laplace_x, sc.verify.s_samples, sc.kernel),
    ]


def verify_theta(ctx: RunContext) -> list[VerificationReport]:
    sc = ctx.scenario
    return [
        check_theta_bounds(sc.operator, ctx.geom, sc.verify.t_samples, sc.verify.x_samples, sc.kernel, sc.series),
        laplace_theta_check(sc.operator, ctx.geom, sc.verify.laplace_x, sc.verify.s_samples, sc.kernel, sc.series),
    ]


def verify_decay(ctx: RunContext) -> list[VerificationReport]:
    sc = ctx.scenario
    spec, field, _ = _green_solve(ctx)
    return [check_decay_estimate(sc.operator, spec, field, sc.verify.onset)]


def verify_fhn(ctx: RunContext) -> list[VerificationReport]:
    """
    Estimations a priori (bords homogènes), régime permanent forcé par les bords
    (limites déclarées, u₀ = 0) et récupération de v sur l'oracle.
    """
    sc = ctx.scenario
    spec = build_fhn_spec(sc)
    reports: list[VerificationReport] = []
    homogeneous = sc.boundary.left.name == sc.boundary.right.name == "zero"
    if homogeneous:
        solution, _ = fhn_solve(spec, sc.grid, sc.kernel, sc.picard, sc.series, ctx.threads)
        reports.append(fhn_check_estimates(spec, solution))
    elif sc.initial.u0.name == "zero" and spec.g1_limit is not None and spec.g2_limit is not None:
        _, _, steady = fhn_steady_boundary(
            spec, sc.asympt.x_samples, sc.fhn.steady_horizon_factor, sc.grid, sc.kernel, sc.series
        )
        reports.append(steady)
    else:
        logger.warning("Ni bords homogènes ni limites de bord déclarées avec u₀ = 0 : estimations ignorées")
    if sc.fhn.compare_oracle:
        reports.append(check_v_recovery(spec, fhn_oracle(spec, sc.fd), sc.fhn.v_tol))
    if not reports:
        raise ParameterError("Aucune vérification FitzHugh-Nagumo applicable à ce scénario")
    return reports


def verify_limits(ctx: RunContext) -> list[VerificationReport]:
    sc = ctx.scenario
    p = sc.operator
    L = sc.geometry.L
    interior = [x for x in sc.asympt.x_samples if 0.0 < x < L]
    horizon = sc.verify.horizon_factor / omega(p)
    return [check_theta_limits(p, ctx.geom, interior, horizon, sc.kernel, sc.series, sc.asympt.tol)]


VERIFY_TARGETS: dict[str, Callable[[RunContext], list[VerificationReport]]] = {
    "kernel": verify_kernel,
    "theta": verify_theta,
    "decay": verify_decay,
    "fhn": verify_fhn,
    "limits": verify_limits,
}


def cmd_verify(ctx: RunContext, args) -> list[VerificationReport]:
    reports = VERIFY_TARGETS[args.target](ctx)
    write_reports(ctx.path(f"verify_{args.target}.jsonl"), reports, ctx.config)
    return reports


COMMANDS = {
    "kernel": cmd_kernel,
    "theta": cmd_theta,
    "solve": cmd_solve,
    "oracle": cmd_oracle,
    "compare": cmd_compare,
    "fhn": cmd_fhn,
    "asympt": cmd_asympt,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=settings.app_name,
        description="Diffusion à noyau mémoire exponentiel : fonctions de Green, solveurs et vérifications",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.app_version}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", "-c", type=Path, help="Scénario TOML")
    common.add_argument("--output-dir", "-o", type=Path, help="Répertoire de sortie (défaut : MEMDIFF_OUTPUT_DIR)")
    common.add_argument("--threads", type=int, help="Nombre maximal de threads")
    common.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"])

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("kernel", parents=[common], help="Tabule K₀, ∂ₓK₀, K₁, K₂")
    sub.add_parser("theta", parents=[common], help="Tabule θ, θ*, θₓ, θ*ₓ")
    sub.add_parser("solve", parents=[common], help="Résout le problème aux limites (Green + Picard)")
    sub.add_parser("oracle", parents=[common], help="Solveur de référence aux différences finies")
    sub.add_parser("compare", parents=[common], help="Compare Green et différences finies")
    sub.add_parser("fhn", parents=[common], help="Système de FitzHugh-Nagumo")
    sub.add_parser("asympt", parents=[common], help="Limites des convolutions de bord")
    verify = sub.add_parser("verify", parents=[common], help="Suites de vérification")
    verify.add_argument("target", choices=sorted(VERIFY_TARGETS))
    return parser


def run(argv: list[str] | None = None) -> int:
    """Point d'entrée; retourne le code de sortie (0, 1 validation, 2 numérique, 3 vérification)"""
    settings = get_settings()
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)

    logger.info("=" * 60)
    logger.info(f"{settings.app_name} v{settings.app_version} : {args.command}")
    logger.info("=" * 60)

    try:
        scenario = load_scenario(args.config)
        if args.threads is not None and args.threads < 1:
            raise ParameterError("--threads doit être ≥ 1", threads=args.threads)
        output_dir = args.output_dir or (
            Path(scenario.output.directory) if scenario.output.directory else settings.output_dir
        )
        ctx = RunContext(
            scenario=scenario,
            output_dir=output_dir,
            threads=args.threads or settings.threads,
            subcommand=args.command if args.command != "verify" else f"verify {args.target}",
        )
        reports = COMMANDS[args.command](ctx, args)

        failures = [c for r in reports for c in r.failures]
        if failures:
            worst = min(failures, key=lambda c: c.margin)
            raise VerificationFailure(
                f"{len(failures)} vérification(s) en échec",
                worst=worst.name,
                margin=worst.margin,
            )
    except ValidationError as e:
        print(f"✗ Scénario invalide :\n{e}", file=sys.stderr)
        return 1
    except MemdiffError as e:
        print(f"✗ {type(e).__name__} : {e}", file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.error(f"✗ Erreur inattendue : {e}", exc_info=True)
        return 1

    logger.info(f"✓ {args.command} terminé")
    return 0


if __name__ == "__main__":
    sys.exit(run())
