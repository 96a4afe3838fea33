# core/asympt.py
"""
Limites en temps long des convolutions de données.

- convolution_limit_check : lim ∫₀ᵗ χ(t−τ) ḣ(τ) dτ = χ(∞)[h(∞) − h(0)]
- boundary_limit_check : lim ∫₀ᵗ θₓ(x,τ) g(t−τ) dτ = g∞ · sinh σ₀(x−L) / (2ε sinh σ₀L)
  (θ*ₓ et la limite en cosh pour le problème mixte)
- steady_boundary_profile : profils permanents forcés par les bords, trois types
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Literal, Optional

import numpy as np
from scipy.integrate import quad

from config import get_settings
from core.datafuncs import build_derivative, build_function, data_limit
from core.greensolve import compute_boundary_response
from core.params import sigma0
from core.theta import limit_status, theta_limits
from errors import ParameterError, validate_positive
from models import (
    CheckResult,
    DataFunctionSpec,
    KernelConfig,
    OperatorParams,
    SeriesTruncation,
    StripGeometry,
    VerificationReport,
)

logger = logging.getLogger(__name__)

# Pas relatif des différences centrées pour ḣ quand aucune dérivée n'est fournie
DIFF_STEP = 1e-4


@dataclass(frozen=True)
class LimitFunction:
    """
    Fonction du temps munie de sa limite déclarée.

    `derivative_integrable` affirme ḟ ∈ L₁[0, ∞); sans cette déclaration la
    limite de convolution n'est pas certifiable.
    """

    f: Callable[[np.ndarray], np.ndarray]
    f_infinity: Optional[float]
    derivative_integrable: bool = False
    derivative: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = "custom"

    @classmethod
    def from_spec(cls, spec: DataFunctionSpec) -> "LimitFunction":
        """Fonction nommée : dérivée analytique, limite connue quand elle existe"""
        limit = data_limit(spec)
        return cls(
            f=build_function(spec),
            f_infinity=limit,
            derivative_integrable=limit is not None,
            derivative=build_derivative(spec),
            name=spec.name,
        )

    def __call__(self, t):
        return np.asarray(self.f(np.asarray(t, dtype=float)), dtype=float)

    def tail_is_approaching(self, horizons) -> bool:
        """|f(T) − f∞| décroissant sur les horizons (indicatif seulement)"""
        if self.f_infinity is None:
            return False
        gaps = np.abs(self(np.asarray(horizons, dtype=float)) - self.f_infinity)
        return bool(np.all(np.diff(gaps) <= 1e-12))


def _scalar(fn: Callable, s: float) -> float:
    return float(np.asarray(fn(np.array([s], dtype=float)), dtype=float)[0])


def convolution_limit_check(
    chi: LimitFunction,
    h: LimitFunction,
    horizons,
    tol: float = 1e-4,
) -> VerificationReport:
    """
    Compare ∫₀ᵀ χ(T−τ) ḣ(τ) dτ à χ(∞)[h(∞) − h(0)] sur une suite croissante d'horizons.

    Raises:
        ParameterError: limites non déclarées ou ḣ ∈ L₁ non affirmé
    """
    if chi.f_infinity is None or h.f_infinity is None:
        raise ParameterError("Limites non déclarées : convolution non certifiable", chi=chi.name, h=h.name)
    if not h.derivative_integrable:
        raise ParameterError("ḣ ∈ L₁[0,∞) non déclaré : convolution non certifiable", h=h.name)
    horizons = sorted(float(T) for T in horizons)
    for T in horizons:
        validate_positive("horizon", T)

    limit = chi.f_infinity * (h.f_infinity - _scalar(h, 0.0))
    report = VerificationReport(name="convolution_limit")
    deviations = []
    for T in horizons:
        if h.derivative is not None:
            hdot = lambda tau: _scalar(h.derivative, tau)
            note = "dérivée analytique"
        else:
            step = DIFF_STEP * T
            hdot = lambda tau: (_scalar(h, tau + step) - _scalar(h, max(tau - step, 0.0))) / (tau + step - max(tau - step, 0.0))
            note = "différences centrées (confiance réduite)"
        value, err = quad(lambda tau: _scalar(chi, T - tau) * hdot(tau), 0.0, T, limit=1000, epsabs=1e-12, epsrel=1e-10)
        deviation = abs(value - limit)
        deviations.append(deviation)
        report.checks.append(
            CheckResult(
                name=f"convolution_T={T:g}", t=T, lhs=deviation, rhs=tol, margin=tol - deviation,
                status="pass" if deviation <= tol else "inconclusive", error_estimate=err,
                note=f"{note}; valeur {value:.10g}, limite {limit:.10g}",
            )
        )
    status = limit_status(deviations, tol)
    report.checks.append(
        CheckResult(name="convolution_limit", t=horizons[-1], lhs=deviations[-1], rhs=tol,
                    margin=tol - deviations[-1], status=status)
    )
    if status == "inconclusive":
        logger.warning(f"Limite de convolution ({chi.name}, {h.name}) encore en approche à T={horizons[-1]:g}")
    logger.info(f"{'✓' if report.passed else '✗'} Limite de convolution ({chi.name}, {h.name}) : écart {deviations[-1]:.3e}")
    return report


# ===== LIMITES DE BORD =====

def boundary_limit_value(p: OperatorParams, geom: StripGeometry, x, g_infinity: float, variant: str = "dirichlet") -> np.ndarray:
    """g∞ · lim ∫₀ᵗ θₓ(x,τ)dτ (Dirichlet) ou g∞ · lim ∫₀ᵗ θ*ₓ(x,τ)dτ (mixte)"""
    limits = theta_limits(p, geom, x)
    match variant:
        case "dirichlet":
            return g_infinity * limits["theta_dx_time_integral"]
        case "mixed":
            return g_infinity * limits["theta_star_dx_time_integral"]
    raise ParameterError("Variante de limite inconnue", variant=variant)


def boundary_limit_rows(
    p: OperatorParams,
    geom: StripGeometry,
    g: LimitFunction,
    x_samples,
    horizons,
    variant: Literal["dirichlet", "mixed"] = "dirichlet",
    steps_per_unit: int = 100,
    cfg: KernelConfig | None = None,
    trunc: SeriesTruncation | None = None,
    threads: int | None = None,
) -> list[dict]:
    """Lignes (x, horizon, numeric, closed_form, deviation) de la convolution de bord gauche"""
    if g.f_infinity is None:
        raise ParameterError("Limite de la donnée de bord non déclarée", g=g.name)
    x = np.atleast_1d(np.asarray(x_samples, dtype=float))
    horizons = sorted(float(T) for T in horizons)
    closed = boundary_limit_value(p, geom, x, g.f_infinity, variant)
    coef = -2.0 * p.epsilon

    def at_horizon(T: float) -> np.ndarray:
        response = compute_boundary_response(
            p, geom, g, "left", x, T, bc_kind=variant, steps_per_unit=steps_per_unit, cfg=cfg, trunc=trunc
        )
        return response / coef

    workers = threads or get_settings().threads
    with ThreadPoolExecutor(max_workers=workers) as pool:
        numerics = list(pool.map(at_horizon, horizons))

    rows = []
    for T, numeric in zip(horizons, numerics):
        for xi, num, ref in zip(x, numeric, closed):
            rows.append(
                {"x": float(xi), "horizon": T, "numeric": float(num), "closed_form": float(ref),
                 "deviation": float(abs(num - ref))}
            )
    return rows


def boundary_limit_check(
    p: OperatorParams,
    geom: StripGeometry,
    g: LimitFunction,
    x_samples,
    horizons,
    variant: Literal["dirichlet", "mixed"] = "dirichlet",
    tol: float = 1e-3,
    steps_per_unit: int = 100,
    cfg: KernelConfig | None = None,
    trunc: SeriesTruncation | None = None,
    threads: int | None = None,
    rows: list[dict] | None = None,
) -> VerificationReport:
    """Convolution de bord contre sa limite hyperbolique, en chaque x, suite d'horizons croissante"""
    rows = rows or boundary_limit_rows(p, geom, g, x_samples, horizons, variant, steps_per_unit, cfg, trunc, threads)
    report = VerificationReport(name=f"boundary_limit_{variant}")
    for xi in sorted({r["x"] for r in rows}):
        series = sorted((r for r in rows if r["x"] == xi), key=lambda r: r["horizon"])
        deviations = [r["deviation"] for r in series]
        status = limit_status(deviations, tol)
        last = series[-1]
        report.checks.append(
            CheckResult(
                name=f"boundary_limit_x={xi:g}", x=xi, t=last["horizon"], lhs=last["deviation"], rhs=tol,
                margin=tol - last["deviation"], status=status,
                note=f"valeur {last['numeric']:.8g}, limite {last['closed_form']:.8g}",
            )
        )
        if status == "inconclusive":
            logger.warning(f"Limite de bord en x={xi:g} encore en approche (écart {last['deviation']:.3e})")
    logger.info(f"{'✓' if report.passed else '✗'} Limites de bord ({variant}, g={g.name})")
    return report


def check_transient_insensitivity(
    p: OperatorParams,
    geom: StripGeometry,
    g_a: LimitFunction,
    g_b: LimitFunction,
    x_samples,
    horizon: float,
    tol: float = 1e-3,
    variant: Literal["dirichlet", "mixed"] = "dirichlet",
    steps_per_unit: int = 100,
) -> VerificationReport:
    """Deux données de même limite donnent des asymptotes à moins de 2·tol l'une de l'autre"""
    if g_a.f_infinity is None or g_b.f_infinity is None or not math.isclose(g_a.f_infinity, g_b.f_infinity):
        raise ParameterError("Les deux données doivent partager la même limite", a=g_a.f_infinity, b=g_b.f_infinity)
    rows_a = boundary_limit_rows(p, geom, g_a, x_samples, [horizon], variant, steps_per_unit)
    rows_b = boundary_limit_rows(p, geom, g_b, x_samples, [horizon], variant, steps_per_unit)
    gaps = [abs(ra["numeric"] - rb["numeric"]) for ra, rb in zip(rows_a, rows_b)]
    k = int(np.argmax(gaps))
    report = VerificationReport(name="transient_insensitivity")
    report.checks.append(
        CheckResult(
            name="transient_insensitivity", x=rows_a[k]["x"], t=horizon, lhs=gaps[k], rhs=2.0 * tol,
            margin=2.0 * tol - gaps[k], status="pass" if gaps[k] <= 2.0 * tol else "fail",
            note=f"{g_a.name} / {g_b.name}",
        )
    )
    return report


# ===== RÉGIMES PERMANENTS =====

def steady_boundary_profile(p: OperatorParams, L: float, kind: str, left: float, right: float, x) -> np.ndarray:
    """
    Solution de −εu'' + (a + b/β)u = 0 sur [0, L] :

        Dirichlet  g₁ sinh σ₀(L−x)/sinh σ₀L + g₂ sinh σ₀x/sinh σ₀L
        mixte      h₁ cosh σ₀(L−x)/cosh σ₀L + h₂ sinh σ₀x/(σ₀ cosh σ₀L)
        Neumann    −ψ₁ cosh σ₀(L−x)/(σ₀ sinh σ₀L) + ψ₂ cosh σ₀x/(σ₀ sinh σ₀L)

    Les rapports sont écrits en exponentielles décroissantes (pas de débordement pour σ₀L grand).
    """
    validate_positive("L", L)
    x = np.asarray(x, dtype=float)
    s = sigma0(p)
    near = np.exp(-s * x)
    far = np.exp(-s * (L - x))
    e_left = np.exp(-2.0 * s * (L - x))
    e_right = np.exp(-2.0 * s * x)
    e_L = math.exp(-2.0 * s * L)

    match kind:
        case "dirichlet":
            return (left * near * (1.0 - e_left) + right * far * (1.0 - e_right)) / (1.0 - e_L)
        case "mixed":
            return (left * near * (1.0 + e_left) + right * far * (1.0 - e_right) / s) / (1.0 + e_L)
        case "neumann":
            return (-left * near * (1.0 + e_left) + right * far * (1.0 + e_right)) / (s * (1.0 - e_L))
    raise ParameterError("Type de condition aux limites inconnu", bc_kind=kind)
