# core/greensolve.py
"""
Résolution des problèmes aux limites (Neumann, Dirichlet, mixte) par leur
formulation intégro-différentielle et itération de Picard.

    u = ∫₀ᴸ G u₀ dξ + (termes de bord) + ∫₀ᵗ∫₀ᴸ G(x,ξ,t−τ) F(ξ,τ,u) dξ dτ

Discrétisation :
- intégrales en ξ : moyennes exactes de G sur les cellules duales [xⱼ − h/2, xⱼ + h/2],
  obtenues par différences de la primitive périodisée Φ (en t = 0, G se réduit à
  l'identité);
- convolutions de bord : intégration produit, intégrale exacte du noyau sur chaque
  intervalle de retard, donnée moyennée sur l'intervalle;
- convolution de volume : règle des trapèzes en τ, calculée par FFT.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import fft
from scipy.signal import fftconvolve

from config import get_settings
from core.fields import Field, ProblemSpec, SourceSpec, uniform_grid
from core.kernel import KernelTable
from core.params import derive_constants, mass_envelope, omega, window_mass_bound
from core.theta import ThetaTable
from errors import DivergenceError, ParameterError, validate_time
from models import (
    CheckResult,
    GridConfig,
    KernelConfig,
    OperatorParams,
    PicardConfig,
    SeriesTruncation,
    SolveReport,
    StripGeometry,
    VerificationReport,
)

logger = logging.getLogger(__name__)

# Données aux limites considérées nulles en dessous de ce seuil
ZERO_DATA_TOL = 1e-14

# Au-delà de cette taille de fenêtre, la convolution passe par FFT
DIRECT_WINDOW = 32


@dataclass(frozen=True)
class BoundaryTerm:
    """Un terme de bord : coef · ∫₀ᵗ k(x, t−τ) g(τ) dτ, avec k donné par ses primitives Q"""

    coefficient: float
    star: bool
    derivative: bool
    shift: float
    mirror: bool


def boundary_terms(kind: str, edge: str, L: float, epsilon: float) -> BoundaryTerm:
    """
    Noyaux des termes de bord :
    Dirichlet −2ε g₁∗θₓ(x) + 2ε g₂∗θₓ(x−L); Neumann −2ε ψ₁∗θ(x) + 2ε ψ₂∗θ(x−L);
    mixte −2ε h₁∗θ*ₓ(x) + 2ε h₂∗θ*(L−x).
    """
    left = edge == "left"
    coef = -2.0 * epsilon if left else 2.0 * epsilon
    match kind:
        case "dirichlet":
            return BoundaryTerm(coef, star=False, derivative=True, shift=0.0 if left else -L, mirror=False)
        case "neumann":
            return BoundaryTerm(coef, star=False, derivative=False, shift=0.0 if left else -L, mirror=False)
        case "mixed":
            if left:
                return BoundaryTerm(coef, star=True, derivative=True, shift=0.0, mirror=False)
            return BoundaryTerm(coef, star=True, derivative=False, shift=L, mirror=True)
    raise ParameterError("Type de condition aux limites inconnu", bc_kind=kind)


def boundary_kernel_increments(tt: ThetaTable, term: BoundaryTerm, x: np.ndarray, s_grid: np.ndarray) -> np.ndarray:
    """ΔQₖ(x) = ∫_{sₖ}^{sₖ₊₁} k(x, σ) dσ, forme (len(s)−1, len(x))"""
    z = term.shift - x if term.mirror else x + term.shift
    Q = tt.time_cumulative(z, s_grid, star=term.star, derivative=term.derivative, side=1.0)
    return np.diff(Q, axis=0)


def interval_means(g, t: np.ndarray) -> np.ndarray:
    """Moyennes (g(tₘ) + g(tₘ₊₁))/2 sur chaque intervalle"""
    values = np.asarray(g(t), dtype=float)
    return 0.5 * (values[1:] + values[:-1])


def _is_zero(g, t: np.ndarray) -> bool:
    return bool(np.all(np.abs(np.asarray(g(t), dtype=float)) <= ZERO_DATA_TOL))


class GreenOperator:
    """
    Opérateur de Green discret pour un jeu (paramètres, bande, grille, type de bord).

    Les poids de cellule Wₖ et les incréments de bord sont précalculés une fois;
    les petites fenêtres de Picard somment directement sur leurs lignes, les
    grandes passent par une convolution FFT.
    """

    def __init__(
        self,
        p: OperatorParams,
        spec: ProblemSpec,
        grid: GridConfig,
        cfg: KernelConfig | None = None,
        trunc: SeriesTruncation | None = None,
        threads: int | None = None,
    ):
        self.p = p
        self.spec = spec
        self.kind = spec.bc_kind
        self.x, self.t = uniform_grid(spec.L, spec.T, grid.nx, grid.nt)
        self.nx, self.nt = grid.nx, grid.nt
        self.h = spec.L / grid.nx
        self.dt = spec.T / grid.nt
        self.threads = threads or get_settings().threads
        self.table = KernelTable(p, cfg)
        self.tt = ThetaTable(p, StripGeometry(L=spec.L), cfg, trunc, table=self.table)
        self.star = self.kind == "mixed"
        self.reflect = 1.0 if self.kind == "neumann" else -1.0
        self._weights: np.ndarray | None = None
        self._weights_hat: np.ndarray | None = None
        self._nfft = fft.next_fast_len(2 * (self.nt + 1) - 1, real=True)

    # --- Poids de cellule ---

    def lattice(self) -> np.ndarray:
        """Réseau de pas h/2 couvrant [−L, 2L], où tombent tous les xᵢ ± bords de cellule"""
        return 0.5 * self.h * np.arange(-2 * self.nx, 4 * self.nx + 1)

    def cell_weights(self) -> np.ndarray:
        """Wₖ[i, j] = ∫_{cellule j} G(xᵢ, ξ, tₖ) dξ, forme (nt+1, nx+1, nx+1)"""
        if self._weights is not None:
            return self._weights
        logger.info(f"Précalcul des poids de Green ({self.kind}, {self.nx}×{self.nt})")
        phi = self.tt.periodized_cdf_series(self.lattice(), self.t, star=self.star, threads=self.threads)
        nx = self.nx
        edges = np.concatenate(([0], 2 * np.arange(1, nx + 1) - 1, [2 * nx]))
        rows = 2 * np.arange(nx + 1)
        offset = 2 * nx
        direct = phi[:, offset + rows[:, None] - edges[None, :]]
        image = phi[:, offset + rows[:, None] + edges[None, :]]
        W = (direct[:, :, :-1] - direct[:, :, 1:]) + self.reflect * (image[:, :, 1:] - image[:, :, :-1])
        self._weights = W
        return W

    def _weights_spectrum(self) -> np.ndarray:
        if self._weights_hat is None:
            self._weights_hat = fft.rfft(self.cell_weights(), n=self._nfft, axis=0, workers=self.threads)
        return self._weights_hat

    # --- Termes de données ---

    def initial_term(self, u0) -> np.ndarray:
        """∫₀ᴸ G(x,ξ,tₙ) u₀(ξ) dξ pour tout n"""
        u0_nodes = np.asarray(u0(self.x), dtype=float)
        if np.all(u0_nodes == 0.0):
            return np.zeros((self.nt + 1, self.nx + 1))
        return np.einsum("nij,j->ni", self.cell_weights(), u0_nodes)

    def boundary_term(self, g, edge: str) -> np.ndarray:
        """Contribution d'une donnée de bord, forme (nt+1, nx+1)"""
        out = np.zeros((self.nt + 1, self.nx + 1))
        if _is_zero(g, self.t):
            return out
        term = boundary_terms(self.kind, edge, self.spec.L, self.p.epsilon)
        dQ = boundary_kernel_increments(self.tt, term, self.x, self.t)
        gbar = interval_means(g, self.t)
        conv = fftconvolve(dQ, gbar[:, None], axes=0)[: self.nt]
        out[1:] = term.coefficient * conv
        return out

    def data_terms(self) -> np.ndarray:
        """Partie de l'application de Picard indépendante de F"""
        spec = self.spec
        base = self.initial_term(spec.u0)
        base += self.boundary_term(spec.left_bc, "left")
        base += self.boundary_term(spec.right_bc, "right")
        base[0] = np.asarray(spec.u0(self.x), dtype=float)
        return self.apply_walls(base)

    def apply_walls(self, u: np.ndarray) -> np.ndarray:
        """Valeurs imposées aux parois (relations de saut des potentiels de double couche)"""
        spec = self.spec
        if self.kind in ("dirichlet", "mixed"):
            u[1:, 0] = spec.left_bc(self.t[1:])
        if self.kind == "dirichlet":
            u[1:, -1] = spec.right_bc(self.t[1:])
        return u

    def apply_walls_rows(self, block: np.ndarray, rows: range) -> np.ndarray:
        spec = self.spec
        t = self.t[rows.start:rows.stop]
        if self.kind in ("dirichlet", "mixed"):
            block[:, 0] = spec.left_bc(t)
        if self.kind == "dirichlet":
            block[:, -1] = spec.right_bc(t)
        return block

    # --- Terme de volume ---

    def volume_term(self, F: np.ndarray) -> np.ndarray:
        """Δt·Σₘ cₘ W_{n−m} Fᵐ (trapèzes), F de forme (nt+1, nx+1)"""
        F_hat = fft.rfft(F, n=self._nfft, axis=0, workers=self.threads)
        conv = fft.irfft(np.einsum("kij,kj->ki", self._weights_spectrum(), F_hat), n=self._nfft, axis=0, workers=self.threads)
        conv = conv[: self.nt + 1]
        W = self.cell_weights()
        conv -= 0.5 * np.einsum("nij,j->ni", W, F[0])
        conv -= 0.5 * np.einsum("ij,nj->ni", W[0], F)
        return self.dt * conv

    def convolve_rows(self, F: np.ndarray, rows: range, m_lo: int, m_hi: int) -> np.ndarray:
        """Même somme que `volume_term`, restreinte aux lignes `rows` et aux indices m ∈ [m_lo, m_hi]"""
        W = self.cell_weights()
        out = np.zeros((len(rows), self.nx + 1))
        for k, n in enumerate(rows):
            ms = np.arange(m_lo, min(n, m_hi) + 1)
            if ms.size == 0:
                continue
            c = np.ones(ms.size)
            c[ms == 0] *= 0.5
            c[ms == n] *= 0.5
            out[k] = np.einsum("mij,mj->i", W[n - ms], c[:, None] * F[ms])
        return self.dt * out

    def source_values(self, source: SourceSpec, u: np.ndarray) -> np.ndarray:
        return np.array([source(self.x, float(tn), u[n]) for n, tn in enumerate(self.t)])

    # --- Picard ---

    def window_steps(self, source: SourceSpec, picard: PicardConfig) -> int:
        """Pas par fenêtre tels que C·(masse du noyau sur la fenêtre) ≤ contraction_target"""
        C = source.lipschitz_C if source.depends_on_u else 0.0
        steps = self.nt
        if C > 0.0:
            k = math.sqrt(self.p.b) * math.pi
            target = picard.contraction_target
            T_w = (math.sqrt(1.0 + 2.0 * k * target / C) - 1.0) / k if k > 0 else target / C
            steps = max(1, int(T_w / self.dt))
            logger.info(
                f"Fenêtre de Picard : {steps} pas (C={C:.3g}, masse {window_mass_bound(self.p, steps * self.dt):.3g})"
            )
        if picard.window_steps is not None:
            steps = min(steps, picard.window_steps)
        return min(steps, self.nt)

    def source_rows(self, source: SourceSpec, u: np.ndarray, rows: range) -> np.ndarray:
        return np.array([source(self.x, float(self.t[n]), u[n]) for n in rows])

    def solve(self, picard: PicardConfig | None = None) -> tuple[Field, SolveReport]:
        """
        Itération de Picard fenêtre par fenêtre; la donnée u⁰ = termes de données.

        Raises:
            DivergenceError: non-convergence, valeur non finie ou sortie du rayon de travail
        """
        picard = picard or PicardConfig()
        spec = self.spec
        source = spec.source
        spec.check_compatibility()
        base = self.data_terms()

        if not source.depends_on_u:
            F = self.source_values(source, base)
            u = base if not np.any(F) else self.apply_walls(base + self.volume_term(F))
            report = SolveReport(
                iterations=1, final_delta=0.0, window_count=1, window_steps=self.nt,
                quadrature_error_estimate=self.quadrature_error_estimate(), delta_history=[[0.0]],
            )
            logger.info(f"✓ Problème {self.kind} linéaire résolu en une passe")
            return Field(x=self.x, t=self.t, values=u), report

        steps = self.window_steps(source, picard)
        u = base.copy()
        F = self.source_values(source, u)
        history: list[list[float]] = []
        iterations = 0
        start = 1
        while start <= self.nt:
            stop = min(start + steps - 1, self.nt)
            window = slice(start, stop + 1)
            rows = range(start, stop + 1)
            direct = len(rows) <= DIRECT_WINDOW
            if direct:
                # l'historique (m < start) est figé pendant les itérations de la fenêtre
                past = self.convolve_rows(F, rows, 0, start - 1)
            deltas: list[float] = []
            for it in range(1, picard.max_iter + 1):
                F[window] = self.source_rows(source, u, rows)
                if direct:
                    candidate = self.apply_walls_rows(base[window] + past + self.convolve_rows(F, rows, start, stop), rows)
                else:
                    F_win = F.copy()
                    F_win[stop + 1:] = 0.0
                    candidate = self.apply_walls(base + self.volume_term(F_win))[window]
                delta = float(np.max(np.abs(candidate - u[window])))
                u[window] = candidate
                deltas.append(delta)
                iterations += 1
                logger.debug(f"Fenêtre {len(history) + 1}, itération {it} : delta={delta:.3e}")
                if not math.isfinite(delta):
                    raise DivergenceError("Itération de Picard divergente", history=deltas, window=len(history) + 1)
                if source.radius is not None and np.max(np.abs(u[window])) > source.radius:
                    raise DivergenceError(
                        "L'itéré sort de la région de travail, réduire la fenêtre en temps",
                        history=deltas,
                        radius=source.radius,
                    )
                if delta < picard.tol:
                    break
            else:
                raise DivergenceError(
                    f"Picard non convergé en {picard.max_iter} itérations",
                    history=deltas,
                    window=len(history) + 1,
                )
            F[window] = self.source_rows(source, u, rows)
            history.append(deltas)
            logger.debug(f"Fenêtre [{self.t[start]:.4g}, {self.t[stop]:.4g}] : {len(deltas)} itérations, delta={deltas[-1]:.2e}")
            start = stop + 1

        report = SolveReport(
            iterations=iterations,
            final_delta=max(d[-1] for d in history),
            window_count=len(history),
            window_steps=steps,
            quadrature_error_estimate=self.quadrature_error_estimate(),
            converged=True,
            delta_history=history,
        )
        logger.info(f"✓ Problème {self.kind} résolu : {report.window_count} fenêtre(s), {iterations} itérations")
        return Field(x=self.x, t=self.t, values=u), report

    def quadrature_error_estimate(self) -> float:
        """Écart entre la règle en φ et une règle deux fois plus fine, à quelques retards"""
        lags = [self.dt, 0.5 * self.spec.T, self.spec.T]
        z = np.linspace(-self.spec.L, self.spec.L, 33)
        return max(self.table.error_estimate(t, z) for t in lags)


# ===== OPÉRATIONS =====

def _solve(p, spec, kind, grid, cfg, picard, trunc, threads):
    if spec.bc_kind != kind:
        raise ParameterError(f"Problème de type {spec.bc_kind}, {kind} attendu")
    grid = grid or GridConfig()
    return GreenOperator(p, spec, grid, cfg, trunc, threads).solve(picard)


def solve_dirichlet(
    p: OperatorParams,
    spec: ProblemSpec,
    grid: GridConfig | None = None,
    cfg: KernelConfig | None = None,
    picard: PicardConfig | None = None,
    trunc: SeriesTruncation | None = None,
    threads: int | None = None,
) -> tuple[Field, SolveReport]:
    """
    Problème de Dirichlet u(0,t) = g₁(t), u(L,t) = g₂(t).

    Raises:
        DivergenceError: Picard non convergé dans une fenêtre
        AccuracyError: quadrature ou série d'images non convergée
    """
    return _solve(p, spec, "dirichlet", grid, cfg, picard, trunc, threads)


def solve_neumann(p, spec, grid=None, cfg=None, picard=None, trunc=None, threads=None) -> tuple[Field, SolveReport]:
    """Problème de Neumann uₓ(0,t) = ψ₁(t), uₓ(L,t) = ψ₂(t); noyau θ(|x−ξ|) + θ(x+ξ)"""
    return _solve(p, spec, "neumann", grid, cfg, picard, trunc, threads)


def solve_mixed(p, spec, grid=None, cfg=None, picard=None, trunc=None, threads=None) -> tuple[Field, SolveReport]:
    """Problème mixte u(0,t) = h₁(t), uₓ(L,t) = h₂(t); noyau θ*(|x−ξ|) − θ*(x+ξ)"""
    return _solve(p, spec, "mixed", grid, cfg, picard, trunc, threads)


def check_decay_estimate(
    p: OperatorParams,
    spec: ProblemSpec,
    solution: Field,
    onset: float | None = None,
) -> VerificationReport:
    """
    |u(x,t)| ≤ 2[‖F‖β₀ + ‖u₀‖(1 + √b·π·t)e^{−ωt}] pour t ≥ onset (défaut 1/ω).

    Problèmes de Dirichlet ou mixtes à données de bord nulles. ‖F‖ est `sup_bound`
    s'il est fourni, sinon le sup de |F| sur la solution calculée.
    """
    if spec.bc_kind == "neumann":
        raise ParameterError("Estimation de décroissance réservée aux problèmes de Dirichlet ou mixtes")
    if not (_is_zero(spec.left_bc, solution.t) and _is_zero(spec.right_bc, solution.t)):
        raise ParameterError("L'estimation de décroissance exige des données de bord nulles")

    onset = 1.0 / omega(p) if onset is None else onset
    beta0 = derive_constants(p).beta0
    u0_norm = float(np.max(np.abs(spec.u0(solution.x))))
    if spec.source.sup_bound is not None:
        F_norm = spec.source.sup_bound
    else:
        F_norm = max(
            float(np.max(np.abs(spec.source(solution.x, float(tn), solution.values[n]))))
            for n, tn in enumerate(solution.t)
        )

    report = VerificationReport(name="decay_estimate")
    mask = solution.t >= onset
    if not np.any(mask):
        report.checks.append(
            CheckResult(name="decay_estimate", lhs=0.0, rhs=0.0, margin=0.0, status="skipped",
                        note=f"horizon {solution.t[-1]} < début {onset}")
        )
        return report

    t = solution.t[mask]
    values = np.abs(solution.values[mask])
    rhs = 2.0 * (F_norm * beta0 + u0_norm * mass_envelope(p, t))
    margins = rhs[:, None] - values
    j, i = np.unravel_index(int(np.argmin(margins)), margins.shape)
    lhs, bound = float(values[j, i]), float(rhs[j])
    slack = 1e-12 * max(bound, 1.0)
    report.checks.append(
        CheckResult(
            name="decay_estimate", t=float(t[j]), x=float(solution.x[i]), lhs=lhs, rhs=bound,
            margin=bound - lhs, status="pass" if bound - lhs >= -slack else "fail",
            note=f"‖u₀‖={u0_norm:.4g}, ‖F‖={F_norm:.4g}",
        )
    )
    logger.info(f"{'✓' if report.passed else '✗'} Estimation de décroissance : marge minimale {bound - lhs:.3e}")
    return report


def compute_boundary_response(
    p: OperatorParams,
    geom: StripGeometry,
    g,
    which_edge: str,
    x_samples,
    t: float,
    bc_kind: str = "dirichlet",
    steps_per_unit: int = 100,
    cfg: KernelConfig | None = None,
    trunc: SeriesTruncation | None = None,
) -> np.ndarray:
    """
    Contribution isolée d'une donnée de bord à l'instant t, par exemple
    −2ε∫₀ᵗ θₓ(x, t−τ) g(τ) dτ pour le bord gauche d'un problème de Dirichlet.
    """
    validate_time(t)
    if which_edge not in ("left", "right"):
        raise ParameterError("Bord inconnu", which_edge=which_edge)
    x = np.atleast_1d(np.asarray(x_samples, dtype=float))
    steps = max(200, math.ceil(steps_per_unit * t))
    s = np.linspace(0.0, t, steps + 1)
    if _is_zero(g, s):
        return np.zeros(x.size)
    tt = ThetaTable(p, geom, cfg, trunc)
    term = boundary_terms(bc_kind, which_edge, geom.L, p.epsilon)
    dQ = boundary_kernel_increments(tt, term, x, s)
    gbar = interval_means(g, s)
    out = term.coefficient * np.einsum("ki,k->i", dQ, gbar[::-1])

    # Valeur de paroi : saut du potentiel de double couche
    if term.derivative:
        g_t = float(np.asarray(g(np.array([t])))[0])
        wall = 0.0 if which_edge == "left" else geom.L
        out = np.where(np.isclose(x, wall, rtol=0.0, atol=1e-12), g_t, out)
    return out
