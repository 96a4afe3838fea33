# core/theta.py
"""
Noyaux de Green de la bande 0 ≤ x ≤ L par la méthode des images :

    θ(x,t)  = Σₙ K₀(x + 2nL, t)
    θ*(x,t) = 2Σₙ K₀(x + 4nL, t) − Σₙ K₀(x + 2nL, t) = Σₙ (−1)ⁿ K₀(x + 2nL, t)

Les évaluations scalaires (`eval_theta`, ...) tronquent la série avec un reste
certifié par l'enveloppe ponctuelle de |K₀|. `ThetaTable` fournit les versions
vectorisées utilisées par les solveurs et les vérifications.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import special
from scipy.interpolate import CubicSpline

from core.kernel import (
    KernelTable,
    dx_envelope,
    eval_K0,
    eval_K0_dx,
    numerical_laplace,
    laplace_point,
    pointwise_envelope,
)
from core.params import derive_constants, mass_envelope, mass_envelope_tail, omega, sigma0
from errors import AccuracyError, validate_strip_point, validate_time
from models import CheckResult, KernelConfig, OperatorParams, SeriesTruncation, StripGeometry, VerificationReport

logger = logging.getLogger(__name__)

# En dessous de SHORT_TIME·L²/ε seule l'image la plus proche est non nulle
SHORT_TIME = 1e-6
# Nombre de termes de l'enveloppe sommés pour majorer le reste
TAIL_TERMS = 32


# ===== ÉVALUATION SCALAIRE CERTIFIÉE =====

def _image_sum(p, L, x, t, trunc, cfg, alternating: bool, derivative: bool) -> tuple[float, float]:
    """Somme symétrique autour de l'image la plus proche; renvoie (valeur, reste certifié)"""
    validate_time(t)
    term = eval_K0_dx if derivative else eval_K0
    envelope = dx_envelope if derivative else pointwise_envelope

    n0 = int(round(-x / (2.0 * L)))

    def coeff(n: int) -> float:
        return -1.0 if alternating and n % 2 else 1.0

    total = coeff(n0) * term(p, x + 2.0 * n0 * L, t, cfg)
    if t < SHORT_TIME * L * L / p.epsilon:
        return total, 0.0

    for k in range(1, trunc.n_max + 1):
        # Images à distance ≥ (2j−1)L pour j > k
        dist = (2.0 * np.arange(k, k + TAIL_TERMS) - 1.0) * L
        tail = 2.0 * float(np.sum(envelope(p, dist, t)))
        if tail <= trunc.tail_tol:
            return total, tail
        for n in (n0 + k, n0 - k):
            total += coeff(n) * term(p, x + 2.0 * n * L, t, cfg)

    raise AccuracyError(
        "Série d'images non convergée",
        error_estimate=tail,
        point=(x, t),
        n_max=trunc.n_max,
    )


def eval_theta(
    p: OperatorParams,
    geom: StripGeometry,
    x: float,
    t: float,
    trunc: SeriesTruncation | None = None,
    cfg: KernelConfig | None = None,
) -> float:
    """θ(x,t) = Σₙ K₀(x + 2nL, t), reste majoré par tail_tol"""
    value, _ = _image_sum(p, geom.L, x, t, trunc or SeriesTruncation(), cfg or KernelConfig(), False, False)
    return value


def eval_theta_star(p, geom, x, t, trunc=None, cfg=None) -> float:
    """θ*(x,t) = Σₙ (−1)ⁿ K₀(x + 2nL, t), période 4L"""
    value, _ = _image_sum(p, geom.L, x, t, trunc or SeriesTruncation(), cfg or KernelConfig(), True, False)
    return value


def eval_theta_dx(p, geom, x, t, trunc=None, cfg=None) -> float:
    value, _ = _image_sum(p, geom.L, x, t, trunc or SeriesTruncation(), cfg or KernelConfig(), False, True)
    return value


def eval_theta_star_dx(p, geom, x, t, trunc=None, cfg=None) -> float:
    value, _ = _image_sum(p, geom.L, x, t, trunc or SeriesTruncation(), cfg or KernelConfig(), True, True)
    return value


def greens_dirichlet(p, geom, x, xi, t, trunc=None, cfg=None) -> float:
    """G(x,ξ,t) = θ(|x−ξ|,t) − θ(x+ξ,t)"""
    x = validate_strip_point(x, geom.L)
    xi = validate_strip_point(xi, geom.L)
    return eval_theta(p, geom, abs(x - xi), t, trunc, cfg) - eval_theta(p, geom, x + xi, t, trunc, cfg)


def greens_mixed(p, geom, x, xi, t, trunc=None, cfg=None) -> float:
    """
    G*(x,ξ,t) = θ*(|x−ξ|,t) − θ*(x+ξ,t).

    L'image n = 0 porte le coefficient +1, de sorte que G* → δ(x−ξ) quand t → 0⁺.
    """
    x = validate_strip_point(x, geom.L)
    xi = validate_strip_point(xi, geom.L)
    return eval_theta_star(p, geom, abs(x - xi), t, trunc, cfg) - eval_theta_star(p, geom, x + xi, t, trunc, cfg)


# ===== ÉVALUATION VECTORISÉE =====

class ThetaTable:
    """
    Sommes d'images vectorisées de K₀ sur la bande.

    Fournit θ, θ*, leurs dérivées, leurs primitives temporelles ∫₀ˢ et la
    primitive spatiale périodisée Φ, dont les différences donnent les
    intégrales de θ sur des cellules.
    """

    def __init__(
        self,
        p: OperatorParams,
        geom: StripGeometry,
        cfg: KernelConfig | None = None,
        trunc: SeriesTruncation | None = None,
        table: KernelTable | None = None,
    ):
        self.p = p
        self.L = geom.L
        self.trunc = trunc or SeriesTruncation()
        self.kt = table or KernelTable(p, cfg)

    # --- Images ---

    def image_range(self, zmin: float, zmax: float, t_max: float) -> np.ndarray:
        """Indices n tels que x + 2nL puisse tomber dans le rayon de coupure"""
        zc = self.kt.cutoff(t_max, 0.1 * self.trunc.tail_tol) if t_max > 0 else 0.0
        two_l = 2.0 * self.L
        n_lo = math.floor((-zc - zmax) / two_l)
        n_hi = math.ceil((zc - zmin) / two_l)
        if n_hi - n_lo + 1 > 2 * self.trunc.n_max + 1:
            raise AccuracyError(
                "Trop d'images nécessaires",
                error_estimate=float("inf"),
                n_max=self.trunc.n_max,
                t=t_max,
            )
        return np.arange(n_lo, n_hi + 1)

    @staticmethod
    def coefficients(n: np.ndarray, star: bool) -> np.ndarray:
        if not star:
            return np.ones(n.shape)
        return np.where(n % 2 == 0, 1.0, -1.0)

    # --- Valeurs ponctuelles ---

    def values(self, x, t: float, star: bool = False, derivative: bool = False) -> np.ndarray:
        """θ, θ*, θₓ ou θ*ₓ aux positions x (tableau) à l'instant t > 0"""
        validate_time(t)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if t < SHORT_TIME * self.L**2 / self.p.epsilon:
            n = np.rint(-x / (2.0 * self.L))
            z = x + 2.0 * self.L * n
            vals = self.kt.k0_dx(z, t) if derivative else self.kt.k0(z, t)
            return self.coefficients(n, star) * vals
        n = self.image_range(float(x.min()), float(x.max()), t)
        z = (x[:, None] + 2.0 * self.L * n[None, :]).ravel()
        vals = self.kt.k0_dx(z, t) if derivative else self.kt.k0(z, t)
        return (vals.reshape(x.size, n.size) * self.coefficients(n, star)[None, :]).sum(axis=1)

    # --- Primitives temporelles ---

    def _memory_cumulative(self, z: np.ndarray, s_grid: np.ndarray, derivative: bool, panels: int | None = None) -> np.ndarray:
        """∫₀ˢ (partie mémoire) dσ, panneaux de Gauss-Legendre en u = √σ puis spline cubique en u"""
        s_max = float(s_grid[-1])
        if s_max <= 0.0:
            return np.zeros((s_grid.size, z.size))
        U = math.sqrt(s_max)
        panels = panels or int(min(160, max(24, math.ceil(12.0 * U))))
        xg, wg = leggauss(8)
        edges = np.linspace(0.0, U, panels + 1)
        cum = np.zeros((panels + 1, z.size))
        mem = self.kt.k0_dx_memory if derivative else self.kt.k0_memory
        for k in range(panels):
            lo, hi = edges[k], edges[k + 1]
            u = 0.5 * (hi - lo) * xg + 0.5 * (hi + lo)
            w = 0.5 * (hi - lo) * wg
            acc = np.zeros(z.size)
            for uq, wq in zip(u, w):
                acc += wq * 2.0 * uq * mem(z, uq * uq)
            cum[k + 1] = cum[k] + acc
        spline = CubicSpline(edges, cum, axis=0)
        return spline(np.sqrt(np.clip(s_grid, 0.0, None)))

    def time_cumulative(
        self,
        x,
        s_grid,
        star: bool = False,
        derivative: bool = False,
        side: float = 1.0,
    ) -> np.ndarray:
        """
        ∫₀ˢ θ(x,σ) dσ (ou θ*, θₓ, θ*ₓ) pour chaque s de `s_grid` croissant.

        Partie chaleur en forme close; en z = 0 la dérivée prend la limite
        unilatérale du côté `side`. Renvoie un tableau (len(s_grid), len(x)).
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        s_grid = np.atleast_1d(np.asarray(s_grid, dtype=float))
        n = self.image_range(float(x.min()), float(x.max()), float(s_grid[-1]))
        z = (x[:, None] + 2.0 * self.L * n[None, :]).ravel()
        if derivative:
            heat = self.kt.heat_dx_time_integral(z[None, :], s_grid[:, None], side=side)
        else:
            heat = self.kt.heat_time_integral(z[None, :], s_grid[:, None])
        mem = self._memory_cumulative(z, s_grid, derivative)
        total = (heat + mem).reshape(s_grid.size, x.size, n.size)
        return np.einsum("kin,n->ki", total, self.coefficients(n, star))

    # --- Primitive spatiale périodisée ---

    def _cdf_terms(self, z: np.ndarray, n: np.ndarray, cdf, mass: float, star: bool) -> np.ndarray:
        """Φ(z) = Σₙ cₙ [M(z + 2nL) − M(∞)·1(n > 0)], série convergente"""
        c = self.coefficients(n, star)
        out = np.zeros(z.size)
        for nk, ck in zip(n, c):
            m = cdf(z + 2.0 * self.L * nk)
            if nk > 0:
                m = m - mass
            out += ck * m
        return out

    def periodized_cdf(self, z, t: float, star: bool = False) -> np.ndarray:
        """Φ à l'instant t ≥ 0 : Φ(z₁) − Φ(z₂) = ∫_{z₂}^{z₁} θ (ou θ*)"""
        z = np.atleast_1d(np.asarray(z, dtype=float))
        n = self.image_range(float(z.min()), float(z.max()), t)
        return self._cdf_terms(z, n, lambda w: self.kt.k0_cdf(w, t), self.kt.mass(t), star)

    def periodized_cdf_series(
        self, z, t_grid, star: bool = False, time_nodes: int = 97, threads: int = 1
    ) -> np.ndarray:
        """
        Φ(z, tₖ) pour toute une grille de temps.

        Partie chaleur exacte à chaque tₖ; partie mémoire calculée sur une grille
        grossière en u = √t puis interpolée par spline cubique.
        """
        z = np.atleast_1d(np.asarray(z, dtype=float))
        t_grid = np.atleast_1d(np.asarray(t_grid, dtype=float))
        p = self.p
        t_max = float(t_grid[-1])
        n = self.image_range(float(z.min()), float(z.max()), t_max)

        def step(w):
            return np.where(w > 0, 1.0, np.where(w < 0, 0.0, 0.5))

        def heat_row(t: float) -> np.ndarray:
            if t == 0.0:
                return self._cdf_terms(z, n, step, 1.0, star)
            scale = 2.0 * math.sqrt(p.epsilon * t)
            decay = math.exp(-p.a * t)
            return self._cdf_terms(z, n, lambda w: 0.5 * decay * special.erfc(-w / scale), decay, star)

        def memory_row(u: float) -> np.ndarray:
            t = u * u
            return self._cdf_terms(z, n, lambda w: self.kt.k0_cdf_memory(w, t), self.kt.memory_mass(t), star)

        with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
            out = np.array(list(pool.map(heat_row, t_grid)))
            if t_max > 0.0:
                u_nodes = np.linspace(0.0, math.sqrt(t_max), min(time_nodes, max(t_grid.size, 8)))
                mem = np.zeros((u_nodes.size, z.size))
                mem[1:] = np.array(list(pool.map(memory_row, u_nodes[1:])))
                out += CubicSpline(u_nodes, mem, axis=0)(np.sqrt(t_grid))
        return out


# ===== VÉRIFICATIONS =====

def _status(lhs: float, rhs: float, err: float) -> str:
    slack = err + 1e-12 * max(abs(lhs), abs(rhs))
    return "pass" if rhs - lhs >= -slack else "fail"


def _strip_abs_mass(tt: ThetaTable, x: float, t: float, n: int = 2001) -> tuple[float, float]:
    """∫₀ᴸ |θ(|x−ξ|,t)| dξ; exacte par Φ quand θ ≥ 0 sur la grille, sinon trapèzes"""
    xi = np.linspace(0.0, tt.L, n)
    vals = tt.values(x - xi, t)
    h = xi[1] - xi[0]
    trap = float(h * (np.abs(vals).sum() - 0.5 * (abs(vals[0]) + abs(vals[-1]))))
    coarse = float(2 * h * (np.abs(vals[::2]).sum() - 0.5 * (abs(vals[0]) + abs(vals[-1]))))
    if vals.min() >= 0.0:
        phi = tt.periodized_cdf(np.array([x, x - tt.L]), t)
        exact = float(phi[0] - phi[1])
        return exact, abs(exact - trap)
    return trap, abs(trap - coarse)


def _time_abs_integral(tt: ThetaTable, x: float, T: float, panels: int = 64) -> float:
    """∫₀ᵀ |θ(x,τ)| dτ en u = √τ par Gauss-Legendre composite"""
    xg, wg = leggauss(8)
    edges = np.linspace(0.0, math.sqrt(T), panels + 1)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        for xq, wq in zip(xg, wg):
            u = 0.5 * (hi - lo) * xq + 0.5 * (hi + lo)
            total += 0.5 * (hi - lo) * wq * 2.0 * u * abs(float(tt.values([x], u * u)[0]))
    return total


def check_theta_bounds(
    p: OperatorParams,
    geom: StripGeometry,
    t_samples: list[float],
    x_samples: list[float],
    cfg: KernelConfig | None = None,
    trunc: SeriesTruncation | None = None,
) -> VerificationReport:
    """
    Vérifie ∫₀ᴸ|θ| ≤ (1+√b·π·t)e^{−ωt}, ∫₀ᵗ∫₀ᴸ|θ| ≤ β₀ et ∫₀^∞|θ(x,τ)|dτ ≤ C₀.

    La vérification de C₀ est marquée `skipped` quand a = β.
    """
    tt = ThetaTable(p, geom, cfg, trunc)
    consts = derive_constants(p, geom.L)
    report = VerificationReport(name="theta_bounds")
    xg, wg = leggauss(24)
    u_nodes = 0.5 * (xg + 1.0)
    u_weights = 0.5 * wg

    for x in x_samples:
        x = validate_strip_point(x, geom.L)
        for t in t_samples:
            validate_time(t)
            lhs, err = _strip_abs_mass(tt, x, t)
            rhs = mass_envelope(p, t)
            report.checks.append(
                CheckResult(name="theta_mass", t=t, x=x, lhs=lhs, rhs=rhs, margin=rhs - lhs,
                            status=_status(lhs, rhs, err), error_estimate=err)
            )

            masses = [_strip_abs_mass(tt, x, t * u * u, n=1001) for u in u_nodes]
            lhs = float(sum(w * 2.0 * t * u * m for u, w, (m, _) in zip(u_nodes, u_weights, masses)))
            err = t * max(e for _, e in masses)
            report.checks.append(
                CheckResult(name="theta_time_mass", t=t, x=x, lhs=lhs, rhs=consts.beta0,
                            margin=consts.beta0 - lhs, status=_status(lhs, consts.beta0, err), error_estimate=err)
            )

        if consts.C0 is None:
            report.checks.append(
                CheckResult(name="theta_C0", x=x, lhs=0.0, rhs=0.0, margin=0.0, status="skipped",
                            note="C₀ indéfini à a = β")
            )
            continue
        T = 10.0 / omega(p)
        while mass_envelope_tail(p, T) > 1e-6 * consts.C0:
            T *= 1.5
        lhs = _time_abs_integral(tt, x, T)
        tail = mass_envelope_tail(p, T)
        report.checks.append(
            CheckResult(name="theta_C0", x=x, lhs=lhs, rhs=consts.C0, margin=consts.C0 - lhs - tail,
                        status=_status(lhs + tail, consts.C0, 0.0), error_estimate=tail, note=f"T={T:.3g}")
        )

    n_fail = len(report.failures)
    if n_fail:
        logger.warning(f"✗ {n_fail} estimation(s) de θ violée(s)")
    else:
        logger.info(f"✓ Estimations de θ vérifiées ({len(report.checks)} contrôles)")
    return report


def theta_limits(p: OperatorParams, geom: StripGeometry, x) -> dict[str, np.ndarray]:
    """Limites t → ∞ des primitives temporelles de θ, θₓ, θ*ₓ (formes hyperboliques)"""
    x = np.asarray(x, dtype=float)
    s0 = sigma0(p)
    L, eps = geom.L, p.epsilon
    return {
        "theta_decay": np.zeros_like(x),
        "theta_time_integral": np.cosh(s0 * (L - x)) / (2.0 * eps * s0 * math.sinh(s0 * L)),
        "theta_dx_time_integral": np.sinh(s0 * (x - L)) / (2.0 * eps * math.sinh(s0 * L)),
        "theta_star_dx_time_integral": -np.cosh(s0 * (L - x)) / (2.0 * eps * math.cosh(s0 * L)),
    }


def limit_status(deviations: list[float], tol: float) -> str:
    """pass si la suite des écarts est non croissante et finit sous tol; inconclusive si elle décroît encore"""
    slack = 1e-2 * tol
    monotone = all(b <= a + slack for a, b in zip(deviations, deviations[1:]))
    if monotone and deviations[-1] <= tol:
        return "pass"
    if monotone:
        return "inconclusive"
    return "fail"


def check_theta_limits(
    p: OperatorParams,
    geom: StripGeometry,
    x_samples: list[float],
    T_horizon: float | None = None,
    cfg: KernelConfig | None = None,
    trunc: SeriesTruncation | None = None,
    tol: float = 1e-3,
) -> VerificationReport:
    """Écarts aux limites hyperboliques aux horizons T/3, 2T/3 et T (T par défaut 30/ω)"""
    tt = ThetaTable(p, geom, cfg, trunc)
    T = T_horizon or 30.0 / omega(p)
    horizons = np.array([0.0, T / 3.0, 2.0 * T / 3.0, T])
    x = np.array([validate_strip_point(v, geom.L) for v in x_samples])
    closed = theta_limits(p, geom, x)

    numeric = {
        "theta_decay": np.array([tt.values(x, h) for h in horizons[1:]]),
        "theta_time_integral": tt.time_cumulative(x, horizons)[1:],
        "theta_dx_time_integral": tt.time_cumulative(x, horizons, derivative=True)[1:],
        "theta_star_dx_time_integral": tt.time_cumulative(x, horizons, star=True, derivative=True)[1:],
    }

    report = VerificationReport(name="theta_limits")
    for name, values in numeric.items():
        for i, xi in enumerate(x):
            devs = [float(abs(values[k, i] - closed[name][i])) for k in range(3)]
            status = limit_status(devs, tol)
            if status == "inconclusive":
                logger.warning(f"Limite {name} en x={xi} non atteinte à T={T:.3g} (écart {devs[-1]:.3e})")
            report.checks.append(
                CheckResult(
                    name=name, t=T, x=float(xi), lhs=float(values[-1, i]), rhs=float(closed[name][i]),
                    margin=tol - devs[-1], status=status,
                    note="écarts " + " ".join(f"{d:.3e}" for d in devs),
                )
            )
    logger.info(f"✓ Limites de θ : {sum(c.passed for c in report.checks)}/{len(report.checks)}")
    return report


def laplace_theta_check(
    p: OperatorParams,
    geom: StripGeometry,
    x: float,
    s_samples: list[float],
    cfg: KernelConfig | None = None,
    trunc: SeriesTruncation | None = None,
    rel_tol: float = 1e-5,
) -> VerificationReport:
    """θ̂ = cosh(σ̃(L−y))/(2εσ̃ sinh σ̃L) et θ̂* = sinh(σ̃(L−y))/(2εσ̃ cosh σ̃L)"""
    cfg = cfg or KernelConfig()
    tt = ThetaTable(p, geom, cfg, trunc)
    x = validate_strip_point(x, geom.L)
    L, eps = geom.L, p.epsilon
    report = VerificationReport(name="theta_laplace")

    for s in s_samples:
        st = laplace_point(p, s).sigma_tilde
        exact = {
            "theta": math.cosh(st * (L - x)) / (2.0 * eps * st * math.sinh(st * L)),
            "theta_star": math.sinh(st * (L - x)) / (2.0 * eps * st * math.cosh(st * L)),
        }
        for name, target in exact.items():
            star = name == "theta_star"
            numeric, err = numerical_laplace(
                lambda t: float(tt.values([x], t, star=star)[0]), p, s, cfg, scale=1e-3 * max(abs(target), 1e-12)
            )
            if target == 0.0:
                rel = abs(numeric)
            else:
                rel = abs(numeric - target) / abs(target)
            report.checks.append(
                CheckResult(
                    name=f"{name}_laplace", x=x, lhs=numeric, rhs=target, margin=rel_tol - rel,
                    status="pass" if rel <= rel_tol else "fail", error_estimate=err, note=f"s={s}",
                )
            )
    logger.info(f"✓ Transformées de Laplace de θ, θ* : {sum(c.passed for c in report.checks)}/{len(report.checks)}")
    return report
