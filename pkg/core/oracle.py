# core/oracle.py
"""
Solveur de référence aux différences finies, indépendant des fonctions de Green.

Le terme mémoire est localisé par w(x,t) = b∫₀ᵗ e^{−β(t−τ)} u dτ :

    u_t = ε u_xx − a u − w + F(x,t,u)
    w_t = b u − β w,   w(·,0) = 0

Différences centrées d'ordre 2 en espace (nœuds fantômes pour Neumann),
Crank-Nicolson sur la diffusion et couplage de Heun (trapèzes explicites)
pour la réaction et la variable mémoire.
"""
import logging
import math

import numpy as np
from scipy import sparse
from scipy.integrate import solve_ivp
from scipy.interpolate import RegularGridInterpolator
from scipy.sparse.linalg import splu

from core.fields import Field, OracleSolution, ProblemSpec, TimeSeries, uniform_grid
from errors import BlowUpError, ParameterError, validate_positive
from models import CheckResult, FDConfig, OperatorParams, VerificationReport

logger = logging.getLogger(__name__)


def _laplacian(nx: int, dx: float, kind: str) -> sparse.csr_matrix:
    """Laplacien discret; lignes de Dirichlet nulles, lignes de Neumann par nœud fantôme"""
    main = -2.0 * np.ones(nx + 1)
    upper = np.ones(nx)
    lower = np.ones(nx)
    if kind in ("neumann", "mixed"):
        lower[-1] = 2.0
    if kind == "neumann":
        upper[0] = 2.0
    if kind in ("dirichlet", "mixed"):
        main[0] = 0.0
        upper[0] = 0.0
    if kind == "dirichlet":
        main[-1] = 0.0
        lower[-1] = 0.0
    return sparse.diags([lower, main, upper], [-1, 0, 1], format="csr") / dx**2


class _Stepper:
    """Un pas de temps du système (u, w) pour un problème donné"""

    def __init__(self, p: OperatorParams, spec: ProblemSpec, nx: int, dt: float, scheme: str):
        self.p = p
        self.spec = spec
        self.kind = spec.bc_kind
        self.x = np.linspace(0.0, spec.L, nx + 1)
        self.dx = spec.L / nx
        self.dt = dt
        self.scheme = scheme
        self.D = _laplacian(nx, self.dx, self.kind)
        if scheme == "cn":
            eye = sparse.identity(nx + 1, format="csr")
            A = (eye - 0.5 * dt * p.epsilon * self.D).tocsc()
            self.B = (eye + 0.5 * dt * p.epsilon * self.D).tocsr()
            self.lu = splu(A)

    def flux(self, t: float) -> np.ndarray:
        """Contribution des flux de Neumann au laplacien : −2ψ₁/dx à gauche, +2ψ₂/dx à droite"""
        out = np.zeros(self.x.size)
        if self.kind == "neumann":
            out[0] = -2.0 * float(self.spec.left_bc(np.array([t]))[0]) / self.dx
        if self.kind in ("neumann", "mixed"):
            out[-1] = 2.0 * float(self.spec.right_bc(np.array([t]))[0]) / self.dx
        return self.p.epsilon * out

    def pin(self, u: np.ndarray, t: float) -> np.ndarray:
        if self.kind in ("dirichlet", "mixed"):
            u[0] = float(self.spec.left_bc(np.array([t]))[0])
        if self.kind == "dirichlet":
            u[-1] = float(self.spec.right_bc(np.array([t]))[0])
        return u

    def reaction(self, t: float, u: np.ndarray, w: np.ndarray) -> np.ndarray:
        return -self.p.a * u - w + self.spec.source(self.x, t, u)

    def memory_step(self, w: np.ndarray, u_old: np.ndarray, u_new: np.ndarray) -> np.ndarray:
        """Crank-Nicolson pour w_t = b u − β w"""
        half = 0.5 * self.dt
        return (w * (1.0 - half * self.p.beta) + half * self.p.b * (u_old + u_new)) / (1.0 + half * self.p.beta)

    def step(self, t: float, u: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        dt = self.dt
        t_new = t + dt
        R0 = self.reaction(t, u, w)
        if self.scheme == "explicit":
            u_new = u + dt * (self.p.epsilon * (self.D @ u) + self.flux(t) + R0)
            w_new = w + dt * (self.p.b * u - self.p.beta * w)
            return self.pin(u_new, t_new), w_new

        flux = 0.5 * (self.flux(t) + self.flux(t_new))
        rhs = self.B @ u + dt * flux
        u_pred = self.pin(self.lu.solve(rhs + dt * R0), t_new)
        w_pred = self.memory_step(w, u, u_pred)
        R1 = self.reaction(t_new, u_pred, w_pred)
        u_new = self.pin(self.lu.solve(rhs + 0.5 * dt * (R0 + R1)), t_new)
        return u_new, self.memory_step(w, u, u_new)


def _integrate(p: OperatorParams, spec: ProblemSpec, nx: int, nt: int, scheme: str, w0=None) -> tuple[np.ndarray, np.ndarray]:
    dt = spec.T / nt
    stepper = _Stepper(p, spec, nx, dt, scheme)
    U = np.empty((nt + 1, nx + 1))
    Wm = np.empty((nt + 1, nx + 1))
    U[0] = np.asarray(spec.u0(stepper.x), dtype=float)
    Wm[0] = np.zeros(nx + 1) if w0 is None else np.asarray(w0(stepper.x), dtype=float)
    for n in range(nt):
        U[n + 1], Wm[n + 1] = stepper.step(n * dt, U[n], Wm[n])
        if not (np.all(np.isfinite(U[n + 1])) and np.all(np.isfinite(Wm[n + 1]))):
            raise BlowUpError("Valeur non finie dans le schéma aux différences finies", step=n + 1, t=(n + 1) * dt)
    return U, Wm


def fd_solve(p: OperatorParams, spec: ProblemSpec, fd: FDConfig | None = None, w0=None) -> OracleSolution:
    """
    Résout le système (u, w) par lignes de méthode.

    `w0` fixe w(·,0) (nul par défaut); pour FitzHugh-Nagumo, w0 = v₀ et w est alors v.

    Raises:
        ParameterError: pas de temps instable pour le schéma explicite
        BlowUpError: NaN/Inf, avec le premier pas fautif
    """
    fd = fd or FDConfig()
    dx = spec.L / fd.nx
    dt = spec.T / fd.nt
    if fd.scheme == "explicit":
        limit = fd.safety * dx * dx / (2.0 * p.epsilon)
        if dt > limit:
            raise ParameterError(
                "Pas de temps instable pour le schéma explicite",
                dt=dt,
                limit=limit,
            )
    logger.info(f"Oracle {fd.scheme} ({spec.bc_kind}) : {fd.nx}×{fd.nt}")
    U, Wm = _integrate(p, spec, fd.nx, fd.nt, fd.scheme, w0)

    estimate = None
    if fd.richardson:
        if fd.nx % 2 or fd.nt % 2:
            logger.warning("Richardson ignoré : nx et nt doivent être pairs")
        else:
            Uc, _ = _integrate(p, spec, fd.nx // 2, fd.nt // 2, fd.scheme, w0)
            estimate = float(np.max(np.abs(U[::2, ::2] - Uc))) / 3.0
            logger.info(f"Estimation de Richardson : {estimate:.3e}")

    stride = fd.nt // fd.output_nt if fd.output_nt else 1
    x, t = uniform_grid(spec.L, spec.T, fd.nx, fd.nt // stride)
    return OracleSolution(
        u=Field(x=x, t=t, values=U[::stride]),
        w=Field(x=x, t=t, values=Wm[::stride]),
        convergence_estimate=estimate,
    )


def fd_solve_scalar_memory(
    p: OperatorParams,
    u0_scalar: float,
    F_scalar,
    horizon: float,
    n_out: int = 1000,
) -> TimeSeries:
    """u' = −a u − w + F(t), w' = b u − β w sans diffusion (solve_ivp, rtol 1e−10)"""
    validate_positive("horizon", horizon)
    F_scalar = F_scalar or (lambda t: 0.0)

    def rhs(t, y):
        u, w = y
        return [-p.a * u - w + float(np.asarray(F_scalar(t))), p.b * u - p.beta * w]

    t_eval = np.linspace(0.0, horizon, n_out + 1)
    sol = solve_ivp(rhs, (0.0, horizon), [u0_scalar, 0.0], method="DOP853", t_eval=t_eval, rtol=1e-10, atol=1e-12)
    if not sol.success:
        raise BlowUpError("Intégration scalaire échouée", message=sol.message)
    return TimeSeries(t=sol.t, u=sol.y[0], w=sol.y[1])


def cross_validate(
    green: Field,
    oracle: OracleSolution | Field,
    mask_corner_cells: int = 5,
    tol: float = 2e-2,
    interpolate: bool = True,
) -> VerificationReport:
    """
    Écarts relatifs sup et L² entre deux champs, hors d'un carré de
    `mask_corner_cells` cellules aux coins (x = 0, t = 0) et (x = L, t = 0).
    """
    ref = oracle.u if isinstance(oracle, OracleSolution) else oracle
    same = ref.values.shape == green.values.shape and np.allclose(ref.x, green.x) and np.allclose(ref.t, green.t)
    if same:
        ref_values = ref.values
    elif interpolate:
        interp = RegularGridInterpolator((ref.t, ref.x), ref.values)
        T, X = np.meshgrid(green.t, green.x, indexing="ij")
        ref_values = interp(np.stack([T, X], axis=-1))
    else:
        raise ParameterError("Grilles incompatibles", green=green.values.shape, oracle=ref.values.shape)

    mask = np.ones(green.values.shape, dtype=bool)
    m = mask_corner_cells
    if m > 0:
        mask[: m + 1, : m + 1] = False
        mask[: m + 1, -(m + 1):] = False

    diff = (green.values - ref_values)[mask]
    scale_sup = float(np.max(np.abs(ref_values[mask])))
    scale_l2 = float(np.linalg.norm(ref_values[mask]))
    sup = float(np.max(np.abs(diff))) / scale_sup if scale_sup > 0 else float(np.max(np.abs(diff)))
    l2 = float(np.linalg.norm(diff)) / scale_l2 if scale_l2 > 0 else float(np.linalg.norm(diff))

    report = VerificationReport(name="cross_validation")
    for name, value in (("sup_rel", sup), ("l2_rel", l2)):
        report.checks.append(
            CheckResult(name=name, lhs=value, rhs=tol, margin=tol - value, status="pass" if value <= tol else "fail")
        )
    logger.info(f"{'✓' if report.passed else '✗'} Comparaison Green/oracle : sup {sup:.3e}, L² {l2:.3e}")
    return report


def memory_from_history(p: OperatorParams, u: Field) -> np.ndarray:
    """b∫₀ᵗ e^{−β(t−τ)} u dτ recalculé par trapèzes récursifs sur la grille"""
    out = np.zeros_like(u.values)
    for n in range(1, u.t.size):
        h = u.t[n] - u.t[n - 1]
        decay = math.exp(-p.beta * h)
        out[n] = decay * out[n - 1] + 0.5 * h * (decay * u.values[n - 1] + u.values[n])
    return p.b * out


def check_memory_identity(p: OperatorParams, solution: OracleSolution, rel_tol: float = 1e-4) -> VerificationReport:
    """w évolué contre w recalculé par quadrature de l'historique de u"""
    recomputed = memory_from_history(p, solution.u)
    scale = max(float(np.max(np.abs(solution.w.values))), 1e-300)
    rel = float(np.max(np.abs(recomputed - solution.w.values))) / scale
    report = VerificationReport(name="memory_identity")
    report.checks.append(
        CheckResult(name="memory_identity", lhs=rel, rhs=rel_tol, margin=rel_tol - rel,
                    status="pass" if rel <= rel_tol else "fail")
    )
    return report
