# core/fields.py
"""Porteurs de données : champs espace-temps, spécification de problème, solutions"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Literal, Optional

import numpy as np

from errors import ParameterError, validate_positive

logger = logging.getLogger(__name__)

TimeFunction = Callable[[np.ndarray], np.ndarray]
SpaceFunction = Callable[[np.ndarray], np.ndarray]
# F(x, t, u) vectorisée en x et u, t scalaire
SourceFunction = Callable[[np.ndarray, float, np.ndarray], np.ndarray]

BoundaryKind = Literal["neumann", "dirichlet", "mixed"]


def zero_function(s: np.ndarray) -> np.ndarray:
    return np.zeros_like(np.asarray(s, dtype=float))


@dataclass(frozen=True)
class Field:
    """Échantillons u(xᵢ, tⱼ) sur une grille uniforme; `values` a la forme (nt+1, nx+1)"""

    x: np.ndarray
    t: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.t.size, self.x.size):
            raise ParameterError(
                "Forme du champ incompatible avec la grille",
                shape=self.values.shape,
                grid=(self.t.size, self.x.size),
            )
        if self.x.size > 1 and not np.all(np.diff(self.x) > 0):
            raise ParameterError("Pas d'espace non positif")
        if self.t.size > 1 and not np.all(np.diff(self.t) > 0):
            raise ParameterError("Pas de temps non positif")
        if not np.all(np.isfinite(self.values)):
            raise ParameterError("Champ non fini")

    @property
    def nx(self) -> int:
        return self.x.size - 1

    @property
    def nt(self) -> int:
        return self.t.size - 1

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


def uniform_grid(L: float, T: float, nx: int, nt: int) -> tuple[np.ndarray, np.ndarray]:
    validate_positive("L", L)
    validate_positive("T", T)
    return np.linspace(0.0, L, nx + 1), np.linspace(0.0, T, nt + 1)


@dataclass(frozen=True)
class SourceSpec:
    """
    Terme source F(x, t, u) et sa constante de Lipschitz en u.

    `depends_on_u = False` désigne une source linéaire f(x,t) : l'itération de
    Picard converge alors en un pas.
    """

    F: SourceFunction
    lipschitz_C: float = 0.0
    sup_bound: Optional[float] = None
    depends_on_u: bool = True
    radius: Optional[float] = None
    name: str = "custom"

    def __call__(self, x: np.ndarray, t: float, u: np.ndarray) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.F(x, t, u), dtype=float), np.shape(u))

    def spot_check_lipschitz(self, L: float, T: float, bound: float, n: int = 256, seed: int = 0) -> bool:
        """Échantillonnage aléatoire de |F(u₁) − F(u₂)| ≤ C|u₁ − u₂| sur |u| ≤ bound"""
        rng = np.random.default_rng(seed)
        x = rng.uniform(0.0, L, n)
        t = rng.uniform(0.0, T, n)
        u1 = rng.uniform(-bound, bound, n)
        u2 = rng.uniform(-bound, bound, n)
        lhs = np.array([abs(self(x[k:k + 1], t[k], u1[k:k + 1])[0] - self(x[k:k + 1], t[k], u2[k:k + 1])[0]) for k in range(n)])
        ok = bool(np.all(lhs <= self.lipschitz_C * np.abs(u1 - u2) * (1 + 1e-9) + 1e-12))
        if not ok:
            logger.warning(f"Constante de Lipschitz {self.lipschitz_C} insuffisante pour la source {self.name}")
        return ok


NO_SOURCE = SourceSpec(F=lambda x, t, u: np.zeros_like(u), depends_on_u=False, sup_bound=0.0, name="none")


@dataclass(frozen=True)
class ProblemSpec:
    """Problème aux limites sur [0, L] × [0, T]"""

    L: float
    T: float
    bc_kind: BoundaryKind
    left_bc: TimeFunction = zero_function
    right_bc: TimeFunction = zero_function
    u0: SpaceFunction = zero_function
    source: SourceSpec = NO_SOURCE

    def __post_init__(self):
        validate_positive("L", self.L)
        validate_positive("T", self.T)
        if self.bc_kind not in ("neumann", "dirichlet", "mixed"):
            raise ParameterError("Type de condition aux limites inconnu", bc_kind=self.bc_kind)

    def check_compatibility(self, tol: float = 1e-8) -> list[str]:
        """Compatibilité aux coins (avertissement seulement)"""
        issues = []
        zero = np.zeros(1)
        u0_left = float(self.u0(zero)[0])
        u0_right = float(self.u0(np.array([self.L]))[0])
        if self.bc_kind in ("dirichlet", "mixed"):
            g1 = float(self.left_bc(zero)[0])
            if abs(g1 - u0_left) > tol:
                issues.append(f"coin gauche : donnée {g1} ≠ u₀(0) = {u0_left}")
        if self.bc_kind == "dirichlet":
            g2 = float(self.right_bc(zero)[0])
            if abs(g2 - u0_right) > tol:
                issues.append(f"coin droit : donnée {g2} ≠ u₀(L) = {u0_right}")
        for issue in issues:
            logger.warning(f"Incompatibilité de coin ({self.bc_kind}) : {issue}")
        return issues


@dataclass(frozen=True)
class OracleSolution:
    """Solution aux différences finies : u et la variable mémoire w"""

    u: Field
    w: Field
    convergence_estimate: Optional[float] = None


@dataclass(frozen=True)
class FHNSolution:
    u: Field
    v: Field


@dataclass(frozen=True)
class TimeSeries:
    """Solution du problème sans diffusion : u(t) et w(t)"""

    t: np.ndarray
    u: np.ndarray
    w: np.ndarray = field(default_factory=lambda: np.zeros(0))
