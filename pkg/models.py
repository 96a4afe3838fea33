# models.py
"""Modèles Pydantic pour la validation des paramètres, des scénarios et des rapports"""
from typing import Literal, Optional
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from config import get_settings


class OperatorParams(BaseModel):
    """Les quatre constantes positives de l'opérateur à mémoire"""

    model_config = ConfigDict(
        frozen=True,
        extra="forbid",
        json_schema_extra={
            "example": {"epsilon": 1.0, "a": 1.0, "b": 1.0, "beta": 1.0}
        },
    )

    epsilon: float = Field(..., gt=0, description="Diffusivité ε")
    a: float = Field(..., gt=0, description="Taux de décroissance linéaire")
    b: float = Field(..., gt=0, description="Couplage mémoire")
    beta: float = Field(..., gt=0, description="Taux d'oubli de la mémoire β")


class DerivedConstants(BaseModel):
    """Constantes dérivées des estimations (ω, β₀, β₁, σ₀, C, C₀)"""

    model_config = ConfigDict(frozen=True)

    omega: float = Field(..., gt=0)
    beta0: float = Field(..., gt=0)
    beta1: float = Field(..., gt=0)
    sigma0: float = Field(..., gt=0)
    C: Optional[float] = Field(None, gt=0, description="Défini si L est fourni")
    C0: Optional[float] = Field(None, gt=0, description="Indisponible si a = β ou sans L")
    degenerate: bool = Field(False, description="a = β à la précision relative 1e-8")


class KernelConfig(BaseModel):
    """Tolérances de quadrature pour K₀, K₁, K₂"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    quad_rel_tol: float = Field(default_factory=lambda: get_settings().quad_rel_tol, gt=0, lt=1)
    quad_abs_tol: float = Field(default_factory=lambda: get_settings().quad_abs_tol, gt=0, lt=1)
    max_subdivisions: int = Field(200, ge=8)
    tail_cutoff_sigmas: float = Field(12.0, gt=0, description="Troncature gaussienne en multiples de √(εt)")
    gl_nodes: int = Field(16, ge=4, description="Nœuds de Gauss-Legendre par panneau (évaluation vectorisée)")
    graded_panels: int = Field(8, ge=0, description="Panneaux géométriques près de φ = 0")
    min_panels: int = Field(4, ge=1)
    max_panels: int = Field(96, ge=1)


class StripGeometry(BaseModel):
    """Bande 0 ≤ x ≤ L"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    L: float = Field(..., gt=0, description="Largeur de la bande")


class SeriesTruncation(BaseModel):
    """Troncature certifiée des sommes d'images"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    tail_tol: float = Field(1e-12, gt=0)
    n_max: int = Field(400, ge=1)


class GridConfig(BaseModel):
    """Grille espace-temps uniforme (nx+1)×(nt+1)"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    nx: int = Field(40, ge=2)
    nt: int = Field(200, ge=1)


class PicardConfig(BaseModel):
    """Paramètres de l'itération de Picard fenêtrée"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    tol: float = Field(default_factory=lambda: get_settings().picard_tol, gt=0)
    max_iter: int = Field(default_factory=lambda: get_settings().picard_max_iter, ge=1)
    contraction_target: float = Field(0.5, gt=0, lt=1)
    window_steps: Optional[int] = Field(None, ge=1, description="Plafond manuel de la fenêtre")


class FDConfig(BaseModel):
    """Paramètres de l'oracle aux différences finies"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    nx: int = Field(64, ge=16)
    nt: int = Field(2000, ge=1, description="Nombre total de pas de temps")
    scheme: Literal["explicit", "cn"] = "cn"
    safety: float = Field(0.9, gt=0, le=1)
    richardson: bool = False
    output_nt: Optional[int] = Field(None, ge=1, description="Pas de temps sauvegardés")

    @model_validator(mode="after")
    def output_divides_steps(self):
        if self.output_nt is not None and self.nt % self.output_nt != 0:
            raise ValueError("output_nt doit diviser nt")
        return self


# --- Rapports ---

CheckStatus = Literal["pass", "fail", "skipped", "inconclusive"]


class CheckResult(BaseModel):
    """Une vérification élémentaire : LHS ≤ RHS (ou écart ≤ tolérance)"""

    name: str
    t: Optional[float] = None
    x: Optional[float] = None
    lhs: float
    rhs: float
    margin: float
    status: CheckStatus
    error_estimate: float = 0.0
    note: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.status == "pass"


class VerificationReport(BaseModel):
    """Rapport structuré d'un ensemble de vérifications"""

    name: str
    checks: list[CheckResult] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        """Vrai si aucune vérification n'a échoué (skipped/inconclusive tolérés)"""
        return all(c.status != "fail" for c in self.checks)

    @property
    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if c.status == "fail"]

    @property
    def worst(self) -> Optional[CheckResult]:
        """Vérification de marge minimale (lieu de la pire violation)"""
        evaluated = [c for c in self.checks if c.status in ("pass", "fail")]
        if not evaluated:
            return None
        return min(evaluated, key=lambda c: c.margin)

    def extend(self, other: "VerificationReport") -> "VerificationReport":
        self.checks.extend(other.checks)
        return self


class SolveReport(BaseModel):
    """Comportement de l'itération de Picard"""

    iterations: int = Field(..., ge=0)
    final_delta: float = Field(..., ge=0)
    window_count: int = Field(..., ge=1)
    window_steps: int = Field(..., ge=1)
    quadrature_error_estimate: float = Field(0.0, ge=0)
    converged: bool = True
    delta_history: list[list[float]] = Field(default_factory=list)


# --- Scénario (fichier TOML) ---

DataFunctionName = Literal[
    "zero",
    "constant",
    "ramp",
    "gaussian-bump",
    "sine",
    "exp-approach",
    "damped-oscillation",
    "polynomial",
]


class DataFunctionSpec(BaseModel):
    """Fonction de donnée nommée, paramétrée numériquement"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: DataFunctionName = "zero"
    value: float = 0.0
    amplitude: float = 1.0
    center: float = 0.5
    width: float = 0.1
    rate: float = 1.0
    mode: int = Field(1, ge=1)
    coefficients: list[float] = Field(default_factory=list)


class GeometrySection(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    L: float = Field(1.0, gt=0)
    T: float = Field(1.0, gt=0)


class BoundarySection(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["neumann", "dirichlet", "mixed"] = "dirichlet"
    left: DataFunctionSpec = DataFunctionSpec()
    right: DataFunctionSpec = DataFunctionSpec()


class InitialSection(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    u0: DataFunctionSpec = DataFunctionSpec()
    v0: DataFunctionSpec = DataFunctionSpec()


class SourceSection(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["none", "constant", "custom-polynomial", "fhn-cubic", "gaussian-pulse"] = "none"
    value: float = 0.0
    coefficients: list[float] = Field(default_factory=list, description="Coefficients en u, degré croissant")
    center: float = 0.5
    width: float = 0.1
    rate: float = 1.0
    radius: Optional[float] = Field(None, gt=0, description="Rayon de la région bornée pour la constante de Lipschitz")


class AsymptSection(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    x_samples: list[float] = Field(default_factory=lambda: [0.1, 0.3, 0.5, 0.7, 0.9])
    horizon_factors: list[float] = Field(default_factory=lambda: [10.0, 20.0, 30.0])
    g: DataFunctionSpec = DataFunctionSpec(name="constant", value=1.0)
    variant: Literal["dirichlet", "mixed"] = "dirichlet"
    steps_per_unit: int = Field(100, ge=4)
    tol: float = Field(1e-3, gt=0)


class VerifySection(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    t_samples: list[float] = Field(default_factory=lambda: [0.1, 1.0, 5.0])
    x_samples: list[float] = Field(default_factory=lambda: [0.0, 0.25, 0.5])
    s_samples: list[float] = Field(default_factory=lambda: [0.5, 1.0, 2.0, 5.0])
    laplace_x: float = 0.5
    onset: Optional[float] = Field(None, ge=0, description="Début de l'estimation de décroissance (défaut 1/ω)")
    horizon_factor: float = Field(30.0, gt=0)

    @field_validator("t_samples")
    @classmethod
    def positive_times(cls, v):
        if any(t <= 0 for t in v):
            raise ValueError("Les temps d'échantillonnage doivent être > 0")
        return v


class FHNSection(BaseModel):
    """Options de la sous-commande fhn (données u₀, v₀ dans [initial], bords dans [boundary])"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    radius: Optional[float] = Field(None, gt=0, description="Rayon de travail imposé; sinon déduit des données")
    compare_oracle: bool = True
    v_tol: float = Field(1e-3, gt=0, description="Écart relatif toléré sur v contre l'oracle")
    steady_horizon_factor: float = Field(30.0, gt=0, description="Horizon du régime permanent en multiples de 1/ω")


class OutputSection(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    directory: Optional[str] = None
    prefix: str = "memdiff"
    mask_corner_cells: int = Field(5, ge=0)
    compare_tol: float = Field(2e-2, gt=0)


class ScenarioConfig(BaseModel):
    """Scénario complet lu depuis le fichier TOML (clés inconnues refusées)"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    operator: OperatorParams
    geometry: GeometrySection = GeometrySection()
    grid: GridConfig = GridConfig()
    boundary: BoundarySection = BoundarySection()
    initial: InitialSection = InitialSection()
    source: SourceSection = SourceSection()
    kernel: KernelConfig = Field(default_factory=KernelConfig)
    series: SeriesTruncation = SeriesTruncation()
    picard: PicardConfig = Field(default_factory=PicardConfig)
    fd: FDConfig = FDConfig()
    fhn: FHNSection = FHNSection()
    asympt: AsymptSection = AsymptSection()
    verify: VerifySection = VerifySection()
    output: OutputSection = OutputSection()
