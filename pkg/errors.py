# errors.py
"""Exceptions du domaine et validateurs d'arguments"""
import logging
import math
from typing import Any

logger = logging.getLogger(__name__)


class MemdiffError(Exception):
    """Erreur de base; `exit_code` est le code de sortie de la CLI"""

    exit_code: int = 1

    def __init__(self, detail: str, **context: Any):
        super().__init__(detail)
        self.detail = detail
        self.context = context

    def __str__(self) -> str:
        if not self.context:
            return self.detail
        extra = ", ".join(f"{k}={v!r}" for k, v in self.context.items() if k != "history")
        return f"{self.detail} ({extra})" if extra else self.detail


class ParameterError(MemdiffError, ValueError):
    """Paramètre ou configuration invalide"""

    exit_code = 1


class DomainError(MemdiffError, ValueError):
    """Argument hors du domaine de l'opération"""

    exit_code = 1


class AccuracyError(MemdiffError):
    """Quadrature ou série non convergée; `error_estimate` est l'erreur atteinte"""

    exit_code = 2

    @property
    def error_estimate(self) -> float | None:
        return self.context.get("error_estimate")


class DivergenceError(MemdiffError):
    """Itération de Picard non convergée; `history` contient les deltas"""

    exit_code = 2

    @property
    def history(self) -> list[float]:
        return list(self.context.get("history", []))


class BlowUpError(MemdiffError):
    """Valeur NaN/Inf détectée dans le schéma aux différences finies"""

    exit_code = 2


class VerificationFailure(MemdiffError):
    """Au moins une vérification du rapport a échoué"""

    exit_code = 3


def validate_positive(name: str, value: float) -> float:
    """Valide une constante strictement positive et finie"""
    if not math.isfinite(value) or value <= 0:
        raise ParameterError(f"{name} doit être strictement positif", value=value)
    return value


def validate_time(t: float, strict: bool = True) -> float:
    """Valide un temps (t > 0 si strict, sinon t ≥ 0)"""
    if not math.isfinite(t):
        raise DomainError("Le temps doit être fini", t=t)
    if strict and t <= 0:
        raise DomainError("Le temps doit être > 0", t=t)
    if not strict and t < 0:
        raise DomainError("Le temps ne peut pas être négatif", t=t)
    return t


def validate_half_plane(s: float, a: float, beta: float) -> float:
    """Valide s dans le demi-plan de convergence s > max(−a, −β)"""
    bound = max(-a, -beta)
    if not s > bound:
        raise DomainError(
            f"s doit vérifier s > max(-a, -β) = {bound}",
            s=s,
        )
    return s


def validate_strip_point(x: float, length: float, tol: float = 1e-12) -> float:
    """Valide une position dans [0, L]"""
    if x < -tol or x > length + tol:
        raise DomainError(f"La position doit être dans [0, {length}]", x=x)
    return min(max(x, 0.0), length)
