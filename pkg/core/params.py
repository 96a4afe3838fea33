# core/params.py
"""Constantes dérivées de l'opérateur et fonction E(t)"""
import logging
import math
from functools import lru_cache

import numpy as np

from errors import DomainError, ParameterError, validate_positive
from models import DerivedConstants, OperatorParams

logger = logging.getLogger(__name__)

# Seuil relatif |a−β|/max(a,β) en dessous duquel E(t) prend sa forme limite t·e^{−at}
DEGENERATE_REL_TOL = 1e-8


def make_params(epsilon: float, a: float, b: float, beta: float) -> OperatorParams:
    """Construit des paramètres validés (ParameterError au lieu de ValidationError)"""
    for name, value in (("epsilon", epsilon), ("a", a), ("b", b), ("beta", beta)):
        validate_positive(name, value)
    return OperatorParams(epsilon=epsilon, a=a, b=b, beta=beta)


def is_degenerate(p: OperatorParams) -> bool:
    """Vrai si a = β à la précision relative DEGENERATE_REL_TOL"""
    return abs(p.a - p.beta) / max(p.a, p.beta) < DEGENERATE_REL_TOL


def omega(p: OperatorParams) -> float:
    return min(p.a, p.beta)


def sigma0(p: OperatorParams) -> float:
    return math.sqrt((p.a + p.b / p.beta) / p.epsilon)


@lru_cache(maxsize=256)
def derive_constants(p: OperatorParams, L: float | None = None, require_C0: bool = False) -> DerivedConstants:
    """
    Calcule ω, β₀, β₁, σ₀ et, si L est fourni, C et C₀.

    Args:
        p: Paramètres de l'opérateur
        L: Largeur de la bande (requise pour C et C₀)
        require_C0: Lève une erreur si C₀ n'est pas défini (a = β)

    Raises:
        ParameterError: L ≤ 0, ou C₀ demandé à a = β
    """
    a, b, beta, eps = p.a, p.b, p.beta, p.epsilon
    w = min(a, beta)
    beta0 = 1.0 / a + math.pi * math.sqrt(b) * (a + beta) / (2.0 * (a * beta) ** 1.5)
    beta1 = 1.0 / (a * beta)
    degenerate = is_degenerate(p)

    C = None
    C0 = None
    if L is not None:
        validate_positive("L", L)
        C = 2.0 * eps * math.pi**2 / (6.0 * math.e * L**2)
        if degenerate:
            if require_C0:
                raise ParameterError("Constante C₀ indéfinie à a = β", a=a, beta=beta)
            logger.warning("C₀ indisponible : a = β")
        else:
            gap = abs(a - beta)
            C0 = 1.0 / (2.0 * math.sqrt(eps * w)) + b * w**-1.5 / (4.0 * math.sqrt(eps) * gap) * (
                1.0 + C / b * gap + 3.0 * C / (2.0 * w)
            )
    elif require_C0:
        raise ParameterError("L est requis pour calculer C₀")

    return DerivedConstants(
        omega=w,
        beta0=beta0,
        beta1=beta1,
        sigma0=sigma0(p),
        C=C,
        C0=C0,
        degenerate=degenerate,
    )


def eval_E(p: OperatorParams, t):
    """
    E(t) = (e^{−βt} − e^{−at})/(a − β), forme limite t·e^{−at} quand a ≈ β.

    Écrit e^{−min(a,β)t}·(1 − e^{−|a−β|t})/|a−β| pour éviter l'annulation.
    Accepte un scalaire ou un tableau.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or not np.all(np.isfinite(t_arr)):
        raise DomainError("E(t) n'est défini que pour t ≥ 0", t=t)
    if is_degenerate(p):
        out = t_arr * np.exp(-p.a * t_arr)
    else:
        gap = abs(p.a - p.beta)
        out = np.exp(-min(p.a, p.beta) * t_arr) * (-np.expm1(-gap * t_arr)) / gap
    return float(out) if out.ndim == 0 else out


def mass_envelope(p: OperatorParams, t):
    """Enveloppe (1 + √b·π·t)·e^{−ωt} de la masse de θ sur [0, L]"""
    t_arr = np.asarray(t, dtype=float)
    out = (1.0 + math.sqrt(p.b) * math.pi * t_arr) * np.exp(-omega(p) * t_arr)
    return float(out) if out.ndim == 0 else out


def mass_envelope_tail(p: OperatorParams, T: float) -> float:
    """∫_T^∞ (1 + √b·π·τ)·e^{−ωτ} dτ en forme close"""
    w = omega(p)
    k = math.sqrt(p.b) * math.pi
    return math.exp(-w * T) * ((1.0 + k * T) / w + k / w**2)


def window_mass_bound(p: OperatorParams, T_w: float) -> float:
    """Majorant ∫₀^{T_w} (1 + √b·π·τ) dτ de la masse du noyau sur une fenêtre"""
    return T_w + 0.5 * math.sqrt(p.b) * math.pi * T_w**2
