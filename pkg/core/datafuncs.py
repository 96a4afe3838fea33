# core/datafuncs.py
"""Fonctions de données nommées (conditions initiales, aux limites, sources)"""
import logging
import math
from typing import Callable, Optional

import numpy as np

from core.fields import NO_SOURCE, SourceSpec
from errors import ParameterError
from models import DataFunctionSpec, SourceSection

logger = logging.getLogger(__name__)


def build_function(spec: DataFunctionSpec, scale: float = 1.0) -> Callable[[np.ndarray], np.ndarray]:
    """
    Construit une fonction vectorisée s ↦ f(s).

    `scale` est la longueur de référence des profils périodiques (L pour une
    donnée initiale, 1 pour une donnée temporelle).
    """
    v, amp, rate = spec.value, spec.amplitude, spec.rate

    match spec.name:
        case "zero":
            return lambda s: np.zeros_like(np.asarray(s, dtype=float))
        case "constant":
            return lambda s: np.full_like(np.asarray(s, dtype=float), v)
        case "ramp":
            return lambda s: v + amp * np.clip(rate * np.asarray(s, dtype=float), 0.0, 1.0)
        case "gaussian-bump":
            c, w = spec.center * scale, spec.width * scale
            return lambda s: v + amp * np.exp(-((np.asarray(s, dtype=float) - c) ** 2) / (2.0 * w * w))
        case "sine":
            k = spec.mode * math.pi / scale
            return lambda s: v + amp * np.sin(k * np.asarray(s, dtype=float))
        case "exp-approach":
            return lambda s: v + amp * (-np.expm1(-rate * np.asarray(s, dtype=float)))
        case "damped-oscillation":
            return lambda s: v + amp * np.exp(-rate * np.asarray(s, dtype=float)) * np.sin(np.asarray(s, dtype=float))
        case "polynomial":
            coeffs = list(spec.coefficients) or [0.0]
            return lambda s: np.polynomial.polynomial.polyval(np.asarray(s, dtype=float), coeffs)
    raise ParameterError("Fonction de donnée inconnue", name=spec.name)


def build_derivative(spec: DataFunctionSpec, scale: float = 1.0) -> Callable[[np.ndarray], np.ndarray]:
    """Dérivée analytique de la fonction nommée"""
    amp, rate = spec.amplitude, spec.rate

    match spec.name:
        case "zero" | "constant":
            return lambda s: np.zeros_like(np.asarray(s, dtype=float))
        case "ramp":
            return lambda s: np.where((rate * np.asarray(s, dtype=float) >= 0) & (rate * np.asarray(s) < 1), amp * rate, 0.0)
        case "gaussian-bump":
            c, w = spec.center * scale, spec.width * scale
            return lambda s: -amp * (np.asarray(s, dtype=float) - c) / (w * w) * np.exp(-((np.asarray(s, dtype=float) - c) ** 2) / (2.0 * w * w))
        case "sine":
            k = spec.mode * math.pi / scale
            return lambda s: amp * k * np.cos(k * np.asarray(s, dtype=float))
        case "exp-approach":
            return lambda s: amp * rate * np.exp(-rate * np.asarray(s, dtype=float))
        case "damped-oscillation":
            def deriv(s):
                s = np.asarray(s, dtype=float)
                return amp * np.exp(-rate * s) * (np.cos(s) - rate * np.sin(s))
            return deriv
        case "polynomial":
            coeffs = np.polynomial.polynomial.polyder(list(spec.coefficients) or [0.0])
            return lambda s: np.polynomial.polynomial.polyval(np.asarray(s, dtype=float), coeffs)
    raise ParameterError("Fonction de donnée inconnue", name=spec.name)


def data_limit(spec: DataFunctionSpec) -> Optional[float]:
    """Limite en s → ∞ quand elle existe"""
    match spec.name:
        case "zero":
            return 0.0
        case "constant" | "gaussian-bump" | "damped-oscillation":
            return spec.value
        case "ramp" | "exp-approach":
            return spec.value + spec.amplitude if spec.rate > 0 else spec.value
        case "polynomial":
            coeffs = list(spec.coefficients)
            if all(c == 0.0 for c in coeffs[1:]):
                return coeffs[0] if coeffs else 0.0
    return None


def build_source(section: SourceSection, L: float) -> SourceSpec:
    """
    Source du scénario. Les sources linéaires (`constant`, `gaussian-pulse`) ont
    une constante de Lipschitz nulle; `custom-polynomial` exige un rayon de travail.
    La source `fhn-cubic` est construite par le module fhn.
    """
    match section.kind:
        case "none":
            return NO_SOURCE
        case "constant":
            c = section.value
            return SourceSpec(
                F=lambda x, t, u: np.full_like(u, c), lipschitz_C=0.0, sup_bound=abs(c),
                depends_on_u=False, name="constant",
            )
        case "gaussian-pulse":
            amp, center, width, rate = section.value, section.center * L, section.width * L, section.rate
            return SourceSpec(
                F=lambda x, t, u: amp * np.exp(-((x - center) ** 2) / (2.0 * width**2) - rate * t),
                lipschitz_C=0.0,
                sup_bound=abs(amp),
                depends_on_u=False,
                name="gaussian-pulse",
            )
        case "custom-polynomial":
            coeffs = list(section.coefficients)
            if section.radius is None:
                raise ParameterError("Un rayon de travail est requis pour une source polynomiale")
            R = section.radius
            lip = sum(k * abs(c) * R ** (k - 1) for k, c in enumerate(coeffs) if k > 0)
            sup = sum(abs(c) * R**k for k, c in enumerate(coeffs))
            return SourceSpec(
                F=lambda x, t, u: np.polynomial.polynomial.polyval(u, coeffs or [0.0]),
                lipschitz_C=lip,
                sup_bound=sup,
                depends_on_u=len(coeffs) > 1,
                radius=R,
                name="custom-polynomial",
            )
        case "fhn-cubic":
            raise ParameterError("La source fhn-cubic est réservée à la sous-commande fhn")
    raise ParameterError("Source inconnue", kind=section.kind)
