# tests/conftest.py
"""Fixtures partagées"""
import textwrap

import numpy as np
import pytest

from config import get_settings
from models import GridConfig, OperatorParams, StripGeometry

# b > 0 est imposé par le modèle; 1e−24 rend la mémoire numériquement absente
NEGLIGIBLE = 1e-24


@pytest.fixture
def unit_params() -> OperatorParams:
    return OperatorParams(epsilon=1.0, a=1.0, b=1.0, beta=1.0)


@pytest.fixture
def skew_params() -> OperatorParams:
    return OperatorParams(epsilon=0.25, a=2.0, b=0.5, beta=3.0)


@pytest.fixture
def heat_params() -> OperatorParams:
    """Mémoire négligeable : K₀ se réduit au noyau de la chaleur amorti"""
    return OperatorParams(epsilon=1.0, a=1.0, b=NEGLIGIBLE, beta=1.0)


@pytest.fixture
def unit_strip() -> StripGeometry:
    return StripGeometry(L=1.0)


@pytest.fixture
def small_grid() -> GridConfig:
    return GridConfig(nx=20, nt=100)


@pytest.fixture
def sine_profile():
    return lambda x: np.sin(np.pi * np.asarray(x, dtype=float))


@pytest.fixture
def write_scenario(tmp_path):
    """Écrit un scénario TOML dans tmp_path et retourne son chemin"""

    def _write(text: str, name: str = "scenario.toml"):
        path = tmp_path / name
        path.write_text(textwrap.dedent(text), encoding="utf-8")
        return path

    return _write


@pytest.fixture(autouse=True)
def isolated_settings(monkeypatch, tmp_path):
    """Sorties par défaut dans tmp_path, settings relus à chaque test"""
    monkeypatch.setenv("MEMDIFF_OUTPUT_DIR", str(tmp_path / "out"))
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()
