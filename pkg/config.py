# config.py
"""Configuration centralisée de l'application"""
from functools import lru_cache
from pathlib import Path
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Configuration de l'application (surchargée par les variables MEMDIFF_*)"""

    model_config = SettingsConfigDict(
        env_prefix="memdiff_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )

    # Application
    app_name: str = "memdiff"
    app_version: str = "1.0.0"
    debug: bool = False
    log_level: str = "INFO"

    # Sorties
    output_dir: Path = Path("out")
    csv_digits: int = 17

    # Parallélisme
    threads: int = 1

    # Tolérances par défaut
    quad_rel_tol: float = 1e-10
    quad_abs_tol: float = 1e-13
    picard_tol: float = 1e-8
    picard_max_iter: int = 60


@lru_cache()
def get_settings() -> Settings:
    """Retourne une instance singleton des settings"""
    return Settings()
