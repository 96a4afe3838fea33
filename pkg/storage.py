# storage.py
"""Écriture des résultats : champs en CSV, rapports en JSON-lines"""
import json
import logging
import os
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np
from pydantic import BaseModel

from config import get_settings
from core.fields import Field

logger = logging.getLogger(__name__)
settings = get_settings()


def header_lines(config: Mapping[str, Any] | None = None) -> list[str]:
    """En-tête commun : version puis configuration résolue complète"""
    lines = [f"# {settings.app_name} {settings.app_version}"]
    if config is not None:
        lines.append(f"# config: {json.dumps(config, sort_keys=True, ensure_ascii=False, default=str)}")
    return lines


def _atomic_write(path: Path, write) -> Path:
    """Écrit dans un fichier temporaire puis renomme (pas de fichier partiel)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    try:
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            write(fh)
        os.replace(tmp, path)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise
    logger.info(f"✓ Écrit : {path}")
    return path


def write_table(
    path: Path,
    columns: Sequence[str],
    data: np.ndarray,
    config: Mapping[str, Any] | None = None,
) -> Path:
    """Tableau numérique, une ligne par échantillon, 17 chiffres significatifs"""
    data = np.atleast_2d(np.asarray(data, dtype=float))
    if data.size and data.shape[1] != len(columns):
        raise ValueError(f"{len(columns)} colonnes attendues, {data.shape[1]} reçues")
    digits = settings.csv_digits - 1

    def write(fh):
        for line in header_lines(config):
            fh.write(line + "\n")
        fh.write(",".join(columns) + "\n")
        if data.size:
            np.savetxt(fh, data, fmt=f"%.{digits}e", delimiter=",", newline="\n")

    return _atomic_write(path, write)


def write_records(path: Path, records: Iterable[Mapping[str, Any]], columns: Sequence[str], config=None) -> Path:
    """Lignes de dictionnaires (ordre des colonnes imposé)"""
    rows = [[float(r[c]) for c in columns] for r in records]
    return write_table(path, columns, np.array(rows).reshape(len(rows), len(columns)), config)


def field_table(fields: Mapping[str, Field]) -> tuple[list[str], np.ndarray]:
    """Colonnes (x, t, noms...) dans l'ordre t croissant puis x croissant"""
    first = next(iter(fields.values()))
    T, X = np.meshgrid(first.t, first.x, indexing="ij")
    columns = ["x", "t", *fields.keys()]
    data = np.column_stack([X.ravel(), T.ravel(), *(f.values.ravel() for f in fields.values())])
    return columns, data


def write_field(path: Path, fields: Mapping[str, Field] | Field, config=None) -> Path:
    if isinstance(fields, Field):
        fields = {"u": fields}
    columns, data = field_table(fields)
    return write_table(path, columns, data, config)


def _as_dict(record: BaseModel | Mapping[str, Any]) -> dict[str, Any]:
    return record.model_dump(mode="json") if isinstance(record, BaseModel) else dict(record)


def write_jsonl(path: Path, records: Iterable[BaseModel | Mapping[str, Any]], config=None) -> Path:
    """Un objet JSON par ligne, clés triées"""

    def write(fh):
        for line in header_lines(config):
            fh.write(line + "\n")
        for record in records:
            fh.write(json.dumps(_as_dict(record), sort_keys=True, ensure_ascii=False) + "\n")

    return _atomic_write(path, write)


def report_records(reports: Iterable[BaseModel]) -> list[dict[str, Any]]:
    """Aplatit les rapports : une ligne par vérification, avec le nom du rapport"""
    records = []
    for report in reports:
        data = _as_dict(report)
        checks = data.pop("checks", None)
        if checks is None:
            records.append(data)
            continue
        for check in checks:
            records.append({"report": data["name"], **check})
    return records


def write_reports(path: Path, reports: Iterable[BaseModel], config=None) -> Path:
    return write_jsonl(path, report_records(reports), config)


def read_table(path: Path) -> tuple[list[str], np.ndarray]:
    """Relit un CSV écrit par write_table (en-têtes # ignorés)"""
    with open(path, encoding="utf-8") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    columns = lines[0].strip().split(",")
    if len(lines) == 1:
        return columns, np.zeros((0, len(columns)))
    data = np.loadtxt(lines[1:], delimiter=",", ndmin=2)
    return columns, data
