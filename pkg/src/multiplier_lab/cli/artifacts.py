"""Result JSON and CSV series writers.

Every run writes ``<out>/<command>.json`` holding the verdict, the results and a
reproducibility block, plus one CSV per scan series and per table. Apart from
``generated_at`` the JSON depends only on the configuration.
"""

import csv
import json
import logging
import platform
import re
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel
from pydantic_core import to_jsonable_python

from multiplier_lab import __version__
from multiplier_lab.core.fit import series_to_rows
from multiplier_lab.models.field_models import serialize_array
from multiplier_lab.models.report_models import SCHEMA_VERSION

logger = logging.getLogger(__name__)

_UNSAFE = re.compile(r"[^A-Za-z0-9_.-]+")


def _numpy_fallback(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return serialize_array(value)
    raise TypeError(f"cannot serialize {type(value).__name__}")


def to_jsonable(value: Any) -> Any:
    """Plain JSON data for models, numpy values and nested containers."""
    return to_jsonable_python(value, fallback=_numpy_fallback)


def versions() -> dict[str, str]:
    found = {"multiplier_lab": __version__, "python": platform.python_version()}
    for package in ("numpy", "scipy", "pydantic"):
        try:
            found[package] = metadata.version(package)
        except metadata.PackageNotFoundError:
            found[package] = "unknown"
    return found


def reproducibility_block(config: BaseModel) -> dict[str, Any]:
    return {"config": config.model_dump(mode="json"), "versions": versions()}


def file_stem(*parts: str) -> str:
    return "_".join(_UNSAFE.sub("_", p) for p in parts if p)


def write_rows(path: Path, rows: list[list[str]]) -> None:
    with path.open("w", newline="", encoding="utf-8") as handle:
        csv.writer(handle).writerows(rows)


def write_run(
    out: Path,
    command: str,
    config: BaseModel,
    passed: bool,
    results: dict[str, Any],
    series: list[Any],
    tables: dict[str, list[list[str]]],
) -> list[Path]:
    """Write the JSON result and the CSV files of one run; return the written paths.

    Series names that repeat get a numeric suffix so no CSV is overwritten.
    """
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    csv_files: list[str] = []

    used: dict[str, int] = {}
    for s in series:
        stem = file_stem(command, s.name)
        used[stem] = used.get(stem, 0) + 1
        if used[stem] > 1:
            stem = f"{stem}_{used[stem]}"
        path = out / f"{stem}.csv"
        write_rows(path, series_to_rows(s))
        csv_files.append(path.name)
        written.append(path)
    for name, rows in tables.items():
        path = out / f"{file_stem(command, name)}.csv"
        write_rows(path, rows)
        csv_files.append(path.name)
        written.append(path)

    payload = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "passed": passed,
        "results": to_jsonable(results),
        "csv_files": csv_files,
        "reproducibility": reproducibility_block(config),
        "generated_at": datetime.now(timezone.utc).isoformat(),
    }
    path = out / f"{file_stem(command)}.json"
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    written.insert(0, path)
    logger.debug("%s: wrote %d files to %s", command, len(written), out)
    return written
