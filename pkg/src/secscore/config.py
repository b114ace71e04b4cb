"""Run configuration, loaded from an optional YAML file.

Every field is optional. Example::

    sources:
      cve: {path: allitems.csv, id: Name, date: Phase, skip_rows: 2, encoding: latin-1}
      exploitdb: {path: files_exploits.csv, date: date_published}
      cvedetails: {path: cvedetails.csv, id: cve_id, score: score}
    multi_exploit_rule: earliest
    min_category_size: 10
    optimizer: {xatol: 1.0e-8, max_evals: 10000, restarts: 1}
    bounds: {e_min: 0.91, e_max: 1.0}
    workers: 1
    output_dir: out
    format: csv
"""

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import yaml

from .dataset import PLATFORM_MERGE, CveColumns, CveDetailsColumns, ExploitDbColumns
from .errors import SchemaError
from .exploit_model import MaturityBounds
from .fitting import OptimizerSettings

FORMATS = ("csv", "records")


@dataclass
class RunConfig:
    cve_path: str = None
    exploitdb_path: str = None
    cvedetails_path: str = None
    cve_columns: CveColumns = field(default_factory=CveColumns)
    exploitdb_columns: ExploitDbColumns = field(default_factory=ExploitDbColumns)
    cvedetails_columns: CveDetailsColumns = field(default_factory=CveDetailsColumns)
    platform_merge: dict = field(default_factory=lambda: dict(PLATFORM_MERGE))
    multi_exploit_rule: str = "earliest"
    min_category_size: int = 10
    optimizer: OptimizerSettings = field(default_factory=OptimizerSettings)
    bounds: MaturityBounds = field(default_factory=MaturityBounds)
    workers: int = 1
    output_dir: str = None
    format: str = "csv"
    created: str = None


def _coerce(value, typ, where):
    if typ is bool:
        if isinstance(value, bool):
            return value
        raise SchemaError(f"config {where}: expected true/false, got {value!r}")
    if typ in (int, float):
        try:
            return typ(value)
        except (TypeError, ValueError):
            raise SchemaError(f"config {where}: expected a number, got {value!r}") from None
    return str(value) if typ is str else value


def _columns(cls, raw, where):
    if not isinstance(raw, dict):
        raise SchemaError(f"config {where}: expected a mapping")
    types = {f.name: f.type for f in fields(cls)}
    unknown = set(raw) - set(types) - {"path"}
    if unknown:
        raise SchemaError(f"config {where}: unknown keys {sorted(unknown)}")
    try:
        return cls(**{k: _coerce(v, types[k], f"{where}.{k}") for k, v in raw.items() if k in types})
    except ValueError as exc:
        raise SchemaError(f"config {where}: {exc}") from None


def load_config(path=None):
    cfg = RunConfig()
    if path is None:
        return cfg
    base = Path(path).parent
    with open(path, encoding="utf-8") as fh:
        raw = yaml.safe_load(fh) or {}
    if not isinstance(raw, dict):
        raise SchemaError(f"{path}: top level must be a mapping")

    def resolve(p):
        return str(base / p) if p is not None and not Path(p).is_absolute() else p

    sources = raw.pop("sources", {}) or {}
    if "cve" in sources:
        cfg.cve_path = resolve(sources["cve"].get("path"))
        cfg.cve_columns = _columns(CveColumns, sources["cve"], "sources.cve")
    if "exploitdb" in sources:
        cfg.exploitdb_path = resolve(sources["exploitdb"].get("path"))
        cfg.exploitdb_columns = _columns(ExploitDbColumns, sources["exploitdb"], "sources.exploitdb")
    if "cvedetails" in sources:
        cfg.cvedetails_path = resolve(sources["cvedetails"].get("path"))
        cfg.cvedetails_columns = _columns(CveDetailsColumns, sources["cvedetails"], "sources.cvedetails")
    if "platform_merge" in raw:
        cfg.platform_merge = {str(k).lower(): str(v).lower() for k, v in raw.pop("platform_merge").items()}
    if "optimizer" in raw:
        cfg.optimizer = _columns(OptimizerSettings, raw.pop("optimizer"), "optimizer")
    if "bounds" in raw:
        cfg.bounds = _columns(MaturityBounds, raw.pop("bounds"), "bounds")
    if "output_dir" in raw:
        cfg.output_dir = resolve(raw.pop("output_dir"))
    simple = {"multi_exploit_rule", "min_category_size", "workers", "format", "created"}
    unknown = set(raw) - simple
    if unknown:
        raise SchemaError(f"{path}: unknown config keys {sorted(unknown)}")
    types = {f.name: f.type for f in fields(RunConfig)}
    types["created"] = str
    cfg = replace(cfg, **{k: _coerce(v, types[k], k) for k, v in raw.items()})
    if cfg.format not in FORMATS:
        raise SchemaError(f"format must be one of {FORMATS}")
    return cfg
