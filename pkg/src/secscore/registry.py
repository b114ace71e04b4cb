"""JSON persistence of :class:`~secscore.fitting.ModelRegistry`.

Layout (``schema_version`` 1)::

    {
      "schema_version": 1,
      "snapshot_id": "...",
      "created": "2023-04-02T00:00:00Z",
      "categories": [
        {
          "kind": "Platform", "label": "PHP", "n": 13261, "best_family": "AL",
          "fits": {
            "AL": {"params": {"mu": ..., "lambda": ..., "kappa": ...},
                   "log_likelihood": ..., "mse": ..., "n": ..., "converged": true,
                   "n_evals": ...},
            "Laplace": {"params": {"mu": ..., "b": ...}, ...},
            "SkewNormal": {"params": {"xi": ..., "omega": ..., "alpha": ...}, ...}
          },
          "errors": {}
        }
      ]
    }

``lambda`` is the rate (1/weeks) used in the CDF, not the tabulated scale.
Floats are written with ``repr`` precision so a save/load round trip is exact.
"""

import json
from pathlib import Path

from .dataset import GENERAL, CategoryKey
from .errors import SchemaVersionError
from .exploit_model import AlParams, LaplaceParams, SkewNormalParams
from .fitting import CategoryFits, FitResult, ModelRegistry

SCHEMA_VERSION = 1


def _params_to_dict(p):
    if isinstance(p, AlParams):
        return {"mu": p.mu, "lambda": p.lam, "kappa": p.kappa}
    if isinstance(p, LaplaceParams):
        return {"mu": p.mu, "b": p.b}
    if isinstance(p, SkewNormalParams):
        return {"xi": p.xi, "omega": p.omega, "alpha": p.alpha}
    raise TypeError(type(p).__name__)


def _params_from_dict(family, d):
    if family == "AL":
        return AlParams(float(d["mu"]), float(d["lambda"]), float(d["kappa"]))
    if family == "Laplace":
        return LaplaceParams(float(d["mu"]), float(d["b"]))
    if family == "SkewNormal":
        return SkewNormalParams(float(d["xi"]), float(d["omega"]), float(d["alpha"]))
    raise ValueError(f"unknown family {family!r}")


def registry_to_dict(reg):
    cats = []
    for key in reg.categories():
        entry = reg.entries[key]
        fits = {}
        for family, fit in entry.fits.items():
            fits[family] = {
                "params": _params_to_dict(fit.params),
                "log_likelihood": fit.log_likelihood,
                "mse": fit.mse,
                "n": fit.n,
                "converged": fit.converged,
                "n_evals": fit.n_evals,
            }
        cats.append({
            "kind": key.kind,
            "label": key.label,
            "n": entry.n,
            "best_family": entry.best_family,
            "fits": fits,
            "errors": dict(entry.errors),
        })
    return {
        "schema_version": SCHEMA_VERSION,
        "snapshot_id": reg.snapshot_id,
        "created": reg.created,
        "categories": cats,
    }


def registry_from_dict(data):
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(f"registry schema version {version!r}; this build reads {SCHEMA_VERSION}")
    entries = {}
    for c in data["categories"]:
        key = CategoryKey(c["kind"], c["label"])
        entry = CategoryFits(int(c["n"]), errors=dict(c.get("errors", {})))
        for family, f in c.get("fits", {}).items():
            entry.fits[family] = FitResult(
                family=family,
                params=_params_from_dict(family, f["params"]),
                log_likelihood=float(f["log_likelihood"]),
                mse=float(f["mse"]),
                n=int(f["n"]),
                converged=bool(f["converged"]),
                n_evals=int(f.get("n_evals", 0)),
            )
        entries[key] = entry
    return ModelRegistry(entries, data.get("snapshot_id", ""), data.get("created", ""))


def dumps_registry(reg):
    return json.dumps(registry_to_dict(reg), indent=2, sort_keys=False) + "\n"


def save_registry(reg, path):
    Path(path).write_text(dumps_registry(reg), encoding="utf-8")


def load_registry(path):
    with open(path, encoding="utf-8") as fh:
        return registry_from_dict(json.load(fh))


def registry_from_params(params, category=None):
    """Single-entry registry (General by default) holding one AL parameter set."""
    key = category or GENERAL
    entry = CategoryFits(0)
    entry.fits["AL"] = FitResult("AL", params, float("nan"), float("nan"), 0, True)
    return ModelRegistry({key: entry}, snapshot_id="params", created="")
