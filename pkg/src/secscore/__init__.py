"""CVSS v3.1 scoring with a time-dependent exploit-maturity weight."""

from .cvss import CvssV31Vector, base_score, environmental_score, parse_vector, roundup, score, temporal_score
from .errors import SecScoreError
from .exploit_model import (
    V31_BOUNDS,
    AlParams,
    LaplaceParams,
    MaturityBounds,
    SkewNormalParams,
    V4ScorePair,
    al_cdf,
    al_pdf,
    exploit_maturity,
    secscore_environmental,
    secscore_temporal,
    secscore_v4,
)
from .fitting import ModelRegistry, fit_al, fit_all, fit_laplace, fit_skewnormal
from .prioritizer import InventoryItem, precedence_eval, rank, read_inventory, score_at, trajectory
from .registry import load_registry, registry_from_params, save_registry

__version__ = "0.1.0"
