"""CVSS v3.1 vector parsing and Base/Temporal/Environmental scoring.

Metric values are kept as their one-letter vector codes (``"N"``, ``"H"``,
``"X"`` for Not Defined, ...). Weights are the published v3.1 constants.
"""

import math
from dataclasses import dataclass, fields

from .errors import MalformedVector

PREFIX = "CVSS:3.1/"

BASE_METRICS = ("AV", "AC", "PR", "UI", "S", "C", "I", "A")
TEMPORAL_METRICS = ("E", "RL", "RC")
ENVIRONMENTAL_METRICS = ("CR", "IR", "AR", "MAV", "MAC", "MPR", "MUI", "MS", "MC", "MI", "MA")
METRIC_ORDER = BASE_METRICS + TEMPORAL_METRICS + ENVIRONMENTAL_METRICS

LEGAL_VALUES = {
    "AV": "NALP",
    "AC": "LH",
    "PR": "NLH",
    "UI": "NR",
    "S": "UC",
    "C": "HLN",
    "I": "HLN",
    "A": "HLN",
    "E": "XHFPU",
    "RL": "XUWTO",
    "RC": "XCRU",
    "CR": "XHML",
    "IR": "XHML",
    "AR": "XHML",
    "MAV": "XNALP",
    "MAC": "XLH",
    "MPR": "XNLH",
    "MUI": "XNR",
    "MS": "XUC",
    "MC": "XHLN",
    "MI": "XHLN",
    "MA": "XHLN",
}

AV_WEIGHT = {"N": 0.85, "A": 0.62, "L": 0.55, "P": 0.2}
AC_WEIGHT = {"L": 0.77, "H": 0.44}
PR_WEIGHT = {
    "U": {"N": 0.85, "L": 0.62, "H": 0.27},
    "C": {"N": 0.85, "L": 0.68, "H": 0.5},
}
UI_WEIGHT = {"N": 0.85, "R": 0.62}
CIA_WEIGHT = {"H": 0.56, "L": 0.22, "N": 0.0}
E_WEIGHT = {"X": 1.0, "H": 1.0, "F": 0.97, "P": 0.94, "U": 0.91}
RL_WEIGHT = {"X": 1.0, "U": 1.0, "W": 0.97, "T": 0.96, "O": 0.95}
RC_WEIGHT = {"X": 1.0, "C": 1.0, "R": 0.96, "U": 0.92}
REQ_WEIGHT = {"X": 1.0, "H": 1.5, "M": 1.0, "L": 0.5}

SEVERITY_BANDS = ((0.0, "None"), (3.9, "Low"), (6.9, "Medium"), (8.9, "High"), (10.0, "Critical"))


def roundup(n):
    """Smallest one-decimal number >= ``n``.

    Works on ``n * 100000`` rounded to an integer so that binary artifacts
    such as ``8.200000000000001`` land on ``8.2`` instead of ``8.3``.
    """
    scaled = int(round(n * 100000))
    if scaled % 10000 == 0:
        return scaled / 100000.0
    return (math.floor(scaled / 10000) + 1) / 10.0


def severity(score):
    if score == 0.0:
        return "None"
    for upper, label in SEVERITY_BANDS[1:]:
        if score <= upper:
            return label
    return "Critical"


@dataclass(frozen=True)
class CvssV31Vector:
    av: str
    ac: str
    pr: str
    ui: str
    s: str
    c: str
    i: str
    a: str
    e: str = "X"
    rl: str = "X"
    rc: str = "X"
    cr: str = "X"
    ir: str = "X"
    ar: str = "X"
    mav: str = "X"
    mac: str = "X"
    mpr: str = "X"
    mui: str = "X"
    ms: str = "X"
    mc: str = "X"
    mi: str = "X"
    ma: str = "X"

    def __post_init__(self):
        for f in fields(self):
            metric = f.name.upper()
            value = getattr(self, f.name)
            if not isinstance(value, str) or len(value) != 1 or value not in LEGAL_VALUES[metric]:
                raise MalformedVector(f"illegal value {value!r} for metric {metric}")

    def metric(self, name):
        return getattr(self, name.lower())

    def modified(self, name):
        """Value of the modified metric ``M<name>``, falling back to the base metric."""
        value = getattr(self, "m" + name.lower())
        return getattr(self, name.lower()) if value == "X" else value

    def to_string(self):
        parts = []
        for name in METRIC_ORDER:
            value = self.metric(name)
            if name in BASE_METRICS or value != "X":
                parts.append(f"{name}:{value}")
        return PREFIX + "/".join(parts)

    __str__ = to_string


def parse_vector(text):
    """Parse a ``CVSS:3.1/...`` vector string. Metric order is free."""
    if not isinstance(text, str):
        raise MalformedVector("vector must be a string")
    text = text.strip()
    if not text.startswith(PREFIX):
        raise MalformedVector(f"vector must start with {PREFIX!r}: {text!r}")
    body = text[len(PREFIX):]
    if not body:
        raise MalformedVector("vector has no metrics")
    values = {}
    for pair in body.split("/"):
        name, sep, value = pair.partition(":")
        if not sep:
            raise MalformedVector(f"metric {pair!r} is not METRIC:VALUE")
        if name not in LEGAL_VALUES:
            raise MalformedVector(f"unknown metric {name!r}")
        if name in values:
            raise MalformedVector(f"duplicate metric {name!r}")
        if len(value) != 1 or value not in LEGAL_VALUES[name]:
            raise MalformedVector(f"unknown value {value!r} for metric {name}")
        values[name] = value
    missing = [m for m in BASE_METRICS if m not in values]
    if missing:
        raise MalformedVector("missing mandatory metrics: " + ", ".join(missing))
    return CvssV31Vector(**{k.lower(): v for k, v in values.items()})


@dataclass(frozen=True)
class BaseBreakdown:
    iss: float
    impact: float
    exploitability: float
    base: float


@dataclass(frozen=True)
class EnvironmentalBreakdown:
    iss_m: float
    impact_m: float
    exploitability_m: float
    environmental: float


@dataclass(frozen=True)
class ScoreBreakdown:
    iss: float
    impact: float
    exploitability: float
    base: float
    temporal: float
    iss_m: float
    impact_m: float
    exploitability_m: float
    environmental: float

    @property
    def severity(self):
        return severity(self.base)


def _impact(iss, scope):
    if scope == "U":
        return 6.42 * iss
    return 7.52 * (iss - 0.029) - 3.25 * (iss - 0.02) ** 15


def _exploitability(av, ac, pr, ui, scope):
    return 8.22 * AV_WEIGHT[av] * AC_WEIGHT[ac] * PR_WEIGHT[scope][pr] * UI_WEIGHT[ui]


def _combine(impact, exploitability, scope):
    if impact <= 0:
        return 0.0
    if scope == "U":
        return roundup(min(impact + exploitability, 10.0))
    return roundup(min(1.08 * (impact + exploitability), 10.0))


def base_score(v):
    iss = 1 - (1 - CIA_WEIGHT[v.c]) * (1 - CIA_WEIGHT[v.i]) * (1 - CIA_WEIGHT[v.a])
    impact = _impact(iss, v.s)
    exploitability = _exploitability(v.av, v.ac, v.pr, v.ui, v.s)
    return BaseBreakdown(iss, impact, exploitability, _combine(impact, exploitability, v.s))


def temporal_weights(v):
    """(E, RL, RC) weights with Not Defined resolved to 1.0."""
    return E_WEIGHT[v.e], RL_WEIGHT[v.rl], RC_WEIGHT[v.rc]


def temporal_score(v, base):
    e, rl, rc = temporal_weights(v)
    return roundup(base * e * rl * rc)


def modified_components(v):
    """Modified ISS, impact, exploitability and resolved modified scope."""
    ms = v.modified("S")
    cr, ir, ar = REQ_WEIGHT[v.cr], REQ_WEIGHT[v.ir], REQ_WEIGHT[v.ar]
    iss_m = min(
        1 - (1 - cr * CIA_WEIGHT[v.modified("C")])
        * (1 - ir * CIA_WEIGHT[v.modified("I")])
        * (1 - ar * CIA_WEIGHT[v.modified("A")]),
        0.915,
    )
    if ms == "U":
        impact_m = 6.42 * iss_m
    else:
        impact_m = 7.52 * (iss_m - 0.029) - 3.25 * (iss_m * 0.9731 - 0.02) ** 13
    exploitability_m = _exploitability(
        v.modified("AV"), v.modified("AC"), v.modified("PR"), v.modified("UI"), ms
    )
    return iss_m, impact_m, exploitability_m, ms


def modified_base(v):
    """Inner roundup of the environmental equation, before temporal weights."""
    _, impact_m, exploitability_m, ms = modified_components(v)
    return _combine(impact_m, exploitability_m, ms)


def environmental_score(v):
    iss_m, impact_m, exploitability_m, ms = modified_components(v)
    if impact_m <= 0:
        env = 0.0
    else:
        e, rl, rc = temporal_weights(v)
        env = roundup(_combine(impact_m, exploitability_m, ms) * e * rl * rc)
    return EnvironmentalBreakdown(iss_m, impact_m, exploitability_m, env)


def score(v):
    """Full breakdown of every CVSS v3.1 score for ``v``."""
    if isinstance(v, str):
        v = parse_vector(v)
    b = base_score(v)
    env = environmental_score(v)
    return ScoreBreakdown(
        iss=b.iss,
        impact=b.impact,
        exploitability=b.exploitability,
        base=b.base,
        temporal=temporal_score(v, b.base),
        iss_m=env.iss_m,
        impact_m=env.impact_m,
        exploitability_m=env.exploitability_m,
        environmental=env.environmental,
    )
