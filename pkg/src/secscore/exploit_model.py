"""Time-dependent exploit-maturity model and the scores built on it.

Time ``t`` is in weeks since the CVE date and may be negative. The
asymmetric Laplace (AL) law is parameterised by location ``mu`` (weeks),
rate ``lam`` (1/weeks) and asymmetry ``kappa``:

    F(t) = k^2/(1+k^2) * exp((lam/k) (t - mu))        t <= mu
    F(t) = 1 - 1/(1+k^2) * exp(-lam k (t - mu))       t >  mu

Published parameter tables list the reciprocal ``1/lam`` (a scale in
weeks) in their lambda column; use :meth:`AlParams.from_scale` for those.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import cvss, kernels
from .errors import DegenerateScore


@dataclass(frozen=True)
class AlParams:
    mu: float
    lam: float
    kappa: float

    def __post_init__(self):
        if not math.isfinite(self.mu):
            raise ValueError(f"mu must be finite, got {self.mu}")
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValueError(f"lam must be positive, got {self.lam}")
        if not (self.kappa > 0 and math.isfinite(self.kappa)):
            raise ValueError(f"kappa must be positive, got {self.kappa}")

    @classmethod
    def from_scale(cls, mu, scale, kappa):
        """Build from (location, scale in weeks, asymmetry) as tabulated."""
        return cls(float(mu), 1.0 / float(scale), float(kappa))

    @property
    def scale(self):
        return 1.0 / self.lam


@dataclass(frozen=True)
class LaplaceParams:
    mu: float
    b: float

    def __post_init__(self):
        if not self.b > 0:
            raise ValueError(f"b must be positive, got {self.b}")

    def as_al(self):
        return AlParams(self.mu, 1.0 / self.b, 1.0)


@dataclass(frozen=True)
class SkewNormalParams:
    xi: float
    omega: float
    alpha: float

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError(f"omega must be positive, got {self.omega}")


@dataclass(frozen=True)
class MaturityBounds:
    e_min: float = 0.91
    e_max: float = 1.0

    def __post_init__(self):
        if not 0 < self.e_min <= self.e_max <= 1:
            raise ValueError(f"need 0 < e_min <= e_max <= 1, got {self.e_min}, {self.e_max}")


V31_BOUNDS = MaturityBounds(cvss.E_WEIGHT["U"], cvss.E_WEIGHT["H"])


@dataclass(frozen=True)
class V4ScorePair:
    """CVSS v4 scores of one vector with exploit maturity pinned to Attacked / Unreported."""

    score_eq5_attacked: float
    score_eq5_unreported: float

    def __post_init__(self):
        for s in (self.score_eq5_attacked, self.score_eq5_unreported):
            if not 0.0 <= s <= 10.0:
                raise ValueError(f"CVSS v4 score out of range: {s}")
        if self.score_eq5_unreported > self.score_eq5_attacked:
            raise ValueError("unreported-exploit score exceeds attacked score")


def _scalar_or_array(t, out):
    return float(out[()]) if np.ndim(t) == 0 else out


def al_cdf(t, p):
    return _scalar_or_array(t, kernels.al_cdf_array(t, p.mu, p.lam, p.kappa).reshape(np.shape(t)))


def al_pdf(t, p):
    t = np.asarray(t, dtype=np.float64)
    d = t - p.mu
    peak = p.lam * p.kappa / (1.0 + p.kappa * p.kappa)
    expo = np.where(
        d <= 0, (p.lam / p.kappa) * np.minimum(d, 0.0), -p.lam * p.kappa * np.maximum(d, 0.0)
    )
    out = peak * np.exp(expo)
    return _scalar_or_array(t, out)


def al_sample(p, size, rng):
    """Draw ``size`` values by inverting the AL CDF."""
    u = rng.random(size)
    k2 = p.kappa * p.kappa
    split = k2 / (1.0 + k2)
    with np.errstate(divide="ignore"):
        left = p.mu + (p.kappa / p.lam) * np.log(u / split)
        right = p.mu - np.log((1.0 - u) * (1.0 + k2)) / (p.lam * p.kappa)
    return np.where(u <= split, left, right)


def laplace_cdf(t, p):
    t = np.asarray(t, dtype=np.float64)
    z = (t - p.mu) / p.b
    out = np.where(z <= 0, 0.5 * np.exp(np.minimum(z, 0.0)), 1.0 - 0.5 * np.exp(-np.maximum(z, 0.0)))
    return _scalar_or_array(t, out)


def skewnormal_cdf(t, p):
    t = np.asarray(t, dtype=np.float64)
    z = (t - p.xi) / p.omega
    out = np.clip(special.ndtr(z) - 2.0 * special.owens_t(z, p.alpha), 0.0, 1.0)
    return _scalar_or_array(t, out)


def exploit_maturity(t, p, bounds=V31_BOUNDS):
    """Exploit-maturity weight E_S(t), between ``bounds.e_min`` and ``bounds.e_max``."""
    f = al_cdf(t, p)
    return bounds.e_min + (bounds.e_max - bounds.e_min) * f


def secscore_temporal(base, rc_weight, rl_weight, t, p, bounds=V31_BOUNDS, exploit_known=False):
    """Temporal SecScore; the maturity weight stays outside the roundup."""
    e_s = bounds.e_max if exploit_known else exploit_maturity(t, p, bounds)
    return cvss.roundup(base * rc_weight * rl_weight) * e_s


def secscore_environmental(v, t, p, bounds=V31_BOUNDS, exploit_known=False):
    _, impact_m, exploitability_m, _ = cvss.modified_components(v)
    if impact_m <= 0:
        return 0.0 * exploit_maturity(t, p, bounds)
    _, rl, rc = cvss.temporal_weights(v)
    e_s = bounds.e_max if exploit_known else exploit_maturity(t, p, bounds)
    return cvss.roundup(cvss.modified_base(v) * rc * rl) * e_s


def v4_e_min(pair):
    if pair.score_eq5_attacked == 0:
        raise DegenerateScore("CVSS v4 score with an attacked exploit is zero")
    return pair.score_eq5_unreported / pair.score_eq5_attacked


def v4_bounds(pair):
    return MaturityBounds(v4_e_min(pair), 1.0)


def secscore_v4(pair, t, p, exploit_known=False):
    bounds = v4_bounds(pair)
    e_s = bounds.e_max if exploit_known else exploit_maturity(t, p, bounds)
    return pair.score_eq5_attacked * e_s
