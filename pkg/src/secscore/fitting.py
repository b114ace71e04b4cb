"""Maximum-likelihood fits of the delay distributions and their ECDF error.

Three families are fitted per category: asymmetric Laplace (``AL``), its
symmetric special case (``Laplace``) and the skew normal (``SkewNormal``).
The AL and skew-normal likelihoods are maximised with a Nelder-Mead simplex
over log-transformed positive parameters; the Laplace MLE is closed form.
The mean squared error against the empirical CDF is a diagnostic only.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

from . import kernels
from .dataset import category_sort_key
from .errors import DegenerateSample, EmptySample, UnknownCategory
from .exploit_model import (
    AlParams,
    LaplaceParams,
    SkewNormalParams,
    al_cdf,
    laplace_cdf,
    skewnormal_cdf,
)

logger = logging.getLogger(__name__)

FAMILIES = ("AL", "Laplace", "SkewNormal")
_LOG_CLIP = 50.0


@dataclass(frozen=True)
class OptimizerSettings:
    xatol: float = 1e-8
    max_evals: int = 10_000
    restarts: int = 1


@dataclass(frozen=True)
class EmpiricalCdf:
    t: np.ndarray
    F: np.ndarray
    n: int

    @property
    def points(self):
        return list(zip(self.t.tolist(), self.F.tolist()))


@dataclass
class FitResult:
    family: str
    params: object
    log_likelihood: float
    mse: float
    n: int
    converged: bool
    n_evals: int = 0

    def cdf(self, t):
        return model_cdf(self.params, t)


def empirical_cdf(samples):
    """Step ECDF at the distinct sample values; ties keep the highest i/n."""
    x = np.asarray(samples, dtype=np.float64)
    if x.size == 0:
        raise EmptySample("empirical CDF of an empty sample")
    t, counts = np.unique(x, return_counts=True)
    return EmpiricalCdf(t, np.cumsum(counts) / x.size, int(x.size))


def model_cdf(params, t):
    if isinstance(params, AlParams):
        return al_cdf(t, params)
    if isinstance(params, LaplaceParams):
        return laplace_cdf(t, params)
    if isinstance(params, SkewNormalParams):
        return skewnormal_cdf(t, params)
    raise TypeError(f"unsupported parameter type {type(params).__name__}")


def model_mse(fit, ecdf):
    """Mean over the ECDF support of the squared CDF error."""
    params = fit.params if isinstance(fit, FitResult) else fit
    diff = np.asarray(model_cdf(params, ecdf.t)) - ecdf.F
    return float(np.mean(diff * diff))


def _as_sample(samples, minimum):
    x = np.ascontiguousarray(samples, dtype=np.float64)
    if x.size == 0:
        raise EmptySample("no samples")
    if x.size < minimum:
        raise DegenerateSample(f"need at least {minimum} samples, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples contain non-finite values")
    if x.min() == x.max():
        raise DegenerateSample("all samples are identical")
    return x


def laplace_loglik(x, p):
    return float(-x.size * math.log(2.0 * p.b) - np.abs(x - p.mu).sum() / p.b)


def skewnormal_loglik(x, p):
    z = (x - p.xi) / p.omega
    return float(
        np.sum(math.log(2.0) - math.log(p.omega) - 0.5 * z * z - 0.5 * math.log(2 * math.pi)
               + special.log_ndtr(p.alpha * z))
    )


def laplace_mle(x):
    mu = float(np.median(x))
    b = float(np.mean(np.abs(x - mu)))
    return mu, b


def fit_laplace(samples, ecdf=None):
    x = _as_sample(samples, 2)
    mu, b = laplace_mle(x)
    if b <= 0:
        raise DegenerateSample("zero mean absolute deviation")
    params = LaplaceParams(mu, b)
    ecdf = ecdf or empirical_cdf(x)
    return FitResult("Laplace", params, laplace_loglik(x, params), model_mse(params, ecdf), int(x.size), True)


def _simplex(x0, steps):
    x0 = np.asarray(x0, dtype=np.float64)
    sim = np.tile(x0, (x0.size + 1, 1))
    for i, s in enumerate(steps):
        sim[i + 1, i] += s
    return sim


def _nelder_mead(objective, x0, steps, settings):
    """Minimise with restarts from the best vertex; returns (x, f, converged, evals)."""
    x = np.asarray(x0, dtype=np.float64)
    evals = 0
    converged = False
    best_f = objective(x)
    for attempt in range(settings.restarts + 1):
        budget = settings.max_evals - evals
        if budget <= x.size + 1:
            break
        res = optimize.minimize(
            objective,
            x,
            method="Nelder-Mead",
            options={
                "initial_simplex": _simplex(x, steps if attempt == 0 else [s * 0.1 for s in steps]),
                "xatol": settings.xatol,
                "fatol": np.inf,
                "maxfev": budget,
                "maxiter": budget,
            },
        )
        evals += int(res.nfev)
        converged = bool(res.status == 0)
        if res.fun <= best_f:
            x, best_f = np.asarray(res.x), float(res.fun)
    return x, best_f, converged, evals


def fit_al(samples, init=None, settings=OptimizerSettings(), ecdf=None):
    """Asymmetric-Laplace MLE over (mu, log lam, log kappa).

    The default starting point is the Laplace closed form with kappa = 1.
    """
    x = _as_sample(samples, 3)
    if init is None:
        mu0, b0 = laplace_mle(x)
        init = AlParams(mu0, 1.0 / b0, 1.0)
    scale = 1.0 / init.lam

    def nll(theta):
        ll, lk = np.clip(theta[1:], -_LOG_CLIP, _LOG_CLIP)
        v = -kernels.al_loglik(x, theta[0], math.exp(ll), math.exp(lk))
        return v if math.isfinite(v) else math.inf

    theta0 = [init.mu, math.log(init.lam), math.log(init.kappa)]
    theta, f, converged, evals = _nelder_mead(nll, theta0, [0.25 * scale, 0.3, 0.3], settings)
    params = AlParams(float(theta[0]), math.exp(theta[1]), math.exp(theta[2]))
    ecdf = ecdf or empirical_cdf(x)
    if not converged:
        logger.warning("AL fit stopped after %d evaluations without meeting xatol", evals)
    return FitResult("AL", params, -f, model_mse(params, ecdf), int(x.size), converged, evals)


def fit_skewnormal(samples, settings=OptimizerSettings(), ecdf=None):
    """Skew-normal MLE over (xi, log omega, alpha), started at (mean, std, 0)."""
    x = _as_sample(samples, 3)
    mean, std = float(x.mean()), float(x.std())

    def nll(theta):
        omega = math.exp(min(max(theta[1], -_LOG_CLIP), _LOG_CLIP))
        z = (x - theta[0]) / omega
        v = -float(np.sum(-math.log(omega) - 0.5 * z * z + special.log_ndtr(theta[2] * z)))
        v -= x.size * (math.log(2.0) - 0.5 * math.log(2 * math.pi))
        return v if math.isfinite(v) else math.inf

    theta, f, converged, evals = _nelder_mead(nll, [mean, math.log(std), 0.0], [0.5 * std, 0.3, 1.0], settings)
    params = SkewNormalParams(float(theta[0]), math.exp(theta[1]), float(theta[2]))
    ecdf = ecdf or empirical_cdf(x)
    return FitResult("SkewNormal", params, -f, model_mse(params, ecdf), int(x.size), converged, evals)


@dataclass
class CategoryFits:
    n: int
    fits: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)

    @property
    def best_family(self):
        """Family with the lowest MSE; ties go to AL."""
        if not self.fits:
            return None
        order = {f: i for i, f in enumerate(FAMILIES)}
        return min(self.fits, key=lambda f: (self.fits[f].mse, order[f]))


@dataclass
class ModelRegistry:
    entries: dict
    snapshot_id: str = ""
    created: str = ""

    def categories(self):
        return sorted(self.entries, key=category_sort_key)

    def al_params(self, category):
        entry = self.entries.get(category)
        if entry is None or "AL" not in entry.fits:
            raise UnknownCategory(str(category))
        return entry.fits["AL"].params

    def resolve(self, chain):
        """First category of ``chain`` with an AL fit, and its parameters."""
        for key in chain:
            entry = self.entries.get(key)
            if entry is not None and "AL" in entry.fits:
                return key, entry.fits["AL"].params
        raise UnknownCategory(" -> ".join(str(k) for k in chain))


def fit_category(samples, settings=OptimizerSettings()):
    """Fit every family to one sample set; failures are recorded, not raised."""
    x = np.asarray(samples, dtype=np.float64)
    out = CategoryFits(int(x.size))
    try:
        ecdf = empirical_cdf(x)
    except EmptySample as exc:
        out.errors = {f: str(exc) for f in FAMILIES}
        return out
    fitters = {
        "AL": lambda: fit_al(x, settings=settings, ecdf=ecdf),
        "Laplace": lambda: fit_laplace(x, ecdf=ecdf),
        "SkewNormal": lambda: fit_skewnormal(x, settings=settings, ecdf=ecdf),
    }
    for family in FAMILIES:
        try:
            out.fits[family] = fitters[family]()
        except (DegenerateSample, EmptySample, ValueError) as exc:
            out.errors[family] = f"{type(exc).__name__}: {exc}"
    return out


def fit_all(categorized, settings=OptimizerSettings(), snapshot_id="", created="", workers=1):
    """Fit all families for every category into a :class:`ModelRegistry`."""
    if not categorized:
        raise ValueError("no categories to fit")
    keys = sorted(categorized, key=category_sort_key)

    def job(key):
        return fit_category(categorized[key].samples, settings)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, keys))
    else:
        results = [job(k) for k in keys]
    return ModelRegistry(dict(zip(keys, results)), snapshot_id, created)
