"""Hot numeric loops.

Each kernel has a loop form compiled by numba and a vectorised numpy form.
The public functions dispatch on :data:`secscore._accel.HAVE_NUMBA`; both
forms stay importable so tests and the benchmark can compare them.
"""

import math

import numpy as np

from ._accel import HAVE_NUMBA, njit


# --- asymmetric Laplace CDF -------------------------------------------------

def _al_cdf_np(t, mu, lam, kappa):
    t = np.asarray(t, dtype=np.float64)
    k2 = kappa * kappa
    d = t - mu
    lo = k2 / (1.0 + k2)
    left = lo * np.exp((lam / kappa) * np.minimum(d, 0.0))
    # written as lo + increment so both branches meet exactly at mu
    right = np.minimum(lo - np.expm1(-lam * kappa * np.maximum(d, 0.0)) / (1.0 + k2), 1.0)
    return np.where(d <= 0.0, left, right)


@njit
def _al_cdf_loop(t, mu, lam, kappa):
    out = np.empty(t.shape[0])
    k2 = kappa * kappa
    lo = k2 / (1.0 + k2)
    hi = 1.0 / (1.0 + k2)
    a = lam / kappa
    b = lam * kappa
    for i in range(t.shape[0]):
        d = t[i] - mu
        if d <= 0.0:
            out[i] = lo * math.exp(a * d)
        else:
            out[i] = min(lo - hi * math.expm1(-b * d), 1.0)
    return out


# --- asymmetric Laplace log-likelihood --------------------------------------

def _al_loglik_np(x, mu, lam, kappa):
    d = x - mu
    a = lam / kappa
    b = lam * kappa
    s = np.where(d <= 0.0, a * d, -b * d).sum()
    return x.shape[0] * math.log(lam * kappa / (1.0 + kappa * kappa)) + s


@njit
def _al_loglik_loop(x, mu, lam, kappa):
    a = lam / kappa
    b = lam * kappa
    s = 0.0
    for i in range(x.shape[0]):
        d = x[i] - mu
        if d <= 0.0:
            s += a * d
        else:
            s -= b * d
    return x.shape[0] * math.log(lam * kappa / (1.0 + kappa * kappa)) + s


# --- pairwise precedence counting -------------------------------------------

def _concordance_np(scores, exploit_days, active):
    idx = np.flatnonzero(active)
    s = scores[idx]
    e = exploit_days[idx]
    iu, ju = np.triu_indices(idx.shape[0], k=1)
    ds = s[iu] - s[ju]
    de = e[iu] - e[ju]
    usable = (de != 0) & (ds != 0)
    # concordant: higher score <=> earlier exploit
    conc = usable & (np.sign(ds) == -np.sign(de))
    tied = (de != 0) & (ds == 0)
    return int(usable.sum()), int(conc.sum()), int(tied.sum())


@njit
def _concordance_loop(scores, exploit_days, active):
    n = scores.shape[0]
    n_pairs = 0
    n_conc = 0
    n_tied = 0
    for i in range(n):
        if not active[i]:
            continue
        for j in range(i + 1, n):
            if not active[j]:
                continue
            de = exploit_days[i] - exploit_days[j]
            if de == 0:
                continue
            ds = scores[i] - scores[j]
            if ds == 0.0:
                n_tied += 1
                continue
            n_pairs += 1
            if (ds > 0.0 and de < 0) or (ds < 0.0 and de > 0):
                n_conc += 1
    return n_pairs, n_conc, n_tied


if HAVE_NUMBA:
    _al_cdf_impl = _al_cdf_loop
    _al_loglik_impl = _al_loglik_loop
    _concordance_impl = _concordance_loop
else:
    _al_cdf_impl = _al_cdf_np
    _al_loglik_impl = _al_loglik_np
    _concordance_impl = _concordance_np


def al_cdf_array(t, mu, lam, kappa):
    t = np.ascontiguousarray(np.atleast_1d(t), dtype=np.float64)
    return _al_cdf_impl(t.ravel(), float(mu), float(lam), float(kappa)).reshape(t.shape)


def al_loglik(x, mu, lam, kappa):
    """Sum of asymmetric-Laplace log densities over the sample ``x``."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    return float(_al_loglik_impl(x, float(mu), float(lam), float(kappa)))


def concordance_counts(scores, exploit_days, active):
    """Count (usable pairs, concordant pairs, score-tied pairs) among active items.

    Pairs with equal exploit dates are skipped. A pair is concordant when
    the item with the higher score has the earlier exploit.
    """
    scores = np.ascontiguousarray(scores, dtype=np.float64)
    exploit_days = np.ascontiguousarray(exploit_days, dtype=np.int64)
    active = np.ascontiguousarray(active, dtype=np.bool_)
    return tuple(int(v) for v in _concordance_impl(scores, exploit_days, active))
