"""Small-sample statistics shared by the experiment presets.

Means get t-based intervals, frequencies get Wilson intervals; replica
counts at desk scale are too small for plain normal approximations on
proportions near 0 or 1.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special, stats as sstats


def mean_se(values):
    """(mean, standard error); se is 0.0 for fewer than two values."""
    v = np.asarray(values, dtype=np.float64)
    n = v.shape[0]
    if n == 0:
        raise ValueError("no values")
    m = float(v.mean())
    if n < 2:
        return m, 0.0
    return m, float(v.std(ddof=1) / math.sqrt(n))


def t_interval(values, level: float = 0.99):
    """Two-sided t confidence interval for the mean."""
    v = np.asarray(values, dtype=np.float64)
    n = v.shape[0]
    if n < 2:
        raise ValueError("need at least two values for an interval")
    m, se = mean_se(v)
    q = float(sstats.t.ppf(0.5 + level / 2.0, n - 1))
    return m - q * se, m + q * se


def wilson_interval(successes: int, n: int, level: float = 0.95):
    """Wilson score interval for a binomial proportion."""
    if n < 0 or not 0 <= successes <= max(n, 0):
        raise ValueError(f"bad counts {successes}/{n}")
    if n == 0:
        return 0.0, 1.0
    z = float(sstats.norm.ppf(0.5 + level / 2.0))
    phat = successes / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    # rounding must not push the degenerate endpoints inside the interval
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == n else min(1.0, center + half)
    return lo, hi


def poisson_cdf_exact(k: int, lam: float) -> float:
    """P{Poisson(lam) <= k} by log-space summation.

    Each term is exponentiated relative to the largest, so the sum stays
    stable out to lam in the tens of thousands where naive factorials
    overflow long before the probabilities stop mattering.
    """
    if lam < 0:
        raise ValueError("lam must be >= 0")
    k = int(k)
    if k < 0:
        return 0.0
    i = np.arange(0, k + 1, dtype=np.float64)
    logterms = -lam + i * (np.log(lam) if lam > 0 else -np.inf) \
        - special.gammaln(i + 1.0)
    if lam == 0.0:
        return 1.0
    top = logterms.max()
    return float(min(1.0, math.exp(top) * np.exp(logterms - top).sum()))


def poisson_gof(counts, mu: float, min_expected: float = 5.0):
    """Chi-square goodness of fit of site counts against Poisson(mu).

    mu is a known constant, not fitted, so dof = bins - 1.  Consecutive
    occupation numbers are pooled left to right until each bin's expected
    count reaches min_expected; the final bin takes the full upper tail.
    Returns (chi2, dof, pvalue).
    """
    c = np.asarray(counts, dtype=np.int64)
    n = c.shape[0]
    if n == 0:
        raise ValueError("no counts")
    if mu < 0:
        raise ValueError("mu must be >= 0")
    kmax = int(c.max())
    obs_k = np.bincount(c, minlength=kmax + 1).astype(np.float64)
    probs = np.empty(kmax + 1, dtype=np.float64)
    probs[0] = math.exp(-mu)
    for k in range(1, kmax + 1):
        probs[k] = probs[k - 1] * mu / k
    tail = max(1.0 - probs.sum(), 0.0)

    bins_obs, bins_exp = [], []
    acc_o = acc_e = 0.0
    for k in range(kmax + 1):
        acc_o += obs_k[k]
        acc_e += probs[k] * n
        if acc_e >= min_expected:
            bins_obs.append(acc_o)
            bins_exp.append(acc_e)
            acc_o = acc_e = 0.0
    acc_e += tail * n  # no observations exceed kmax by construction
    if bins_obs and acc_e < min_expected:
        bins_obs[-1] += acc_o
        bins_exp[-1] += acc_e
    else:
        bins_obs.append(acc_o)
        bins_exp.append(acc_e)
    obs = np.asarray(bins_obs)
    exp = np.asarray(bins_exp)
    if exp.shape[0] < 2:
        raise ValueError("not enough cells for a chi-square test")
    chi2 = float(((obs - exp) ** 2 / exp).sum())
    dof = exp.shape[0] - 1
    return chi2, dof, float(sstats.chi2.sf(chi2, dof))
