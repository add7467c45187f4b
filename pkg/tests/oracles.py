"""Independent reference computations used by the tests."""

import math

import numpy as np
from scipy import stats


def erf_series(x, tol=1e-15):
    """Maclaurin series of erf; accurate for |x| <= 4."""
    total = 0.0
    term = x  # (-1)^n x^(2n+1) / n!
    n = 0
    while True:
        contrib = term / (2 * n + 1)
        total += contrib
        if abs(contrib) < tol and n > 2:
            break
        n += 1
        term *= -x * x / n
    return 2.0 / math.sqrt(math.pi) * total


def erfinv_bisect(y, tol=1e-13):
    lo, hi = 0.0, 6.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if erf_series(mid) < y:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def kl_poisson_sum(mean1, mean2):
    """D(Poisson(mean1) || Poisson(mean2)) by direct summation of the pmf."""
    n_max = int(mean1 + 40 * math.sqrt(mean1) + 200)
    n = np.arange(n_max + 1)
    logp1 = stats.poisson.logpmf(n, mean1)
    logp2 = stats.poisson.logpmf(n, mean2)
    p1 = np.exp(logp1)
    return float(np.sum(p1 * (logp1 - logp2)))


def poisson_chi2_pvalue(counts, mean, min_expected=5.0):
    """Chi-square goodness of fit of integer samples to Poisson(mean), tail bins pooled."""
    counts = np.asarray(counts)
    n = counts.size
    lo = int(stats.poisson.ppf(1e-9, mean))
    hi = int(stats.poisson.isf(1e-9, mean)) + 1
    edges = np.arange(lo, hi + 1)
    probs = stats.poisson.pmf(edges, mean)
    probs[0] = stats.poisson.cdf(lo, mean)
    probs[-1] = stats.poisson.sf(hi - 1, mean)
    observed = np.bincount(np.clip(counts, lo, hi) - lo, minlength=edges.size).astype(float)
    expected = probs * n
    # pool adjacent bins until each expected count is large enough
    obs_bins, exp_bins = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(observed, expected):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            obs_bins.append(acc_o)
            exp_bins.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 or acc_o > 0:
        obs_bins[-1] += acc_o
        exp_bins[-1] += acc_e
    obs_bins = np.array(obs_bins)
    exp_bins = np.array(exp_bins)
    exp_bins *= obs_bins.sum() / exp_bins.sum()
    return float(stats.chisquare(obs_bins, exp_bins).pvalue)


def binomial_sigma(p, n):
    return math.sqrt(max(p * (1 - p), 1e-12) / n)
