"""Confidence intervals and small statistical helpers."""
import math

import numpy as np
from scipy import stats as _st


def wilson_interval(successes: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    z = _st.norm.ppf(0.5 + level / 2)
    p = successes / trials
    den = 1 + z * z / trials
    mid = (p + z * z / (2 * trials)) / den
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / den
    lo = 0.0 if successes == 0 else max(0.0, mid - half)
    hi = 1.0 if successes == trials else min(1.0, mid + half)
    return lo, hi


def mean_interval(values, level: float = 0.95) -> tuple[float, float, float, float]:
    """(mean, standard error, low, high) with a Student-t interval."""
    x = np.asarray(values, dtype=float)
    n = x.size
    m = float(x.mean()) if n else float("nan")
    if n < 2:
        return m, float("nan"), float("nan"), float("nan")
    se = float(x.std(ddof=1) / math.sqrt(n))
    t = _st.t.ppf(0.5 + level / 2, n - 1)
    return m, se, m - t * se, m + t * se


def within_combined_se(a: float, se_a: float, b: float, se_b: float, k: float = 3.0) -> bool:
    return abs(a - b) <= k * math.sqrt(se_a ** 2 + se_b ** 2)


def poisson_gof(counts, mean: float | None = None, min_expected: float = 5.0):
    """Chi-square goodness of fit of integer counts to a Poisson law.

    Upper cells are pooled until each expected count is at least
    ``min_expected``.  With ``mean=None`` the rate is fitted (one extra
    degree of freedom is removed).  Returns (statistic, p-value, dof).
    """
    c = np.asarray(counts, dtype=np.int64)
    n = c.size
    lam = c.mean() if mean is None else mean
    kmax = int(c.max()) + 1
    probs = _st.poisson.pmf(np.arange(kmax + 1), lam)
    obs = np.bincount(c, minlength=kmax + 1).astype(float)
    probs[-1] = 1 - probs[:-1].sum()
    exp = probs * n
    # pool from the top
    o, e = list(obs), list(exp)
    while len(e) > 2 and e[-1] < min_expected:
        last_e, last_o = e.pop(), o.pop()
        e[-1] += last_e
        o[-1] += last_o
    o, e = np.array(o), np.array(e)
    stat = float(((o - e) ** 2 / e).sum())
    dof = len(e) - 1 - (1 if mean is None else 0)
    return stat, float(_st.chi2.sf(stat, max(dof, 1))), dof


def two_sample_chi2(a, b):
    """Chi-square homogeneity test of two histograms over the same cells."""
    table = np.vstack([np.asarray(a, float), np.asarray(b, float)])
    keep = table.sum(axis=0) > 0
    stat, p, dof, _ = _st.chi2_contingency(table[:, keep])
    return float(stat), float(p), int(dof)


def total_variation(p, q) -> float:
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    return 0.5 * float(np.abs(p / p.sum() - q / q.sum()).sum())
