import numpy as np
import pytest

from loopsoup.stats import (mean_interval, poisson_gof, total_variation, two_sample_chi2,
                            wilson_interval, within_combined_se)


def test_wilson_interval():
    lo, hi = wilson_interval(0, 100)
    assert lo == 0 and 0.03 < hi < 0.04
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi and hi - 0.5 == pytest.approx(0.5 - lo)


def test_mean_interval():
    m, se, lo, hi = mean_interval([1.0, 2.0, 3.0, 4.0])
    assert m == 2.5 and se == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2)
    assert lo < m < hi


def test_combined_se():
    assert within_combined_se(1.0, 0.1, 1.3, 0.1)
    assert not within_combined_se(1.0, 0.1, 1.5, 0.1)


def test_poisson_gof_accepts_poisson_and_rejects_other():
    rng = np.random.default_rng(0)
    _, p, _ = poisson_gof(rng.poisson(2.0, 20_000), 2.0)
    assert p > 0.001
    _, p, _ = poisson_gof(rng.binomial(4, 0.5, 20_000), 2.0)
    assert p < 1e-6


def test_two_sample_and_tv():
    _, p, dof = two_sample_chi2([100, 200, 300], [110, 190, 300])
    assert dof == 2 and p > 0.1
    assert total_variation([0.5, 0.5], [1.0, 0.0]) == 0.5
