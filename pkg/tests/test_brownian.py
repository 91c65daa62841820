import math

import numpy as np
import pytest

from loopsoup import Domain
from loopsoup.brownian import (Functional, bls_functional, bridge_paths, sample_bls_restricted,
                               sample_bridge_loop, t_max_for, t_min_for)
from loopsoup.metrics import diameter


def test_tiny_lifetime_is_tiny():
    rng = np.random.default_rng(0)
    small = sum(diameter(sample_bridge_loop(0.3j, 1e-8, 64, rng).points) < 1e-3
                for _ in range(1000))
    assert small >= 999


def test_bridge_endpoints_and_variance():
    rng = np.random.default_rng(1)
    loop = sample_bridge_loop(0.2 + 0.1j, 0.5, 33, rng)
    assert loop.points[0] == loop.points[-1] == 0.2 + 0.1j
    paths = bridge_paths(20_000, 2.0, 17, rng)
    # Var of each coordinate at mid-time is t/4
    mid = paths[:, 8]
    assert np.var(mid.real) == pytest.approx(0.5, rel=0.05)
    assert abs(np.mean(mid.real)) < 0.03


def test_bridge_argument_checks():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        sample_bridge_loop(0, 0.0, 64, rng)
    with pytest.raises(ValueError):
        sample_bridge_loop(0, 1.0, 4, rng)


def test_cutoffs():
    d = Domain.disk()
    t0 = t_min_for(d, 0.3, 1e-3)
    neglected = d.area * 16 / (math.pi * 0.09) * math.exp(-0.09 / (4 * t0))
    assert neglected == pytest.approx(1e-3)
    assert t_min_for(d, 0.3, 5e-4) < t0
    assert t_max_for(d) > 1e6


def test_oversized_eps_is_empty():
    rng = np.random.default_rng(2)
    d = Domain.disk()
    assert sum(len(sample_bls_restricted(d, 2.5, rng=rng, resolution=64)) for _ in range(1000)) == 0


def test_restricted_loops_inside_and_large():
    d = Domain.disk()
    soup = sample_bls_restricted(d, 0.3, rng=np.random.default_rng(3), resolution=128)
    for i in range(len(soup)):
        p = soup.loop_points(i)
        assert d.contains(p).all() and diameter(p) >= 0.3


def test_infinite_threshold_counts_nothing():
    d = Domain.disk()
    f = Functional("diameter", threshold=float("inf"))
    out = bls_functional(d, 0.3, f, 5, np.random.default_rng(0), resolution=64)
    assert out["mean"] == 0


def test_touches_functional_resolution_stable():
    d = Domain.disk()
    f = Functional("touches", disks=((0j, 0.2),), min_diameter=0.3)
    a = bls_functional(d, 0.3, f, 400, np.random.default_rng(5), resolution=256)
    b = bls_functional(d, 0.3, f, 400, np.random.default_rng(6), resolution=512)
    assert a["mean"] > 0 and b["mean"] > 0
    assert abs(a["mean"] - b["mean"]) <= 2 * math.hypot(a["se"], b["se"])


def test_poisson_additivity_over_disjoint_thresholds():
    # counts of diam in [0.3, 0.6) plus diam >= 0.6 equal counts of diam >= 0.3
    d = Domain.disk()
    rng = np.random.default_rng(7)
    for _ in range(20):
        soup = sample_bls_restricted(d, 0.3, rng=rng, resolution=64)
        diam = soup.diameters()
        assert np.sum(diam >= 0.3) == np.sum((diam >= 0.3) & (diam < 0.6)) + np.sum(diam >= 0.6)


def test_scaling_of_expected_count():
    # the restricted measure is scale invariant: disk of radius 2 with eps 0.6
    # has the same expected count as the unit disk with eps 0.3
    f = Functional("diameter", threshold=0.3)
    g = Functional("diameter", threshold=0.6)
    a = bls_functional(Domain.disk(), 0.3, f, 300, np.random.default_rng(8), resolution=128)
    b = bls_functional(Domain.disk(0, 2.0), 0.6, g, 300, np.random.default_rng(9), resolution=128)
    assert abs(a["mean"] - b["mean"]) <= 3 * math.hypot(a["se"], b["se"])


def test_resolution_convergence_rate():
    # sup-norm error of a coarsened bridge decays like n^(-1/2) up to logs
    rng = np.random.default_rng(10)
    fine = bridge_paths(150, 1.0, 2049, rng)
    ns = np.array([33, 65, 129, 257, 513])
    err = []
    for n in ns:
        sub = fine[:, ::(2048 // (n - 1))]
        err.append(np.mean([abs(diameter(f) - diameter(s)) for f, s in zip(fine, sub)]))
    slope = np.polyfit(np.log(ns), np.log(err), 1)[0]
    assert -0.9 <= slope <= -0.3
