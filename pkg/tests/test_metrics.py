import math

import numpy as np
import pytest

from loopsoup import Polyline, diameter, discrete_frechet, frechet_distance, loop_soup_distance
from loopsoup.metrics import (frechet_decision, soup_distance_from_matrix,
                              unrooted_loop_distance)


def _ngon(n, radius, phase=0.0):
    z = radius * np.exp(2j * np.pi * (np.arange(n) / n + phase))
    return Polyline(z, closed=True)


SQUARE = Polyline([0, 1, 1 + 1j, 1j], closed=True)


def test_frechet_basic():
    p = np.array([0, 1 + 0j])
    assert frechet_distance(p, p) == 0
    assert abs(frechet_distance(p, p + 0.3j) - 0.3) < 1e-9
    assert abs(frechet_distance([0, 2 + 0j], [0, 1 + 1j, 2 + 0j]) - 1.0) < 1e-9


def test_frechet_brute_force_agreement():
    # dense reparameterisation grid gives an upper bound converging to the value
    p = np.array([0, 2 + 0j])
    q = np.array([0, 1 + 1j, 2 + 0j])
    dense = lambda z, k: np.concatenate([np.linspace(a, b, k, endpoint=False)
                                         for a, b in zip(z[:-1], z[1:])] + [z[-1:]])
    ub = discrete_frechet(dense(p, 400), dense(q, 200))
    assert frechet_distance(p, q) <= ub + 1e-12 and ub - 1.0 < 0.01


def test_frechet_symmetry_and_decision():
    rng = np.random.default_rng(0)
    for _ in range(30):
        p = rng.normal(size=6) + 1j * rng.normal(size=6)
        q = rng.normal(size=5) + 1j * rng.normal(size=5)
        d = frechet_distance(p, q)
        assert abs(d - frechet_distance(q, p)) < 1e-9
        assert d <= discrete_frechet(p, q) + 1e-12
        assert frechet_decision(p, q, d * (1 + 1e-9) + 1e-12)
        assert not frechet_decision(p, q, d * (1 - 1e-6))


def test_repeated_points_are_dropped():
    assert frechet_distance([0, 0, 1 + 0j], [0, 1, 1 + 0j]) == 0


def test_unrooted_rotation_and_translation():
    z = SQUARE.points
    rot = Polyline(np.roll(z[:-1], 2), closed=True)
    assert unrooted_loop_distance(SQUARE, rot) < 1e-9
    moved = Polyline(z[:-1] + 0.25, closed=True)
    assert abs(unrooted_loop_distance(SQUARE, moved) - 0.25) < 1e-9


def test_concentric_polygons():
    a, b = _ngon(64, 1.0), _ngon(64, 1.2)
    res = unrooted_loop_distance(a, b, with_gap=True)
    assert abs(res.value - 0.2) <= res.gap + 1e-9
    fine = unrooted_loop_distance(a, b, subdivisions=512)
    assert abs(res.value - fine) <= res.gap + 1e-9


def test_point_loop_distance():
    assert unrooted_loop_distance(Polyline([0j], closed=True), SQUARE) == pytest.approx(math.sqrt(2))


def test_open_polyline_rejected():
    with pytest.raises(ValueError):
        unrooted_loop_distance(np.array([0, 1 + 0j]), SQUARE)


def test_diameter_examples():
    assert diameter([0.5 + 0.5j]) == 0
    assert diameter([0, 1 + 0j]) == 1
    assert diameter(SQUARE) == pytest.approx(math.sqrt(2))
    z = np.exp(2j * np.pi * np.random.default_rng(1).random(500))
    assert diameter(z) == pytest.approx(np.abs(z[:, None] - z[None, :]).max())


def test_soup_distance_examples():
    A = [SQUARE, _ngon(8, 0.3)]
    assert loop_soup_distance(A, list(reversed(A)))[0] == 0
    seg = Polyline([0, 0.4 + 0j], closed=True)
    val, cert = loop_soup_distance([], [seg])
    assert val == pytest.approx(0.2) and cert.unmatched_b == [0]
    val, cert = soup_distance_from_matrix([[0.1]], [0.25], [0.25])
    assert val == 0.1 and cert.pairs == [(0, 0)]


def test_soup_distance_small_brute_force():
    import itertools
    rng = np.random.default_rng(3)
    for _ in range(200):
        na, nb = rng.integers(0, 4, size=2)
        dist = rng.random((na, nb))
        ha, hb = rng.random(na) * 0.8, rng.random(nb) * 0.8
        best = math.inf
        # every partial injection from A into B
        for k in range(min(na, nb) + 1):
            for rows in itertools.combinations(range(na), k):
                for cols in itertools.permutations(range(nb), k):
                    vals = [dist[i, j] for i, j in zip(rows, cols)]
                    vals += [ha[i] for i in range(na) if i not in rows]
                    vals += [hb[j] for j in range(nb) if j not in cols]
                    best = min(best, max(vals) if vals else 0.0)
        assert soup_distance_from_matrix(dist, ha, hb)[0] == pytest.approx(best)


def test_certificate_json():
    _, cert = soup_distance_from_matrix([[0.1, 0.5]], [0.3], [0.2, 0.05])
    js = cert.to_json()
    assert js["pairs"] == [[0, 0]] and js["unmatched_b"] == [1]
    assert js["value"] == pytest.approx(0.1)
