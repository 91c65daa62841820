import math

import numpy as np
import pytest

from loopsoup import (LoopSoup, UnrootedLoop, build_square_lattice, Domain, enumerate_loops,
                      restrict_soup, rooted_loop_mass, sample_loop_soup, total_loop_mass,
                      unrooted_loop_mass)
from loopsoup.lattice import small_graph
from loopsoup.soup import PeelSampler, WalkSampler, class_counts, spectral_tail_bound


def test_rooted_masses(gab):
    g, ix = gab
    A, B = ix["a"], ix["b"]
    assert rooted_loop_mass(g, [A, B, A]) == 0.125
    assert rooted_loop_mass(g, [A, B, A, B, A]) == 0.015625


def test_unrooted_masses(gab):
    g, ix = gab
    A, B = ix["a"], ix["b"]
    assert unrooted_loop_mass(g, [A, B, A]) == 0.25
    assert unrooted_loop_mass(g, [A, B, A, B, A]) == 0.03125
    u = UnrootedLoop.from_rooted([A, B, A, B, A])
    assert u.period == 2 and u.multiplicity == 2
    with pytest.raises(ValueError):
        unrooted_loop_mass(g, [A])


def test_non_edge_rejected(gabc):
    g, ix = gabc
    with pytest.raises(ValueError):
        rooted_loop_mass(g, [ix["a"], ix["c"], ix["a"]])


def test_rotation_classes():
    assert UnrootedLoop.from_rooted([2, 0, 1, 2]) == UnrootedLoop.from_rooted([0, 1, 2, 0])
    assert UnrootedLoop.from_rooted([0, 1, 2, 0]) != UnrootedLoop.from_rooted([0, 2, 1, 0])


def test_enumerate_short(gab):
    g, ix = gab
    items = enumerate_loops(g, 4)
    assert len(items) == 2
    (l1, m1), (l2, m2) = items
    assert len(l1) == 2 and m1 == 0.25
    assert len(l2) == 4 and m2 == 0.03125


def test_enumerate_no_loops():
    g, _ = small_graph({"a": [("d", 1.0)]}, ["d"])
    assert enumerate_loops(g, 10) == []
    assert total_loop_mass(g) == 0.0


def test_total_mass_and_enumeration(gab):
    g, _ = gab
    assert abs(total_loop_mass(g) - math.log(4 / 3)) < 1e-12
    enum = sum(m for _, m in enumerate_loops(g, 20))
    tail = spectral_tail_bound(g, 20)
    assert 0 <= math.log(4 / 3) - enum <= tail <= 1e-7


def test_total_mass_matches_enumeration_on_path(gabc):
    g, _ = gabc
    enum = sum(m for _, m in enumerate_loops(g, 22))
    assert total_loop_mass(g) - enum <= spectral_tail_bound(g, 22) + 1e-15
    assert total_loop_mass(g) >= enum


def test_no_killing_rejected():
    g, _ = small_graph({"a": [("b", 1.0), ("d", 1e-300)], "b": [("a", 1.0)]}, ["d"])
    with pytest.raises(ValueError, match="no killing"):
        total_loop_mass(g)


def test_empty_soup_without_loops():
    g, _ = small_graph({"a": [("d", 1.0)], "b": [("e", 1.0)]}, ["d", "e"])
    rng = np.random.default_rng(0)
    for method in ("peel", "walk"):
        assert all(len(sample_loop_soup(g, rng, method)) == 0 for _ in range(50))


@pytest.mark.parametrize("method", ["peel", "reject", "walk"])
def test_sampler_mean_count(gab, method):
    g, ix = gab
    rng = np.random.default_rng(31)
    n = 20_000
    counts = np.array([len(sample_loop_soup(g, rng, method)) for _ in range(n)])
    mass = math.log(4 / 3)
    assert abs(counts.mean() - mass) < 4 * math.sqrt(mass / n)
    cls = UnrootedLoop.from_rooted([ix["a"], ix["b"], ix["a"]])
    rng = np.random.default_rng(32)
    inc = np.mean([class_counts(sample_loop_soup(g, rng, method), [cls])[0] > 0
                   for _ in range(n)])
    p = 1 - math.exp(-0.25)
    assert abs(inc - p) < 4 * math.sqrt(p * (1 - p) / n)


def test_sampler_order_invariance(gabc):
    g, ix = gabc
    n = 20_000
    mass = total_loop_mass(g)
    for order in ([0, 1, 2], [2, 0, 1]):
        rng = np.random.default_rng(8)
        s = PeelSampler(g, order)
        c = np.array([len(s.sample(rng)) for _ in range(n)])
        assert abs(c.mean() - mass) < 4 * math.sqrt(mass / n)


def test_walk_and_peel_agree_on_lattice():
    g = build_square_lattice(1 / 4, Domain.disk())
    n = 3000
    means = []
    for cls in (PeelSampler, WalkSampler):
        rng = np.random.default_rng(3)
        s = cls(g)
        means.append(np.mean([len(s.sample(rng)) for _ in range(n)]))
    mass = total_loop_mass(g)
    for m in means:
        assert abs(m - mass) < 4 * math.sqrt(mass / n)


def test_restrict_soup():
    g = build_square_lattice(1 / 8, Domain.disk())
    soup = sample_loop_soup(g, np.random.default_rng(4))
    assert len(restrict_soup(soup, 0.0)) == len(soup)
    assert len(restrict_soup(soup, 3.0)) == 0
    once = restrict_soup(soup, 0.3)
    assert len(restrict_soup(once, 0.3)) == len(once)
    assert all(d >= 0.3 for d in once.diameters())


def test_soup_jsonl_roundtrip():
    g = build_square_lattice(1 / 8, Domain.disk())
    soup = sample_loop_soup(g, np.random.default_rng(6))
    back = LoopSoup.from_jsonl(soup.to_jsonl(), g)
    assert len(back) == len(soup)
    assert np.array_equal(back.points, soup.points)
    assert np.array_equal(back.vertices, soup.vertices)


def test_soup_loops_are_closed_and_canonical():
    g = build_square_lattice(1 / 8, Domain.disk())
    soup = sample_loop_soup(g, np.random.default_rng(7), "walk")
    for i in range(len(soup)):
        z = soup.loop_points(i)
        assert z[0] == z[-1]
        v = soup.loop_vertices(i)
        assert soup.unrooted(i) == UnrootedLoop.from_rooted(v)
