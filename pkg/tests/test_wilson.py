import numpy as np
import pytest

from loopsoup import Domain, build_square_lattice, loop_erase, wired_grid_2x2
from loopsoup.lattice import small_graph
from loopsoup.soup import LoopSoup
from loopsoup.wilson import (attach_loops, couple_soup_to_branches, good_ordering,
                             index_ordering, macroscopic_loop_count, wilsons_algorithm,
                             VertexOrdering)


def test_good_ordering_first_level():
    g = build_square_lattice(0.5, Domain.rectangle(-1, -1, 1, 1))
    order = good_ordering(g)
    assert sorted(order) == sorted(g.interior.tolist())
    level0 = g.pos[order.vertices[:4]]
    # one pick per unit cell, cells in lexicographic order, each nearest its centre
    assert level0.tolist() == [-0.5 - 0.5j, -0.5 + 0.5j, 0.5 - 0.5j, 0.5 + 0.5j]


def test_good_ordering_single_vertex():
    g, _ = small_graph({"a": [("d", 1.0)]}, ["d"])
    assert len(good_ordering(g)) == 1


def test_ordering_rejects_repeats():
    with pytest.raises(ValueError):
        VertexOrdering([1, 2, 1])


def test_all_killed_gives_single_edges():
    g, ix = small_graph({"a": [("d", 1.0)], "b": [("d", 1.0)]}, ["d"])
    run = wilsons_algorithm(g, index_ordering(g), np.random.default_rng(0))
    assert [b.tolist() for b in run.branches] == [[ix["a"], ix["d"]], [ix["b"], ix["d"]]]
    assert all(l.size == 1 for l in run.all_erased())


def test_forest_is_spanning():
    g = build_square_lattice(1 / 8, Domain.disk())
    run = wilsons_algorithm(g, good_ordering(g), np.random.default_rng(1))
    assert np.all(run.parent[g.interior] >= 0)
    # following parents from any vertex reaches the boundary
    for v in g.interior[::7]:
        seen = 0
        while not g.is_boundary[v]:
            v = run.parent[v]
            seen += 1
            assert seen <= g.n_vertices


def test_max_branches():
    g = build_square_lattice(1 / 8, Domain.disk())
    run = wilsons_algorithm(g, good_ordering(g), np.random.default_rng(1), max_branches=3)
    assert len(run.branches) == 3


def test_two_orderings_same_tree_law():
    from loopsoup.stats import two_sample_chi2
    g = wired_grid_2x2()
    rng = np.random.default_rng(4)
    keys = []
    for order in (index_ordering(g), VertexOrdering(g.interior[::-1])):
        c = {}
        for _ in range(20_000):
            k = wilsons_algorithm(g, order, rng).tree_key()
            c[k] = c.get(k, 0) + 1
        keys.append(c)
    trees = sorted(set(keys[0]) | set(keys[1]))
    _, p, _ = two_sample_chi2([keys[0].get(t, 0) for t in trees], [keys[1].get(t, 0) for t in trees])
    assert p > 0.001


def test_macroscopic_counts():
    g = build_square_lattice(1 / 16, Domain.disk())
    run = wilsons_algorithm(g, good_ordering(g), np.random.default_rng(2))
    total = sum(1 for _ in run.all_erased())
    assert macroscopic_loop_count(run, 0.0) == total
    assert macroscopic_loop_count(run, float("inf")) == 0
    vals = [macroscopic_loop_count(run, e) for e in (0.0, 0.05, 0.1, 0.3, 1.0)]
    assert vals == sorted(vals, reverse=True)


def test_attach_nothing_keeps_branch():
    g = build_square_lattice(1 / 8, Domain.disk())
    branch = np.array([10, 11, 12], np.int64)
    loops, walk = attach_loops(branch, LoopSoup.empty(graph=g), np.random.default_rng(0))
    assert np.array_equal(walk, branch)
    assert [l.tolist() for l in loops] == [[10], [11]]


def test_reassembled_walks_erase_to_branches():
    g = build_square_lattice(1 / 8, Domain.disk())
    rng = np.random.default_rng(5)
    for _ in range(5):
        soups, run, walks = couple_soup_to_branches(g, good_ordering(g), rng, method="walk",
                                                   max_branches=20)
        for b, w in zip(run.branches, walks):
            assert np.array_equal(loop_erase(w, g.n_vertices).core, b)
