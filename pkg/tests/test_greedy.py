import math

import numpy as np
import pytest

from loopsoup import Domain, build_square_lattice, loop_erase
from loopsoup.greedy import (MeshPreconditionError, branch_from_walk, coupling_report,
                             default_radius, detect_returnable, error_probability_bound,
                             greedy_algorithm, greedy_branch, greedy_erased_loops,
                             iteration_tail, revisit_set, tail_constants, tail_table)
from loopsoup.lattice import graph_from_edges
from loopsoup.wilson import good_ordering


def _line(n_inner, spacing=1.0):
    """Path 0 - 1 - ... - (n-1) on the real axis, killed at both ends."""
    pos = [k * spacing for k in range(n_inner)] + [-spacing, n_inner * spacing]
    lo, hi = n_inner, n_inner + 1
    edges = []
    for k in range(n_inner):
        edges.append((k, k - 1 if k > 0 else lo, 1.0))
        edges.append((k, k + 1 if k < n_inner - 1 else hi, 1.0))
    bnd = [False] * n_inner + [True, True]
    return graph_from_edges(pos, bnd, edges, spacing), lo, hi


def test_default_radius():
    assert default_radius(1.0, 1, 2.0) == pytest.approx(0.5)
    rs = [default_radius(e, 1, 2.0) for e in (1.5, 1.0, 0.8, 0.5)]
    assert all(0 < r < e for r, e in zip(rs, (1.5, 1.0, 0.8, 0.5)))
    assert rs == sorted(rs, reverse=True)
    with pytest.raises(ValueError):
        default_radius(3.0, 1, 2.0)
    with pytest.raises(ValueError):
        default_radius(1.0, 0.5, 2.0)


def test_tail_constants():
    alpha, beta = tail_constants(0.5, 2.0)
    assert beta == pytest.approx(1.0000006, abs=1e-7)
    assert alpha == pytest.approx(7.44e-8, rel=2e-3)


def test_revisit_fixture_same_splice_twice():
    g, lo, hi = _line(10)
    path = [0, 1, 2, 3, 4, 5, 6, 7, 6, 5, 6, 5, 6, 7, 8, 9, hi]
    br = branch_from_walk(g, path, [7, 10, 15, 16])
    assert br.s.tolist()[1:3] == [5, 5]
    rs = revisit_set(br)
    assert rs.xi[0] == 5 and rs.n_plus[5] == 3
    assert all(any(br.s[n - 1] == x for n in range(2, br.N + 1)) for x in rs.xi)
    loops = greedy_erased_loops(br).loops
    assert loops[5].tolist() == [5, 6, 7, 6, 5, 6, 5]


def test_greedy_loop_splice_two_three():
    g, lo, hi = _line(7)
    path = [0, 1, 2, 3, 4, 5, 4, 3, 4, 5, 6, hi]
    br = branch_from_walk(g, path, [2, 5, 10, 11])
    rs = revisit_set(br)
    assert rs.n_minus[3] == 2 and rs.n_plus[3] == 3
    expect = np.concatenate([br.Y(2)[3:], br.X(3)[1:]])
    ls = greedy_erased_loops(br)
    assert ls.loops[3].tolist() == expect.tolist() == [3, 4, 5, 4, 3]
    for s, l in enumerate(ls.loops):
        assert l[0] == l[-1] == br.core[s]
    dec = loop_erase(path)
    assert all(np.array_equal(a, b) for a, b in zip(dec.erased_loops, ls.loops))
    rep = coupling_report(br)
    assert rep.max_distance == 0 and not rep.sandwich_violations


def test_single_segment_branch():
    g, lo, hi = _line(5)
    br = branch_from_walk(g, [2, 1, 2, 1, 0, lo], [5])
    assert br.N == 1
    assert revisit_set(br).xi == []
    assert all(l.size == 1 for l in greedy_erased_loops(br).loops)


def test_error_gadget():
    # start -> far vertex -> vertex next to start -> boundary, all forced
    pos = [0j, 2 + 0j, 0.1 + 0j, -3 + 0j]
    g = graph_from_edges(pos, [False, False, False, True],
                         [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)], 0.001)
    br = greedy_branch(g, 0, None, 1.0, 0.5, np.random.default_rng(0), enforce_mesh=False)
    assert br.error and br.N == 2
    assert br.core.tolist() == [0, 1, 2]
    assert all(l.size == 1 for l in greedy_erased_loops(br).loops)
    assert revisit_set(br).xi == []
    with pytest.raises(ValueError):
        coupling_report(br)
    branches, loops = greedy_algorithm(g, [0, 1, 2], 1.0, 0.5, 5, np.random.default_rng(0),
                                       enforce_mesh=False)
    assert len(branches) == 1 and all(l.size == 1 for l in loops)


def test_mesh_precondition():
    g = build_square_lattice(1 / 16, Domain.disk())
    with pytest.raises(MeshPreconditionError):
        greedy_branch(g, 5, None, 0.5, 0.2, np.random.default_rng(0))


def test_zero_budget():
    g = build_square_lattice(1 / 16, Domain.disk())
    b, l = greedy_algorithm(g, good_ordering(g), 0.5, 0.2, 0, np.random.default_rng(0),
                            enforce_mesh=False)
    assert b == [] and l == []


def test_random_branches_core_identity_and_coupling():
    g = build_square_lattice(1 / 32, Domain.disk())
    order = good_ordering(g)
    rng = np.random.default_rng(11)
    eps, r = 0.3, 0.08
    for _ in range(200):
        br = greedy_branch(g, int(order.vertices[0]), None, eps, r, rng, enforce_mesh=False)
        if br.error:
            continue
        assert np.array_equal(br.core, loop_erase(br.path, g.n_vertices).core)
        assert np.array_equal(br.Y(br.N), br.core)
        rep = coupling_report(br)
        assert rep.max_distance <= 2 * eps
        assert rep.sandwich_violations == [] and rep.trigger_violations == []


def test_single_branch_algorithm_matches_loopset():
    g = build_square_lattice(1 / 16, Domain.disk())
    order = good_ordering(g)
    b, l = greedy_algorithm(g, order, 0.5, 0.1, 1, np.random.default_rng(3), enforce_mesh=False)
    br = greedy_branch(g, int(order.vertices[0]), None, 0.5, 0.1, np.random.default_rng(3),
                       enforce_mesh=False)
    assert [x.tolist() for x in l] == [x.tolist() for x in greedy_erased_loops(br).loops]


def test_returnable_fixture():
    g, lo, hi = _line(4)
    br = branch_from_walk(g, [0, 1, 2, 3, 2, 1, 0, lo], [2, 7], eps=1.5)
    ret, _ = detect_returnable(br, 1.5)
    assert ret == [0]
    straight = branch_from_walk(g, [0, 1, 2, 3, hi], [2, 4], eps=1.5)
    assert detect_returnable(straight, 1.5)[0] == []


def test_tail_table_grading():
    counts = np.array([1, 2, 2, 3, 5])
    tab = tail_table(counts, 0.8, 0.4, 2.0)
    ps = [row["p"] for row in tab["rows"]]
    assert ps == sorted(ps, reverse=True)
    assert all(row["graded"] == (row["K"] > 10) for row in tab["rows"])
    assert tab["all_pass"]


def test_iteration_tail_runs():
    g = build_square_lattice(1 / 32, Domain.disk())
    start = int(np.argmin(np.abs(g.pos) + 10 * g.is_boundary))
    out = iteration_tail(g, start, 0.8, 0.4, 500, np.random.default_rng(0))
    assert out["counts"].min() >= 1 and out["all_pass"]


def test_error_rate_below_bound():
    g = build_square_lattice(1 / 64, Domain.disk())
    start = int(np.argmin(np.abs(g.pos) + 10 * g.is_boundary))
    rng = np.random.default_rng(21)
    eps, r = 0.8, 0.05
    errs = sum(greedy_branch(g, start, None, eps, r, rng, enforce_mesh=False).error
               for _ in range(400))
    bound = error_probability_bound(eps, r, 2.0)
    p = errs / 400
    assert p <= bound + 3 * math.sqrt(bound * (1 - bound) / 400)


@pytest.mark.xfail(strict=False, reason="the return probability decays only like "
                   "1/log(1/delta); over a fourfold mesh range the drop is below Monte Carlo noise")
def test_returnable_frequency_falls_with_mesh():
    freq = []
    for delta in (1 / 16, 1 / 32, 1 / 64):
        g = build_square_lattice(delta, Domain.disk())
        start = int(np.argmin(np.abs(g.pos) + 10 * g.is_boundary))
        rng = np.random.default_rng(0)
        hits = 0
        for _ in range(1000):
            br = greedy_branch(g, start, None, 0.5, 0.25, rng, enforce_mesh=False)
            hits += (not br.error) and bool(detect_returnable(br, 0.5)[0])
        freq.append(hits / 1000)
    assert freq[0] > freq[1] > freq[2]
