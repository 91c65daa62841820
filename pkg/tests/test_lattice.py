import math

import numpy as np
import pytest

from loopsoup import (Domain, PlanarGraph, build_perturbed_lattice, build_square_lattice,
                      check_bounded_density, estimate_crossing_probability, max_edge_diameter,
                      transition_probability)
from loopsoup.lattice import graph_from_edges, small_graph, wired_grid_2x2


def test_square_on_unit_square_counts():
    g = build_square_lattice(0.5, Domain.rectangle(-1, -1, 1, 1))
    inner = g.pos[g.interior]
    assert inner.size == 9
    assert sorted(set(np.round(inner.real, 12))) == [-0.5, 0.0, 0.5]
    assert sorted(set(np.round(inner.imag, 12))) == [-0.5, 0.0, 0.5]
    bnd = g.pos[g.is_boundary]
    assert bnd.size == 12
    on_side = np.isclose(np.abs(bnd.real), 1) | np.isclose(np.abs(bnd.imag), 1)
    assert on_side.all()


def test_mesh_larger_than_domain():
    with pytest.raises(ValueError):
        build_square_lattice(1.0, Domain.disk(0, 0.4))
    with pytest.raises(ValueError):
        build_square_lattice(1.0, Domain.disk(0.5 + 0.5j, 0.2))


def test_unit_weights_give_quarter():
    g = build_square_lattice(1 / 8, Domain.disk())
    for v in g.interior[::17]:
        for w in g.neighbors(v):
            assert transition_probability(g, v, w) == pytest.approx(0.25)


def test_weighted_normalisation():
    g, ix = small_graph({"u": [("a", 2.0), ("b", 1.0), ("c", 1.0)]}, ["a", "b", "c"])
    assert transition_probability(g, ix["u"], ix["a"]) == 0.5
    assert transition_probability(g, ix["u"], ix["b"]) == 0.25


def test_rows_are_stochastic():
    g = build_perturbed_lattice(1 / 16, Domain.disk(), 0.2, 3)
    for v in g.interior:
        tot = sum(transition_probability(g, v, w) for w in g.neighbors(v))
        assert abs(tot - 1) < 1e-12


def test_killed_state_has_no_transitions():
    g = build_square_lattice(0.5, Domain.rectangle(-1, -1, 1, 1))
    b = int(np.flatnonzero(g.is_boundary)[0])
    with pytest.raises(ValueError, match="killed state"):
        transition_probability(g, b, int(g.interior[0]))


def test_jitter_zero_matches_square():
    dom = Domain.disk()
    a = build_square_lattice(1 / 16, dom)
    b = build_perturbed_lattice(1 / 16, dom, 0.0, 7)
    assert np.array_equal(a.pos, b.pos)
    assert np.array_equal(a.indices, b.indices)


def test_perturbed_deterministic():
    dom = Domain.disk()
    a = build_perturbed_lattice(1 / 16, dom, 0.2, 11)
    b = build_perturbed_lattice(1 / 16, dom, 0.2, 11)
    assert a.to_text() == b.to_text()
    c = build_perturbed_lattice(1 / 16, dom, 0.2, 12)
    assert not np.array_equal(a.pos, c.pos)


def test_jitter_out_of_range():
    with pytest.raises(ValueError):
        build_perturbed_lattice(1 / 16, Domain.disk(), 0.35, 0)


def test_density_square_and_single():
    assert check_bounded_density(build_square_lattice(1 / 32, Domain.disk())) == 5
    g, _ = small_graph({}, ["x"])
    assert check_bounded_density(g) == 1


def test_density_perturbed_bounded_across_mesh():
    # vertex-centred closed balls; the 3x3 block of lattice neighbours bounds the count
    vals = [check_bounded_density(build_perturbed_lattice(d, Domain.disk(), 0.3, 1))
            for d in (1 / 16, 1 / 32)]
    assert all(1 <= v <= 9 for v in vals)
    assert check_bounded_density(build_perturbed_lattice(0.1, Domain.disk(), 0.2, 0)) == 7


def test_max_edge_scaling():
    dom = Domain.disk()
    a = max_edge_diameter(build_square_lattice(1 / 16, dom))
    b = max_edge_diameter(build_square_lattice(1 / 32, dom))
    assert a == pytest.approx(1 / 16)
    assert b == pytest.approx(a / 2)


def test_text_roundtrip(tmp_path):
    g = build_perturbed_lattice(1 / 8, Domain.rectangle(0, 0, 2, 1), 0.1, 4)
    p = tmp_path / "g.txt"
    g.save(p)
    h = PlanarGraph.load(p)
    assert np.array_equal(g.pos, h.pos)
    assert np.array_equal(g.indptr, h.indptr)
    assert np.array_equal(g.indices, h.indices)
    assert np.allclose(g.weights, h.weights)


def test_graph_must_reach_boundary():
    with pytest.raises(ValueError):
        graph_from_edges([0j, 1 + 0j, 2 + 0j], [False, False, True], [(0, 1, 1), (1, 0, 1)], 1.0)


def test_wired_grid():
    g = wired_grid_2x2()
    assert g.interior.size == 4


def test_crossing_positive_both_orientations():
    g = build_square_lattice(1 / 32, Domain.rectangle(0, 0, 2, 2))
    for orient in ("horizontal", "vertical"):
        est = estimate_crossing_probability(g, 0.1 + 0.1j, 0.5, orient, trials=4000, rng=1)
        assert est.estimate > 0 and est.low > 0


def test_crossing_zero_trials():
    g = build_square_lattice(1 / 16, Domain.rectangle(0, 0, 2, 2))
    with pytest.raises(ValueError):
        estimate_crossing_probability(g, 0.1 + 0.1j, 0.5, trials=0)


def test_domain_geometry():
    d = Domain.disk(0, 1)
    assert d.diameter == 2 and d.area == pytest.approx(math.pi)
    sq = Domain.polygon([0, 1, 1 + 1j, 1j])
    assert sq.area == pytest.approx(1)
    assert sq.contains(0.5 + 0.5j) and not sq.contains(2)
