import numpy as np
import pytest

from loopsoup import Domain, build_square_lattice, last_visit, loop_erase, run_walk

a, b, c, d = 0, 1, 2, 3


def test_single_loop():
    dec = loop_erase([a, b, a, c])
    assert dec.core.tolist() == [a, c]
    assert dec.erased_loops[0].tolist() == [a, b, a]
    assert last_visit(dec, 0) == 2
    assert last_visit(dec, dec.S) == 3


def test_interleaved_loops():
    dec = loop_erase([a, b, a, c, b, d])
    assert dec.core.tolist() == [a, c, b, d]
    assert [l.tolist() for l in dec.erased_loops] == [[a, b, a], [c], [b]]
    assert dec.last_visit_times.tolist() == [2, 3, 4]
    assert dec.terminal_loop.tolist() == [d]


def test_self_avoiding_is_fixed():
    x = [4, 2, 7, 1, 0]
    dec = loop_erase(x)
    assert dec.core.tolist() == x
    assert all(l.size == 1 for l in dec.erased_loops)


def test_ending_on_revisit_keeps_terminal_loop():
    dec = loop_erase([a, b, a])
    assert dec.core.tolist() == [a]
    assert dec.erased_loops == []
    assert dec.terminal_loop.tolist() == [a, b, a]


def test_bad_inputs():
    with pytest.raises(ValueError):
        loop_erase([])
    with pytest.raises(IndexError):
        last_visit([a, b, a, c], 5)


def test_random_walk_invariants():
    g = build_square_lattice(1 / 16, Domain.disk())
    rng = np.random.default_rng(5)
    for _ in range(50):
        x = run_walk(g, int(g.interior[len(g.interior) // 3]), rng).vertex_indices
        dec = loop_erase(x, g.n_vertices)
        core = dec.core
        assert np.unique(core).size == core.size
        assert np.array_equal(dec.reassemble(), x)
        lv = dec.lasts
        assert np.all(np.diff(lv) > 0) and lv[-1] == x.size - 1
        for k, l in enumerate(dec.erased_loops):
            assert l[0] == core[k] and l[-1] == core[k]
            assert not np.isin(l, core[:k]).any()
