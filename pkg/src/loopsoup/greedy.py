"""Greedy Wilson branches: segmented growth through balls of radius eps and
r, the ERROR event, the revisit set R, greedy loops and coupling checks."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .erasure import ErasureDecomposition, loop_erase
from .lattice import PlanarGraph
from .metrics import diameter, discrete_frechet, unrooted_loop_distance
from .walk import DEFAULT_STEP_CAP, StepCapExceeded


class MeshPreconditionError(ValueError):
    pass


def default_radius(eps: float, j0: float, domain_diameter: float) -> float:
    """r(eps) = diam * (eps / diam) ** (2 j0 / eps)."""
    if not 0 < eps < domain_diameter:
        raise ValueError("need 0 < eps < domain diameter")
    if j0 < 1:
        raise ValueError("j0 must be >= 1")
    L = math.log(domain_diameter)
    r = math.exp(-2.0 / eps * j0 * (L - math.log(eps)) + L)
    if not 0 < r < eps:
        raise ValueError(f"radius formula gives r={r!r}, not in (0, eps)")
    return r


def error_probability_bound(eps: float, r: float, domain_diameter: float) -> float:
    """Upper bound on the ERROR probability of one branch."""
    L = math.log(domain_diameter)
    return (2 * L - 2 * math.log(eps)) / (L - math.log(r))


def tail_constants(r: float, domain_diameter: float) -> tuple[float, float]:
    """(alpha, beta) of the exponential tail bound on the iteration count."""
    x = 6.0 ** (-2.0 * domain_diameter / r)
    beta = 1.0 / (1.0 - x)
    alpha = -r / (2 * domain_diameter) * math.log1p(-x)
    return alpha, beta


# --------------------------------------------------------------------------
# branch transcript

@dataclass
class GreedyBranch:
    graph: PlanarGraph
    start: int
    eps: float
    r: float
    path: np.ndarray         # full walk X[0, T]
    taus: np.ndarray         # tau_1 .. tau_N
    theta: np.ndarray        # theta_1 .. theta_N
    s: np.ndarray            # s_1 .. s_N
    a_flat: np.ndarray
    a_off: np.ndarray
    core_lengths: np.ndarray  # |Y_0| .. |Y_N|
    error: bool
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def N(self) -> int:
        return self.taus.size

    def tau(self, n: int) -> int:
        """tau_n with tau_0 = 0."""
        return 0 if n == 0 else int(self.taus[n - 1])

    def A(self, n: int) -> np.ndarray:
        return self.a_flat[self.a_off[n - 1]:self.a_off[n]]

    def X(self, n: int) -> np.ndarray:
        """X_1 = (v0); X_n = X[tau_{n-1} .. theta_n] for n >= 2."""
        if n == 1:
            return self.path[:1]
        return self.path[self.tau(n - 1):self.theta[n - 1] + 1]

    def Y(self, n: int) -> np.ndarray:
        ys = self._cache.get("Y")
        if ys is None:
            ys = [self.path[:1]]
            for k in range(1, self.N + 1):
                ys.append(np.concatenate([ys[-1][:self.s[k - 1]], self.A(k)]))
            self._cache["Y"] = ys
        return ys[n]

    @property
    def decomposition(self) -> ErasureDecomposition:
        d = self._cache.get("dec")
        if d is None:
            d = loop_erase(self.path, self.graph.n_vertices)
            self._cache["dec"] = d
        return d

    @property
    def core(self) -> np.ndarray:
        """Final self-avoiding path (the partial core Y_N after an ERROR)."""
        if self.error:
            return self.Y(self.N)
        return self.decomposition.core

    @property
    def prefix(self) -> np.ndarray:
        """cp_n: length of the common prefix of Y_n and the final core."""
        cp = self._cache.get("cp")
        if cp is None:
            cp = kernels.greedy_prefix(self.s, self.a_flat, self.a_off,
                                       np.ascontiguousarray(self.core))
            self._cache["cp"] = cp
        return cp

    def to_json(self) -> dict:
        return {"start": int(self.start), "eps": self.eps, "r": self.r,
                "error": bool(self.error), "N": int(self.N),
                "walk": self.path.tolist(), "tau": self.taus.tolist(),
                "theta": self.theta.tolist(), "s": self.s.tolist(),
                "core": self.core.tolist()}


def _stop_mask(graph: PlanarGraph, attach) -> np.ndarray:
    stop = graph.is_boundary.copy()
    if attach is not None:
        a = np.asarray(attach)
        if a.dtype == bool:
            stop |= a
        elif a.size:
            stop[a.astype(np.int64)] = True
    return stop


def greedy_branch(graph: PlanarGraph, start: int, attach, eps: float, r: float, rng,
                  enforce_mesh: bool = True, cap: int = DEFAULT_STEP_CAP) -> GreedyBranch:
    """One greedy branch from ``start`` against ``attach`` (plus the boundary)."""
    if not 0 < r <= eps:
        raise ValueError("need 0 < r <= eps")
    if enforce_mesh and not graph.mesh < r / 100:
        raise MeshPreconditionError(f"mesh {graph.mesh} is not below r/100 = {r / 100}")
    stop = _stop_mask(graph, attach)
    if graph.is_boundary[start] or stop[start]:
        raise ValueError("start must be interior and outside the attachment set")
    px, py = graph.xy
    path, taus, err, ok = kernels.greedy_walk(graph.indptr, graph.indices, graph.cumq, px, py,
                                              int(start), stop.view(np.uint8), float(eps),
                                              float(r), cap, rng)
    if not ok:
        raise StepCapExceeded("step cap exceeded")
    s, th, af, ao, yl = kernels.greedy_splice(path, taus, graph.n_vertices)
    return GreedyBranch(graph, int(start), float(eps), float(r), path, taus, th, s, af, ao,
                        yl, bool(err))


def branch_from_walk(graph: PlanarGraph, path, taus, eps: float = 1.0, r: float = 0.5,
                     error: bool = False) -> GreedyBranch:
    """Transcript of a given walk with given segment ends (fixtures, replay)."""
    path = np.ascontiguousarray(path, dtype=np.int64)
    taus = np.ascontiguousarray(taus, dtype=np.int64)
    s, th, af, ao, yl = kernels.greedy_splice(path, taus, graph.n_vertices)
    return GreedyBranch(graph, int(path[0]), eps, r, path, taus, th, s, af, ao, yl, error)


# --------------------------------------------------------------------------
# revisit set and greedy loops

@dataclass
class RevisitSet:
    xi: list
    n_plus: dict
    n_minus: dict
    trivial: dict


def _first_with_prefix(cp, length, lo, hi):
    for n in range(lo, hi + 1):
        if cp[n] >= length:
            return n
    return None


def revisit_set(branch: GreedyBranch) -> RevisitSet:
    """R with n+ and n- for each element, following the inductive definition.

    Splices are the s_n with n >= 2; s_1 = 0 is the initialisation of the
    branch and does not count as a revisit.
    """
    if branch.error or branch.N <= 1:
        return RevisitSet([], {}, {}, {})
    cp = branch.prefix
    N = branch.N
    s = branch.s
    xi = sorted({int(s[n - 1]) for n in range(2, N + 1) if cp[n - 1] >= s[n - 1] + 1})
    n_plus, n_minus, trivial = {}, {}, {}
    prev_plus = 0
    for k, x in enumerate(xi):
        lo = 0 if k == 0 else prev_plus
        hits = [n for n in range(max(lo, 1), N + 1) if s[n - 1] == x]
        if not hits:
            n = _first_with_prefix(cp, x + 1, lo, N)
            n_plus[x] = n_minus[x] = n
            trivial[x] = True
        else:
            n_plus[x] = max(hits)
            n_minus[x] = _first_with_prefix(cp, x + 1, lo, N)
            trivial[x] = False
        prev_plus = n_plus[x]
    return RevisitSet(xi, n_plus, n_minus, trivial)


def _join(pieces):
    out = [pieces[0]]
    for p in pieces[1:]:
        if p.size == 0:
            continue
        if out[-1].size and out[-1][-1] != p[0]:
            raise AssertionError("greedy loop pieces do not join")
        out.append(p[1:])
    return np.concatenate(out)


@dataclass
class GreedyLoopSet:
    loops: list
    revisits: RevisitSet

    @property
    def R(self) -> list:
        return self.revisits.xi


def greedy_erased_loops(branch: GreedyBranch) -> GreedyLoopSet:
    """Greedy loops l~_s for s = 0..S-1 (closed vertex sequences)."""
    core = branch.core
    S = core.size - 1
    loops = [core[s:s + 1] for s in range(S)]
    if branch.error:
        return GreedyLoopSet(loops, RevisitSet([], {}, {}, {}))
    rs = revisit_set(branch)
    for x in rs.xi:
        if rs.trivial[x] or x >= S:
            continue
        lo, hi = rs.n_minus[x], rs.n_plus[x]
        if lo is None or lo >= hi:
            raise AssertionError(f"revisit {x}: n- = {lo} not below n+ = {hi}")
        pieces = [branch.Y(lo)[x:]]
        for n in range(lo + 1, hi):
            pieces.append(branch.X(n))
            pieces.append(branch.A(n))
        pieces.append(branch.X(hi))
        l = _join(pieces)
        if l[0] != core[x] or l[-1] != core[x]:
            raise AssertionError("greedy loop is not closed at its root")
        loops[x] = l
    return GreedyLoopSet(loops, rs)


# --------------------------------------------------------------------------
# coupling diagnostics

@dataclass
class CouplingReport:
    distances: np.ndarray
    methods: list
    sandwich_violations: list
    trigger_violations: list
    R: list

    @property
    def max_distance(self) -> float:
        return float(self.distances.max()) if self.distances.size else 0.0


def _loop_distance(pos, a, b, bound):
    """Distance between loops a, b rooted at the same vertex; exact when one is trivial.

    Otherwise an upper bound (root-aligned discrete Frechet) is used when it
    is already below ``bound``; if not, the unrooted distance is computed.
    """
    if a.size == 1 and b.size == 1:
        return 0.0, "trivial"
    if a.size == b.size and np.array_equal(a, b):
        return 0.0, "identical"
    if b.size == 1 or a.size == 1:
        loop, root = (a, b[0]) if b.size == 1 else (b, a[0])
        return float(np.abs(pos[loop] - pos[root]).max()), "point"
    za, zb = pos[a], pos[b]
    d = discrete_frechet(za, zb)
    if d <= bound:
        return d, "discrete-upper"
    return unrooted_loop_distance(za, zb), "unrooted"


def coupling_report(branch: GreedyBranch, loopset: GreedyLoopSet | None = None) -> CouplingReport:
    if branch.error:
        raise ValueError("coupling report needs a branch without ERROR")
    ls = loopset or greedy_erased_loops(branch)
    dec = branch.decomposition
    pos = branch.graph.pos
    true_loops = dec.erased_loops
    S = len(true_loops)
    bound = 2 * branch.eps
    dist = np.zeros(S)
    methods = []
    for k in range(S):
        dist[k], m = _loop_distance(pos, true_loops[k], ls.loops[k], bound)
        methods.append(m)
    rs = ls.revisits
    Rset = set(rs.xi)
    lv = dec.lasts
    tau = branch.tau
    cp = branch.prefix
    N = branch.N
    sand = []
    # (ii): members of R
    for x in rs.xi:
        if x >= S:
            continue
        npl, nmi = rs.n_plus[x], rs.n_minus[x]
        if not (tau(npl - 1) <= lv[x] <= tau(npl)):
            sand.append(("ii-plus", x))
        if x >= 1 and nmi is not None and nmi >= 1:
            if not (tau(nmi - 1) <= lv[x - 1] <= tau(nmi)):
                sand.append(("ii-minus", x))
    # (i): other core positions, bracketed by consecutive elements of R
    marks = [0] + rs.xi
    plus = {0: 1}
    plus.update(rs.n_plus)
    for s_ in range(S):
        if s_ in Rset:
            continue
        k = max(i for i, x in enumerate(marks) if x <= s_)
        lo = plus.get(marks[k], 1) or 1
        hi = rs.n_minus[marks[k + 1]] if k + 1 < len(marks) else N
        n_s = _first_with_prefix(cp, s_ + 1, lo, hi)
        if n_s is None:
            sand.append(("i-undefined", s_))
            continue
        ok = lv[s_] <= tau(n_s)
        if s_ >= 1 and n_s >= 1:
            ok = ok and tau(n_s - 1) <= lv[s_ - 1] <= lv[s_]
        if not ok:
            sand.append(("i", s_))
    trig = [k for k in range(S) if k not in Rset and diameter(pos[true_loops[k]]) >= bound]
    return CouplingReport(dist, methods, sand, trig, list(rs.xi))


def detect_returnable(branch: GreedyBranch, eps: float):
    """Splice points that the walk later leaves by eps and returns to.

    Returns (returnable core indices, core indices whose erased loop holds at
    least two excursions of diameter >= 4 eps).
    """
    path = branch.path
    pos = branch.graph.pos
    T = path.size - 1
    out = []
    for n in range(1, branch.N):
        v = path[branch.theta[n - 1]]
        start = branch.tau(n)
        far = np.abs(pos[path[start + 1:]] - pos[v]) >= eps
        if not far.any():
            continue
        t1 = start + 1 + int(np.argmax(far))
        back = np.flatnonzero(path[t1 + 1:] == v)
        if back.size and t1 + 1 + back[0] < T:
            core = branch.core
            idx = np.flatnonzero(core == v)
            out.append(int(idx[0]) if idx.size else -1)
    flags = []
    dec = branch.decomposition
    for k, l in enumerate(dec.erased_loops):
        if l.size < 3:
            continue
        cut = np.flatnonzero(l == l[0])
        big = 0
        for a, b in zip(cut[:-1], cut[1:]):
            if b - a >= 2 and diameter(pos[l[a:b + 1]]) >= 4 * eps:
                big += 1
        if big >= 2:
            flags.append(k)
    return sorted(set(out)), flags


# --------------------------------------------------------------------------
# multiple branches

def greedy_algorithm(graph: PlanarGraph, ordering, eps: float, r: float, m: int, rng,
                     enforce_mesh: bool = True, cap: int = DEFAULT_STEP_CAP):
    """Greedy branches along ``ordering``; returns (branches, loops).

    Loops are gathered from the first min(kappa, m) branches, kappa being the
    first branch with ERROR (whose loops are all trivial).
    """
    order = ordering.vertices if hasattr(ordering, "vertices") else np.asarray(ordering)
    attach = np.zeros(graph.n_vertices, bool)
    branches, loops = [], []
    for v in order:
        if len(branches) >= m:
            break
        if attach[v] or graph.is_boundary[v]:
            continue
        b = greedy_branch(graph, int(v), attach, eps, r, rng, enforce_mesh, cap)
        branches.append(b)
        loops.extend(greedy_erased_loops(b).loops)
        if b.error:
            break
        attach[b.core[:-1]] = True
    return branches, loops


def tail_table(counts, eps: float, r: float, domain_diameter: float, K=None) -> dict:
    """Empirical P(N >= K) with Wilson limits against beta * exp(-alpha K).

    K values above 2 diam / r are graded (pass when the upper Wilson limit is
    below the bound); those between 2 diam / eps and 2 diam / r are reported
    only.
    """
    from .stats import wilson_interval
    counts = np.asarray(counts)
    n = counts.size
    diam = domain_diameter
    alpha, beta = tail_constants(r, diam)
    if K is None:
        K = np.arange(1, max(int(counts.max()) + 2, math.ceil(2 * diam / r) + 11))
    rows = []
    for k in np.asarray(K):
        hits = int(np.sum(counts >= k))
        lo, hi = wilson_interval(hits, n)
        bound = beta * math.exp(-alpha * k)
        graded = k > 2 * diam / r
        rows.append({"K": int(k), "p": hits / n, "low": lo, "high": hi,
                     "bound": bound, "graded": bool(graded),
                     "statement_range": bool(k > 2 * diam / eps),
                     "pass": bool(hi <= bound) if graded else None})
    return {"rows": rows, "alpha": alpha, "beta": beta,
            "all_pass": all(r_["pass"] for r_ in rows if r_["graded"])}


def iteration_tail(graph: PlanarGraph, start: int, eps: float, r: float, replicas: int,
                   rng, domain_diameter: float | None = None, K=None,
                   cap: int = DEFAULT_STEP_CAP) -> dict:
    """Iteration counts of ``replicas`` greedy branches from ``start`` and their tail table."""
    diam = domain_diameter or (graph.domain.diameter if graph.domain else None)
    if diam is None:
        raise ValueError("domain diameter needed")
    px, py = graph.xy
    counts, errors = kernels.greedy_iterations(graph.indptr, graph.indices, graph.cumq, px, py,
                                               int(start), graph.is_boundary.view(np.uint8),
                                               float(eps), float(r), int(replicas), cap, rng)
    if np.any(counts < 0):
        raise StepCapExceeded("step cap exceeded")
    out = tail_table(counts, eps, r, diam, K)
    out["counts"] = counts
    out["errors"] = int(errors.sum())
    return out


def branches_to_jsonl(branches) -> str:
    return "".join(json.dumps(b.to_json()) + "\n" for b in branches)
