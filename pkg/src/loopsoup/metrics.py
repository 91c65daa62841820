"""Curve distance modulo reparameterization, the unrooted loop distance and
the matching distance between finite loop multisets."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from . import kernels

REL_TOL = 1e-10
EXACT_LIMIT = 60_000   # m*n*(m+n) below which critical values are enumerated


@dataclass
class Polyline:
    points: np.ndarray
    closed: bool = False

    def __post_init__(self):
        self.points = np.atleast_1d(np.asarray(self.points, dtype=complex))
        if self.points.size == 0:
            raise ValueError("polyline needs at least one point")
        if self.closed and self.points[0] != self.points[-1]:
            self.points = np.append(self.points, self.points[0])


def _pts(p) -> np.ndarray:
    if isinstance(p, Polyline):
        return p.points
    return np.atleast_1d(np.asarray(p, dtype=complex))


def canonicalize(points: np.ndarray) -> np.ndarray:
    """Drop zero-length edges (consecutive repeated points)."""
    z = np.asarray(points, dtype=complex)
    if z.size <= 1:
        return z
    keep = np.ones(z.size, bool)
    keep[1:] = z[1:] != z[:-1]
    return z[keep]


def _xy(z: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(np.column_stack([z.real, z.imag]))


# --------------------------------------------------------------------------
# diameter

def diameter(p) -> float:
    """Largest distance between two vertices (exact for polylines)."""
    z = np.unique(_pts(p))
    if z.size <= 1:
        return 0.0
    if z.size > 64:
        z = _hull(z)
    if z.size <= 2048:
        return float(np.abs(z[:, None] - z[None, :]).max())
    best = 0.0
    for k in range(0, z.size, 1024):
        best = max(best, float(np.abs(z[k:k + 1024, None] - z[None, :]).max()))
    return best


def _hull(z: np.ndarray) -> np.ndarray:
    # monotone chain; returns hull vertices (collinear input keeps extremes)
    order = np.lexsort((z.imag, z.real))
    pts = z[order]

    def half(seq):
        out = []
        for p in seq:
            while len(out) >= 2:
                a, b = out[-2], out[-1]
                cr = (b.real - a.real) * (p.imag - a.imag) - (b.imag - a.imag) * (p.real - a.real)
                if cr <= 0:
                    out.pop()
                else:
                    break
            out.append(p)
        return out

    lower = half(pts)
    upper = half(pts[::-1])
    return np.array(lower[:-1] + upper[:-1])


def bbox_diameter_bounds(p) -> tuple[float, float]:
    """Cheap (lower, upper) bounds on the diameter from the bounding box."""
    z = _pts(p)
    w = z.real.max() - z.real.min()
    h = z.imag.max() - z.imag.min()
    return max(w, h), float(np.hypot(w, h))


# --------------------------------------------------------------------------
# Frechet

def discrete_frechet(p, q) -> float:
    """Discrete Frechet distance of the vertex sequences (an upper bound)."""
    return float(kernels.discrete_frechet(_xy(_pts(p)), _xy(_pts(q))))


def _point_curve(z: complex, q: np.ndarray) -> float:
    return float(np.abs(q - z).max())


def frechet_decision(p, q, eps: float) -> bool:
    a, b = canonicalize(_pts(p)), canonicalize(_pts(q))
    if a.size == 1 or b.size == 1:
        z, c = (a[0], b) if a.size == 1 else (b[0], a)
        return _point_curve(z, c) <= eps
    return bool(kernels.frechet_decide(_xy(a), _xy(b), float(eps)))


def _critical_values(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    vals = [abs(P[0] - Q[0]), abs(P[-1] - Q[-1])]
    out = [np.array(vals)]
    for A, B in ((P, Q), (Q, P)):
        a, b = B[:-1], B[1:]
        d = b - a
        L = np.abs(d) ** 2
        t = np.clip(((A[:, None] - a[None, :]) * np.conj(d)[None, :]).real / L[None, :], 0, 1)
        out.append(np.abs(A[:, None] - (a[None, :] + t * d[None, :])).ravel())
        out.append(kernels.frechet_critical_c(_xy(A), _xy(B)))
    return np.unique(np.concatenate(out))


def frechet_distance(p, q) -> float:
    """Continuous Frechet distance between two polylines."""
    a, b = canonicalize(_pts(p)), canonicalize(_pts(q))
    if a.size == 1 or b.size == 1:
        z, c = (a[0], b) if a.size == 1 else (b[0], a)
        return _point_curve(z, c)
    A, B = _xy(a), _xy(b)
    lo = max(abs(a[0] - b[0]), abs(a[-1] - b[-1]))
    m, n = a.size, b.size
    if m * n * (m + n) <= EXACT_LIMIT:
        cands = _critical_values(a, b)
        cands = cands[cands >= lo]
        i, j = 0, cands.size - 1
        while i < j:
            mid = (i + j) // 2
            if kernels.frechet_decide(A, B, cands[mid] * (1 + 1e-12) + 1e-15):
                j = mid
            else:
                i = mid + 1
        return float(cands[i])
    hi = float(kernels.discrete_frechet(A, B))
    if kernels.frechet_decide(A, B, lo * (1 + 1e-12) + 1e-15):
        return float(lo)
    while hi - lo > REL_TOL * max(hi, 1e-300):
        mid = 0.5 * (lo + hi)
        if kernels.frechet_decide(A, B, mid):
            hi = mid
        else:
            lo = mid
    return float(hi)


def hausdorff_lower(p, q) -> float:
    """Vertex-to-polyline Hausdorff distance, a lower bound for Frechet."""
    a, b = canonicalize(_pts(p)), canonicalize(_pts(q))

    def one_side(A, B):
        if B.size == 1:
            return float(np.abs(A - B[0]).max())
        s, e = B[:-1], B[1:]
        d = e - s
        L = np.abs(d) ** 2
        t = np.clip(((A[:, None] - s[None, :]) * np.conj(d)[None, :]).real / L[None, :], 0, 1)
        return float(np.abs(A[:, None] - (s[None, :] + t * d[None, :])).min(axis=1).max())

    return max(one_side(a, b), one_side(b, a))


# --------------------------------------------------------------------------
# unrooted loops

@dataclass
class LoopDistance:
    value: float
    gap: float


def _closed(p) -> np.ndarray:
    if isinstance(p, Polyline):
        if not p.closed:
            raise ValueError("loop distance needs closed polylines")
        z = p.points
    else:
        z = _pts(p)
        if z[0] != z[-1]:
            raise ValueError("loop distance needs closed polylines")
    return z


def unrooted_loop_distance(a, b, subdivisions: int = 8, with_gap: bool = False):
    """Minimum Frechet distance over starting points of ``b``.

    Start points are every vertex of b plus ``subdivisions - 1`` interior
    points per edge; the discretization gap (half the largest edge of b
    divided by the subdivision count) is returned with ``with_gap``.
    """
    A = canonicalize(_closed(a))
    B = canonicalize(_closed(b))
    if A.size == 1 or B.size == 1:
        z, c = (A[0], B) if A.size == 1 else (B[0], A)
        val = _point_curve(z, c)
        return LoopDistance(val, 0.0) if with_gap else val
    PA, PB = _xy(A), _xy(B)
    gap = float(np.abs(np.diff(B)).max()) / (2 * subdivisions)
    hi = float(kernels.loop_discrete_upper(PA, PB))
    lo = 0.0
    lo = max(lo, hausdorff_lower(A, B))
    if lo >= hi or kernels.loop_decide(PA, PB, lo * (1 + 1e-12) + 1e-15, subdivisions):
        val = lo if lo < hi else hi
        return LoopDistance(val, gap) if with_gap else val
    while hi - lo > REL_TOL * max(hi, 1e-300):
        mid = 0.5 * (lo + hi)
        if kernels.loop_decide(PA, PB, mid, subdivisions):
            hi = mid
        else:
            lo = mid
    return LoopDistance(hi, gap) if with_gap else hi


def rooted_loop_distance(a, b) -> float:
    """Frechet distance of two closed curves with their roots aligned (upper bound)."""
    return frechet_distance(_pts(a), _pts(b))


# --------------------------------------------------------------------------
# loop soups

@dataclass
class MatchingCertificate:
    pairs: list
    unmatched_a: list
    unmatched_b: list
    value: float
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"pairs": [[int(i), int(j)] for i, j in self.pairs],
                "unmatched_a": [int(i) for i in self.unmatched_a],
                "unmatched_b": [int(j) for j in self.unmatched_b],
                "value": float(self.value)}


def _feasible(dist, half_a, half_b, tau):
    """Matching covering every loop with half-diameter > tau, edges <= tau.

    Solved as a perfect matching with dummies: each optional loop may pair
    with its own dummy and dummies pair freely with each other.
    """
    na, nb = half_a.size, half_b.size
    must_a = half_a > tau
    must_b = half_b > tau
    rows, cols = np.nonzero(dist <= tau) if na and nb else (np.array([], int), np.array([], int))
    r = [rows]
    c = [cols]
    # left side: a_0..a_{na-1}, dummy_b_0..dummy_b_{nb-1}
    # right side: b_0..b_{nb-1}, dummy_a_0..dummy_a_{na-1}
    opt_a = np.flatnonzero(~must_a)
    r.append(opt_a)
    c.append(nb + opt_a)
    opt_b = np.flatnonzero(~must_b)
    r.append(na + opt_b)
    c.append(opt_b)
    dr, dc = np.meshgrid(np.arange(nb), np.arange(na), indexing="ij")
    r.append(na + dr.ravel())
    c.append(nb + dc.ravel())
    R = np.concatenate(r).astype(np.int64)
    C = np.concatenate(c).astype(np.int64)
    size = na + nb
    if size == 0:
        return True, []
    g = csr_matrix((np.ones(R.size), (R, C)), shape=(size, size))
    match = maximum_bipartite_matching(g, perm_type="column")
    if np.any(match < 0):
        return False, None
    pairs = [(i, int(match[i])) for i in range(na) if match[i] < nb]
    return True, pairs


def soup_distance_from_matrix(dist, half_a, half_b):
    """Exact matching distance from pairwise distances and half-diameters."""
    dist = np.asarray(dist, dtype=float).reshape(len(half_a), len(half_b))
    half_a = np.asarray(half_a, dtype=float)
    half_b = np.asarray(half_b, dtype=float)
    cands = np.unique(np.concatenate([[0.0], dist.ravel(), half_a, half_b]))
    i, j = 0, cands.size - 1
    while i < j:
        mid = (i + j) // 2
        if _feasible(dist, half_a, half_b, cands[mid])[0]:
            j = mid
        else:
            i = mid + 1
    ok, pairs = _feasible(dist, half_a, half_b, cands[i])
    ma = {p[0] for p in pairs}
    mb = {p[1] for p in pairs}
    ua = [k for k in range(half_a.size) if k not in ma]
    ub = [k for k in range(half_b.size) if k not in mb]
    vals = [dist[p] for p in pairs] + [half_a[k] for k in ua] + [half_b[k] for k in ub]
    value = float(max(vals)) if vals else 0.0
    return value, MatchingCertificate(pairs, ua, ub, value)


def loop_soup_distance(A: Sequence, B: Sequence,
                       loop_distance: Callable | None = None,
                       half_diameter: Callable | None = None):
    """d_M between two finite loop collections; returns (value, certificate).

    ``A`` and ``B`` are sequences of closed polylines (or a LoopSoup).  The
    pairwise loop distance and the half-diameter can be replaced, which is
    how exact closed-form metrics are plugged in for testing.
    """
    A = list(A.polylines()) if hasattr(A, "polylines") else list(A)
    B = list(B.polylines()) if hasattr(B, "polylines") else list(B)
    ld = loop_distance or unrooted_loop_distance
    hd = half_diameter or (lambda x: diameter(x) / 2)
    dist = np.array([[ld(a, b) for b in B] for a in A], dtype=float).reshape(len(A), len(B))
    ha = np.array([hd(a) for a in A], dtype=float)
    hb = np.array([hd(b) for b in B], dtype=float)
    return soup_distance_from_matrix(dist, ha, hb)
