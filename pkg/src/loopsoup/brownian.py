"""Brownian loop soup restricted to a domain, above a diameter cutoff."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .lattice import Domain, _point_segment_distance
from .metrics import diameter
from .soup import LoopSoup
from .stats import mean_interval


@dataclass
class BrownianLoopSample:
    root: complex
    lifetime: float
    points: np.ndarray


def bridge_paths(m: int, t, n: int, rng) -> np.ndarray:
    """``m`` planar Brownian bridges from 0 to 0 on [0, t] at ``n`` equispaced times.

    Built by the pinned Gaussian recursion: given W(s_k) = w, the next value
    is normal with mean w (t - s_{k+1}) / (t - s_k) and variance
    h (t - s_{k+1}) / (t - s_k) per coordinate, h being the time step.
    """
    t = np.broadcast_to(np.asarray(t, dtype=float), (m,))
    out = np.zeros((m, n), dtype=complex)
    h = t / (n - 1)
    w = np.zeros(m, dtype=complex)
    for k in range(1, n - 1):
        rem_before = (n - k) * h
        rem_after = (n - 1 - k) * h
        frac = rem_after / rem_before
        sd = np.sqrt(h * frac)
        g = rng.standard_normal((2, m))
        w = w * frac + sd * (g[0] + 1j * g[1])
        out[:, k] = w
    return out


def sample_bridge_loop(z: complex, t: float, n: int, rng) -> BrownianLoopSample:
    if t <= 0:
        raise ValueError("lifetime must be positive")
    if n < 8:
        raise ValueError("resolution must be at least 8")
    pts = complex(z) + bridge_paths(1, t, n, rng)[0]
    pts[0] = pts[-1] = z
    return BrownianLoopSample(complex(z), float(t), pts)


def t_min_for(domain: Domain, eps: float, eta: float) -> float:
    """Lifetime cutoff so the neglected mass area*16/(pi eps^2)*exp(-eps^2/(4t)) <= eta."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    L = math.log(domain.area * 16.0 / (math.pi * eps * eps * eta))
    return eps * eps / (4.0 * max(L, 1e-12))


def t_max_for(domain: Domain, p_stay: float = 1e-6) -> float:
    """Lifetime above which a bridge stays inside the domain with prob <= p_stay.

    Uses the domain diameter: a bridge of lifetime t has range >= diam with
    probability >= 1 - p_stay once t >= 8 diam^2 / (pi p_stay).
    """
    d = domain.diameter
    return 8.0 * d * d / (math.pi * p_stay)


def sample_bls_restricted(domain: Domain, eps: float, eta: float = 1e-3, resolution: int = 512,
                          rng=None, t_max: float | None = None, return_samples: bool = False,
                          chunk: int = 256):
    """Brownian loops inside ``domain`` with diameter >= eps.

    Roots and lifetimes come from a Poisson process with intensity
    dz dt / (2 pi t^2) over the bounding box times [t_min, t_max]; each loop
    is kept when its sampled polyline stays in the domain and has diameter
    at least eps.  The result is a LoopSoup with delta = 0.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    rng = np.random.default_rng(rng)
    t0 = t_min_for(domain, eps, eta)
    t1 = t_max if t_max is not None else t_max_for(domain)
    x0, y0, x1, y1 = domain.bbox
    box = (x1 - x0) * (y1 - y0)
    lam = box / (2 * math.pi) * (1 / t0 - 1 / t1)
    count = rng.poisson(lam)
    u = rng.random((3, count))
    roots = (x0 + (x1 - x0) * u[0]) + 1j * (y0 + (y1 - y0) * u[1])
    lifetimes = 1.0 / (1.0 / t0 - u[2] * (1.0 / t0 - 1.0 / t1))
    inside = domain.contains(roots)
    roots, lifetimes = roots[inside], lifetimes[inside]
    keep_pts, keep_z, keep_t = [], [], []
    for a in range(0, roots.size, chunk):
        zs, ts = roots[a:a + chunk], lifetimes[a:a + chunk]
        paths = zs[:, None] + bridge_paths(zs.size, ts, resolution, rng)
        ok = domain.contains(paths).all(axis=1)
        for i in np.flatnonzero(ok):
            p = paths[i]
            w = np.ptp(p.real)
            h = np.ptp(p.imag)
            if math.hypot(w, h) < eps:
                continue
            if max(w, h) >= eps or diameter(p) >= eps:
                keep_pts.append(p)
                keep_z.append(zs[i])
                keep_t.append(ts[i])
    if keep_pts:
        pts = np.concatenate(keep_pts)
        offs = np.arange(len(keep_pts) + 1) * resolution
    else:
        pts, offs = np.zeros(0, complex), np.zeros(1, np.int64)
    soup = LoopSoup(pts, offs, rng.random(len(keep_pts)), 0.0, domain=domain)
    soup.meta = {"t_min": t0, "t_max": t1, "eta": eta, "resolution": resolution,
                 "proposals": int(count)}
    if return_samples:
        return soup, [BrownianLoopSample(z, t, p) for z, t, p in zip(keep_z, keep_t, keep_pts)]
    return soup


# --------------------------------------------------------------------------
# functionals

@dataclass(frozen=True)
class Functional:
    """A loop property counted over a soup.

    kind "diameter": diam >= threshold; "touches": meets every closed disk in
    ``disks`` (center, radius); "within": every point inside ``region``.  All
    kinds also require diam >= min_diameter.
    """
    kind: str
    threshold: float = 0.0
    disks: tuple = ()
    region: Domain | None = None
    min_diameter: float = 0.0

    def __post_init__(self):
        if self.kind not in ("diameter", "touches", "within"):
            raise ValueError(f"unsupported functional {self.kind!r}")

    def accepts(self, pts: np.ndarray) -> bool:
        if self.kind == "touches":
            for c, rad in self.disks:
                if _polyline_distance(pts, complex(c)) > rad:
                    return False
            return True
        if self.kind == "within":
            return bool(self.region.contains(pts).all())
        return True

    def count(self, soup: LoopSoup) -> int:
        cut = max(self.min_diameter, self.threshold if self.kind == "diameter" else 0.0)
        if cut == float("inf"):
            return 0
        mask = soup._diameter_mask(cut)
        if self.kind == "diameter":
            return int(mask.sum())
        return sum(1 for i in np.flatnonzero(mask) if self.accepts(soup.loop_points(i)))

    def describe(self) -> dict:
        d = {"kind": self.kind, "min_diameter": self.min_diameter}
        if self.kind == "diameter":
            d["threshold"] = self.threshold
        if self.kind == "touches":
            d["disks"] = [[complex(c).real, complex(c).imag, r] for c, r in self.disks]
        if self.kind == "within" and self.region is not None:
            d["region"] = self.region.describe()
        return d


def _polyline_distance(pts: np.ndarray, c: complex) -> float:
    if pts.size == 1:
        return float(abs(pts[0] - c))
    a, b = pts[:-1], pts[1:]
    d = b - a
    L = np.abs(d) ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(L > 0, ((c - a) * np.conj(d)).real / np.where(L > 0, L, 1), 0.0)
    t = np.clip(t, 0, 1)
    return float(np.abs(c - (a + t * d)).min())


def bls_functional(domain: Domain, eps: float, functional: Functional, replicas: int, rng,
                   eta: float = 1e-3, resolution: int = 512) -> dict:
    """Mean count of loops with the property over restricted BLS samples."""
    rng = np.random.default_rng(rng)
    counts = np.empty(replicas)
    cut = max(eps, functional.min_diameter)
    for i in range(replicas):
        soup = sample_bls_restricted(domain, cut, eta, resolution, rng)
        counts[i] = functional.count(soup)
    m, se, lo, hi = mean_interval(counts)
    return {"mean": m, "se": se, "low": lo, "high": hi, "counts": counts}
