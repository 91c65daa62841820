"""Seeded, replicated experiments with machine-readable records.

Every experiment takes an :class:`ExperimentConfig` and returns an
:class:`ExperimentRecord`.  Replica ``i`` of stage ``s`` draws from
``SeedSequence(seed, spawn_key=(s,)).spawn(n)[i]``, so records are
byte-reproducible given (config, seed, version) regardless of the worker
count.  Wall-clock time is kept out of the JSONL and written to a separate
timing file.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache, partial

import numpy as np

from . import __version__, kernels
from .brownian import Functional, sample_bls_restricted
from .erasure import loop_erase
from .greedy import (coupling_report, default_radius, error_probability_bound,
                     greedy_algorithm, greedy_erased_loops, tail_table)
from .lattice import (Domain, PlanarGraph, build_perturbed_lattice, build_square_lattice,
                      check_bounded_density, estimate_crossing_probability, graph_ab,
                      graph_abc, max_edge_diameter, wired_grid_2x2)
from .metrics import diameter, loop_soup_distance, unrooted_loop_distance
from .soup import (UnrootedLoop, class_counts, enumerate_loops, loop_soup_sampler,
                   spectral_tail_bound, total_loop_mass, unrooted_loop_mass)
from .stats import (mean_interval, poisson_gof, total_variation, two_sample_chi2,
                    wilson_interval, within_combined_se)
from .walk import run_walk
from .wilson import VertexOrdering, couple_soup_to_branches, good_ordering, wilsons_algorithm


class ConfigError(ValueError):
    """Malformed or out-of-range configuration (a usage error)."""


EXPERIMENTS = ("verify-graph", "oracle", "sample-soup", "wilson", "greedy", "couple",
               "compare", "tail", "schramm", "boundary", "appendix-a")

# units of the recognised keys; a config file may restate them in brackets
UNITS = {
    "delta": "length", "eps": "length", "radius": "length", "j0": "count",
    "branches": "count", "replicas": "count", "seed": "integer", "K": "count",
    "eta": "length", "scale": "length", "jitter": "mesh", "resolution": "points",
    "etas": "length", "js": "count", "max_length": "steps", "length_cap": "steps",
    "bls_eta": "mass", "C": "1", "delta0": "length", "workers": "count",
}

_DEFAULTS = {
    "verify-graph": {"graph": "square", "eps": None, "params": {
        "scale": None, "trials": 4000, "density_max": 9, "edge_factor": 2.0,
        "crossing_min": 1e-4, "jitter": 0.2}},
    "oracle": {"graph": "g_ab", "params": {"max_length": 20}},
    "sample-soup": {"graph": "g_ab", "params": {"method": "auto", "loop_class": "a,b,a",
                                                "se_k": 4.0, "gof_min_p": 0.001}},
    "wilson": {"graph": "grid2x2", "params": {"orderings": "index,reverse", "tv_tol": 0.02,
                                              "chi2_min_p": 0.001}},
    "greedy": {"graph": "square", "eps": 0.2, "params": {"check": "coupling",
                                                         "enforce_mesh": False}},
    "couple": {"graph": "g_abc", "params": {"start": 0, "method": "peel", "tv_tol": 0.05,
                                            "length_cap": 40, "min_count": 2000}},
    "compare": {"graph": "square", "eps": 0.3, "params": {
        "functional": "diameter", "eta": 1e-3, "resolution": 512, "method": "walk",
        "dm_pairs": 2, "dm_points": 48, "universality": "", "jitter": 0.2}},
    "tail": {"graph": "square", "eps": 0.8, "radius": 0.4, "params": {"start": "center"}},
    "schramm": {"graph": "square", "eps": 0.25, "params": {"js": "1,5,25,125", "C": 1.0,
                                                           "delta0": 1.0}},
    "boundary": {"graph": "square", "eps": 0.3, "params": {
        "etas": "2,0.25,0.125,0.0625,0.03125,0.015625,0.0078125,0.00390625"}},
    "appendix-a": {"graph": "square", "eps": 0.5, "params": {
        "configs": "1.5:32,1.5:64,0.95:64,0.2:64", "eta": 1e-3, "resolution": 256}},
}

_NEEDS_DELTA = {"greedy", "compare", "tail", "schramm", "boundary"}
_NAMED_GRAPHS = ("g_ab", "g_abc", "grid2x2")


# --------------------------------------------------------------------------
# configuration

def parse_delta(text) -> float:
    try:
        v = float(Fraction(str(text).strip()))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad mesh size {text!r}") from exc
    if not v > 0:
        raise ConfigError("mesh sizes must be positive")
    return v


def _as_list(value) -> list:
    if value is None or value == "":
        return []
    if isinstance(value, (list, tuple)):
        return list(value)
    return [v.strip() for v in str(value).split(",") if v.strip()]


@dataclass
class ExperimentConfig:
    experiment: str
    graph: str | None = None
    domain: str = "disk"
    deltas: tuple = ()
    eps: float | None = None
    radius: float | None = None
    j0: float = 1.0
    branches: int = 1
    K: tuple = ()
    replicas: int = 100
    seed: int = 0
    out: str | None = None
    workers: int = 1
    params: dict = field(default_factory=dict)

    def resolved(self) -> "ExperimentConfig":
        """Copy with experiment defaults filled in and every field validated."""
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        d = _DEFAULTS[self.experiment]
        params = dict(d.get("params", {}))
        unknown = set(self.params) - set(params)
        if unknown:
            raise ConfigError(f"unknown parameter(s) for {self.experiment}: {sorted(unknown)}")
        params.update(self.params)
        cfg = ExperimentConfig(
            self.experiment, self.graph or d.get("graph"), self.domain,
            tuple(str(x) for x in _as_list(self.deltas)),
            self.eps if self.eps is not None else d.get("eps"),
            self.radius if self.radius is not None else d.get("radius"),
            float(self.j0), int(self.branches), tuple(int(k) for k in _as_list(self.K)),
            int(self.replicas), int(self.seed), self.out, int(self.workers), params)
        cfg._validate()
        return cfg

    def _validate(self):
        if self.replicas < 1:
            raise ConfigError("replicas must be >= 1")
        if self.branches < 1:
            raise ConfigError("branches must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.j0 < 1:
            raise ConfigError("j0 must be >= 1")
        if self.eps is not None and not self.eps > 0:
            raise ConfigError("eps must be positive")
        if self.radius is not None and not self.radius > 0:
            raise ConfigError("radius must be positive")
        parse_domain(self.domain)
        for t in self.deltas:
            parse_delta(t)
        if self.experiment == "appendix-a" and not self.deltas:
            self.deltas = tuple(f"1/{n}" for n in sorted({N for _, N in _appendix_configs(self)}))
        if not self.deltas:
            if self.experiment in _NEEDS_DELTA or self.graph in ("square", "perturbed"):
                raise ConfigError("--delta is required")
            self.deltas = (repr(load_graph(self, None).mesh),)
        if self.experiment == "compare" and len(self.deltas) < 3:
            raise ConfigError("compare needs at least three mesh sizes")
        if self.experiment in ("greedy", "tail") and self.radius is not None \
                and self.radius > self.eps:
            raise ConfigError("need radius <= eps")
        if self.experiment == "greedy":
            r = self.r_value()
            if _truthy(self.params["enforce_mesh"]):
                for t in self.deltas:
                    if not parse_delta(t) < r / 100:
                        raise ConfigError(f"mesh {t} is not below r/100 = {r / 100!r}")
            if self.params["check"] not in ("coupling", "error"):
                raise ConfigError("check must be 'coupling' or 'error'")

    def r_value(self) -> float:
        if self.radius is not None:
            return float(self.radius)
        try:
            return default_radius(self.eps, self.j0, parse_domain(self.domain).diameter)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        out = {"experiment": self.experiment, "graph": self.graph, "domain": self.domain,
               "deltas": list(self.deltas), "eps": self.eps, "radius": self.radius,
               "j0": self.j0, "branches": self.branches, "K": list(self.K),
               "replicas": self.replicas, "seed": self.seed,
               "params": {k: self.params[k] for k in sorted(self.params)},
               "units": {k: UNITS[k] for k in sorted(UNITS)
                         if k in ("delta", "eps", "radius") or k in self.params}}
        return out


def _truthy(v) -> bool:
    if isinstance(v, str):
        return v.strip().lower() in ("1", "true", "yes", "on")
    return bool(v)


_CONFIG_FIELDS = {"experiment", "graph", "domain", "delta", "deltas", "eps", "radius", "j0",
                  "branches", "K", "replicas", "seed", "out", "workers"}


def parse_config_text(text: str) -> dict:
    """Flat ``key = value [unit]`` lines; '#' starts a comment.

    A bracketed unit, when present, must match the unit the key is defined
    in (see ``UNITS``).
    """
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"line {n}: empty key or value")
        if value.endswith("]") and "[" in value:
            value, unit = value[:-1].split("[", 1)
            value, unit = value.strip(), unit.strip()
            base = "delta" if key == "deltas" else key
            if UNITS.get(base) != unit:
                raise ConfigError(f"line {n}: {key} is measured in {UNITS.get(base)!r}, "
                                  f"not {unit!r}")
        if key in out:
            raise ConfigError(f"line {n}: duplicate key {key!r}")
        out[key] = value
    return out


def config_from_mapping(m: dict) -> ExperimentConfig:
    kw, params = {}, {}
    for k, v in m.items():
        if k in ("delta", "deltas"):
            kw["deltas"] = tuple(_as_list(v))
        elif k in _CONFIG_FIELDS:
            kw[k] = v
        else:
            params[k] = v
    if "experiment" not in kw:
        raise ConfigError("config lacks an experiment name")
    try:
        for k in ("eps", "radius", "j0"):
            if kw.get(k) is not None:
                kw[k] = float(kw[k])
        for k in ("branches", "replicas", "seed", "workers"):
            if kw.get(k) is not None:
                kw[k] = int(kw[k])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return ExperimentConfig(params=params, **kw)


# --------------------------------------------------------------------------
# graphs and domains

def parse_domain(text: str) -> Domain:
    """'disk', 'disk:R', 'square' (unit square), 'rectangle:x0,y0,x1,y1' or 'polygon:x,y;...'."""
    kind, _, rest = str(text).partition(":")
    try:
        if kind == "disk":
            return Domain.disk(0j, float(rest) if rest else 1.0)
        if kind == "square":
            return Domain.rectangle(0, 0, 1, 1)
        if kind == "rectangle":
            x0, y0, x1, y1 = (float(v) for v in rest.split(","))
            return Domain.rectangle(x0, y0, x1, y1)
        if kind == "polygon":
            pts = [complex(*(float(c) for c in p.split(","))) for p in rest.split(";")]
            return Domain.polygon(pts)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad domain {text!r}: {exc}") from exc
    raise ConfigError(f"unknown domain {text!r}")


@lru_cache(maxsize=16)
def _lattice_cached(kind: str, domain: str, delta: str, jitter: float, seed: int) -> PlanarGraph:
    dom = parse_domain(domain)
    try:
        if kind == "perturbed":
            return build_perturbed_lattice(parse_delta(delta), dom, jitter, seed)
        return build_square_lattice(parse_delta(delta), dom)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _named(kind: str) -> str:
    # "g_ab.txt" names the built-in fixture unless such a file exists
    if kind.endswith(".txt") and not os.path.exists(kind):
        stem = os.path.basename(kind)[:-4]
        if stem in _NAMED_GRAPHS:
            return stem
    return kind


def load_graph(cfg: ExperimentConfig, delta: str | None, kind: str | None = None) -> PlanarGraph:
    kind = _named(kind or cfg.graph)
    if kind == "g_ab":
        return graph_ab()[0]
    if kind == "g_abc":
        return graph_abc()[0]
    if kind == "grid2x2":
        return wired_grid_2x2()
    if kind in ("square", "perturbed"):
        if delta is None:
            raise ConfigError("--delta is required")
        return _lattice_cached(kind, cfg.domain, str(delta),
                               float(cfg.params.get("jitter", 0.2)), cfg.seed)
    try:
        return PlanarGraph.load(kind)
    except OSError as exc:
        raise ConfigError(f"cannot read graph file {kind!r}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"malformed graph file {kind!r}: {exc}") from exc


def _vertex_names(cfg: ExperimentConfig) -> dict:
    kind = _named(cfg.graph)
    if kind == "g_ab":
        return graph_ab()[1]
    if kind == "g_abc":
        return graph_abc()[1]
    return {}


def _center_vertex(graph: PlanarGraph) -> int:
    inner = graph.interior
    if graph.domain is not None:
        x0, y0, x1, y1 = graph.domain.bbox
        c = complex((x0 + x1) / 2, (y0 + y1) / 2)
    else:
        c = graph.pos[inner].mean()
    return int(inner[np.argmin(np.abs(graph.pos[inner] - c))])


# --------------------------------------------------------------------------
# records

def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


@dataclass
class ExperimentRecord:
    config: dict
    replicas: list
    aggregate: dict
    verdicts: dict
    rows: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    version: str = __version__
    wall_clock: float = 0.0

    @property
    def passed(self) -> bool:
        return all(v is None or bool(v) for v in self.verdicts.values())

    def summary(self) -> dict:
        return _plain({"record": "summary", "config": self.config, "aggregate": self.aggregate,
                       "verdicts": self.verdicts, "passed": self.passed,
                       "notes": self.notes, "version": self.version})

    def to_jsonl(self) -> str:
        lines = [json.dumps(_plain({"record": "replica", "index": i, **r}))
                 for i, r in enumerate(self.replicas)]
        lines.append(json.dumps(self.summary()))
        return "".join(line + "\n" for line in lines)

    def to_csv(self) -> str:
        rows = [_plain(r) for r in (self.rows or [self.aggregate])]
        keys = []
        for r in rows:
            keys.extend(k for k in r if k not in keys and not isinstance(r[k], (list, dict)))
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=["experiment"] + keys, extrasaction="ignore",
                           lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({"experiment": self.config["experiment"], **r})
        return buf.getvalue()

    def write(self, out: str) -> dict:
        stem = out[:-6] if out.endswith(".jsonl") else out
        paths = {"jsonl": stem + ".jsonl", "csv": stem + ".csv",
                 "timing": stem + ".timing.json"}
        with open(paths["jsonl"], "w") as fh:
            fh.write(self.to_jsonl())
        with open(paths["csv"], "w") as fh:
            fh.write(self.to_csv())
        with open(paths["timing"], "w") as fh:
            json.dump({"wall_clock_seconds": self.wall_clock, "version": self.version}, fh)
            fh.write("\n")
        return paths


# --------------------------------------------------------------------------
# replica fan-out

def _seeds(seed: int, stage: int, n: int) -> list:
    return np.random.SeedSequence(seed, spawn_key=(stage,)).spawn(n)


def _run_chunk(fn, seeds):
    return [fn(np.random.default_rng(s)) for s in seeds]


def replicate(fn, seed: int, stage: int, n: int, workers: int = 1) -> list:
    """[fn(rng_i) for i < n] with one spawned stream per replica, ordered by index.

    With ``workers > 1`` the replicas are split into contiguous chunks on a
    process pool; ``fn`` must then be picklable.
    """
    seeds = _seeds(seed, stage, n)
    if workers <= 1 or n < 2 * workers:
        return _run_chunk(fn, seeds)
    size = math.ceil(n / workers)
    chunks = [seeds[i:i + size] for i in range(0, n, size)]
    with ProcessPoolExecutor(workers) as pool:
        parts = list(pool.map(partial(_run_chunk, fn), chunks))
    return [r for part in parts for r in part]


# --------------------------------------------------------------------------
# experiments

def experiment_verify_graph(cfg: ExperimentConfig) -> ExperimentRecord:
    """Standing assumptions on the graph: density, edge size and crossing estimate.

    The crossing check grades positivity (lower Wilson limit above
    ``crossing_min``) of the 3:1 rectangle crossing from the centre start.
    """
    p = cfg.params
    rows, verdicts, reps = [], {}, []
    for stage, t in enumerate(cfg.deltas):
        g = load_graph(cfg, t)
        dom = g.domain
        density = check_bounded_density(g)
        edge = max_edge_diameter(g)
        row = {"delta": t, "vertices": g.n_vertices, "interior": int(g.interior.size),
               "density": density, "max_edge": edge}
        cross = None
        if dom is not None:
            scale = float(p["scale"]) if p["scale"] else dom.diameter / 4
            x0, y0, x1, y1 = dom.bbox
            anchor = complex((x0 + x1) / 2, (y0 + y1) / 2) - scale * (1.5 + 0.5j)
            rng = np.random.default_rng(_seeds(cfg.seed, stage, 1)[0])
            try:
                cross = estimate_crossing_probability(g, anchor, scale, "horizontal", "center",
                                                      int(p["trials"]), rng)
            except ValueError:
                cross = None
        if cross is not None:
            row.update(crossing=cross.estimate, crossing_low=cross.low, crossing_high=cross.high)
            reps.extend({"delta": t, "start": s, "p": e, "low": lo, "high": hi}
                        for s, e, lo, hi in cross.per_start)
        rows.append(row)
        verdicts[f"density[{t}]"] = density <= int(p["density_max"])
        verdicts[f"edge[{t}]"] = edge <= float(p["edge_factor"]) * g.mesh * (1 + 1e-12)
        verdicts[f"crossing[{t}]"] = (cross.low >= float(p["crossing_min"])) if cross else None
    return ExperimentRecord(cfg.to_dict(), reps, {"graphs": rows}, verdicts, rows,
                            ["reachability of the boundary is checked when a graph is built"])


def experiment_oracle(cfg: ExperimentConfig) -> ExperimentRecord:
    g = load_graph(cfg, cfg.deltas[0])
    L = int(cfg.params["max_length"])
    total = total_loop_mass(g)
    classes = enumerate_loops(g, L)
    names = {v: k for k, v in _vertex_names(cfg).items()}
    table = []
    acc = 0.0
    for u, m in classes:
        acc += m
        table.append({"loop": ",".join(str(names.get(v, v)) for v in u.canonical),
                      "length": len(u), "multiplicity": u.multiplicity, "mass": m})
    tail = spectral_tail_bound(g, L)
    deficit = total - acc
    agg = {"total_mass": total, "enumerated_mass": acc, "classes": len(classes),
           "max_length": L, "deficit": deficit, "tail_bound": tail}
    verdicts = {"enumeration_within_tail": -1e-12 <= deficit <= tail + 1e-12}
    return ExperimentRecord(cfg.to_dict(), table, agg, verdicts, [agg])


def _parse_loop_class(cfg, g) -> UnrootedLoop | None:
    text = cfg.params.get("loop_class", "")
    if _named(cfg.graph) not in _NAMED_GRAPHS and text == _DEFAULTS["sample-soup"]["params"]["loop_class"]:
        text = ""
    if not text:
        return None
    names = _vertex_names(cfg)
    try:
        seq = [names[v] if v in names else int(v) for v in _as_list(text)]
    except ValueError as exc:
        raise ConfigError(f"bad loop class {text!r}") from exc
    if seq[0] == seq[-1] and len(seq) > 1:
        seq = seq[:-1]
    if any(not 0 <= v < g.n_vertices or g.is_boundary[v] for v in seq):
        raise ConfigError(f"loop class {text!r} leaves the interior")
    return UnrootedLoop.from_rooted(seq)


def _rep_soup(sampler, cls, eps, rng):
    soup = sampler.sample(rng)
    r = {"count": len(soup)}
    if cls is not None:
        r["class_count"] = int(class_counts(soup, [cls])[0])
    if eps is not None:
        r["macroscopic"] = soup.count_diameter_at_least(eps)
    return r


def experiment_sample_soup(cfg: ExperimentConfig) -> ExperimentRecord:
    p = cfg.params
    k = float(p["se_k"])
    rows, verdicts, reps = [], {}, []
    for stage, t in enumerate(cfg.deltas):
        g = load_graph(cfg, t)
        cls = _parse_loop_class(cfg, g)
        sampler = loop_soup_sampler(g, p["method"])
        out = replicate(partial(_rep_soup, sampler, cls, cfg.eps), cfg.seed, stage,
                        cfg.replicas, cfg.workers)
        counts = np.array([r["count"] for r in out])
        mass = total_loop_mass(g)
        m, se, lo, hi = mean_interval(counts)
        stat, pval, dof = poisson_gof(counts, mass)
        row = {"delta": t, "mean_count": m, "se": se, "low": lo, "high": hi,
               "expected": mass, "gof_stat": stat, "gof_p": pval, "gof_dof": dof}
        verdicts[f"mean[{t}]"] = abs(m - mass) <= k * se
        verdicts[f"poisson[{t}]"] = pval > float(p["gof_min_p"])
        if cls is not None:
            inc = np.array([r["class_count"] > 0 for r in out])
            ph = inc.mean()
            target = 1 - math.exp(-unrooted_loop_mass(g, cls))
            se_p = math.sqrt(target * (1 - target) / inc.size)
            wlo, whi = wilson_interval(int(inc.sum()), inc.size)
            row.update(inclusion=ph, inclusion_low=wlo, inclusion_high=whi,
                       inclusion_expected=target, inclusion_se=se_p)
            verdicts[f"inclusion[{t}]"] = abs(ph - target) <= k * se_p
        if cfg.eps is not None:
            row["macroscopic_mean"] = float(np.mean([r["macroscopic"] for r in out]))
        rows.append(row)
        reps.extend({"delta": t, **r} for r in out)
    return ExperimentRecord(cfg.to_dict(), reps, {"rows": rows}, verdicts, rows)


def _spanning_forests(g: PlanarGraph):
    """All wired spanning forests as parent tuples with their exact probabilities."""
    inner = g.interior
    if inner.size > 12:
        return None
    choices = []
    for v in inner:
        lo, hi = g.indptr[v], g.indptr[v + 1]
        choices.append(list(zip(g.indices[lo:hi].tolist(), g.q[lo:hi].tolist())))
    pos = {int(v): i for i, v in enumerate(inner)}
    forests = {}
    for combo in itertools.product(*choices):
        parent = [c[0] for c in combo]
        ok = True
        for i in range(inner.size):
            seen, v = set(), i
            while True:
                if v in seen:
                    ok = False
                    break
                seen.add(v)
                w = parent[v]
                if g.is_boundary[w]:
                    break
                v = pos[w]
            if not ok:
                break
        if ok:
            forests[tuple(parent)] = math.prod(c[1] for c in combo)
    z = sum(forests.values())
    return {k: v / z for k, v in forests.items()}


def _ordering(g: PlanarGraph, name: str) -> VertexOrdering:
    inner = g.interior
    if name == "index":
        return VertexOrdering(inner)
    if name == "reverse":
        return VertexOrdering(inner[::-1])
    if name == "good":
        return good_ordering(g)
    raise ConfigError(f"unknown ordering {name!r}")


def _rep_wilson(g, order, eps, rng):
    run = wilsons_algorithm(g, order, rng)
    out = {"tree": list(run.tree_key()), "branches": len(run.branches)}
    if eps is not None:
        pos = g.pos
        out["macroscopic"] = sum(1 for l in run.all_erased() if diameter(pos[l]) >= eps)
    return out


def experiment_wilson(cfg: ExperimentConfig) -> ExperimentRecord:
    p = cfg.params
    g = load_graph(cfg, cfg.deltas[0])
    names = _as_list(p["orderings"])
    exact = _spanning_forests(g)
    reps, rows, verdicts, hists = [], [], {}, []
    keys = sorted(exact) if exact else None
    for stage, name in enumerate(names):
        order = _ordering(g, name)
        out = replicate(partial(_rep_wilson, g, order, cfg.eps), cfg.seed, stage,
                        cfg.replicas, cfg.workers)
        row = {"ordering": name, "runs": len(out)}
        if exact:
            index = {k: i for i, k in enumerate(keys)}
            hist = np.zeros(len(keys))
            for r in out:
                hist[index[tuple(r["tree"])]] += 1
            tv = total_variation(hist, np.array([exact[k] for k in keys]))
            row.update(trees=len(keys), tv=tv)
            verdicts[f"tv[{name}]"] = tv <= float(p["tv_tol"])
            hists.append(hist)
            for r in out:
                r["tree"] = index[tuple(r["tree"])]
        else:
            for r in out:
                del r["tree"]
        if cfg.eps is not None:
            row["macroscopic_mean"] = float(np.mean([r["macroscopic"] for r in out]))
        rows.append(row)
        reps.extend({"ordering": name, **r} for r in out)
    agg = {"rows": rows}
    if len(hists) >= 2:
        stat, pval, dof = two_sample_chi2(hists[0], hists[1])
        agg.update(chi2=stat, chi2_p=pval, chi2_dof=dof)
        verdicts["orderings_compatible"] = pval > float(p["chi2_min_p"])
    return ExperimentRecord(cfg.to_dict(), reps, agg, verdicts, rows)


def _rep_greedy(g, order, eps, r, m, enforce, rng):
    branches, _ = greedy_algorithm(g, order, eps, r, m, rng, enforce_mesh=enforce)
    out = {"N": [b.N for b in branches], "error": [bool(b.error) for b in branches],
           "max_distance": 0.0, "sandwich": 0, "trigger": 0, "R": []}
    for b in branches:
        if b.error:
            continue
        ls = greedy_erased_loops(b)
        rep = coupling_report(b, ls)
        out["max_distance"] = max(out["max_distance"], rep.max_distance)
        out["sandwich"] += len(rep.sandwich_violations)
        out["trigger"] += len(rep.trigger_violations)
        out["R"].append(len(rep.R))
    return out


def experiment_greedy(cfg: ExperimentConfig) -> ExperimentRecord:
    p = cfg.params
    eps, r = float(cfg.eps), cfg.r_value()
    enforce = _truthy(p["enforce_mesh"])
    rows, verdicts, reps = [], {}, []
    notes = []
    for stage, t in enumerate(cfg.deltas):
        g = load_graph(cfg, t)
        order = good_ordering(g)
        out = replicate(partial(_rep_greedy, g, order, eps, r, cfg.branches, enforce),
                        cfg.seed, stage, cfg.replicas, cfg.workers)
        first_err = np.array([o["error"][0] for o in out])
        n_err = int(sum(sum(o["error"]) for o in out))
        clean = [o for o in out if not any(o["error"])]
        dmax = max((o["max_distance"] for o in out), default=0.0)
        sand = sum(o["sandwich"] for o in out)
        trig = sum(o["trigger"] for o in out)
        bound = error_probability_bound(eps, r, g.domain.diameter if g.domain else 1.0)
        elo, ehi = wilson_interval(int(first_err.sum()), first_err.size)
        mesh_ok = g.mesh < r / 100
        row = {"delta": t, "eps": eps, "r": r, "mesh_condition": mesh_ok,
               "replicas": len(out), "error_branches": n_err, "clean_replicas": len(clean),
               "max_distance": dmax, "sandwich_violations": sand, "trigger_violations": trig,
               "error_rate": float(first_err.mean()), "error_low": elo, "error_high": ehi,
               "error_bound": bound}
        rows.append(row)
        if p["check"] == "coupling":
            verdicts[f"coupling[{t}]"] = dmax <= 2 * eps
            verdicts[f"sandwich[{t}]"] = sand == 0
            verdicts[f"trigger[{t}]"] = trig == 0
        else:
            verdicts[f"error[{t}]"] = (ehi <= bound) if bound < 1 else None
        if not mesh_ok:
            notes.append(f"delta={t}: mesh is not below r/100 = {r / 100!r}; "
                         "distances are graded in runs without ERROR only")
        reps.extend({"delta": t, **o} for o in out)
    return ExperimentRecord(cfg.to_dict(), reps, {"rows": rows}, verdicts, rows, notes)


def _rep_couple(g, order, start, method, rng):
    direct = run_walk(g, start, rng).vertex_indices
    dcore = loop_erase(direct, g.n_vertices).core
    try:
        _, run, walks = couple_soup_to_branches(g, order, rng, method)
        ok = True
        walk = walks[0]
        rcore = run.branches[0]
    except AssertionError:
        ok, walk, rcore = False, np.zeros(1, np.int64), np.zeros(1, np.int64)
    return {"direct_core": dcore.tolist(), "direct_length": int(direct.size - 1),
            "core": rcore.tolist(), "length": int(walk.size - 1), "identity": ok}


def experiment_couple(cfg: ExperimentConfig) -> ExperimentRecord:
    """Walks rebuilt from a branch plus soup loops against directly simulated walks.

    Compares, per loop-erased core, the length distribution of the walk from
    ``start`` under both constructions.
    """
    p = cfg.params
    g = load_graph(cfg, cfg.deltas[0])
    names = _vertex_names(cfg)
    start = names.get(p["start"], p["start"])
    try:
        start = int(start)
    except ValueError as exc:
        raise ConfigError(f"bad start vertex {p['start']!r}") from exc
    if not 0 <= start < g.n_vertices or g.is_boundary[start]:
        raise ConfigError("start must be an interior vertex")
    inner = g.interior
    order = VertexOrdering(np.concatenate([[start], inner[inner != start]]))
    out = replicate(partial(_rep_couple, g, order, start, p["method"]), cfg.seed, 0,
                    cfg.replicas, cfg.workers)
    cap = int(p["length_cap"])
    identity = sum(o["identity"] for o in out)

    def hist(core_key, length_key):
        h = {}
        for o in out:
            if core_key == "core" and not o["identity"]:
                continue
            h.setdefault(tuple(o[core_key]), np.zeros(cap + 1))[min(o[length_key], cap)] += 1
        return h

    hd, hr = hist("direct_core", "direct_length"), hist("core", "length")
    rows, tvs = [], []
    for core in sorted(set(hd) | set(hr), key=lambda c: (len(c), c)):
        a, b = hd.get(core, np.zeros(cap + 1)), hr.get(core, np.zeros(cap + 1))
        row = {"core": ",".join(map(str, core)), "direct": int(a.sum()), "rebuilt": int(b.sum())}
        if min(a.sum(), b.sum()) >= int(p["min_count"]):
            row["tv"] = total_variation(a, b)
            tvs.append(row["tv"])
        rows.append(row)
    core_keys = sorted(set(hd) | set(hr), key=lambda c: (len(c), c))
    ca = np.array([hd.get(c, np.zeros(1)).sum() for c in core_keys])
    cb = np.array([hr.get(c, np.zeros(1)).sum() for c in core_keys])
    agg = {"rows": rows, "identity_rate": identity / len(out),
           "max_conditional_tv": max(tvs) if tvs else None, "graded_cores": len(tvs),
           "core_tv": total_variation(ca, cb)}
    verdicts = {"le_core_identity": identity == len(out),
                "conditional_tv": (max(tvs) <= float(p["tv_tol"])) if tvs else None}
    return ExperimentRecord(cfg.to_dict(), out, agg, verdicts, rows)


# convergence ----------------------------------------------------------------

def _parse_functional(cfg) -> Functional:
    text = str(cfg.params["functional"])
    eps = float(cfg.eps)
    if text == "diameter":
        return Functional("diameter", threshold=eps)
    if text.startswith("diameter:"):
        return Functional("diameter", threshold=float(text.split(":", 1)[1]))
    if text.startswith("touches:"):
        disks = []
        for part in text.split(":", 1)[1].split(";"):
            x, y, rad = (float(v) for v in part.split(","))
            disks.append((complex(x, y), rad))
        return Functional("touches", disks=tuple(disks), min_diameter=eps)
    raise ConfigError(f"unknown functional {text!r}")


def _rep_rwls(sampler, functional, rng):
    return {"count": functional.count(sampler.sample(rng))}


def _rep_bls(domain, functional, cut, eta, res, rng):
    return {"count": functional.count(sample_bls_restricted(domain, cut, eta, res, rng))}


def _subsample(z: np.ndarray, k: int) -> np.ndarray:
    if z.size <= k + 1:
        return z
    idx = np.unique(np.linspace(0, z.size - 1, k + 1).round().astype(int))
    return z[idx]


def _sampled_dm(soup_a, soup_b, eps: float, k: int) -> float:
    a = [_subsample(soup_a.loop_points(i), k) for i in np.flatnonzero(soup_a._diameter_mask(eps))]
    b = [_subsample(soup_b.loop_points(i), k) for i in np.flatnonzero(soup_b._diameter_mask(eps))]
    return loop_soup_distance(a, b, loop_distance=lambda x, y: unrooted_loop_distance(x, y, 2))[0]


def experiment_convergence(cfg: ExperimentConfig) -> ExperimentRecord:
    p = cfg.params
    func = _parse_functional(cfg)
    dom = parse_domain(cfg.domain)
    eta, res = float(p["eta"]), int(p["resolution"])
    cut = max(float(cfg.eps), func.min_diameter)
    rows, reps, est = [], [], []
    for stage, t in enumerate(cfg.deltas):
        g = load_graph(cfg, t)
        out = replicate(partial(_rep_rwls, loop_soup_sampler(g, p["method"]), func),
                        cfg.seed, stage, cfg.replicas, cfg.workers)
        m, se, lo, hi = mean_interval([o["count"] for o in out])
        est.append((t, m, se))
        rows.append({"source": "rwls", "delta": t, "mean": m, "se": se, "low": lo, "high": hi})
        reps.extend({"source": "rwls", "delta": t, **o} for o in out)
    stage = len(cfg.deltas)
    out = replicate(partial(_rep_bls, dom, func, cut, eta, res), cfg.seed, stage,
                    cfg.replicas, cfg.workers)
    bm, bse, blo, bhi = mean_interval([o["count"] for o in out])
    rows.append({"source": "bls", "delta": 0.0, "mean": bm, "se": bse, "low": blo, "high": bhi})
    reps.extend({"source": "bls", "delta": 0.0, **o} for o in out)

    verdicts = {}
    for (ta, ma, sa), (tb, mb, sb) in zip(est, est[1:]):
        verdicts[f"successive[{ta}|{tb}]"] = within_combined_se(ma, sa, mb, sb, 3.0)
    for (ta, ma, sa), (tb, mb, sb) in itertools.combinations(est, 2):
        verdicts[f"pairwise[{ta}|{tb}]"] = within_combined_se(ma, sa, mb, sb, 3.0)
    finest = min(est, key=lambda e: parse_delta(e[0]))
    verdicts[f"bls[{finest[0]}]"] = within_combined_se(finest[1], finest[2], bm, bse, 3.0)

    if p["universality"]:
        t = str(p["universality"])
        g = load_graph(cfg, t, "perturbed")
        out = replicate(partial(_rep_rwls, loop_soup_sampler(g, p["method"]), func),
                        cfg.seed, stage + 1, cfg.replicas, cfg.workers)
        um, use, ulo, uhi = mean_interval([o["count"] for o in out])
        rows.append({"source": "perturbed", "delta": t, "mean": um, "se": use,
                     "low": ulo, "high": uhi})
        reps.extend({"source": "perturbed", "delta": t, **o} for o in out)
        square = next((e for e in est if parse_delta(e[0]) == parse_delta(t)), None)
        if square is None:
            g2 = load_graph(cfg, t, "square")
            o2 = replicate(partial(_rep_rwls, loop_soup_sampler(g2, p["method"]), func),
                           cfg.seed, stage + 2, cfg.replicas, cfg.workers)
            square = (t, *mean_interval([o["count"] for o in o2])[:2])
        verdicts[f"universality[{t}]"] = within_combined_se(square[1], square[2], um, use, 3.0)

    dms = []
    k = int(p["dm_pairs"])
    if k > 0:
        g = load_graph(cfg, finest[0])
        rng = np.random.default_rng(_seeds(cfg.seed, stage + 3, 1)[0])
        sampler = loop_soup_sampler(g, p["method"])
        for _ in range(k):
            a = sampler.sample(rng)
            b = sample_bls_restricted(dom, cut, eta, res, rng)
            dms.append(_sampled_dm(a, b, cut, int(p["dm_points"])))
    agg = {"rows": rows, "functional": func.describe(), "bls_t_min_eta": eta,
           "sampled_dm": dms}
    notes = ["laws are compared through functional means and sampled d_M values only; "
             "no Levy-Prokhorov distance between laws is estimated",
             f"sampled d_M pairs independent samples with loops thinned to "
             f"{p['dm_points']} points; descriptive, not graded"]
    return ExperimentRecord(cfg.to_dict(), reps, agg, verdicts, rows, notes)


# greedy tail ------------------------------------------------------------------

def _rep_tail(g, start, eps, r, rng):
    px, py = g.xy
    c, e = kernels.greedy_iterations(g.indptr, g.indices, g.cumq, px, py, start,
                                     g.is_boundary.view(np.uint8), eps, r, 1, 10**8, rng)
    if c[0] < 0:
        raise RuntimeError("step cap exceeded")
    return {"N": int(c[0]), "error": bool(e[0])}


def experiment_tail(cfg: ExperimentConfig) -> ExperimentRecord:
    eps, r = float(cfg.eps), cfg.r_value()
    rows, reps, verdicts = [], [], {}
    agg = {}
    for stage, t in enumerate(cfg.deltas):
        g = load_graph(cfg, t)
        s = cfg.params["start"]
        start = _center_vertex(g) if s == "center" else int(s)
        out = replicate(partial(_rep_tail, g, start, eps, r), cfg.seed, stage,
                        cfg.replicas, cfg.workers)
        counts = np.array([o["N"] for o in out])
        diam = g.domain.diameter
        tab = tail_table(counts, eps, r, diam, cfg.K or None)
        for row in tab["rows"]:
            rows.append({"delta": t, **row})
        graded = [row for row in tab["rows"] if row["graded"]]
        verdicts[f"tail[{t}]"] = tab["all_pass"] if graded else None
        agg[t] = {"alpha": tab["alpha"], "beta": tab["beta"], "graded_K": len(graded),
                  "errors": int(sum(o["error"] for o in out)),
                  "validity_threshold": 2 * diam / r}
        reps.extend({"delta": t, **o} for o in out)
    return ExperimentRecord(cfg.to_dict(), reps, {"per_delta": agg}, verdicts, rows,
                            ["K is graded only above 2 diam(D) / r"])


# Schramm finiteness ---------------------------------------------------------------

def _rep_schramm(g, order, eps, rng):
    run = wilsons_algorithm(g, order, rng, track_walk_diameter=eps)
    return {"walk_diameters": [float(d) for d in run.walk_diameters]}


def experiment_schramm(cfg: ExperimentConfig) -> ExperimentRecord:
    """P(some walk after the first j good-ordering branches has diameter > eps)."""
    p = cfg.params
    eps = float(cfg.eps)
    js = [int(j) for j in _as_list(p["js"])]
    if not js or any(j < 0 for j in js):
        raise ConfigError("js must be nonnegative integers")
    js = sorted(js)
    rows, reps, verdicts = [], [], {}
    agg = {}
    for stage, t in enumerate(cfg.deltas):
        g = load_graph(cfg, t)
        order = good_ordering(g)
        out = replicate(partial(_rep_schramm, g, order, eps), cfg.seed, stage,
                        cfg.replicas, cfg.workers)
        curve = []
        for j in js + ["all"]:
            if j == "all":
                hits = 0
            else:
                hits = sum(1 for o in out if any(d > eps for d in o["walk_diameters"][j:]))
            lo, hi = wilson_interval(hits, len(out))
            curve.append({"delta": t, "j": j, "p": hits / len(out), "low": lo, "high": hi})
        rows.extend(curve)
        ps = [c["p"] for c in curve[:-1]]
        verdicts[f"nonincreasing[{t}]"] = all(a >= b for a, b in zip(ps, ps[1:]))
        verdicts[f"final_below_eps[{t}]"] = curve[-2]["high"] < eps
        jmax = math.floor(math.log(float(p["C"]) * float(p["delta0"]) / g.mesh, 6))
        agg[t] = {"j_max": jmax, "C": float(p["C"]), "delta0": float(p["delta0"]),
                  "branches_mean": float(np.mean([len(o["walk_diameters"]) for o in out]))}
        reps.extend({"delta": t, "branches": len(o["walk_diameters"]),
                     "last_large": max([i for i, d in enumerate(o["walk_diameters"]) if d > eps],
                                       default=-1)} for o in out)
    notes = ["trend check: the existential j0(eps) is not quantified; graded are the "
             "monotone curve and the upper Wilson limit at the largest j below eps",
             "j = 'all' is the trivial endpoint where no walk remains"]
    return ExperimentRecord(cfg.to_dict(), reps, {"per_delta": agg}, verdicts, rows, notes)


# boundary loops ---------------------------------------------------------------------

def _rep_boundary(sampler, dom, eps, rng):
    soup = sampler.sample(rng)
    idx = np.flatnonzero(soup._diameter_mask(eps))
    dist = [float(dom.distance_to_boundary(soup.loop_points(i)).min()) for i in idx]
    return {"macroscopic": int(idx.size), "min_distance": min(dist) if dist else None}


def experiment_boundary(cfg: ExperimentConfig) -> ExperimentRecord:
    """P(some loop of diameter >= eps comes within eta of the boundary)."""
    eps = float(cfg.eps)
    etas = sorted((float(e) for e in _as_list(cfg.params["etas"])), reverse=True)
    if not etas or any(e <= 0 for e in etas):
        raise ConfigError("etas must be positive")
    dom = parse_domain(cfg.domain)
    rows, reps, verdicts = [], [], {}
    for stage, t in enumerate(cfg.deltas):
        g = load_graph(cfg, t)
        out = replicate(partial(_rep_boundary, loop_soup_sampler(g, "walk"), dom, eps),
                        cfg.seed, stage, cfg.replicas, cfg.workers)
        any_macro = sum(1 for o in out if o["macroscopic"] > 0)
        curve = []
        for eta in etas:
            hits = sum(1 for o in out if o["min_distance"] is not None
                       and o["min_distance"] < eta)
            lo, hi = wilson_interval(hits, len(out))
            curve.append({"delta": t, "eta": eta, "p": hits / len(out), "low": lo, "high": hi})
        rows.extend(curve)
        ps = [c["p"] for c in curve]
        verdicts[f"monotone[{t}]"] = all(a >= b for a, b in zip(ps, ps[1:]))
        if etas[0] >= dom.diameter:
            verdicts[f"vacuous_eta[{t}]"] = curve[0]["p"] == any_macro / len(out)
        calibrated = next((c["eta"] for c in curve if c["high"] <= eps), None)
        verdicts[f"calibrated[{t}]"] = calibrated is not None
        rows[-1]["calibrated_eta"] = calibrated
        reps.extend({"delta": t, **o} for o in out)
    return ExperimentRecord(cfg.to_dict(), reps, {"rows": rows}, verdicts, rows,
                            ["calibrated eta: largest grid value whose upper Wilson limit "
                             "is at most eps"])


# Appendix A bounds ---------------------------------------------------------------------

def _appendix_configs(cfg) -> list:
    out = []
    for item in _as_list(cfg.params["configs"]):
        try:
            th, n = item.split(":")
            out.append((float(th), int(n)))
        except ValueError as exc:
            raise ConfigError(f"bad theta:N pair {item!r}") from exc
    if not out:
        raise ConfigError("configs must be nonempty")
    for th, n in out:
        if not 0 < th < 2 or n < 2:
            raise ConfigError("need 0 < theta < 2 and N >= 2")
    return out


def appendix_bounds(area: float, eps: float, theta: float, N: int) -> dict:
    """Analytic upper bounds on P(E(eps)) and P(E^{#1/N}(eps)).

    ``bls`` follows the chain of estimates with the lifetime cut N^(theta-2);
    ``bls_printed`` is the same expression with N^(2 theta) in the exponent.
    """
    c = area * 16 / (math.pi * eps * eps)
    return {"bls": c * math.exp(-eps * eps / 4 * N ** (2 - theta)),
            "bls_printed": c * math.exp(-eps * eps / 4 * N ** (2 * theta)),
            "rwls": 4 * area * N ** (2 + theta) * math.exp(-eps * eps / 32 * N ** (2 - theta))}


def _rep_appendix_rwls(sampler, eps, caps, rng):
    soup = sampler.sample(rng)
    lens = soup.lengths()
    keep = lens <= max(caps)
    if not keep.any():
        return {"hit": [False] * len(caps)}
    sub = soup.subset(keep)
    big = sub._diameter_mask(eps)
    L = sub.lengths()[big]
    return {"hit": [bool(np.any(L <= c)) for c in caps]}


def _rep_appendix_bls(dom, eps, tmax, eta, res, cuts, rng):
    soup, samples = sample_bls_restricted(dom, eps, eta, res, rng, t_max=tmax,
                                          return_samples=True)
    life = np.array([s.lifetime for s in samples])
    return {"hit": [bool(np.any(life <= c)) for c in cuts]}


def experiment_appendix_a(cfg: ExperimentConfig) -> ExperimentRecord:
    eps = float(cfg.eps)
    dom = parse_domain(cfg.domain)
    configs = _appendix_configs(cfg)
    eta, res = float(cfg.params["eta"]), int(cfg.params["resolution"])
    rows, reps, verdicts = [], [], {}
    # smallest bound an upper Wilson limit can certify with this many replicas
    resolution = wilson_interval(0, cfg.replicas)[1]
    for stage, N in enumerate(sorted({n for _, n in configs})):
        thetas = [th for th, n in configs if n == N]
        g = load_graph(cfg, f"1/{N}", "square")
        caps = [2 * N ** th for th in thetas]            # |gamma| <= 2 N^theta steps
        cuts = [N ** (th - 2.0) for th in thetas]        # lifetime <= N^(theta - 2)
        rw = replicate(partial(_rep_appendix_rwls, loop_soup_sampler(g, "walk"), eps, caps),
                       cfg.seed, 2 * stage, cfg.replicas, cfg.workers)
        bl = replicate(partial(_rep_appendix_bls, dom, eps, max(cuts), eta, res, cuts),
                       cfg.seed, 2 * stage + 1, cfg.replicas, cfg.workers)
        for k, th in enumerate(thetas):
            b = appendix_bounds(dom.area, eps, th, N)
            for src, out, bound in (("bls", bl, b["bls"]), ("rwls", rw, b["rwls"])):
                hits = sum(o["hit"][k] for o in out)
                lo, hi = wilson_interval(hits, len(out))
                graded = resolution < bound < 1
                row = {"source": src, "N": N, "theta": th, "p": hits / len(out), "low": lo,
                       "high": hi, "bound": bound, "graded": graded,
                       "status": "graded" if graded else
                       ("vacuous" if bound >= 1 else "below resolution"),
                       "pass": (hi <= bound) if graded else None}
                if src == "bls":
                    row["bound_printed"] = b["bls_printed"]
                rows.append(row)
                verdicts[f"{src}[N={N},theta={th}]"] = row["pass"]
        reps.extend({"N": N, "thetas": thetas, "bls": o1["hit"], "rwls": o2["hit"]}
                    for o1, o2 in zip(bl, rw))
    notes = ["bounds >= 1 are vacuous and bounds below the upper Wilson limit at zero "
             "hits cannot be certified; both are marked ungraded",
             "the BLS bound uses the exponent N^(2 - theta) from its chain of estimates; "
             "bound_printed reports the N^(2 theta) variant"]
    return ExperimentRecord(cfg.to_dict(), reps, {"rows": rows}, verdicts, rows, notes)


RUNNERS = {
    "verify-graph": experiment_verify_graph,
    "oracle": experiment_oracle,
    "sample-soup": experiment_sample_soup,
    "wilson": experiment_wilson,
    "greedy": experiment_greedy,
    "couple": experiment_couple,
    "compare": experiment_convergence,
    "tail": experiment_tail,
    "schramm": experiment_schramm,
    "boundary": experiment_boundary,
    "appendix-a": experiment_appendix_a,
}


def run_experiment(cfg: ExperimentConfig) -> ExperimentRecord:
    cfg = cfg.resolved()
    t0 = time.perf_counter()
    rec = RUNNERS[cfg.experiment](cfg)
    rec.wall_clock = time.perf_counter() - t0
    return rec
