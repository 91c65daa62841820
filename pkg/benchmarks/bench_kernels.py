"""Time the hot kernels with numba and with the pure-Python fallback.

Each backend runs in its own interpreter because the switch is read at
import time.  Usage: python3 benchmarks/bench_kernels.py [--quick]
"""
import argparse
import json
import os
import subprocess
import sys

CASES = r"""
import json, time
import numpy as np
from loopsoup import Domain, backend, build_square_lattice, frechet_distance, loop_erase, run_walk
from loopsoup.greedy import iteration_tail
from loopsoup.soup import WalkSampler

quick = QUICK
g = build_square_lattice(1/32 if quick else 1/64, Domain.disk())
center = int(np.argmin(np.abs(g.pos) + 10 * g.is_boundary))
res = {"backend": backend()}

def timed(name, fn, reps):
    fn()  # warm-up (compilation or cache load)
    t = time.perf_counter()
    for _ in range(reps):
        fn()
    res[name] = (time.perf_counter() - t) / reps

rng = np.random.default_rng(0)
timed("walk+erase", lambda: loop_erase(run_walk(g, center, rng).vertex_indices, g.n_vertices),
      20 if quick else 50)
ws = WalkSampler(g)
timed("soup (walk sampler)", lambda: ws.sample(rng), 2 if quick else 5)
timed("greedy iterations x100", lambda: iteration_tail(g, center, 0.8, 0.4, 100, rng), 2)
z = np.exp(2j * np.pi * np.linspace(0, 1, 60))
timed("frechet 60x60", lambda: frechet_distance(z, 1.1 * z[::-1]), 3)
print(json.dumps(res))
"""


def run(flag: str, quick: bool) -> dict:
    env = dict(os.environ, LOOPSOUP_NO_NUMBA=flag)
    code = CASES.replace("QUICK", "True" if quick else "False")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True).stdout
    return json.loads(out.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true", help="smaller lattice and fewer repeats")
    args = ap.parse_args()
    fast = run("0", args.quick)
    slow = run("1", args.quick)
    print(f"{'kernel':<26}{'numba [s]':>12}{'python [s]':>12}{'speedup':>10}")
    for k in fast:
        if k == "backend":
            continue
        print(f"{k:<26}{fast[k]:>12.4g}{slow[k]:>12.4g}{slow[k] / fast[k]:>10.1f}")


if __name__ == "__main__":
    main()
