"""Chronological loop erasure and the decomposition of a path into its
self-avoiding core and the erased loops."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels


@dataclass
class ErasureDecomposition:
    path: np.ndarray
    starts: np.ndarray
    lasts: np.ndarray

    @property
    def core(self) -> np.ndarray:
        return self.path[self.starts]

    @property
    def S(self) -> int:
        return self.starts.size - 1

    @property
    def last_visit_times(self) -> np.ndarray:
        """T_0 .. T_{S-1}."""
        return self.lasts[:-1]

    @property
    def erased_loops(self) -> list:
        """l_0 .. l_{S-1}; l_k is rooted at core[k], trivial loops have one vertex."""
        return [self.path[a:b + 1] for a, b in zip(self.starts[:-1], self.lasts[:-1])]

    @property
    def terminal_loop(self) -> np.ndarray:
        """Loop at the final core vertex; trivial unless the path ends on a revisit."""
        return self.path[self.starts[-1]:self.lasts[-1] + 1]

    def reassemble(self) -> np.ndarray:
        parts = []
        for a, b in zip(self.starts, self.lasts):
            parts.append(self.path[a:b + 1])
        return np.concatenate(parts)


def _as_array(path):
    if hasattr(path, "vertex_indices"):
        path = path.vertex_indices
    return np.ascontiguousarray(path, dtype=np.int64)


def loop_erase(path, n_vertices: int | None = None) -> ErasureDecomposition:
    x = _as_array(path)
    if x.size == 0:
        raise ValueError("path must be nonempty")
    if n_vertices is None:
        n_vertices = int(x.max()) + 1
    starts, lasts = kernels.loop_erase_indices(x, int(n_vertices))
    return ErasureDecomposition(x, starts, lasts)


def last_visit(path, k: int) -> int:
    """Last index at which the path visits core vertex k (k = S gives the end)."""
    dec = path if isinstance(path, ErasureDecomposition) else loop_erase(path)
    if not 0 <= k <= dec.S:
        raise IndexError("core index out of range")
    return int(dec.lasts[k])
