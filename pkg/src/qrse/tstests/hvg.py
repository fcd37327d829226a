"""Horizontal visibility graphs.

Nodes ``i < j`` are linked iff every intermediate value is strictly below
``min(x[i], x[j])``; an intermediate value equal to an endpoint blocks the
link. Edges are stored once, oriented forward in time.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from ..errors import InsufficientDataError


def hvg_edges(series) -> np.ndarray:
    """Edge list ``(i, j)``, ``i < j``, built with a monotonic stack in O(n)."""
    x = np.asarray(series, dtype=float).tolist()
    src, dst = [], []
    stack = []
    for j, xj in enumerate(x):
        while stack and x[stack[-1]] < xj:
            src.append(stack.pop())
            dst.append(j)
        if stack:
            src.append(stack[-1])
            dst.append(j)
            if x[stack[-1]] == xj:
                stack.pop()
        stack.append(j)
    return np.column_stack([np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64)])


def hvg_degrees(series) -> np.ndarray:
    """Undirected degree of every node."""
    e = hvg_edges(series)
    return np.bincount(e.ravel(), minlength=len(series))


@dataclass(frozen=True)
class HvgGraph:
    n: int
    edges: np.ndarray
    in_degree: np.ndarray      # links from the past (retarded degree)
    out_degree: np.ndarray     # links to the future (advanced degree)
    clustering: np.ndarray
    retarded_clustering: np.ndarray
    advanced_clustering: np.ndarray

    @property
    def degree(self) -> np.ndarray:
        return self.in_degree + self.out_degree

    def adjacency(self) -> sparse.csr_matrix:
        """Directed (forward-in-time) adjacency matrix."""
        ones = np.ones(len(self.edges))
        return sparse.csr_matrix((ones, (self.edges[:, 0], self.edges[:, 1])), shape=(self.n, self.n))


def _ratio(num, den):
    out = np.zeros(len(num))
    ok = den > 0
    out[ok] = num[ok] / den[ok]
    return out


def hvg_build(series) -> HvgGraph:
    """Build the HVG and its time-directed degree and clustering sequences.

    A triangle ``a < b < c`` counts towards the retarded clustering of ``c``
    (both partners in its past) and the advanced clustering of ``a``. Nodes
    with fewer than two neighbours on the relevant side get clustering 0.
    """
    n = len(series)
    if n < 3:
        raise InsufficientDataError("HVG needs at least 3 points")
    edges = hvg_edges(series)
    upper = sparse.csr_matrix((np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(n, n))
    tri = (upper @ upper).multiply(upper)
    as_first = np.asarray(tri.sum(axis=1)).ravel()
    as_last = np.asarray(tri.sum(axis=0)).ravel()
    out_deg = np.bincount(edges[:, 0], minlength=n)
    in_deg = np.bincount(edges[:, 1], minlength=n)
    deg = in_deg + out_deg

    full = upper + upper.T
    all_tri = np.asarray((full @ full).multiply(full).sum(axis=1)).ravel() / 2.0
    clustering = _ratio(all_tri, deg * (deg - 1) / 2.0)
    retarded = _ratio(as_last, in_deg * (in_deg - 1) / 2.0)
    advanced = _ratio(as_first, out_deg * (out_deg - 1) / 2.0)
    return HvgGraph(n, edges, in_deg, out_deg, clustering, retarded, advanced)


def iid_degree_law(k) -> np.ndarray:
    """HVG degree distribution of an i.i.d. series: ``(1/3) (2/3)^(k-2)``, ``k >= 2``."""
    k = np.asarray(k, dtype=float)
    return np.where(k >= 2, (1.0 / 3.0) * (2.0 / 3.0) ** (k - 2), 0.0)
