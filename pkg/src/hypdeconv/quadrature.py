"""Composite Gauss-Legendre quadrature helpers used across the package."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=32)
def _reference_rule(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def gauss_legendre_panels(a: float, b: float, n_panels: int, order: int = 8):
    """Nodes and weights for `n_panels` equal Gauss-Legendre panels on [a, b]."""
    edges = np.linspace(a, b, n_panels + 1)
    return gauss_legendre_cells(edges, order)


def gauss_legendre_cells(edges, order: int = 8):
    """Gauss-Legendre nodes/weights on the panels delimited by `edges` (ascending)."""
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2:
        raise ValueError("need at least two panel edges")
    x, w = _reference_rule(order)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * np.diff(edges)
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights
