"""Gauss-Legendre rules on intervals and on time-ordered simplices."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = ["SimplexGrid", "composite_gauss_legendre", "gauss_legendre", "panel_count", "simplex_grid"]


@lru_cache(maxsize=64)
def _leggauss(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return (x + 1.0) / 2.0, w / 2.0  # mapped to [0, 1]


def gauss_legendre(order: int, a: float, b: float):
    """Nodes and weights of the `order`-point rule on ``[a, b]``."""
    if order < 1:
        raise ValueError("quadrature order must be positive")
    x, w = _leggauss(order)
    return a + (b - a) * x, (b - a) * w


def composite_gauss_legendre(a: float, b: float, order: int, panels: int):
    """`panels` equal sub-intervals of ``[a, b]``, each with an `order`-point rule."""
    if panels < 1:
        raise ValueError("need at least one panel")
    x, w = _leggauss(order)
    h = (b - a) / panels
    starts = a + h * np.arange(panels)
    nodes = (starts[:, None] + h * x[None, :]).ravel()
    weights = np.tile(h * w, panels)
    return nodes, weights


def panel_count(length: float, rate: float, per_panel: float = 1.0) -> int:
    """Panels needed so each covers at most `per_panel` radians at angular `rate`."""
    if length <= 0:
        return 1
    return max(1, math.ceil(abs(length) * max(rate, 1e-12) / per_panel))


@dataclass(frozen=True)
class SimplexGrid:
    """Product quadrature on ``{0 <= z_1 <= ... <= z_dim <= t}``.

    Built from `order`-point Gauss-Legendre rules on the unit cube mapped
    through ``z_dim = t u_dim``, ``z_j = z_{j+1} u_j``.  The Jacobian is a
    polynomial of degree ``dim - 1`` per axis, so the weights reproduce the
    simplex volume ``t**dim / dim!`` exactly once ``order >= dim / 2``.
    """

    dim: int
    t: float
    order: int
    nodes: np.ndarray  # (N, dim), columns z_1..z_dim
    weights: np.ndarray  # (N,)

    @property
    def n(self) -> int:
        """Dyson order whose integral lives on this grid (``dim = n + 1``)."""
        return self.dim - 1

    def __len__(self) -> int:
        return len(self.weights)

    def with_origin(self) -> np.ndarray:
        """Nodes with the fixed time ``z_0 = 0`` prepended, shape ``(N, dim + 1)``."""
        return np.hstack([np.zeros((len(self.weights), 1)), self.nodes])


def simplex_grid(dim: int, t: float, order: int = 12) -> SimplexGrid:
    if dim < 1:
        raise ValueError("simplex dimension must be >= 1")
    if t < 0:
        raise ValueError("simplex horizon must be non-negative")
    x, w = _leggauss(order)
    mesh = np.stack(np.meshgrid(*([x] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
    wmesh = np.prod(np.stack(np.meshgrid(*([w] * dim), indexing="ij"), axis=-1).reshape(-1, dim), axis=1)
    z = np.empty_like(mesh)
    jac = np.full(len(mesh), float(t))
    z[:, dim - 1] = t * mesh[:, dim - 1]
    for j in range(dim - 2, -1, -1):
        z[:, j] = z[:, j + 1] * mesh[:, j]
        jac *= z[:, j + 1]
    return SimplexGrid(dim=dim, t=float(t), order=order, nodes=z, weights=wmesh * jac)
