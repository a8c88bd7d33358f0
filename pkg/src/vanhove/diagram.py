"""Diagrammatic form of the Dyson kernels.

``K_n(t)`` is written as a sum over index subsets ``A`` of ``{0, ..., n+1}``
(which ``W`` factors sit right of ``sigma``) and over interval partitions
``d`` of ``(0, ..., n+1)`` into blocks of length >= 2 (which ``V`` factors
share one bath expectation).  The name "noncrossing partition" is kept for
these interval compositions.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .dyson import _check_times
from .model import SystemBathModel, heisenberg_V, heisenberg_W, validate
from .nz import ProjectionPair
from .opcore import commutator_superop, propagator, superop_norm_estimate
from .quadrature import SimplexGrid, simplex_grid

__all__ = [
    "DiagramTerm",
    "NoncrossingPartition",
    "diagram_integrand",
    "diagram_integrand_reduced",
    "diagram_terms",
    "enumerate_nc",
    "g_n",
    "k_n_combinatorial",
    "nc_count",
    "rearrange",
    "render_diagram",
    "verify_pqp_expansion",
]

MAX_G_ORDER = 6


@dataclass(frozen=True)
class NoncrossingPartition:
    """Ordered contiguous blocks covering ``(0, ..., n)``, each of length >= 2."""

    n: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        blocks = tuple(tuple(int(k) for k in b) for b in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        flat = [k for b in blocks for k in b]
        if flat != list(range(self.n + 1)):
            raise ValueError(f"blocks {blocks} do not concatenate to (0, ..., {self.n})")
        for b in blocks:
            if len(b) < 2:
                raise ValueError(f"block {b} has length 1; every block needs length >= 2")

    @classmethod
    def from_lengths(cls, lengths) -> "NoncrossingPartition":
        ends = np.cumsum(lengths)
        starts = ends - np.asarray(lengths)
        return cls(int(ends[-1]) - 1, tuple(tuple(range(a, b)) for a, b in zip(starts, ends)))

    @classmethod
    def parse(cls, spec: str) -> "NoncrossingPartition":
        """Parse ``"0-1/2-5"`` (blocks as inclusive ranges separated by ``/``)."""
        blocks = []
        for part in spec.split("/"):
            lo, sep, hi = part.strip().partition("-")
            if not sep:
                raise ValueError(f"block {part!r} is a single index; every block needs length >= 2")
            blocks.append(tuple(range(int(lo), int(hi) + 1)))
        return cls(blocks[-1][-1] if blocks[-1] else -1, tuple(blocks))

    @property
    def size(self) -> int:
        return len(self.blocks)

    @property
    def lengths(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.blocks)

    def __str__(self) -> str:
        return "".join("(" + ",".join(map(str, b)) + ")" for b in self.blocks)


def _compositions(total: int):
    if total == 0:
        yield ()
        return
    for first in range(2, total + 1):
        for rest in _compositions(total - first):
            yield (first,) + rest


@lru_cache(maxsize=None)
def enumerate_nc(n: int) -> tuple[NoncrossingPartition, ...]:
    """All interval partitions of ``(0, ..., n)`` with blocks of length >= 2."""
    if n < 1:
        raise ValueError("NC_n needs n >= 1")
    return tuple(NoncrossingPartition.from_lengths(c) for c in _compositions(n + 1))


def nc_count(n: int) -> int:
    """``|NC_n|`` from the recurrence ``c(m) = sum_{k >= 2} c(m - k)`` over ``m = n + 1`` points."""
    c = [1, 0]
    for m in range(2, n + 2):
        c.append(sum(c[m - k] for k in range(2, m + 1)))
    return c[n + 1]


def rearrange(block, A) -> tuple[int, ...]:
    """Members of `block` in `A` ascending, then the others descending."""
    A = set(A)
    inside = sorted(k for k in block if k in A)
    outside = sorted((k for k in block if k not in A), reverse=True)
    return tuple(inside + outside)


def _subsets(m):
    """All subsets of ``range(m)`` in a fixed order (by bitmask)."""
    for mask in range(1 << m):
        yield tuple(k for k in range(m) if mask >> k & 1)


class _Correlators:
    """Cache of ``tr(V_{k_1} ... V_{k_r} omega_R)`` over a batch of time vectors."""

    def __init__(self, model, z):
        self.omega = model.omega_r
        self.vz = [heisenberg_V(model, z[:, k]) for k in range(z.shape[1])]
        self.cache = {}

    def __call__(self, order):
        if order not in self.cache:
            vec = np.broadcast_to(self.omega, (self.vz[0].shape[0], len(self.omega)))
            for k in reversed(order):
                vec = np.einsum("nij,nj->ni", self.vz[k], vec)
            self.cache[order] = vec @ self.omega.conj()
        return self.cache[order]


def _g_batch(corr, n, A):
    g = 0.0
    for d in enumerate_nc(n + 1):
        term = (-1.0) ** (d.size + 1)
        for block in d.blocks:
            term = term * corr(rearrange(block, A))
        g = g + term
    return g


def g_n(model: SystemBathModel, A, z) -> complex:
    """``G_n(A, z) = sum_d (-1)^{|d|+1} prod_s tr(prod_{k in d_s^A} V(z_k) omega_R)``."""
    z = _check_times(z)
    n = z.shape[1] - 2
    if n < 1:
        raise ValueError("need z = (z_0, ..., z_{n+1}) with n >= 1")
    if n > MAX_G_ORDER:
        raise ValueError(f"G_n evaluation capped at n <= {MAX_G_ORDER}")
    if any(k < 0 or k > n + 1 for k in A):
        raise ValueError(f"A must be a subset of {{0, ..., {n + 1}}}")
    out = _g_batch(_Correlators(model, z), n, tuple(A))
    return complex(out[0]) if len(z) == 1 else out


@dataclass(frozen=True)
class DiagramTerm:
    A: tuple[int, ...]
    coefficient: np.ndarray  # (-1)^|A| G_n(A, z), one per time vector
    left: np.ndarray  # W(z_j) for j not in A, descending
    right: np.ndarray  # W(z_k) for k in A, ascending

    def apply(self, sigma) -> np.ndarray:
        """``coefficient * left @ sigma @ right`` for each time vector."""
        return self.coefficient[:, None, None] * (self.left @ sigma @ self.right)


def _ordered_w(wz, idx, d_s, N):
    out = np.broadcast_to(np.eye(d_s, dtype=complex), (N, d_s, d_s))
    for k in idx:
        out = out @ wz[k]
    return out


def diagram_terms(model: SystemBathModel, z) -> list[DiagramTerm]:
    """One term per subset ``A`` of ``{0, ..., n+1}`` for a batch of time vectors."""
    z = _check_times(z)
    N, m = z.shape
    n = m - 2
    if n < 1 or n > MAX_G_ORDER:
        raise ValueError(f"diagram terms need 1 <= n <= {MAX_G_ORDER}")
    corr = _Correlators(model, z)
    wz = [heisenberg_W(model, z[:, k]) for k in range(m)]
    terms = []
    for A in _subsets(m):
        Abar = [j for j in range(m) if j not in A]
        coef = (-1.0) ** len(A) * _g_batch(corr, n, A)
        left = _ordered_w(wz, reversed(Abar), model.d_s, N)
        right = _ordered_w(wz, A, model.d_s, N)
        terms.append(DiagramTerm(A, np.asarray(coef), left, right))
    return terms


def diagram_integrand_reduced(model: SystemBathModel, z) -> np.ndarray:
    """``sum_A (-1)^|A| G_n(A, z) [sigma -> L_A sigma R_A]`` as ``(N, d_s**2, d_s**2)``."""
    z = _check_times(z)
    d2 = model.d_s**2
    out = np.zeros((len(z), d2, d2), dtype=complex)
    for term in diagram_terms(model, z):
        # sigma -> L sigma R is kron(R.T, L) under column stacking
        kr = np.einsum("nij,nkl->njkil", term.right, term.left).reshape(len(z), d2, d2)
        out += term.coefficient[:, None, None] * kr
    return out


def diagram_integrand(model: SystemBathModel, pair: ProjectionPair, z) -> np.ndarray:
    """Full-space superoperator ``rho -> sum_A ... (tr_R rho) ... (x) omega_R``."""
    z = np.asarray(z, dtype=float)
    if z.ndim != 1:
        raise ValueError("need a single time vector (z_0, ..., z_{n+1})")
    return pair.embed @ diagram_integrand_reduced(model, z)[0] @ pair.ptrace


def k_n_combinatorial(
    model: SystemBathModel, pair: ProjectionPair, n: int, t: float, grid: SimplexGrid | None = None, reduced: bool = False
) -> np.ndarray:
    """``K_n(t)`` from the diagram expansion, integrated on `grid`."""
    if n < 1:
        raise ValueError("order must be >= 1")
    validate(model)
    if grid is None:
        grid = simplex_grid(n + 1, t)
    if grid.dim != n + 1:
        raise ValueError(f"grid has dimension {grid.dim}, need {n + 1}")
    nodes = grid.with_origin()
    d2 = model.d_s**2
    acc = np.zeros((d2, d2), dtype=complex)
    for lo in range(0, len(nodes), 4096):
        vals = diagram_integrand_reduced(model, nodes[lo : lo + 4096])
        acc += np.tensordot(grid.weights[lo : lo + 4096], vals, axes=1)
    return acc if reduced else pair.embed @ acc @ pair.ptrace


def verify_pqp_expansion(model: SystemBathModel, pair: ProjectionPair, n: int, z) -> float:
    """Probe-norm residual of

        P L(z_{n+1}) Q ... Q L(z_0) P  -  sum_d (-1)^{|d|+1} prod_{j=|d|..1} (P prod_{k in reversed d_j} L(z_k) P)

    with full superoperators ``L(z) = e^{izL_0} L_SR e^{-izL_0}``.
    """
    z = np.asarray(z, dtype=float)
    if z.shape != (n + 2,):
        raise ValueError(f"need n + 2 = {n + 2} times")
    l0 = commutator_superop(model.h0)
    lsr = commutator_superop(model.h_int)
    lz = [propagator(l0, -zk) @ lsr @ propagator(l0, zk) for zk in z]
    P, Q = pair.P, pair.Q
    lhs = P
    for k in range(n + 2):
        lhs = lz[k] @ lhs
        lhs = (Q if k < n + 1 else P) @ lhs
    rhs = np.zeros_like(lhs)
    for d in enumerate_nc(n + 1):
        prod = np.eye(P.shape[0], dtype=complex)
        for block in reversed(d.blocks):
            chain = P
            for k in reversed(block):
                chain = chain @ lz[k]
            prod = prod @ chain @ P
        rhs += (-1.0) ** (d.size + 1) * prod
    return superop_norm_estimate(lhs - rhs)


# -- rendering ----------------------------------------------------------------------

_COL = 5


def _fmt_set(A):
    return "{" + ",".join(map(str, sorted(A))) + "}"


def render_diagram(n: int, A, d) -> str:
    """Text picture of one ``(A, d)`` term of ``K_n``.

    The top rail is the operator string around sigma; the middle rows place
    each time index left (``L``) or right (``R``) of sigma; the bottom rail
    joins the indices of each block of `d` into one bath expectation.
    """
    m = n + 2
    A = tuple(sorted(set(int(a) for a in A)))
    if any(a < 0 or a >= m for a in A):
        raise ValueError(f"A must be a subset of {{0, ..., {n + 1}}}")
    if not isinstance(d, NoncrossingPartition):
        d = NoncrossingPartition(n + 1, tuple(tuple(b) for b in d))
    if d.n != n + 1:
        raise ValueError(f"d partitions (0, ..., {d.n}); need (0, ..., {n + 1})")
    Abar = [j for j in range(m) if j not in A]
    left = " ".join(f"W{j}" for j in reversed(Abar))
    right = " ".join(f"W{k}" for k in A)
    rail = " ".join(s for s in (left, "[sigma]", right) if s)
    owner = {k: s for s, b in enumerate(d.blocks) for k in b}

    def row(label, cells):
        return f"{label:<7}" + "".join(cells).rstrip()

    times = [f"{k:<{_COL}}" for k in range(m)]
    sides = [f"{'R' if k in A else 'L':<{_COL}}" for k in range(m)]
    arcs = []
    for k in range(m):
        cont = k + 1 < m and owner[k + 1] == owner[k]
        arcs.append("+" + ("-" * (_COL - 1) if cont else " " * (_COL - 1)))
    labels = [f"{owner[k] + 1:<{_COL}}" for k in range(m)]
    lines = [
        f"n = {n}   A = {_fmt_set(A)}   d = {d}",
        f"W rail  {rail}",
        row("time", times),
        row("side", sides),
        row("V arcs", arcs),
        row("block", labels),
    ]
    for s, block in enumerate(d.blocks, start=1):
        order = rearrange(block, A)
        vs = " ".join(f"V{k}" for k in order)
        lines.append(f"d_{s}^A = ({','.join(map(str, order))})   tr({vs} omega_R)")
    sa = "+" if len(A) % 2 == 0 else "-"
    sd = "+" if d.size % 2 == 1 else "-"
    lines.append(f"signs   (-1)^|A| = {sa}1   (-1)^(|d|+1) = {sd}1")
    return "\n".join(lines) + "\n"
