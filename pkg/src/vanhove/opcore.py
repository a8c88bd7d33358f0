"""Dense operator and superoperator arithmetic.

Operators are plain ``numpy`` complex arrays of shape ``(d, d)``.  A
superoperator acting on ``d x d`` operators is a ``(d**2, d**2)`` array in
the column-stacking convention::

    vec(A X B) = (B.T kron A) vec(X)

which is the only vectorization used anywhere in the package.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.linalg

__all__ = [
    "DimensionError",
    "NumericError",
    "Operator",
    "SuperOperator",
    "apply",
    "check_hermitian",
    "commutator_superop",
    "devectorize",
    "embed_superop",
    "left_mult",
    "mat_exp",
    "partial_trace_R",
    "propagator",
    "ptrace_superop",
    "right_mult",
    "sandwich",
    "superop_norm_estimate",
    "trace_norm",
    "vectorize",
]

Operator = np.ndarray
SuperOperator = np.ndarray

HERMITIAN_TOL = 1e-12


class DimensionError(ValueError):
    """Shapes that cannot be reconciled with the requested operation."""


class NumericError(ArithmeticError):
    """Non-finite input to a numerical kernel."""


def check_hermitian(a, tol=HERMITIAN_TOL) -> float:
    """Return ``max |A - A^dagger|``; raise if it exceeds `tol`."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    residual = float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0
    if residual > tol:
        raise ValueError(f"operator is not Hermitian (residual {residual:.3e} > {tol:.1e})")
    return residual


def vectorize(a) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    return a.reshape(-1, order="F")


def devectorize(v) -> np.ndarray:
    v = np.asarray(v)
    if v.ndim != 1:
        raise DimensionError(f"expected a 1-d vector, got shape {v.shape}")
    d = math.isqrt(v.size)
    if d * d != v.size:
        raise DimensionError(f"length {v.size} is not a perfect square")
    return v.reshape((d, d), order="F")


def apply(s, x) -> np.ndarray:
    """Act with superoperator `s` on operator `x`."""
    s = np.asarray(s)
    x = np.asarray(x)
    if s.shape != (x.size, x.size):
        raise DimensionError(f"superoperator {s.shape} cannot act on operator {x.shape}")
    return devectorize(s @ vectorize(x))


def left_mult(a) -> np.ndarray:
    """Superoperator of ``X -> A X``."""
    a = np.asarray(a)
    return np.kron(np.eye(a.shape[0]), a)


def right_mult(a) -> np.ndarray:
    """Superoperator of ``X -> X A``."""
    a = np.asarray(a)
    return np.kron(a.T, np.eye(a.shape[0]))


def sandwich(a, b) -> np.ndarray:
    """Superoperator of ``X -> A X B``."""
    return np.kron(np.asarray(b).T, np.asarray(a))


def commutator_superop(a) -> np.ndarray:
    """Superoperator of ``X -> A X - X A``."""
    return left_mult(a) - right_mult(a)


def mat_exp(a, t=1.0, hermitian=False) -> np.ndarray:
    """Matrix exponential ``exp(t * A)``.

    With ``hermitian=True`` the Hermitian matrix `A` is diagonalized and the
    exponential assembled from its spectrum (``t`` may then be complex, which
    is how unitary propagators are built).  Otherwise scipy's Pade
    scaling-and-squaring routine is used.
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)) or not np.isfinite(t):
        raise NumericError("matrix exponential of non-finite input")
    if hermitian:
        evals, evecs = np.linalg.eigh(a)
        return (evecs * np.exp(t * evals)) @ evecs.conj().T
    return scipy.linalg.expm(t * a)


def propagator(h, t) -> np.ndarray:
    """``exp(-i t H)`` for Hermitian `H` (a Hamiltonian or a Liouvillian)."""
    return mat_exp(h, -1j * t, hermitian=True)


def partial_trace_R(rho, d_s: int, d_r: int) -> np.ndarray:
    """Trace out the second tensor factor of an operator on ``C^d_s (x) C^d_r``."""
    rho = np.asarray(rho)
    if rho.shape != (d_s * d_r, d_s * d_r):
        raise DimensionError(f"operator of shape {rho.shape} is not on a {d_s}x{d_r} space")
    return rho.reshape(d_s, d_r, d_s, d_r).trace(axis1=1, axis2=3)


def ptrace_superop(d_s: int, d_r: int) -> np.ndarray:
    """The partial trace as a ``(d_s**2, (d_s d_r)**2)`` matrix."""
    d = d_s * d_r
    out = np.zeros((d_s * d_s, d * d), dtype=complex)
    for c in range(d * d):
        unit = np.zeros(d * d)
        unit[c] = 1.0
        out[:, c] = vectorize(partial_trace_R(devectorize(unit), d_s, d_r))
    return out


def embed_superop(d_s: int, omega) -> np.ndarray:
    """``sigma -> sigma (x) omega`` as a ``((d_s d_r)**2, d_s**2)`` matrix."""
    omega = np.asarray(omega)
    d = d_s * omega.shape[0]
    out = np.zeros((d * d, d_s * d_s), dtype=complex)
    for c in range(d_s * d_s):
        unit = np.zeros(d_s * d_s)
        unit[c] = 1.0
        out[:, c] = vectorize(np.kron(devectorize(unit), omega))
    return out


def trace_norm(x) -> float:
    return float(np.linalg.svd(np.asarray(x), compute_uv=False).sum())


def _probe_operators(d: int, n_probe: int, seed) -> np.ndarray:
    """Matrix units ``|i><j|`` followed by `n_probe` random rank-one ``|x><y|``.

    Every probe has unit trace norm; rank-one operators are the extreme points
    of the trace-norm unit ball, so they are the natural probes.
    """
    units = np.zeros((d * d, d, d), dtype=complex)
    for c in range(d * d):
        units[c, c % d, c // d] = 1.0
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n_probe, d)) + 1j * rng.normal(size=(n_probe, d))
    y = rng.normal(size=(n_probe, d)) + 1j * rng.normal(size=(n_probe, d))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    y /= np.linalg.norm(y, axis=1, keepdims=True)
    rank_one = np.einsum("ki,kj->kij", x, y.conj())
    return np.concatenate([units, rank_one])


def superop_norm_estimate(s, n_probe=64, seed=0) -> float:
    """Lower bound on the trace-norm induced norm of superoperator `s`.

    Returns ``max ||S(X)||_1`` over a fixed probe set of unit-trace-norm
    operators: all matrix units plus `n_probe` seeded random rank-one
    operators.  The true induced norm is at least this value.
    """
    s = np.asarray(s)
    d = math.isqrt(s.shape[0])
    if s.ndim != 2 or s.shape[0] != s.shape[1] or d * d != s.shape[0]:
        raise DimensionError(f"not a superoperator matrix: shape {s.shape}")
    probes = _probe_operators(d, n_probe, seed)
    vecs = probes.transpose(0, 2, 1).reshape(len(probes), d * d)  # column stacking
    images = (vecs @ s.T).reshape(len(probes), d, d).transpose(0, 2, 1)
    norms = np.linalg.svd(images, compute_uv=False).sum(axis=1)
    return float(norms.max())
