"""Reduced dynamics ``U^lam(tau)``, the memory kernel ``K^lam(tau)`` and the
Dyson kernels ``K_n(t)``, computed directly from superoperator products.

This is the brute-force side that the diagram expansion is checked against.
Kernels are assembled in the reduced form ``P M P = E (T M E) T`` (see
:mod:`vanhove.nz`); the inner blocks are ``d_s**2 x d_s**2``.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.linalg

from .model import SystemBathModel, heisenberg_V, heisenberg_W, system_liouvillian, validate
from .nz import ProjectionPair
from .opcore import commutator_superop, propagator, superop_norm_estimate
from .quadrature import SimplexGrid, composite_gauss_legendre, gauss_legendre, panel_count, simplex_grid

__all__ = [
    "CapabilityError",
    "dyson_integrand",
    "dyson_integrand_reduced",
    "k_lambda",
    "k_lambda_series",
    "k_n_bruteforce",
    "reduced_dynamics",
    "u_lambda",
    "verify_integral_equation",
]

MAX_BRUTE_ORDER = 3
CHUNK = 2048


class CapabilityError(ValueError):
    """Requested order or size beyond what a routine supports."""


def _system_basis(d_s):
    """Matrix units in column-stacking order, shape ``(d_s**2, d_s, d_s)``."""
    out = np.zeros((d_s * d_s, d_s, d_s), dtype=complex)
    for c in range(d_s * d_s):
        out[c, c % d_s, c // d_s] = 1.0
    return out


def _vec_batch(x):
    """Column-stack the trailing two axes."""
    return np.swapaxes(x, -1, -2).reshape(*x.shape[:-2], -1)


def _ptrace_batch(x, d_s, d_r):
    return np.trace(x.reshape(*x.shape[:-2], d_s, d_r, d_s, d_r), axis1=-3, axis2=-1)


def _check_times(z):
    z = np.atleast_2d(np.asarray(z, dtype=float))
    if np.any(z[:, 0] != 0.0):
        raise ValueError("time vectors must start at z_0 = 0")
    if np.any(np.diff(z, axis=1) < 0):
        raise ValueError("time vectors must be nondecreasing")
    return z


def dyson_integrand_reduced(model: SystemBathModel, z) -> np.ndarray:
    """Inner block ``T L_SR(z_{n+1}) Q ... Q L_SR(z_0) E`` for a batch of times.

    `z` has shape ``(N, n + 2)`` (or ``(n + 2,)``) with ``z[:, 0] = 0``;
    returns ``(N, d_s**2, d_s**2)``.  Each factor acts at operator level as
    the commutator with ``W(z_k) (x) V(z_k)``.
    """
    z = _check_times(z)
    d_s, d_r = model.d_s, model.d_r
    omega = model.omega_state
    basis = _system_basis(d_s)
    out = np.empty((len(z), d_s * d_s, d_s * d_s), dtype=complex)
    for lo in range(0, len(z), CHUNK):
        zc = z[lo : lo + CHUNK]
        m = len(zc)
        x = np.broadcast_to(np.kron(basis, omega)[None], (m, d_s * d_s, d_s * d_r, d_s * d_r)).copy()
        for k in range(zc.shape[1]):
            h = np.einsum("mij,mkl->mikjl", heisenberg_W(model, zc[:, k]), heisenberg_V(model, zc[:, k]))
            h = h.reshape(m, 1, d_s * d_r, d_s * d_r)
            x = h @ x - x @ h
            if k < zc.shape[1] - 1:
                x = x - np.einsum("mcij,kl->mcikjl", _ptrace_batch(x, d_s, d_r), omega).reshape(x.shape)
        # column c of the block is vec(tr_R(x_c))
        out[lo : lo + m] = np.swapaxes(_vec_batch(_ptrace_batch(x, d_s, d_r)), 1, 2)
    return out


def dyson_integrand(model: SystemBathModel, pair: ProjectionPair, z) -> np.ndarray:
    """``P L_SR(z_{n+1}) Q ... Q L_SR(z_0) P`` at one time vector, as a full superoperator."""
    z = np.asarray(z, dtype=float)
    if z.ndim != 1 or z.size < 2:
        raise ValueError("need a single time vector (z_0, ..., z_{n+1})")
    inner = dyson_integrand_reduced(model, z)[0]
    return pair.embed @ inner @ pair.ptrace


def _kernel_reduced(model, n, t, grid):
    if grid is None:
        grid = simplex_grid(n + 1, t)
    if grid.dim != n + 1 or not math.isclose(grid.t, t):
        raise ValueError(f"grid is for dimension {grid.dim} at t={grid.t}, need {n + 1} at t={t}")
    vals = dyson_integrand_reduced(model, grid.with_origin())
    return np.tensordot(grid.weights, vals, axes=1)


def k_n_bruteforce(
    model: SystemBathModel, pair: ProjectionPair, n: int, t: float, grid: SimplexGrid | None = None, reduced: bool = False
) -> np.ndarray:
    """``K_n(t)``: the Dyson integrand integrated over the simplex ``Delta^{n+1}(t)``.

    ``n = 0`` gives the leading (second-order) kernel.  With ``reduced=True``
    the ``d_s**2`` block is returned instead of the full superoperator.
    """
    if n < 0:
        raise ValueError("order must be non-negative")
    if n > MAX_BRUTE_ORDER:
        raise CapabilityError(f"brute-force K_n is limited to n <= {MAX_BRUTE_ORDER} (asked for n = {n})")
    validate(model)
    k = _kernel_reduced(model, n, t, grid)
    return k if reduced else pair.embed @ k @ pair.ptrace


# -- exact reduced dynamics -----------------------------------------------------


def u_lambda(model: SystemBathModel, pair: ProjectionPair, tau: float) -> np.ndarray:
    """``exp(i t L_S) P exp(-i t (L_0 + lam L_SR)) P`` with ``t = tau / lam**2``."""
    if model.lam == 0:
        raise ValueError("u_lambda needs lam != 0; the lam -> 0 limit is gkls_semigroup")
    if tau < 0:
        raise ValueError("tau must be non-negative")
    validate(model)
    t = tau / model.lam**2
    l_s = system_liouvillian(model)
    l = commutator_superop(model.hamiltonian)
    return propagator(l_s, -t) @ pair.P @ propagator(l, t) @ pair.P


def reduced_dynamics(model: SystemBathModel, tau: float) -> np.ndarray:
    """``T U^lam(tau) E`` as a ``d_s**2 x d_s**2`` matrix, at Hilbert-space level.

    Evolves ``|i><j| (x) omega_R`` with ``exp(-i t H)`` and traces out the bath,
    so it scales to baths far beyond the superoperator memory cap.
    """
    if model.lam == 0:
        raise ValueError("reduced_dynamics needs lam != 0")
    d_s, d_r = model.d_s, model.d_r
    t = tau / model.lam**2
    evals, evecs = np.linalg.eigh(model.hamiltonian)
    start = np.kron(np.eye(d_s), model.omega_r[:, None])  # columns e_i (x) Omega
    psi = evecs @ (np.exp(-1j * t * evals)[:, None] * (evecs.conj().T @ start))
    psi = psi.T.reshape(d_s, d_s, d_r)  # psi[i] = U (e_i (x) Omega) as d_s x d_r
    # tr_R |psi_i><psi_j| = psi_i psi_j^dagger
    rho = np.einsum("iak,jbk->ijab", psi, psi.conj())
    rot = propagator(model.h_s, -t)
    rho = rot @ rho @ rot.conj().T
    out = np.empty((d_s * d_s, d_s * d_s), dtype=complex)
    for c in range(d_s * d_s):
        out[:, c] = rho[c % d_s, c // d_s].reshape(-1, order="F")
    return out


# -- memory kernel ----------------------------------------------------------------


def _k_lambda_parts(model, pair):
    l0 = commutator_superop(model.h0)
    lsr = commutator_superop(model.h_int)
    gen = l0 + model.lam * pair.Q @ lsr @ pair.Q
    left = pair.ptrace @ lsr @ pair.Q
    right = pair.Q @ lsr @ pair.embed
    rate = float(np.ptp(np.linalg.eigvalsh(model.h0))) + 2 * abs(model.lam) * model.w_norm * model.v_norm
    return gen, left, right, rate


def _k_lambda_reduced(model, pair, tau, quad_order=16, panels=None):
    if quad_order < 2:
        raise ValueError("quadrature order must be at least 2")
    if model.lam == 0:
        raise ValueError("k_lambda needs lam != 0")
    d2 = model.d_s**2
    if tau == 0:
        return np.zeros((d2, d2), dtype=complex)
    t = tau / model.lam**2
    gen, left, right, rate = _k_lambda_parts(model, pair)
    if panels is None:
        panels = panel_count(t, rate, 2.0)
    h = t / panels
    x, w = gauss_legendre(quad_order, 0.0, h)
    l_s = commutator_superop(model.h_s)
    step = scipy.linalg.expm(-1j * h * gen)
    node_props = [scipy.linalg.expm(-1j * xj * gen) for xj in x]
    evals, evecs = np.linalg.eigh(l_s)
    evecs_inv = evecs.conj().T
    acc = np.zeros((d2, d2), dtype=complex)
    carry = right  # exp(-i s_p G) Q L_SR E
    for p in range(panels):
        s0 = p * h
        for xj, wj, prop in zip(x, w, node_props):
            s = s0 + xj
            inner = left @ (prop @ carry)
            acc += wj * (evecs * np.exp(1j * s * evals)) @ (evecs_inv @ inner)
        carry = step @ carry
    return acc


def k_lambda(model: SystemBathModel, pair: ProjectionPair, tau: float, quad_order: int = 16, panels: int | None = None) -> np.ndarray:
    """``K^lam(tau) = int_0^{tau/lam^2} P e^{isL_0} L_SR Q e^{-is(L_0 + lam Q L_SR Q)} Q L_SR P ds``.

    Composite Gauss-Legendre over equal panels; the propagator is advanced
    panel by panel so only ``quad_order + 1`` matrix exponentials are formed.
    """
    validate(model)
    return pair.embed @ _k_lambda_reduced(model, pair, tau, quad_order, panels) @ pair.ptrace


def k_lambda_series(model: SystemBathModel, pair: ProjectionPair, tau: float, lam: float | None = None, n_max: int = 1, order: int = 12) -> np.ndarray:
    """Truncated expansion ``sum_{n=0}^{n_max} (-i lam)^n K_n(tau / lam^2)``."""
    if lam is not None:
        model = model.with_lambda(lam)
    lam = model.lam
    if lam == 0:
        raise ValueError("k_lambda_series needs lam != 0")
    if n_max > MAX_BRUTE_ORDER:
        raise CapabilityError(f"series truncation limited to n_max <= {MAX_BRUTE_ORDER}")
    validate(model)
    d2 = model.d_s**2
    if tau == 0:
        return np.zeros((d2 * model.d_r**2, d2 * model.d_r**2), dtype=complex)
    t = tau / lam**2
    acc = np.zeros((d2, d2), dtype=complex)
    for n in range(n_max + 1):
        acc += (-1j * lam) ** n * _kernel_reduced(model, n, t, simplex_grid(n + 1, t, order))
    return pair.embed @ acc @ pair.ptrace


def verify_integral_equation(
    model: SystemBathModel, pair: ProjectionPair, tau: float, lam: float | None = None, quad_order: int = 12
) -> float:
    """Probe norm of ``U(tau) - P + int_0^tau e^{iuL_S/lam^2} K^lam(tau-u) e^{-iuL_S/lam^2} U(u) du``.

    Everything is carried in the reduced ``d_s**2`` blocks (``P X P = E x T``
    and the norm of ``E x T`` on a density matrix equals that of ``x``).
    """
    if lam is not None:
        model = model.with_lambda(lam)
    validate(model)
    d2 = model.d_s**2
    if tau == 0:
        return 0.0
    lam = model.lam
    l_s = commutator_superop(model.h_s)

    def u_red(u):
        return pair.ptrace @ u_lambda(model, pair, u) @ pair.embed

    nodes, weights = gauss_legendre(quad_order, 0.0, tau)
    integral = np.zeros((d2, d2), dtype=complex)
    for u, wu in zip(nodes, weights):
        rot = propagator(l_s, -u / lam**2)
        kern = _k_lambda_reduced(model, pair, tau - u, quad_order)
        integral += wu * rot @ kern @ rot.conj().T @ u_red(u)
    residual = u_red(tau) - np.eye(d2) + integral
    return superop_norm_estimate(residual)
