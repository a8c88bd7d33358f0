"""The weak-coupling limit: Davies operator, its spectral average, the GKLS
semigroup it generates, and the comparison with exact reduced dynamics."""

from __future__ import annotations

import dataclasses
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .dyson import reduced_dynamics
from .model import (
    BohrSpectrum,
    ConfigError,
    CorrelationFunction,
    SystemBathModel,
    bohr_decomposition,
    heisenberg_W,
    recurrence_time,
    validate,
)
from .opcore import commutator_superop, trace_norm
from .quadrature import composite_gauss_legendre, panel_count

__all__ = [
    "ConvergenceReport",
    "DaviesGenerator",
    "cptp_check",
    "davies_K",
    "gkls_semigroup",
    "one_sided_transform",
    "probe_states",
    "spectral_average",
    "time_average",
    "vanhove_convergence",
]

TAIL_TARGET = 1e-8


@dataclass(frozen=True, eq=False)
class DaviesGenerator:
    """``K`` on system operators, optionally spectrally averaged.

    ``k_full`` is ``E k_reduced T`` on the joint space when the model is small
    enough to materialize it, else None.
    """

    k_reduced: np.ndarray
    spectrum: BohrSpectrum
    natural_averaged: bool = False
    window_limited: bool = False
    cutoff: float = math.inf
    tail_bound: float | None = None
    k_full: np.ndarray | None = None
    embed: np.ndarray | None = field(default=None, repr=False)
    ptrace: np.ndarray | None = field(default=None, repr=False)

    def averaged(self) -> "DaviesGenerator":
        """The spectrally averaged generator ``K^natural``."""
        if self.natural_averaged:
            return self
        k = spectral_average(self.k_reduced, self.spectrum)
        full = None if self.embed is None else self.embed @ k @ self.ptrace
        return dataclasses.replace(self, k_reduced=k, natural_averaged=True, k_full=full)

    def trace_residual(self) -> float:
        """``max |tr(K X)|`` over matrix units ``X``."""
        d = self.spectrum.energies.size
        tr_row = np.eye(d).reshape(-1, order="F")  # vec(1)^T vec(Y) = tr Y
        return float(np.max(np.abs(tr_row @ self.k_reduced)))


def _flow_pieces(w, wz):
    """Superoperators of ``[W(z), W .]`` and ``[W(z), . W]`` for a batch of ``W(z)``."""
    d = w.shape[0]
    eye = np.eye(d)
    # column stacking: X -> A X B is kron(B.T, A)
    left_part = np.einsum("ij,nkl->nikjl", eye, wz @ w).reshape(-1, d * d, d * d)
    left_part -= np.einsum("nji,kl->nikjl", wz, w).reshape(-1, d * d, d * d)
    right_part = np.einsum("ji,nkl->nikjl", w, wz).reshape(-1, d * d, d * d)
    right_part -= np.einsum("nji,kl->nikjl", w @ wz, eye).reshape(-1, d * d, d * d)
    return left_part, right_part


def davies_K(
    model: SystemBathModel | None = None,
    *,
    h_s=None,
    w=None,
    phi: CorrelationFunction | None = None,
    cutoff: float | None = None,
    quad_order: int = 16,
    use_finite: bool = False,
    chunk: int = 4096,
) -> DaviesGenerator:
    """``K sigma = int_0^T (phi(z)[W(z), W sigma] - phi(-z)[W(z), sigma W]) dz``.

    The correlation function is the model's analytic one when present (or the
    explicit `phi`); ``use_finite=True`` takes the exact finite-bath phi
    instead, which never decays for good, so that result is flagged
    window-limited and carries no tail bound.  For analytic phi the default
    cutoff makes ``4 ||W||^2 int_T^inf |phi|`` at most 1e-8.
    """
    if model is not None:
        validate(model)
        h_s, w = model.h_s, model.w
        if phi is None:
            phi = model.phi if use_finite or model.phi_analytic is None else model.phi_analytic
    if h_s is None or w is None or phi is None:
        raise ValueError("davies_K needs a model or all of h_s, w, phi")
    h_s = np.asarray(h_s, dtype=complex)
    w = np.asarray(w, dtype=complex)
    d = h_s.shape[0]
    w_norm2 = float(np.linalg.norm(w, 2)) ** 2
    window_limited = phi.kind == "spectral"
    if cutoff is None:
        if phi.kind == "analytic":
            tau_c = phi.params["tau_c"]
            scale = 4.0 * w_norm2 * abs(phi.params["gamma"]) * tau_c
            # small pad so rounding cannot push the tail past the target
            cutoff = tau_c * (max(math.log(scale / TAIL_TARGET), 1.0) + 1e-9) if scale > 0 else tau_c
        elif model is not None and model.phi_analytic is not None:
            cutoff = 30.0 * model.phi_analytic.params["tau_c"]
        elif phi.kind == "tabulated":
            cutoff = float(phi.times[-1])
        else:
            raise ValueError("a cutoff is required for a finite-bath correlation function")
    tail = phi.tail_bound(cutoff)
    tail = None if tail is None else 4.0 * w_norm2 * tail
    spectrum = bohr_decomposition(h_s, d_r=1 if model is None else model.d_r)
    rate = phi.bandwidth + float(np.max(np.abs(spectrum.frequencies)))
    s, wts = composite_gauss_legendre(0.0, cutoff, quad_order, panel_count(cutoff, rate, 1.0))
    k = np.zeros((d * d, d * d), dtype=complex)
    eig = np.linalg.eigh(h_s)
    for lo in range(0, len(s), chunk):
        sc = s[lo : lo + chunk]
        wz = _heisenberg_sys(eig, w, sc)
        a, b = _flow_pieces(w, wz)
        k += np.tensordot(wts[lo : lo + chunk] * phi(sc), a, axes=1)
        k -= np.tensordot(wts[lo : lo + chunk] * phi(-sc), b, axes=1)
    embed = ptrace = full = None
    if model is not None and model.d <= 64:
        from .nz import build_projections

        pair = build_projections(model)
        embed, ptrace = pair.embed, pair.ptrace
        full = embed @ k @ ptrace
    return DaviesGenerator(
        k_reduced=k,
        spectrum=spectrum,
        window_limited=window_limited,
        cutoff=float(cutoff),
        tail_bound=tail,
        k_full=full,
        embed=embed,
        ptrace=ptrace,
    )


def _heisenberg_sys(eig, w, times):
    evals, evecs = eig
    rotated = evecs.conj().T @ w @ evecs
    phases = np.exp(1j * np.multiply.outer(times, evals[:, None] - evals[None, :]))
    return evecs @ (rotated * phases) @ evecs.conj().T


# -- averages ----------------------------------------------------------------------


def _projector_set(x, spectrum):
    if x.shape == spectrum.reduced[0].shape:
        return spectrum.reduced
    return spectrum.projectors


def spectral_average(x, spectrum: BohrSpectrum) -> np.ndarray:
    """``sum_alpha Q_alpha X Q_alpha``."""
    x = np.asarray(x)
    return sum(q @ x @ q for q in _projector_set(x, spectrum))


def time_average(x, spectrum: BohrSpectrum, T: float, order: int = 16) -> np.ndarray:
    """``(1/T) int_0^T e^{itL_S} X e^{-itL_S} dt`` by composite Gauss-Legendre.

    The propagators come from diagonalizing the Liouvillian of ``H_S``.
    """
    if T <= 0:
        raise ValueError("averaging time must be positive")
    x = np.asarray(x)
    h_s = spectrum.eigvecs @ np.diag(spectrum.energies) @ spectrum.eigvecs.conj().T
    if x.shape != spectrum.reduced[0].shape:
        h_s = np.kron(h_s, np.eye(spectrum.d_r))
    evals, evecs = np.linalg.eigh(commutator_superop(h_s))
    # in the Liouvillian eigenbasis the average multiplies entry (a, b) by
    # (1/T) int e^{it(l_a - l_b)}; integrate that weight numerically
    width = float(np.ptp(evals)) if evals.size else 0.0
    t, wts = composite_gauss_legendre(0.0, T, order, panel_count(T, width, 1.0))
    diff = evals[:, None] - evals[None, :]
    weight = np.zeros_like(diff, dtype=complex)
    for lo in range(0, len(t), 256):
        weight += np.einsum("k,kab->ab", wts[lo : lo + 256], np.exp(1j * np.multiply.outer(t[lo : lo + 256], diff)))
    xt = evecs.conj().T @ x @ evecs
    return evecs @ (xt * weight / T) @ evecs.conj().T


def one_sided_transform(phi, omega):
    """``Gamma(omega) = int_0^inf phi(s) e^{i omega s} ds`` in closed form."""
    if isinstance(phi, CorrelationFunction):
        if phi.kind != "analytic":
            raise ConfigError("one-sided transform needs an analytic correlation family")
        family, params = phi.family, phi.params
    else:
        family, params = phi
    omega = np.asarray(omega, dtype=float)
    if family == "exponential":
        gamma, tau_c = params["gamma"], params["tau_c"]
        x = (omega - params.get("omega", 0.0)) * tau_c
        return gamma * tau_c * (1 + 1j * x) / (1 + x * x)
    raise ConfigError(f"unknown correlation family {family!r}")


# -- semigroup and positivity ---------------------------------------------------------


def gkls_semigroup(gen: DaviesGenerator, tau: float) -> np.ndarray:
    """``exp(-tau K^natural)`` on system operators."""
    if not gen.natural_averaged:
        raise ValueError("generator is not spectrally averaged; complete positivity is not guaranteed")
    return scipy.linalg.expm(-tau * gen.k_reduced)


def cptp_check(channel) -> tuple[float, float]:
    """``(min eigenvalue of the Choi matrix, max |tr Lambda(X) - tr X|)``.

    Choi matrix ``sum_ij Lambda(|i><j|) (x) |i><j|``; the eigenvalues are those
    of its Hermitian part.
    """
    channel = np.asarray(channel)
    d = math.isqrt(channel.shape[0])
    choi = np.zeros((d * d, d * d), dtype=complex)
    trace_res = 0.0
    for i in range(d):
        for j in range(d):
            unit = np.zeros((d, d))
            unit[i, j] = 1.0
            image = (channel @ unit.reshape(-1, order="F")).reshape(d, d, order="F")
            choi += np.kron(image, unit)
            trace_res = max(trace_res, abs(np.trace(image) - (1.0 if i == j else 0.0)))
    herm = (choi + choi.conj().T) / 2
    return float(np.linalg.eigvalsh(herm)[0]), float(trace_res)


# -- van Hove convergence -------------------------------------------------------------------


def probe_states(d_s: int, seed: int = 0) -> list[np.ndarray]:
    """Qubit: the six frame states plus the maximally mixed state.  Larger
    systems: basis states, ``2 d_s`` seeded random pure states and the
    maximally mixed state."""
    if d_s == 2:
        kets = [
            [1, 0],
            [0, 1],
            [1, 1],
            [1, -1],
            [1, 1j],
            [1, -1j],
        ]
        kets = [np.array(k, dtype=complex) / np.linalg.norm(k) for k in kets]
    else:
        rng = np.random.default_rng(seed)
        kets = list(np.eye(d_s, dtype=complex))
        for _ in range(2 * d_s):
            k = rng.normal(size=d_s) + 1j * rng.normal(size=d_s)
            kets.append(k / np.linalg.norm(k))
    states = [np.outer(k, k.conj()) for k in kets]
    states.append(np.eye(d_s, dtype=complex) / d_s)
    return states


@dataclass
class ConvergenceReport:
    rows: list[tuple[float, float, float, bool]]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rows.sort(key=lambda r: (r[1], -r[0]))

    def errors(self, tau: float) -> list[float]:
        """Errors at `tau` in row order (lambda descending)."""
        return [r[2] for r in self.rows if r[1] == tau]

    @property
    def flagged(self) -> bool:
        return any(r[3] for r in self.rows)


def _threads():
    try:
        return max(1, int(os.environ.get("VANHOVE_THREADS", "1")))
    except ValueError:
        return 1


def vanhove_convergence(
    model: SystemBathModel, gen: DaviesGenerator, tau_grid, lambda_grid, window: float | None = None, seed: int = 0
) -> ConvergenceReport:
    """Trace-distance error between exact and limiting reduced dynamics.

    For each ``(lambda, tau)``: ``max_sigma 1/2 || T U^lam(tau) E sigma - e^{-tau K} sigma ||_1``
    over :func:`probe_states`.  Rows with ``tau / lambda^2`` beyond the
    finite bath's recurrence `window` are flagged.
    """
    gen = gen.averaged()
    tau_grid = [float(t) for t in np.atleast_1d(tau_grid)]
    lambda_grid = [float(l) for l in np.atleast_1d(lambda_grid)]
    if not tau_grid or not lambda_grid:
        raise ValueError("tau and lambda grids must be nonempty")
    if window is None:
        window = model.meta.get("recurrence_time")
        if window is None:
            window = recurrence_time(model, 10.0 * max(t / l**2 for t in tau_grid for l in lambda_grid))
    states = probe_states(model.d_s, seed)
    vecs = np.stack([s.reshape(-1, order="F") for s in states], axis=1)
    d_s = model.d_s

    def one(point):
        lam, tau = point
        if tau == 0:
            return (lam, tau, 0.0, False)
        exact = reduced_dynamics(model.with_lambda(lam), tau) @ vecs
        limit = gkls_semigroup(gen, tau) @ vecs
        diff = (exact - limit).T.reshape(-1, d_s, d_s).transpose(0, 2, 1)
        err = max(0.5 * trace_norm(x) for x in diff)
        return (lam, tau, float(err), bool(tau / lam**2 >= window))

    points = [(l, t) for t in tau_grid for l in lambda_grid]
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        rows = list(pool.map(one, points))
    meta = {"preset": model.name, "seed": seed, "window": float(window)}
    return ConvergenceReport(rows, meta)
