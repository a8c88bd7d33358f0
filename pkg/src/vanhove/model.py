"""System (x) bath models, their Liouvillians and bath correlation functions.

A model is the tuple ``(H_S, H_R, W, V, Omega_R, lam)`` with total Hamiltonian

    H = H_S (x) 1 + 1 (x) H_R + lam W (x) V

on ``C^d_s (x) C^d_r``, and reference bath state ``omega_R = |Omega_R><Omega_R|``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, NamedTuple

import numpy as np

from .opcore import DimensionError, commutator_superop, sandwich

__all__ = [
    "AssumptionError",
    "BohrSpectrum",
    "Check",
    "ConfigError",
    "CorrelationFunction",
    "LiouvillianParts",
    "PRESETS",
    "SystemBathModel",
    "ValidationReport",
    "bohr_decomposition",
    "correlation_function",
    "correlation_phi",
    "correlation_phi_analytic",
    "heisenberg_V",
    "heisenberg_W",
    "liouvillian_parts",
    "make_preset",
    "mixing_probe",
    "recurrence_time",
    "validate",
]

MAX_FULL_DIM = 64
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class AssumptionError(ValueError):
    """A model violates one of the standing assumptions."""

    def __init__(self, report: "ValidationReport"):
        self.report = report
        self.failed = [c.name for c in report.checks if not c.passed]
        super().__init__("model fails " + ", ".join(self.failed))


class ConfigError(ValueError):
    """Unknown family, preset or malformed configuration value."""


# -- correlation functions ---------------------------------------------------

ANALYTIC_FAMILIES = ("exponential",)


def correlation_phi_analytic(family: str, params: dict, t):
    """Closed-form bath correlation function.

    ``exponential``: ``gamma * exp(-|t| / tau_c) * exp(-1j * omega * t)``.
    """
    t = np.asarray(t, dtype=float)
    if family == "exponential":
        gamma = params["gamma"]
        tau_c = params["tau_c"]
        omega = params.get("omega", 0.0)
        return gamma * np.exp(-np.abs(t) / tau_c) * np.exp(-1j * omega * t)
    raise ConfigError(f"unknown correlation family {family!r}; known: {', '.join(ANALYTIC_FAMILIES)}")


@dataclass(frozen=True, eq=False)
class CorrelationFunction:
    """``phi(t) = tr(V(t) V omega_R)`` in one of three representations.

    * ``analytic``: a named closed-form family with parameters;
    * ``tabulated``: samples on a grid ``0 = t_0 < t_1 < ...``, linearly
      interpolated and extended to ``t < 0`` by ``phi(-t) = conj(phi(t))``;
      zero beyond the last sample;
    * ``spectral``: ``sum_j p_j exp(-1j E_j t)``, the exact form for a finite
      bath with an invariant reference vector.
    """

    kind: str
    family: str | None = None
    params: dict = field(default_factory=dict)
    times: np.ndarray | None = None
    values: np.ndarray | None = None
    energies: np.ndarray | None = None
    weights: np.ndarray | None = None

    @classmethod
    def analytic(cls, family: str, **params) -> "CorrelationFunction":
        if family not in ANALYTIC_FAMILIES:
            raise ConfigError(f"unknown correlation family {family!r}")
        if family == "exponential" and params.get("tau_c", 0) <= 0:
            raise ConfigError("exponential family needs tau_c > 0")
        return cls(kind="analytic", family=family, params=dict(params))

    @classmethod
    def tabulated(cls, times, values) -> "CorrelationFunction":
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=complex)
        if times.ndim != 1 or times.shape != values.shape or times[0] != 0 or np.any(np.diff(times) <= 0):
            raise ConfigError("tabulated correlation needs increasing times starting at 0")
        return cls(kind="tabulated", times=times, values=values)

    @classmethod
    def spectral(cls, energies, weights) -> "CorrelationFunction":
        return cls(kind="spectral", energies=np.asarray(energies, float), weights=np.asarray(weights, complex))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "analytic":
            return correlation_phi_analytic(self.family, self.params, t)
        if self.kind == "spectral":
            phase = np.exp(-1j * np.multiply.outer(t, self.energies))
            return phase @ self.weights
        a = np.abs(t)
        re = np.interp(a, self.times, self.values.real, right=0.0)
        im = np.interp(a, self.times, self.values.imag, right=0.0)
        return np.where(t >= 0, re + 1j * im, re - 1j * im)

    def l1_norm(self) -> float:
        """``int_R |phi(t)| dt`` (infinite for a spectral form, whose phi never decays)."""
        if self.kind == "analytic":
            return 2.0 * abs(self.params["gamma"]) * self.params["tau_c"]
        if self.kind == "tabulated":
            return 2.0 * float(np.trapezoid(np.abs(self.values), self.times))
        return math.inf

    def window_l1_norm(self, cutoff: float, order: int = 16) -> float:
        """``int_{-T}^{T} |phi(t)| dt`` by composite Gauss-Legendre quadrature."""
        from .quadrature import composite_gauss_legendre, panel_count

        s, w = composite_gauss_legendre(0.0, cutoff, order, panel_count(cutoff, self.bandwidth + 1.0, 0.5))
        return float(w @ (np.abs(self(s)) + np.abs(self(-s))))

    @property
    def bandwidth(self) -> float:
        """Largest angular frequency present in phi; sets quadrature panel widths."""
        if self.kind == "analytic":
            return abs(self.params.get("omega", 0.0)) + 1.0 / self.params["tau_c"]
        if self.kind == "spectral":
            return float(np.max(np.abs(self.energies))) if self.energies.size else 0.0
        return math.pi / float(np.min(np.diff(self.times)))

    def tail_bound(self, cutoff: float) -> float | None:
        """Upper bound on ``int_T^inf |phi|``; None when no bound is available."""
        if self.kind == "analytic" and self.family == "exponential":
            return abs(self.params["gamma"]) * self.params["tau_c"] * math.exp(-cutoff / self.params["tau_c"])
        if self.kind == "tabulated" and cutoff >= self.times[-1]:
            return 0.0
        return None

    def symmetry_residual(self, times) -> float:
        """``max |phi(-t) - conj(phi(t))|`` over `times`."""
        times = np.asarray(times, dtype=float)
        return float(np.max(np.abs(self(-times) - np.conj(self(times)))))


# -- the model -----------------------------------------------------------------


def _as_matrix(a, name):
    a = np.array(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionError(f"{name} must be a non-empty square matrix, got shape {a.shape}")
    return a


@dataclass(frozen=True, eq=False)
class SystemBathModel:
    h_s: np.ndarray
    h_r: np.ndarray
    w: np.ndarray
    v: np.ndarray
    omega_r: np.ndarray
    lam: float = 0.0
    name: str = "custom"
    phi_analytic: CorrelationFunction | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        set_ = object.__setattr__
        for key in ("h_s", "h_r", "w", "v"):
            set_(self, key, _as_matrix(getattr(self, key), key))
        set_(self, "omega_r", np.array(self.omega_r, dtype=complex).ravel())
        if self.w.shape != self.h_s.shape:
            raise DimensionError(f"W {self.w.shape} and H_S {self.h_s.shape} differ")
        if self.v.shape != self.h_r.shape:
            raise DimensionError(f"V {self.v.shape} and H_R {self.h_r.shape} differ")
        if self.omega_r.shape != (self.h_r.shape[0],):
            raise DimensionError(f"Omega_R has length {self.omega_r.size}, bath dimension is {self.h_r.shape[0]}")
        set_(self, "lam", float(self.lam))

    @property
    def d_s(self) -> int:
        return self.h_s.shape[0]

    @property
    def d_r(self) -> int:
        return self.h_r.shape[0]

    @property
    def d(self) -> int:
        return self.d_s * self.d_r

    def with_lambda(self, lam: float) -> "SystemBathModel":
        return dataclasses.replace(self, lam=lam)

    def replace(self, **changes) -> "SystemBathModel":
        return dataclasses.replace(self, **changes)

    @cached_property
    def omega_state(self) -> np.ndarray:
        return np.outer(self.omega_r, self.omega_r.conj())

    @cached_property
    def h0(self) -> np.ndarray:
        return np.kron(self.h_s, np.eye(self.d_r)) + np.kron(np.eye(self.d_s), self.h_r)

    @cached_property
    def h_int(self) -> np.ndarray:
        return np.kron(self.w, self.v)

    @property
    def hamiltonian(self) -> np.ndarray:
        return self.h0 + self.lam * self.h_int

    @cached_property
    def system_eig(self):
        return np.linalg.eigh(self.h_s)

    @cached_property
    def bath_eig(self):
        return np.linalg.eigh(self.h_r)

    @property
    def w_norm(self) -> float:
        return float(np.linalg.norm(self.w, 2))

    @property
    def v_norm(self) -> float:
        return float(np.linalg.norm(self.v, 2))

    @cached_property
    def phi(self) -> CorrelationFunction:
        """Exact correlation function of the finite bath (spectral form)."""
        return correlation_function(self)


# -- validation ----------------------------------------------------------------


@dataclass(frozen=True)
class Check:
    name: str
    residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.tol


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[Check, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def table(self) -> str:
        width = max(len(c.name) for c in self.checks)
        lines = [f"{'check':<{width}}  {'residual':>10}  {'tol':>8}  status"]
        for c in self.checks:
            lines.append(f"{c.name:<{width}}  {c.residual:10.3e}  {c.tol:8.1e}  {'ok' if c.passed else 'FAIL'}")
        return "\n".join(lines)


def _herm_residual(a):
    return float(np.max(np.abs(a - a.conj().T)))


def validate(model: SystemBathModel, strict: bool = True) -> ValidationReport:
    """Check self-adjointness, normalization, invariance and centering.

    Raises :class:`AssumptionError` naming the failed checks when `strict`.
    """
    om = model.omega_r
    checks = (
        Check("A1-hermitian-H_R", _herm_residual(model.h_r), 1e-12),
        Check("A3-hermitian-H_S", _herm_residual(model.h_s), 1e-12),
        Check("A4-hermitian-W", _herm_residual(model.w), 1e-12),
        Check("A4-hermitian-V", _herm_residual(model.v), 1e-12),
        Check("normalization", abs(float(np.linalg.norm(om)) - 1.0), 1e-12),
        Check("A2-invariance", float(np.linalg.norm(model.h_r @ om)), 1e-10),
        Check("A4-centering", float(abs(om.conj() @ model.v @ om)), 1e-10),
    )
    report = ValidationReport(checks)
    if strict and not report.passed:
        raise AssumptionError(report)
    return report


# -- Liouvillians and Heisenberg operators -------------------------------------


class LiouvillianParts(NamedTuple):
    free: np.ndarray
    interaction: np.ndarray
    total: np.ndarray


def _check_full_dim(model):
    if model.d > MAX_FULL_DIM:
        raise DimensionError(f"full superoperators are capped at d_s*d_r <= {MAX_FULL_DIM} (got {model.d})")


def liouvillian_parts(model: SystemBathModel) -> LiouvillianParts:
    """``(L_0, L_SR, L_0 + lam L_SR)`` as full superoperators."""
    validate(model)
    _check_full_dim(model)
    free = commutator_superop(model.h0)
    inter = commutator_superop(model.h_int)
    return LiouvillianParts(free, inter, free + model.lam * inter)


def system_liouvillian(model: SystemBathModel, reduced: bool = False) -> np.ndarray:
    if reduced:
        return commutator_superop(model.h_s)
    _check_full_dim(model)
    return commutator_superop(np.kron(model.h_s, np.eye(model.d_r)))


def bath_liouvillian(model: SystemBathModel) -> np.ndarray:
    _check_full_dim(model)
    return commutator_superop(np.kron(np.eye(model.d_s), model.h_r))


def _heisenberg(eig, op, times):
    evals, evecs = eig
    rotated = evecs.conj().T @ op @ evecs
    times = np.asarray(times, dtype=float)
    phases = np.exp(1j * np.multiply.outer(times, evals[:, None] - evals[None, :]))
    return evecs @ (rotated * phases) @ evecs.conj().T


def heisenberg_V(model: SystemBathModel, t) -> np.ndarray:
    """``exp(i t H_R) V exp(-i t H_R)``; `t` may be an array (leading axis)."""
    return _heisenberg(model.bath_eig, model.v, t)


def heisenberg_W(model: SystemBathModel, t) -> np.ndarray:
    """``exp(i t H_S) W exp(-i t H_S)``; `t` may be an array (leading axis)."""
    return _heisenberg(model.system_eig, model.w, t)


# -- Bohr spectrum -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BohrSpectrum:
    """Distinct Bohr frequencies of ``H_S`` and the matching spectral projectors.

    ``reduced[a]`` acts on system operators; :attr:`projectors` are the same
    projectors tensored with the bath identity (built on first access).
    """

    frequencies: np.ndarray
    reduced: tuple[np.ndarray, ...]
    energies: np.ndarray
    eigvecs: np.ndarray
    labels: np.ndarray  # labels[a, b] = index of the frequency e_a - e_b
    d_r: int = 1

    @cached_property
    def projectors(self) -> tuple[np.ndarray, ...]:
        d = len(self.energies) * self.d_r
        if d > MAX_FULL_DIM:
            raise DimensionError(f"full Bohr projectors are capped at d <= {MAX_FULL_DIM}")
        eye_r = np.eye(self.d_r)
        out = []
        for alpha in range(len(self.frequencies)):
            q = np.zeros((d * d, d * d), dtype=complex)
            for a, b in zip(*np.nonzero(self.labels == alpha)):
                pa = np.kron(np.outer(self.eigvecs[:, a], self.eigvecs[:, a].conj()), eye_r)
                pb = np.kron(np.outer(self.eigvecs[:, b], self.eigvecs[:, b].conj()), eye_r)
                q += sandwich(pa, pb)
            out.append(q)
        return tuple(out)

    def propagator(self, t: float, reduced: bool = True) -> np.ndarray:
        """``sum_alpha exp(-i t omega_alpha) Q_alpha``."""
        qs = self.reduced if reduced else self.projectors
        return sum(np.exp(-1j * t * w) * q for w, q in zip(self.frequencies, qs))

    @property
    def min_gap(self) -> float:
        """Smallest nonzero distance between Bohr frequencies."""
        f = np.sort(self.frequencies)
        return float(np.min(np.diff(f))) if len(f) > 1 else math.inf


def bohr_decomposition(h_s, d_r: int = 1, rel_tol: float = 1e-9) -> BohrSpectrum:
    """Group the differences ``e_a - e_b`` of the eigenvalues of `h_s`.

    Differences closer than ``rel_tol * max|e|`` are merged into one frequency.
    """
    h_s = _as_matrix(h_s, "H_S")
    evals, evecs = np.linalg.eigh(h_s)
    n = len(evals)
    diffs = (evals[:, None] - evals[None, :]).ravel()
    tol = rel_tol * float(np.max(np.abs(evals)))
    order = np.argsort(diffs, kind="stable")
    labels_flat = np.empty(n * n, dtype=int)
    freqs: list[list[float]] = []
    for idx in order:
        if freqs and diffs[idx] - freqs[-1][0] <= tol:
            freqs[-1].append(diffs[idx])
        else:
            freqs.append([diffs[idx]])
        labels_flat[idx] = len(freqs) - 1
    labels = labels_flat.reshape(n, n)
    # the zero frequency always gets the value 0 exactly
    frequencies = np.array([0.0 if abs(np.mean(f)) <= tol else float(np.mean(f)) for f in freqs])
    reduced = []
    for alpha in range(len(frequencies)):
        q = np.zeros((n * n, n * n), dtype=complex)
        for a, b in zip(*np.nonzero(labels == alpha)):
            q += sandwich(np.outer(evecs[:, a], evecs[:, a].conj()), np.outer(evecs[:, b], evecs[:, b].conj()))
        reduced.append(q)
    return BohrSpectrum(frequencies, tuple(reduced), evals, evecs, labels, d_r)


# -- correlations ---------------------------------------------------------------


def correlation_function(model: SystemBathModel) -> CorrelationFunction:
    """Spectral form of ``phi(t) = <V Omega| exp(-i t H_R) |V Omega>``.

    Equal to ``tr(V(t) V omega_R)`` whenever ``H_R Omega_R = 0``.
    """
    evals, evecs = model.bath_eig
    amp = evecs.conj().T @ (model.v @ model.omega_r)
    return CorrelationFunction.spectral(evals, np.abs(amp) ** 2)


def correlation_phi(model: SystemBathModel, t):
    return model.phi(t)


def mixing_probe(model: SystemBathModel, a, b, times) -> np.ndarray:
    """``|tr(A(t) B omega_R) - tr(A omega_R) tr(B omega_R)|`` for each t in `times`.

    A diagnostic only: a finite bath is quasi-periodic, so this never decays
    for good; it shows how long the bath looks mixing.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    om = model.omega_r
    at = _heisenberg(model.bath_eig, a, times)
    corr = np.einsum("i,...ij,jk,k->...", om.conj(), at, b, om)
    return np.abs(corr - (om.conj() @ a @ om) * (om.conj() @ b @ om))


def recurrence_time(model: SystemBathModel, t_max: float, threshold: float = 0.1, dt: float | None = None) -> float:
    """First time after the initial decay at which ``|phi(t)| / phi(0)`` climbs
    back above `threshold`; ``inf`` if that does not happen before `t_max`.

    This is the end of the window over which the finite bath mimics a mixing
    reservoir.  Returns 0 when phi never decays below the threshold.
    """
    phi = model.phi
    phi0 = float(abs(phi(0.0)))
    if phi0 == 0:
        return math.inf
    if dt is None:
        dt = 0.1 / max(phi.bandwidth, 1.0)
    times = np.arange(0.0, t_max + dt, dt)
    mag = np.abs(phi(times)) / phi0
    below = np.nonzero(mag < threshold)[0]
    if below.size == 0:
        return 0.0
    after = np.nonzero(mag[below[0]:] >= threshold)[0]
    return float(times[below[0] + after[0]]) if after.size else math.inf


# -- presets --------------------------------------------------------------------


def dephasing_preset(lam: float = 0.1, omega_s: float = 1.0, gamma: float = 1.0, tau_c: float = 1.0) -> SystemBathModel:
    """Qubit with ``W = sigma_z`` commuting with ``H_S``, on a four-level bath.

    The bath has intra-bath couplings so that odd correlations do not vanish.
    """
    h_r = np.diag([0.0, 0.7, -1.1, 1.6])
    v = np.array(
        [
            [0.0, 0.6, 0.5, 0.4],
            [0.6, 0.0, 0.3, 0.0],
            [0.5, 0.3, 0.0, 0.0],
            [0.4, 0.0, 0.0, 0.2],
        ]
    )
    return SystemBathModel(
        h_s=0.5 * omega_s * PAULI_Z,
        h_r=h_r,
        w=PAULI_Z,
        v=v,
        omega_r=[1, 0, 0, 0],
        lam=lam,
        name="dephasing",
        phi_analytic=CorrelationFunction.analytic("exponential", gamma=gamma, tau_c=tau_c, omega=0.0),
    )


def star_bath_preset(
    n_levels: int = 5,
    lam: float = 0.1,
    band: float = 3.0,
    omega_s: float = 1.0,
    gamma: float = 1.0,
    tau_c: float = 1.0,
    omega_c: float | None = None,
) -> SystemBathModel:
    """Qubit (``W = sigma_x``) coupled to a reference level linked to `n_levels`
    levels spread evenly over ``omega_c +- band``.

    Couplings sample a Lorentzian spectral density of weight `gamma` and
    width ``1/tau_c``, so phi follows the exponential family until the
    recurrence at ``2 pi / spacing``.  By default ``omega_c = band``, which
    puts every bath level above the reference level: V only links the
    reference level to the others, so a bath that could also absorb energy
    would remember which transition happened and the dynamics would not
    approach the weak-coupling semigroup.
    """
    if omega_c is None:
        omega_c = band
    spacing = 2.0 * band / n_levels
    eps = omega_c - band + spacing * (np.arange(n_levels) + 0.5)
    density = (gamma / math.pi) * (1.0 / tau_c) / ((eps - omega_c) ** 2 + tau_c**-2)
    g = np.sqrt(density * spacing)
    d_r = n_levels + 1
    v = np.zeros((d_r, d_r))
    v[0, 1:] = g
    v[1:, 0] = g
    omega_r = np.zeros(d_r)
    omega_r[0] = 1.0
    return SystemBathModel(
        h_s=0.5 * omega_s * PAULI_Z,
        h_r=np.diag(np.concatenate([[0.0], eps])),
        w=PAULI_X,
        v=v,
        omega_r=omega_r,
        lam=lam,
        name="star-bath",
        phi_analytic=CorrelationFunction.analytic("exponential", gamma=gamma, tau_c=tau_c, omega=omega_c),
        meta={"recurrence_time": 2.0 * math.pi / spacing},
    )


def parity_preset(lam: float = 0.1) -> SystemBathModel:
    """Bath with a parity ``U = diag(1, -1, -1, 1)`` fixing Omega_R and
    flipping V, so every odd correlation of V vanishes."""
    h_r = np.diag([0.0, 0.9, 1.7, -0.6])
    v = np.array(
        [
            [0.0, 0.7, 0.4, 0.0],
            [0.7, 0.0, 0.0, 0.5],
            [0.4, 0.0, 0.0, 0.3],
            [0.0, 0.5, 0.3, 0.0],
        ]
    )
    return SystemBathModel(
        h_s=np.diag([0.0, 1.2]).astype(complex),
        h_r=h_r,
        w=PAULI_X + 0.4 * PAULI_Z,
        v=v,
        omega_r=[1, 0, 0, 0],
        lam=lam,
        name="parity",
        phi_analytic=CorrelationFunction.analytic("exponential", gamma=0.8, tau_c=0.7, omega=0.3),
        meta={"parity": np.diag([1.0, -1.0, -1.0, 1.0])},
    )


def _random_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (a + a.conj().T) / 2


def random_preset(seed: int = 0, d_s: int = 2, d_r: int = 4, lam: float = 0.1) -> SystemBathModel:
    """Seeded Hermitian draws made admissible: ``H_R -> Q H_R Q`` with
    ``Q = 1 - |Omega><Omega|`` and ``V -> V - <Omega|V Omega>``."""
    rng = np.random.default_rng(seed)
    h_s = _random_hermitian(rng, d_s)
    w = _random_hermitian(rng, d_s)
    h_r = _random_hermitian(rng, d_r)
    v = _random_hermitian(rng, d_r)
    om = rng.normal(size=d_r) + 1j * rng.normal(size=d_r)
    om /= np.linalg.norm(om)
    q = np.eye(d_r) - np.outer(om, om.conj())
    h_r = q @ h_r @ q
    h_r = (h_r + h_r.conj().T) / 2
    v = v - (om.conj() @ v @ om).real * np.eye(d_r)
    return SystemBathModel(
        h_s=h_s,
        h_r=h_r,
        w=w,
        v=v,
        omega_r=om,
        lam=lam,
        name="random",
        phi_analytic=CorrelationFunction.analytic("exponential", gamma=0.5, tau_c=1.5, omega=-0.4),
        meta={"seed": seed},
    )


PRESETS: dict[str, Callable[..., SystemBathModel]] = {
    "dephasing": dephasing_preset,
    "star-bath": star_bath_preset,
    "parity": parity_preset,
    "random": random_preset,
}


def make_preset(name: str, **kwargs) -> SystemBathModel:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; known: {', '.join(PRESETS)}") from None
    return factory(**kwargs)
