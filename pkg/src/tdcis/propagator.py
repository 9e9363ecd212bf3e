"""Laser pulses and time propagation of CIS states.

Two integrators are available: classical fourth-order Runge-Kutta and a
short-iterative Krylov exponential.  The Krylov step freezes the
Hamiltonian at the midpoint t + dt/2 and applies exp(-i H dt) inside a
Lanczos (Hermitian or complex-symmetric) or Arnoldi (general) subspace.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal, expm
from scipy.special import wofz

from . import constants as C
from .errors import ConfigurationError, NumericalError

log = logging.getLogger(__name__)

# relative threshold on beta_k below which the Krylov space is invariant
BREAKDOWN_FLOOR = 1e-18


@dataclass(frozen=True)
class Pulse:
    """Linearly polarised pulse F(t) = F0 exp(-2 ln2 t^2/tau^2) cos(omega t + phase).

    Attributes
    ----------
    F0 : float
        Peak field in atomic units.
    omega : float
        Carrier frequency (hartree).
    tau : float
        Intensity FWHM (atomic time units).
    phase : float
        Carrier-envelope phase.
    """

    F0: float
    omega: float
    tau: float
    phase: float = 0.0

    def __post_init__(self):
        if self.tau <= 0:
            raise ConfigurationError("pulse duration must be positive")
        if self.omega < 0:
            raise ConfigurationError("pulse frequency must be non-negative")

    @classmethod
    def from_lab(cls, intensity_wcm2, photon_ev, fwhm_fs, phase=0.0):
        return cls(
            C.intensity_to_field(intensity_wcm2), C.ev_to_hartree(photon_ev), C.fs_to_au(fwhm_fs), phase
        )

    @property
    def a(self):
        return 2.0 * C.LN2 / self.tau**2

    @property
    def intensity(self):
        """Peak intensity in atomic units (F0^2)."""
        return self.F0**2

    @property
    def bandwidth(self):
        """Spectral FWHM of the intensity, 4 ln2 / tau (hartree)."""
        return 4.0 * C.LN2 / self.tau

    def envelope(self, t):
        return self.F0 * np.exp(-self.a * np.asarray(t, dtype=float) ** 2)

    def field(self, t):
        t = np.asarray(t, dtype=float)
        return self.envelope(t) * np.cos(self.omega * t + self.phase)

    def vector_potential(self, t):
        """A(t) = -int_{-inf}^t F(t') dt', evaluated in closed form.

        Uses the Faddeeva function for the Gaussian-times-exponential
        integral, which stays accurate far out in the wings.
        """
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        if self.F0 == 0.0:
            return 0.0 if scalar else np.zeros_like(t)
        a, w = self.a, self.omega
        sa = np.sqrt(a)
        z = sa * t - 1j * w / (2.0 * sa)
        pref = np.sqrt(np.pi) / (2.0 * sa)
        # int_{-inf}^t exp(-a s^2 + i w s) ds; each branch is evaluated only
        # where it is stable (the other one overflows in the far wings)
        gauss = np.exp(-a * t**2 + 1j * w * t)
        neg = t < 0
        integral = np.empty(t.shape, dtype=complex)
        integral[neg] = pref * gauss[neg] * wofz(-1j * z[neg])
        full = np.sqrt(np.pi / a) * np.exp(-(w**2) / (4.0 * a))
        integral[~neg] = full - pref * gauss[~neg] * wofz(1j * z[~neg])
        val = -self.F0 * np.real(np.exp(1j * self.phase) * integral)
        return float(val[0]) if scalar else val

    def span(self, n_fwhm=3.0):
        """Symmetric time window (-n tau, n tau)."""
        return -n_fwhm * self.tau, n_fwhm * self.tau


@dataclass(frozen=True)
class StaticField:
    """Constant field switched on at t = 0: F(t) = F, A(t) = -F t."""

    F0: float

    def field(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.F0) if np.ndim(t) else float(self.F0)

    def vector_potential(self, t):
        return -self.F0 * np.asarray(t, dtype=float) if np.ndim(t) else -self.F0 * float(t)


@dataclass(frozen=True)
class PropagationPlan:
    t_start: float
    t_end: float
    dt: float
    method: str = "rk4"
    krylov_dim: int = 12

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigurationError("dt must be positive")
        if self.method not in ("rk4", "lanczos"):
            raise ConfigurationError(f"unknown propagation method {self.method!r}")
        if self.method == "lanczos" and self.krylov_dim < 2:
            raise ConfigurationError("Krylov dimension must be at least 2")

    @property
    def n_steps(self):
        return max(1, int(round((self.t_end - self.t_start) / self.dt)))

    @property
    def step(self):
        """Actual step length, adjusted so the window is covered exactly."""
        return (self.t_end - self.t_start) / self.n_steps


def rk4_step(y, t, dt, rhs):
    """One classical Runge-Kutta step of dy/dt = rhs(t, y)."""
    k1 = rhs(t, y)
    k2 = rhs(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = rhs(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = rhs(t + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _lanczos_hermitian(v, dt, apply, n, rtol):
    beta0 = np.linalg.norm(v)
    if beta0 == 0.0:
        return v.copy(), 0
    Q = np.zeros((n, v.size), dtype=complex)
    alpha = np.zeros(n)
    beta = np.zeros(n)
    Q[0] = v / beta0
    k_used = n
    scale = 0.0
    for k in range(n):
        r = apply(Q[k])
        alpha[k] = np.vdot(Q[k], r).real
        r = r - alpha[k] * Q[k]
        if k > 0:
            r -= beta[k - 1] * Q[k - 1]
        # full reorthogonalisation keeps the short recurrence honest
        r -= Q[: k + 1].T @ (Q[: k + 1].conj() @ r)
        b = np.linalg.norm(r)
        scale = max(scale, abs(alpha[k]), b)
        if k == n - 1:
            break
        if b <= max(BREAKDOWN_FLOOR, rtol * scale):
            k_used = k + 1
            break
        beta[k] = b
        Q[k + 1] = r / b
    m = k_used
    if m == 1:
        coef = np.array([np.exp(-1j * alpha[0] * dt)])
    else:
        d, U = eigh_tridiagonal(alpha[:m], beta[: m - 1])
        coef = U @ (np.exp(-1j * d * dt) * U[0])
    return beta0 * (coef @ Q[:m]), m


def _lanczos_symmetric(v, dt, apply, n, rtol):
    """Complex-symmetric Lanczos with the bilinear product x^T y."""
    beta0 = np.linalg.norm(v)
    if beta0 == 0.0:
        return v.copy(), 0
    Q = np.zeros((n, v.size), dtype=complex)
    T = np.zeros((n, n), dtype=complex)
    q0 = v / beta0
    s0 = np.sqrt(q0 @ q0)
    if abs(s0) < 1e-8:
        return _arnoldi(v, dt, apply, n, rtol)
    Q[0] = q0 / s0
    k_used = n
    scale = 0.0
    for k in range(n):
        r = apply(Q[k])
        T[k, k] = Q[k] @ r
        r = r - T[k, k] * Q[k]
        if k > 0:
            r -= T[k - 1, k] * Q[k - 1]
        r -= Q[: k + 1].T @ (Q[: k + 1] @ r)
        b = np.sqrt(r @ r)
        scale = max(scale, abs(T[k, k]), np.linalg.norm(r))
        if k == n - 1:
            break
        if np.linalg.norm(r) <= max(BREAKDOWN_FLOOR, rtol * scale):
            k_used = k + 1
            break
        if abs(b) < 1e-8 * np.linalg.norm(r):
            # near-isotropic vector: the bilinear recurrence would blow up
            return _arnoldi(v, dt, apply, n, rtol)
        T[k, k + 1] = T[k + 1, k] = b
        Q[k + 1] = r / b
    m = k_used
    E = expm(-1j * dt * T[:m, :m])
    # start vector is Q[0] * beta0 * s0 in the bilinear frame
    return beta0 * s0 * (E[:, 0] @ Q[:m]), m


def _arnoldi(v, dt, apply, n, rtol):
    beta0 = np.linalg.norm(v)
    if beta0 == 0.0:
        return v.copy(), 0
    Q = np.zeros((n, v.size), dtype=complex)
    Hm = np.zeros((n, n), dtype=complex)
    Q[0] = v / beta0
    k_used = n
    scale = 0.0
    for k in range(n):
        r = apply(Q[k])
        for _ in range(2):
            h = Q[: k + 1].conj() @ r
            r -= Q[: k + 1].T @ h
            Hm[: k + 1, k] += h
        b = np.linalg.norm(r)
        scale = max(scale, np.abs(Hm[: k + 1, k]).max(), b)
        if k == n - 1:
            break
        if b <= max(BREAKDOWN_FLOOR, rtol * scale):
            k_used = k + 1
            break
        Hm[k + 1, k] = b
        Q[k + 1] = r / b
    m = k_used
    E = expm(-1j * dt * Hm[:m, :m])
    return beta0 * (E[:, 0] @ Q[:m]), m


def lanczos_step(y, t, dt, H_apply, krylov_dim=12, kind="hermitian", rtol=1e-14):
    """Krylov approximation of exp(-i H(t + dt/2) dt) y.

    Parameters
    ----------
    H_apply : callable
        ``H_apply(x, t)`` returns H(t) x.
    kind : {"hermitian", "symmetric", "general"}
        Hermitian Lanczos, complex-symmetric Lanczos (bilinear product;
        valid when H^T = H, e.g. with an absorber in the length form) or
        Arnoldi for an arbitrary non-Hermitian operator.

    Returns
    -------
    ndarray
        The propagated vector.  The subspace size actually used is
        available through :func:`krylov_step` if needed.
    """
    return krylov_step(y, t, dt, H_apply, krylov_dim, kind, rtol)[0]


def krylov_step(y, t, dt, H_apply, krylov_dim=12, kind="hermitian", rtol=1e-14):
    tm = t + 0.5 * dt

    def apply(x):
        return H_apply(x, tm)

    y = np.asarray(y, dtype=complex)
    if kind == "hermitian":
        return _lanczos_hermitian(y, dt, apply, krylov_dim, rtol)
    if kind == "symmetric":
        return _lanczos_symmetric(y, dt, apply, krylov_dim, rtol)
    if kind == "general":
        return _arnoldi(y, dt, apply, krylov_dim, rtol)
    raise ConfigurationError(f"unknown Krylov variant {kind!r}")


@dataclass
class Trajectory:
    """Observables recorded during a propagation."""

    channel_labels: list
    times: list = field(default_factory=list)
    norm: list = field(default_factory=list)
    alpha0: list = field(default_factory=list)
    populations: list = field(default_factory=list)
    hook_times: list = field(default_factory=list)
    state: object = None

    def record(self, t, state):
        self.times.append(float(t))
        self.norm.append(state.norm())
        self.alpha0.append(complex(state.alpha0))
        self.populations.append([state.channel_population(c.index) for c in state.basis.channels])

    def as_arrays(self):
        return (
            np.array(self.times),
            np.array(self.norm),
            np.array(self.alpha0),
            np.array(self.populations).reshape(len(self.times), -1),
        )

    def write(self, path):
        with open(path, "w") as fh:
            fh.write("# t norm re_alpha0 im_alpha0 " + " ".join(f"pop_{l}" for l in self.channel_labels) + "\n")
            for t, n, a, pops in zip(self.times, self.norm, self.alpha0, self.populations):
                cols = [t, n, a.real, a.imag, *pops]
                fh.write(" ".join(f"{v:.17g}" for v in cols) + "\n")


def krylov_kind(hamiltonian):
    if not hamiltonian.has_cap:
        return "hermitian"
    return "symmetric" if hamiltonian.complex_symmetric else "general"


def propagate(state, plan, pulse, hamiltonian, hooks=(), record_every=1, rhs=None):
    """Propagate a CISState over ``plan`` and return a Trajectory.

    Parameters
    ----------
    state : CISState
        Initial state; it is copied, not modified.
    plan : PropagationPlan
    pulse : Pulse or None
        None (or F0 = 0) propagates field-free.
    hamiltonian : CISHamiltonian
    hooks : sequence of (time, callable)
        Each callable receives ``(state, t)`` at the step boundary nearest
        to its requested time and may modify the state in place.
    record_every : int
        Observables are recorded every that many steps (and at the end).
    rhs : callable, optional
        Replaces the operator-based derivative for RK4: ``rhs(t, y)``.

    Raises
    ------
    NumericalError
        If the amplitudes become non-finite; ``details["step"]`` gives the
        offending step index.
    """
    if hamiltonian.basis is not state.basis:
        raise ValueError("Hamiltonian and state live on different bases")
    state = state.copy()
    n = plan.n_steps
    dt = plan.step
    t0 = plan.t_start
    pending = sorted(
        ((min(n, max(0, int(round((th - t0) / dt)))), th, fn) for th, fn in hooks), key=lambda h: h[0]
    )
    traj = Trajectory([c.label for c in state.basis.channels])

    def coupling(t):
        return hamiltonian.field_term(t, pulse)

    def H_apply(x, t):
        return hamiltonian.apply(x, coupling(t))

    if rhs is None:

        def rhs(t, y):
            return -1j * H_apply(y, t)

    kind = krylov_kind(hamiltonian)
    traj.record(t0, state)
    y = state.vector
    hook_pos = 0
    for k in range(n + 1):
        while hook_pos < len(pending) and pending[hook_pos][0] == k:
            _, th, fn = pending[hook_pos]
            state.vector = y
            fn(state, t0 + k * dt)
            y = state.vector
            traj.hook_times.append((float(th), float(t0 + k * dt)))
            hook_pos += 1
        if k == n:
            break
        t = t0 + k * dt
        if plan.method == "rk4":
            y = rk4_step(y, t, dt, rhs)
        else:
            y = krylov_step(y, t, dt, H_apply, plan.krylov_dim, kind)[0]
        if not np.all(np.isfinite(y)):
            raise NumericalError(f"non-finite amplitudes after step {k}", step=k)
        if (k + 1) % record_every == 0 or k + 1 == n:
            state.vector = y
            traj.record(t + dt, state)
    state.vector = y
    traj.state = state
    return traj
