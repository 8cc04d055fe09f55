"""Spectral propagator, theta-scheme time stepping and Duhamel forcing.

All solvers act on the per-mode coefficient arrays of a ``StateVector``.  The
theta-scheme

    (M + theta dt K) u+ = (M - (1 - theta) dt K) u + dt M (theta f+ + (1 - theta) f)

is solved either in the M-orthonormal eigenbasis of each mode (default; the
basis diagonalises ``M + theta dt K`` and is cached with the decomposition) or
with a cached Cholesky factor of the assembled matrix.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla
from scipy.integrate import trapezoid

from .assembly import BRANCHES, Discretization, ModeSystem, StateVector, form_energy, project_function
from .spectral import SpectralDecomposition, global_spectrum


class NumericalAbort(RuntimeError):
    """Non-finite values appeared during time stepping."""

    def __init__(self, time: float, message: str = ""):
        self.time = time
        super().__init__(message or f"non-finite state at t = {time:.17g}")


class SchemeError(RuntimeError):
    """Factorization of the implicit operator failed."""


def _require_complete(dec: SpectralDecomposition) -> None:
    if not dec.complete:
        raise ValueError(
            f"decomposition has {dec.k_per_mode} eigenpairs per mode; the expansion needs all {dec.disc.n_dof}"
        )


def _phi1(z: np.ndarray) -> np.ndarray:
    """``(exp(z) - 1) / z`` with the removable singularity filled."""
    z = np.asarray(z, dtype=float)
    out = np.ones_like(z)
    nz = z != 0.0
    out[nz] = np.expm1(z[nz]) / z[nz]
    return out


# ---------------------------------------------------------------------------
# forcing


@dataclass(frozen=True)
class ForcingTerm:
    """``amplitude * exp(alpha t) * time_fn(t) * vector`` on one mode and branch.

    ``time_fn`` is optional; without it the term is a pure exponential and the
    exact Duhamel integral is available in closed form.
    """

    m: int
    branch: int
    vector: np.ndarray = field(repr=False)
    alpha: float = 0.0
    amplitude: float = 1.0
    time_fn: Callable[[float], float] | None = None

    def factor(self, t: float) -> float:
        value = self.amplitude * math.exp(self.alpha * t)
        if self.time_fn is not None:
            value *= float(self.time_fn(t))
        return value


class ForcingSpec:
    """Right-hand side ``(f, f_Gamma)`` as a time-dependent coefficient array.

    Built from separable ``ForcingTerm`` entries, from a callable returning full
    coefficient arrays, or from closed-form functions projected at each sample
    time.
    """

    def __init__(self, terms: Sequence[ForcingTerm] = (), sampler: Callable[[float], np.ndarray] | None = None):
        self.terms = tuple(terms)
        self.sampler = sampler
        for term in self.terms:
            if term.m == 0 and term.branch == 1:
                raise ValueError("mode 0 has no sin branch")
            if not np.all(np.isfinite(term.vector)):
                raise ValueError("forcing vector has non-finite entries")

    @classmethod
    def zero(cls) -> "ForcingSpec":
        return cls()

    @classmethod
    def constant(cls, state: StateVector) -> "ForcingSpec":
        terms = []
        for m in range(state.m_max + 1):
            for b in range(2):
                v = state.coeffs[m, b]
                if np.any(v != 0.0):
                    terms.append(ForcingTerm(m, b, v.copy()))
        return cls(terms)

    @classmethod
    def from_functions(cls, disc: Discretization, f, f_gamma=None) -> "ForcingSpec":
        """Project ``f(t, r, theta)`` and ``f_gamma = (g_in(t, theta), g_out(t, theta))`` at each sample time."""
        cache: dict = {}

        def sampler(t: float) -> np.ndarray:
            if t not in cache:
                fg = None
                if f_gamma is not None:
                    fg = tuple((lambda th, g=g: g(t, th)) for g in f_gamma)
                state, _ = project_function(disc, lambda r, th: f(t, r, th), fg)
                cache[t] = state.coeffs
            return cache[t]

        return cls(sampler=sampler)

    @property
    def is_zero(self) -> bool:
        return not self.terms and self.sampler is None

    @property
    def is_exponential(self) -> bool:
        return self.sampler is None and all(term.time_fn is None for term in self.terms)

    def sample(self, disc: Discretization, t: float) -> np.ndarray:
        out = np.zeros((disc.m_max + 1, 2, disc.n_dof))
        for term in self.terms:
            if term.m > disc.m_max:
                raise ValueError(f"forcing on mode {term.m} exceeds m_max = {disc.m_max}")
            out[term.m, term.branch] += term.factor(t) * term.vector
        if self.sampler is not None:
            out += self.sampler(t)
        if not np.all(np.isfinite(out)):
            raise NumericalAbort(t, f"forcing is non-finite at t = {t:.17g}")
        return out


# ---------------------------------------------------------------------------
# spectral propagator


def propagate_coefficients(dec: SpectralDecomposition, u0: StateVector, times) -> np.ndarray:
    """Coefficient arrays ``(len(times), modes, 2, n_dof)`` of ``exp(tA) u0``."""
    _require_complete(dec)
    dec.disc.check(u0)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times < 0):
        raise ValueError("times must be nonnegative")
    a = dec.modal(u0.coeffs)  # (modes, 2, k)
    decay = np.exp(-times[:, None, None] * dec.value_stack[None])  # (T, modes, k)
    return dec.nodal(decay[:, :, None, :] * a[None])


def propagate_spectral(dec: SpectralDecomposition, u0: StateVector, t: float) -> StateVector:
    """``sum_n exp(-lam_n t) <u0, Phi_n>_M Phi_n``."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    return u0.with_coeffs(propagate_coefficients(dec, u0, [t])[0])


def duhamel_exact(dec: SpectralDecomposition, u0: StateVector, forcing: ForcingSpec, t: float) -> StateVector:
    """Semi-discrete solution at ``t`` with exponential forcing integrated in closed form."""
    if not forcing.is_exponential:
        raise ValueError("closed-form Duhamel integral needs purely exponential forcing terms")
    u = propagate_spectral(dec, u0, t)
    coeffs = u.coeffs.copy()
    for term in forcing.terms:
        sys = dec.disc.systems[term.m]
        vecs, lam = dec.vectors[term.m], dec.values[term.m]
        g = vecs.T @ (sys.M @ term.vector)
        # int_0^t exp(-lam (t - s)) exp(alpha s) ds = t exp(alpha t) phi1(-(lam + alpha) t)
        weight = term.amplitude * t * math.exp(term.alpha * t) * _phi1(-(lam + term.alpha) * t)
        coeffs[term.m, term.branch] += vecs @ (weight * g)
    return u.with_coeffs(coeffs)


# ---------------------------------------------------------------------------
# theta scheme


def amplification(lam: np.ndarray, dt: float, theta: float) -> np.ndarray:
    """Eigenvalue map ``(1 - (1 - theta) dt lam) / (1 + theta dt lam)`` of the scheme."""
    lam = np.asarray(lam, dtype=float)
    return (1.0 - (1.0 - theta) * dt * lam) / (1.0 + theta * dt * lam)


def _check_step(dt: float, theta: float) -> None:
    if not (dt > 0 and math.isfinite(dt)):
        raise ValueError(f"dt must be positive and finite, got {dt}")
    if not 0.5 <= theta <= 1.0:
        raise ValueError(f"theta must lie in [1/2, 1], got {theta}")


_CHOLESKY_CACHE: dict = {}


def _cholesky(sys: ModeSystem, dt: float, theta: float):
    key = (id(sys), dt, theta)
    hit = _CHOLESKY_CACHE.get(key)
    if hit is not None and hit[0] is sys:
        return hit[1]
    try:
        factor = sla.cho_factor(sys.M + theta * dt * sys.K)
    except sla.LinAlgError as exc:
        raise SchemeError(f"mode {sys.m}: M + theta dt K is not positive definite") from exc
    if len(_CHOLESKY_CACHE) > 256:
        _CHOLESKY_CACHE.clear()
    _CHOLESKY_CACHE[key] = (sys, factor)
    return factor


def step_theta(sys: ModeSystem, u: np.ndarray, f_n, f_np1, dt: float, theta: float = 0.5) -> np.ndarray:
    """One theta-scheme step for a single mode with a cached Cholesky factor.

    ``u``, ``f_n`` and ``f_np1`` are coefficient vectors (or stacks of them
    along the first axis); ``None`` forcing means zero.
    """
    _check_step(dt, theta)
    u = np.asarray(u, dtype=float)
    rhs = u @ sys.M - (1.0 - theta) * dt * (u @ sys.K)
    if f_n is not None or f_np1 is not None:
        f_n = 0.0 if f_n is None else np.asarray(f_n, dtype=float)
        f_np1 = 0.0 if f_np1 is None else np.asarray(f_np1, dtype=float)
        rhs = rhs + dt * ((theta * f_np1 + (1.0 - theta) * f_n) @ sys.M)
    return sla.cho_solve(_cholesky(sys, dt, theta), rhs.T).T


class ThetaStepper:
    """Theta-scheme for all modes at fixed ``(dt, theta)``.

    ``solver="eigen"`` applies the scheme in the M-orthonormal eigenbasis: with
    ``M + theta dt K = M Phi (I + theta dt Lam) Phi^T M`` the step multiplies each
    eigencoefficient by the amplification factor, so the kernel coefficient is
    carried over exactly.  ``solver="cholesky"`` uses :func:`step_theta`.
    """

    def __init__(self, dec: SpectralDecomposition, dt: float, theta: float = 0.5, solver: str = "eigen"):
        _check_step(dt, theta)
        if solver not in ("eigen", "cholesky"):
            raise ValueError(f"unknown solver {solver!r}")
        if solver == "eigen":
            _require_complete(dec)
        self.dec, self.dt, self.theta, self.solver = dec, float(dt), float(theta), solver
        lam = np.stack(dec.values)
        self.gain = amplification(lam, dt, theta)
        self.load = dt / (1.0 + theta * dt * lam)

    def step(self, coeffs: np.ndarray, f_n: np.ndarray | None = None, f_np1: np.ndarray | None = None) -> np.ndarray:
        th = self.theta
        f_mix = None
        if f_n is not None or f_np1 is not None:
            f_mix = np.zeros_like(coeffs)
            if f_n is not None:
                f_mix += (1.0 - th) * f_n
            if f_np1 is not None:
                f_mix += th * f_np1
        if self.solver == "cholesky":
            out = np.empty_like(coeffs)
            for m, sys in enumerate(self.dec.disc.systems):
                f = None if f_mix is None else f_mix[m]
                out[m] = step_theta(sys, coeffs[m], f, f, self.dt, th)
            out[0, 1] = 0.0
            return out
        a = self.dec.modal(coeffs) * self.gain[:, None, :]
        if f_mix is not None:
            a = a + self.load[:, None, :] * self.dec.modal(f_mix)
        return self.dec.nodal(a)


# ---------------------------------------------------------------------------
# trajectories


TRAJECTORY_HEADER = ("t", "m_norm", "mu_mass", "min_value", "energy")


@dataclass
class Trajectory:
    times: np.ndarray
    m_norm: np.ndarray
    mu_mass: np.ndarray
    min_value: np.ndarray
    energy: np.ndarray
    states: list | None = field(default=None, repr=False)
    snapshots: list = field(default_factory=list, repr=False)  # (t, StateVector)
    max_step_growth: float = 0.0  # max over steps of (|u+|_M - |u|_M) / |u|_M
    forcing_norm: float = 0.0  # |F|_{L2(0,T; M)} by the trapezoidal rule
    energy_constant: float = 0.0  # max_t |u|_M / (|u0|_M + |F|)

    def __post_init__(self):
        n = len(self.times)
        if n == 0 or self.times[0] != 0.0 or np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must start at 0 and increase strictly")
        for name in ("m_norm", "mu_mass", "min_value", "energy"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"diagnostic {name} is not aligned with times")

    def mass_drift(self) -> float:
        ref = abs(self.mu_mass[0])
        scale = ref if ref > 0 else max(1.0, float(np.max(np.abs(self.mu_mass))))
        return float(np.max(np.abs(self.mu_mass - self.mu_mass[0])) / scale)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRAJECTORY_HEADER)
            for row in zip(self.times, self.m_norm, self.mu_mass, self.min_value, self.energy):
                writer.writerow([f"{v:.17g}" for v in row])


def _step_count(T: float, dt: float) -> int:
    if not (T > 0 and math.isfinite(T)):
        raise ValueError(f"T must be positive and finite, got {T}")
    if not 0 < dt <= T:
        raise ValueError(f"need 0 < dt <= T, got dt={dt}, T={T}")
    n = round(T / dt)
    if abs(n * dt - T) > 1e-9 * T:
        raise ValueError(f"T = {T} is not an integer multiple of dt = {dt}")
    return n


def duhamel_evolve(
    dec: SpectralDecomposition,
    u0: StateVector,
    forcing: ForcingSpec | None,
    T: float,
    dt: float,
    theta: float = 0.5,
    *,
    record_every: int = 1,
    snapshot_every: int = 0,
    keep_states: bool = False,
    grid=None,
    solver: str = "eigen",
    startup: int = 0,
) -> Trajectory:
    """Advance ``u0`` to ``T`` with the theta-scheme, recording diagnostics.

    With the eigenbasis solver the state is carried as modal coefficients
    ``a`` and nodal values are synthesised only when needed; the M-norm is then
    ``|a|``, the mu-mass ``sum_j a_j <Phi_j, 1>_M`` and the energy
    ``sum_j lam_j a_j^2``.  ``grid`` is an :class:`~dynbiharm.grid.EvaluationGrid`
    for the pointwise minimum; without one that column is NaN.  Non-finite
    states raise :class:`NumericalAbort` carrying the time of the failed step.

    ``startup > 0`` replaces the first step by that many implicit Euler steps of
    size ``dt / startup`` (Rannacher start-up).  For ``theta = 1/2`` this damps
    the stiff components of rough data, whose amplification factor is close to
    ``-1``, without lowering the order of the scheme.
    """
    disc = dec.disc
    disc.check(u0)
    forcing = forcing or ForcingSpec.zero()
    n_steps = _step_count(T, dt)
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    if startup < 0:
        raise ValueError("startup must be >= 0")
    stepper = ThetaStepper(dec, dt, theta, solver)
    starter = ThetaStepper(dec, dt / startup, 1.0, solver) if startup else None

    if solver == "eigen":
        lam = dec.value_stack[:, None, :]
        to_space = dec.modal
        to_nodal = dec.nodal

        def advance(x, g_mix, st=stepper):
            x = x * st.gain[:, None, :]
            return x if g_mix is None else x + st.load[:, None, :] * g_mix

        def norm(x):
            return math.sqrt(float(np.sum(x * x)))

        def energy(x):
            return float(np.sum(lam * x * x))

        def mass(x):
            return float(x[0, 0] @ dec.mass_functional)

    else:

        def to_space(c):
            return c

        def to_nodal(c):
            return c

        def advance(x, f_mix, st=stepper):
            return st.step(x, f_mix, f_mix)

        norm = disc.m_norm_coeffs

        def energy(x):
            return form_energy(disc, u0.with_coeffs(x))

        def mass(x):
            return disc.mu_mass(u0.with_coeffs(x))

    times, norms, masses, minima, energies = [], [], [], [], []
    states = [] if keep_states else None
    snapshots = []

    def record(t, x):
        times.append(t)
        norms.append(norm(x))
        masses.append(mass(x))
        energies.append(energy(x))
        if grid is not None or states is not None:
            u = u0.with_coeffs(to_nodal(x))
            minima.append(grid.minimum(u).value if grid is not None else math.nan)
            if states is not None:
                states.append(u)
        else:
            minima.append(math.nan)

    x = to_space(u0.coeffs.copy())
    record(0.0, x)
    if snapshot_every:
        snapshots.append((0.0, u0))
    g_prev = None if forcing.is_zero else to_space(forcing.sample(disc, 0.0))
    f_sq = [0.0 if g_prev is None else norm(g_prev) ** 2]
    prev_norm = norms[0]
    worst = -math.inf
    for n in range(1, n_steps + 1):
        t = n * dt
        g_next = None if forcing.is_zero else to_space(forcing.sample(disc, t))
        if n == 1 and starter is not None:
            h = dt / startup
            for j in range(1, startup + 1):
                g_sub = None
                if g_next is not None:
                    g_sub = g_next if j == startup else to_space(forcing.sample(disc, j * h))
                x = advance(x, g_sub, starter)
        else:
            g_mix = None if g_next is None else theta * g_next + (1.0 - theta) * g_prev
            x = advance(x, g_mix)
        if not np.all(np.isfinite(x)):
            raise NumericalAbort(t)
        cur = norm(x)
        if prev_norm > 0:
            worst = max(worst, (cur - prev_norm) / prev_norm)
        prev_norm = cur
        f_sq.append(0.0 if g_next is None else norm(g_next) ** 2)
        g_prev = g_next
        if n % record_every == 0 or n == n_steps:
            record(t, x)
        if snapshot_every and (n % snapshot_every == 0 or n == n_steps):
            snapshots.append((t, u0.with_coeffs(to_nodal(x))))

    f_norm = math.sqrt(trapezoid(f_sq, dx=dt))
    denom = norms[0] + f_norm
    const = max(norms) / denom if denom > 0 else 0.0
    return Trajectory(
        times=np.array(times),
        m_norm=np.array(norms),
        mu_mass=np.array(masses),
        min_value=np.array(minima),
        energy=np.array(energies),
        states=states,
        snapshots=snapshots,
        max_step_growth=worst if worst > -math.inf else 0.0,
        forcing_norm=f_norm,
        energy_constant=const,
    )


def evolve(config_or_disc, u0: StateVector, forcing: ForcingSpec | None, T: float, dt: float, theta: float = 0.5, **kw) -> Trajectory:
    """Convenience wrapper that builds the decomposition first."""
    dec = config_or_disc if isinstance(config_or_disc, SpectralDecomposition) else global_spectrum(config_or_disc)
    return duhamel_evolve(dec, u0, forcing, T, dt, theta, **kw)


# ---------------------------------------------------------------------------
# snapshots


def write_snapshots(path_field: str | Path, path_surface: str | Path, grid, snapshots) -> None:
    """Field snapshots ``(t, r, theta, y)`` and boundary snapshots ``(t, circle, theta, y_Gamma)``."""
    with open(path_field, "w", newline="") as ff, open(path_surface, "w", newline="") as fs:
        wf, ws = csv.writer(ff), csv.writer(fs)
        wf.writerow(("t", "r", "theta", "y"))
        ws.writerow(("t", "circle", "theta", "y_Gamma"))
        for t, u in snapshots:
            bulk, surf = grid.values(u)
            for i, r in enumerate(grid.r):
                for j, th in enumerate(grid.theta):
                    wf.writerow((f"{t:.17g}", f"{r:.17g}", f"{th:.17g}", f"{bulk[i, j]:.17g}"))
            for k, name in enumerate(("inner", "outer")):
                for j, th in enumerate(grid.theta):
                    ws.writerow((f"{t:.17g}", name, f"{th:.17g}", f"{surf[k, j]:.17g}"))


__all__ = [
    "BRANCHES",
    "ForcingSpec",
    "ForcingTerm",
    "NumericalAbort",
    "SchemeError",
    "ThetaStepper",
    "Trajectory",
    "amplification",
    "duhamel_evolve",
    "duhamel_exact",
    "evolve",
    "propagate_coefficients",
    "propagate_spectral",
    "step_theta",
    "write_snapshots",
]
