"""Manufactured solutions and convergence ladders.

A manufactured solution is ``y(t, r, theta) = exp(alpha t) g(r) Y_m(theta)`` with
``Y_m`` one of ``cos(m theta)``, ``sin(m theta)`` and ``g`` a Laurent polynomial
in ``r``.  Since ``L_m r^k = (k^2 - m^2) r^(k-2)`` every operator in the system
acts in closed form:

* bulk forcing   ``f = exp(alpha t) (alpha g + d L_m^2 g) Y_m``
* surface trace  ``y_Gamma = exp(alpha t) gamma_R Y_m`` with ``gamma_R = g(R) - kappa s_R (L_m g)'(R)``
* surface forcing ``f_Gamma = exp(alpha t) (alpha gamma_R + delta m^4/R^4 gamma_R - d s_R (L_m g)'(R)) Y_m``

where ``s_R = -1`` on the inner circle and ``+1`` on the outer one (outer normal
``+-e_r``).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from . import kernels
from .assembly import Discretization, StateVector
from .evolution import ForcingSpec, ForcingTerm, ThetaStepper, duhamel_exact
from .geometry import DomainConfig
from .spectral import global_spectrum

NEUMANN_TOL = 1e-12


class ManufacturedError(ValueError):
    """Manufactured function is not admissible (e.g. violates the Neumann condition)."""


@dataclass(frozen=True)
class LaurentPoly:
    """``sum_k c_k r^k`` over integer exponents ``k``."""

    terms: tuple  # ((k, c), ...) sorted by k, zero coefficients dropped

    @classmethod
    def from_dict(cls, coeffs: dict) -> "LaurentPoly":
        return cls(tuple(sorted((int(k), float(c)) for k, c in coeffs.items() if c != 0.0)))

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for k, c in self.terms:
            out = out + c * r**k
        return out

    def deriv(self) -> "LaurentPoly":
        return LaurentPoly.from_dict({k - 1: k * c for k, c in self.terms if k != 0})

    def apply_L(self, m: int) -> "LaurentPoly":
        """``L_m p = p'' + p'/r - m^2 p / r^2`` term by term."""
        out: dict = {}
        for k, c in self.terms:
            out[k - 2] = out.get(k - 2, 0.0) + (k * k - m * m) * c
        return LaurentPoly.from_dict(out)

    def __add__(self, other: "LaurentPoly") -> "LaurentPoly":
        out = dict(self.terms)
        for k, c in other.terms:
            out[k] = out.get(k, 0.0) + c
        return LaurentPoly.from_dict(out)

    def scale(self, s: float) -> "LaurentPoly":
        return LaurentPoly.from_dict({k: s * c for k, c in self.terms})


def neumann_quartic(R0: float, R1: float, const: float = 0.0) -> LaurentPoly:
    """``g`` with ``g'(r) = r (r - R0)(r - R1)``."""
    return LaurentPoly.from_dict(
        {4: 0.25, 3: -(R0 + R1) / 3.0, 2: 0.5 * R0 * R1, 0: const}
    )


@dataclass(frozen=True)
class Manufactured:
    """``amplitude * exp(alpha t) * g(r) * (cos | sin)(m theta)``."""

    g: LaurentPoly
    m: int = 0
    branch: int = 0
    alpha: float = -1.0
    amplitude: float = 1.0

    def angular(self, theta):
        theta = np.asarray(theta, dtype=float)
        return np.cos(self.m * theta) if self.branch == 0 else np.sin(self.m * theta)


@dataclass
class ManufacturedProfiles:
    """Radial and circle data of one manufactured term for a given config."""

    term: Manufactured
    bulk: LaurentPoly  # g
    bulk_forcing: LaurentPoly  # alpha g + d L_m^2 g
    gamma: tuple  # surface amplitude on (inner, outer)
    surface_forcing: tuple


def _profiles(config: DomainConfig, term: Manufactured) -> ManufacturedProfiles:
    if term.m == 0 and term.branch == 1:
        raise ManufacturedError("mode 0 has no sin branch")
    g = term.g
    dg = g.deriv()
    scale = max(1.0, max(abs(c) for _, c in g.terms) if g.terms else 1.0)
    for R in config.radii:
        slope = float(dg(R))
        if abs(slope) > NEUMANN_TOL * scale:
            raise ManufacturedError(f"g'({R}) = {slope:.3e} violates the Neumann condition")
    m = term.m
    Lg = g.apply_L(m)
    dLg = Lg.deriv()
    bulk_forcing = g.scale(term.alpha) + Lg.apply_L(m).scale(config.d)
    gamma, surface = [], []
    for s, R in zip((-1.0, 1.0), config.radii):
        flux = s * float(dLg(R))  # d_nu (L_m g) at the circle
        gR = float(g(R)) - config.kappa * flux
        gamma.append(gR)
        surface.append(term.alpha * gR + config.delta * (m**4 / R**4) * gR - config.d * flux)
    return ManufacturedProfiles(term, g, bulk_forcing, tuple(gamma), tuple(surface))


def _project_profile(disc: Discretization, m: int, radial, circle_values) -> np.ndarray:
    """Mass projection of ``(radial(r), circle_values)`` onto the mode-``m`` space."""
    mesh = disc.mesh
    rq = mesh.quad_points.ravel()
    wq = mesh.quad_weights.ravel()
    sys = disc.systems[m]
    phi = kernels.basis_matrix(np.ascontiguousarray(mesh.nodes), rq)[:, disc.layout.bulk_keep]
    n_b = disc.layout.n_bulk
    load = np.zeros(disc.n_dof)
    load[:n_b] = sys.angular_factor * (phi.T @ (wq * rq * radial(rq)))
    load[n_b:] = sys.angular_factor * np.array(disc.config.radii) * np.asarray(circle_values)
    return sla.cho_solve(sla.cho_factor(sys.M), load)


@dataclass
class MMSPair:
    forcing: ForcingSpec
    initial: StateVector
    profiles: list = field(repr=False)

    def exact(self, t: float, r, theta):
        """Bulk solution ``y(t, r, theta)``."""
        total = 0.0
        for p in self.profiles:
            tm = p.term
            total = total + tm.amplitude * math.exp(tm.alpha * t) * p.bulk(r) * tm.angular(theta)
        return total

    def exact_surface(self, t: float, circle: int, theta):
        """``y_Gamma(t, theta)`` on circle 0 (inner) or 1 (outer)."""
        total = 0.0
        for p in self.profiles:
            tm = p.term
            total = total + tm.amplitude * math.exp(tm.alpha * t) * p.gamma[circle] * tm.angular(theta)
        return total

    def forcing_bulk(self, t: float, r, theta):
        total = 0.0
        for p in self.profiles:
            tm = p.term
            total = total + tm.amplitude * math.exp(tm.alpha * t) * p.bulk_forcing(r) * tm.angular(theta)
        return total

    def forcing_surface(self, t: float, circle: int, theta):
        total = 0.0
        for p in self.profiles:
            tm = p.term
            total = total + tm.amplitude * math.exp(tm.alpha * t) * p.surface_forcing[circle] * tm.angular(theta)
        return total


def mms_pair(disc: Discretization, manufactured: Manufactured | Sequence[Manufactured]) -> MMSPair:
    """Forcing, projected initial data and exact sampler for a manufactured solution."""
    terms = [manufactured] if isinstance(manufactured, Manufactured) else list(manufactured)
    profiles = [_profiles(disc.config, tm) for tm in terms]
    u0 = disc.zeros()
    forcing_terms = []
    for p in profiles:
        tm = p.term
        if tm.m > disc.m_max:
            raise ManufacturedError(f"manufactured mode {tm.m} exceeds m_max = {disc.m_max}")
        u0.coeffs[tm.m, tm.branch] += tm.amplitude * _project_profile(disc, tm.m, p.bulk, p.gamma)
        vec = _project_profile(disc, tm.m, p.bulk_forcing, p.surface_forcing)
        forcing_terms.append(ForcingTerm(tm.m, tm.branch, vec, alpha=tm.alpha, amplitude=tm.amplitude))
    return MMSPair(ForcingSpec(forcing_terms), u0, profiles)


def l2_error(disc: Discretization, u: StateVector, pair: MMSPair, t: float) -> float:
    """mu-L2 distance between ``u`` and the manufactured ``(y, y_Gamma)`` at time ``t``.

    Computed per Fourier mode with the element quadrature in ``r``.
    """
    mesh = disc.mesh
    rq = mesh.quad_points.ravel()
    wq = mesh.quad_weights.ravel()
    phi = kernels.basis_matrix(np.ascontiguousarray(mesh.nodes), rq)[:, disc.layout.bulk_keep]
    n_b = disc.layout.n_bulk
    radii = np.array(disc.config.radii)
    exact_bulk = np.zeros((disc.m_max + 1, 2, rq.size))
    exact_surf = np.zeros((disc.m_max + 1, 2, 2))
    for p in pair.profiles:
        tm = p.term
        amp = tm.amplitude * math.exp(tm.alpha * t)
        exact_bulk[tm.m, tm.branch] += amp * p.bulk(rq)
        exact_surf[tm.m, tm.branch] += amp * np.array(p.gamma)
    total = 0.0
    for m, sys in enumerate(disc.systems):
        for b in range(2):
            eb = phi @ u.coeffs[m, b, :n_b] - exact_bulk[m, b]
            es = u.coeffs[m, b, n_b:] - exact_surf[m, b]
            total += sys.angular_factor * (float(wq @ (rq * eb * eb)) + float(radii @ (es * es)))
    return math.sqrt(total)


def builtin_solutions(config: DomainConfig) -> list:
    """Quartic Neumann profiles on modes 0 and 1 with ``exp(-t)`` decay."""
    g = neumann_quartic(config.R0, config.R1)
    return [Manufactured(g, m=0, alpha=-1.0), Manufactured(g, m=1, branch=0, alpha=-1.0, amplitude=0.5)]


def observed_orders(errors: Sequence[float], ratio: float = 2.0) -> list:
    e = np.asarray(errors, dtype=float)
    return [float(math.log(e[i] / e[i + 1]) / math.log(ratio)) for i in range(e.size - 1)]


@dataclass
class LadderResult:
    kind: str  # "space" or "time"
    steps: list  # n_elem values or dt values
    errors: list
    orders: list

    def rows(self):
        for i, (s, e) in enumerate(zip(self.steps, self.errors)):
            yield self.kind, s, e, (self.orders[i - 1] if i > 0 else math.nan)


def _ladder_config(config: DomainConfig, manufactured, **changes) -> DomainConfig:
    m_needed = max(tm.m for tm in manufactured)
    return config.replace(m_max=m_needed, **changes)


def spatial_ladder(
    config: DomainConfig,
    manufactured: Sequence[Manufactured] | None = None,
    n_elems: Sequence[int] = (16, 32, 64, 128),
    T: float = 0.5,
) -> LadderResult:
    """Semi-discrete L2 error at ``T`` (time integrated exactly) over mesh refinement."""
    manufactured = list(manufactured or builtin_solutions(config))
    errors = []
    for n in n_elems:
        cfg = _ladder_config(config, manufactured, n_elem=int(n))
        dec = global_spectrum(Discretization(cfg))
        pair = mms_pair(dec.disc, manufactured)
        u = duhamel_exact(dec, pair.initial, pair.forcing, T)
        errors.append(l2_error(dec.disc, u, pair, T))
    return LadderResult("space", [int(n) for n in n_elems], errors, observed_orders(errors))


def temporal_ladder(
    config: DomainConfig,
    manufactured: Sequence[Manufactured] | None = None,
    dts: Sequence[float] = (1e-2, 5e-3, 2.5e-3),
    theta: float = 0.5,
    T: float = 0.1,
    n_elem: int = 32,
) -> LadderResult:
    """Theta-scheme error against the exact semi-discrete solution at ``T``."""
    manufactured = list(manufactured or builtin_solutions(config))
    cfg = _ladder_config(config, manufactured, n_elem=n_elem)
    dec = global_spectrum(Discretization(cfg))
    disc = dec.disc
    pair = mms_pair(disc, manufactured)
    ref = duhamel_exact(dec, pair.initial, pair.forcing, T)
    errors = []
    for dt in dts:
        n_steps = round(T / dt)
        if abs(n_steps * dt - T) > 1e-9 * T:
            raise ValueError(f"T = {T} is not a multiple of dt = {dt}")
        stepper = ThetaStepper(dec, dt, theta)
        c = pair.initial.coeffs.copy()
        f_prev = pair.forcing.sample(disc, 0.0)
        for n in range(1, n_steps + 1):
            f_next = pair.forcing.sample(disc, n * dt)
            c = stepper.step(c, f_prev, f_next)
            f_prev = f_next
        errors.append(disc.m_norm_coeffs(c - ref.coeffs))
    ratio = dts[0] / dts[1] if len(dts) > 1 else 2.0
    return LadderResult("time", [float(dt) for dt in dts], errors, observed_orders(errors, ratio))


LADDER_HEADER = ("ladder", "step", "error", "order")


def write_ladders_csv(path: str | Path, ladders: Sequence[LadderResult]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LADDER_HEADER)
        for ladder in ladders:
            for kind, step, err, order in ladder.rows():
                writer.writerow((kind, f"{step:.17g}", f"{err:.17g}", f"{order:.17g}"))
