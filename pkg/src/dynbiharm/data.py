"""Initial data: nonnegative bumps, seeded families and eigenfunction-based states.

Bumps are Hermite interpolants with nonnegative nodal values and zero
derivative DOFs.  On every element such a function is a convex combination of
the two nodal values (the Hermite value shapes are nonnegative and sum to one),
so it is nonnegative everywhere and its maximum is the largest nodal value.
Angular profiles are the nonnegative trigonometric polynomials
``((1 + cos(theta - theta0)) / 2)^p``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .assembly import Discretization, StateVector
from .spectral import SpectralDecomposition, SpectrumEntry, mode_eigenvector_state


def angular_coefficients(p: int, theta0: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """cos/sin coefficients of ``((1 + cos(theta - theta0)) / 2)^p`` for modes ``0..p``.

    Uses ``cos^{2p}(phi/2) = 4^{-p} (C(2p, p) + 2 sum_k C(2p, p - k) cos(k phi))``.
    """
    if p < 0:
        raise ValueError("p must be >= 0")
    k = np.arange(p + 1)
    c = np.array([math.comb(2 * p, p - j) for j in k], dtype=float) / 4.0**p
    c[1:] *= 2.0
    return c * np.cos(k * theta0), c * np.sin(k * theta0)


def nodal_state(disc: Discretization, radial_values: np.ndarray, p: int = 0, theta0: float = 0.0) -> StateVector:
    """State with nodal values ``radial_values`` (zero slopes) times the angular profile.

    Surface unknowns take the boundary nodal values, i.e. ``y_Gamma`` is the trace.
    """
    values = np.asarray(radial_values, dtype=float)
    if values.shape != (disc.config.n_elem + 1,):
        raise ValueError("need one value per radial node")
    if p > disc.m_max:
        raise ValueError(f"angular degree {p} exceeds m_max = {disc.m_max}")
    layout = disc.layout
    radial = np.zeros(disc.n_dof)
    radial[layout.value_dofs] = values
    radial[list(layout.surface_dofs)] = values[[0, -1]]
    a, b = angular_coefficients(p, theta0)
    u = disc.zeros()
    for m in range(p + 1):
        u.coeffs[m, 0] = a[m] * radial
        if m > 0:
            u.coeffs[m, 1] = b[m] * radial
    return u


def bump_profile(r, center: float, width: float, plateau: float = 0.0, clip: float = 0.01) -> np.ndarray:
    """Gaussian-like radial bump, flat on ``|r - center| <= plateau``, clipped to zero below ``clip``."""
    dist = np.maximum(np.abs(np.asarray(r, dtype=float) - center) - plateau, 0.0)
    g = np.exp(-((dist / width) ** 2))
    return np.maximum(g - clip, 0.0) / (1.0 - clip)


@dataclass(frozen=True)
class BumpParams:
    center: float
    width: float
    p: int = 0
    theta0: float = 0.0
    plateau: float = 0.0
    amplitude: float = 1.0

    def as_dict(self) -> dict:
        return asdict(self)


def bump_state(disc: Discretization, params: BumpParams) -> StateVector:
    values = params.amplitude * bump_profile(disc.mesh.nodes, params.center, params.width, params.plateau)
    if not np.any(values > 0):
        raise ValueError("bump has no positive nodal value on this mesh")
    return nodal_state(disc, values, params.p, params.theta0)


def clipped_bump(disc: Discretization) -> StateVector:
    """Narrow radial bump centred in the annulus."""
    R0, R1 = disc.config.radii
    return bump_state(disc, BumpParams(center=0.5 * (R0 + R1), width=0.05 * (R1 - R0)))


def bump_family(disc: Discretization, size: int, seed: int) -> list[tuple[BumpParams, StateVector]]:
    """Seeded family of nonnegative bumps.

    Every other member has a flat top, which produces an early sup-norm
    overshoot under the fourth-order flow.
    """
    if size < 1:
        raise ValueError("family size must be >= 1")
    rng = np.random.default_rng(seed)
    R0, R1 = disc.config.radii
    span = R1 - R0
    p_max = min(disc.m_max, 6)
    members = []
    for i in range(size):
        width = span * rng.uniform(0.05, 0.2)
        center = rng.uniform(R0 + 0.1 * span, R1 - 0.1 * span)
        p = int(rng.integers(0, p_max + 1))
        theta0 = rng.uniform(0.0, 2.0 * math.pi)
        plateau = span * rng.uniform(0.1, 0.25) if i % 2 == 1 else 0.0
        params = BumpParams(center, width, p, theta0, plateau)
        members.append((params, bump_state(disc, params)))
    return members


def fejer_positive_part(dec: SpectralDecomposition, entry: SpectrumEntry, order: int | None = None) -> StateVector:
    """Nonnegative surrogate of the positive part of an eigenfunction ``g(r) cos(m theta)``.

    The radial factor is replaced by the Hermite interpolant of ``max(g, 0)`` at
    the nodes (zero slopes) and the angular factor ``max(cos(m theta), 0)`` by its
    Fejer mean of the given order, which is nonnegative because the Fejer kernel
    is.  For ``m = 0`` only the radial step is applied.
    """
    disc = dec.disc
    vec = dec.vectors[entry.m][:, entry.index]
    layout = disc.layout
    node_vals = np.maximum(vec[layout.value_dofs], 0.0)
    surf_vals = np.maximum(vec[list(layout.surface_dofs)], 0.0)
    radial = np.zeros(disc.n_dof)
    radial[layout.value_dofs] = node_vals
    radial[list(layout.surface_dofs)] = surf_vals
    u = disc.zeros()
    m = entry.m
    if m == 0:
        u.coeffs[0, 0] = radial
        return u
    order = disc.m_max if order is None else order
    # max(cos(phi), 0) = 1/pi + cos(phi)/2 + sum_k (-1)^(k+1) 2 cos(2k phi) / (pi (4k^2 - 1))
    n_harm = order // m
    for j in range(n_harm + 1):
        if j == 0:
            c = 1.0 / math.pi
        elif j == 1:
            c = 0.5
        elif j % 2 == 0:
            k = j // 2
            c = (-1) ** (k + 1) * 2.0 / (math.pi * (4 * k * k - 1))
        else:
            continue
        c *= 1.0 - j / (n_harm + 1)
        branch = 0 if entry.branch == "cos" else 1
        target = j * m
        if target == 0:
            u.coeffs[0, 0] += c * radial
        else:
            # shifts of the branch: cos(j m theta) for cos, and the matching phase for sin
            if branch == 0:
                u.coeffs[target, 0] += c * radial
            else:
                # max(sin(m theta), 0) = max(cos(m theta - pi/2), 0): harmonic j has phase j pi/2
                u.coeffs[target, 0] += c * math.cos(j * math.pi / 2) * radial
                u.coeffs[target, 1] += c * math.sin(j * math.pi / 2) * radial
    return u


def shifted_eigenfunction(dec: SpectralDecomposition, entry: SpectrumEntry, eps: float, grid) -> StateVector:
    """``c 1 + eps Phi`` with ``c`` the smallest constant making it nonnegative on ``grid``."""
    phi = mode_eigenvector_state(dec, entry)
    low = grid.minimum(phi).value
    u = dec.disc.ones()
    u.coeffs *= -eps * min(low, 0.0)
    u.coeffs += eps * phi.coeffs
    return u
