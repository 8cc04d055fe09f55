"""Per-mode Galerkin matrices for the bulk-surface energy form and the mu mass.

For Fourier mode ``m`` the energy of ``(y, y_Gamma)`` splits into

* bulk:     ``d c_m int (L_m y)(L_m z) r dr`` with ``L_m = d_rr + d_r / r - m^2 / r^2``
* surface:  ``delta c_m sum_R R (m^2/R^2)^2 y_R z_R``
* coupling: ``(d/kappa) c_m sum_R R (y(R) - y_R)(z(R) - z_R)``

and the mass is ``c_m (int y z r dr + sum_R R y_R z_R)``.  The bulk unknown uses
Hermite cubics; the radial-derivative DOFs at ``R0`` and ``R1`` are removed, which
imposes the Neumann condition exactly.

The stiffness is built from an explicit factor ``F`` with ``K = d F^T F``.
Keeping the factor lets the eigensolver work with singular values, which
resolves the small end of the spectrum (the constant kernel in particular) far
below the round-off floor of ``K`` itself.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.linalg as sla

from . import kernels
from .geometry import DomainConfig, ModeIndex, RadialMesh, build_radial_mesh, laplace_beltrami_symbol, mu_total


class LayoutError(ValueError):
    """State vector does not match the discretization it is used with."""


@dataclass(frozen=True)
class DofLayout:
    """Reduced DOF numbering for one Fourier mode.

    Bulk DOFs come first in nodal order ``v0, v1, d1, ..., v_{n-1}, d_{n-1}, vn``
    (the boundary derivative DOFs are eliminated), followed by the surface
    unknowns on the inner and outer circle.
    """

    n_elem: int

    @property
    def n_nodal(self) -> int:
        return 2 * (self.n_elem + 1)

    @property
    def n_bulk(self) -> int:
        return 2 * self.n_elem

    @property
    def n_dof(self) -> int:
        return self.n_bulk + 2

    @cached_property
    def bulk_keep(self) -> np.ndarray:
        """Nodal indices of the kept bulk DOFs."""
        keep = np.ones(self.n_nodal, dtype=bool)
        keep[[1, self.n_nodal - 1]] = False
        return np.flatnonzero(keep)

    @cached_property
    def value_dofs(self) -> np.ndarray:
        """Reduced indices of the nodal-value DOFs."""
        return np.flatnonzero(self.bulk_keep % 2 == 0)

    @property
    def trace_dofs(self) -> tuple[int, int]:
        """Reduced indices of ``y(R0)`` and ``y(R1)``."""
        return 0, self.n_bulk - 1

    @property
    def surface_dofs(self) -> tuple[int, int]:
        return self.n_bulk, self.n_bulk + 1

    def ones(self) -> np.ndarray:
        v = np.zeros(self.n_dof)
        v[self.value_dofs] = 1.0
        v[list(self.surface_dofs)] = 1.0
        return v


@dataclass(frozen=True)
class ModeSystem:
    mode: ModeIndex
    layout: DofLayout
    K: np.ndarray = field(repr=False)
    M: np.ndarray = field(repr=False)
    factor: np.ndarray = field(repr=False)  # K = scale * factor.T @ factor
    scale: float
    blocks: dict = field(repr=False)  # name -> row slice of factor

    @property
    def m(self) -> int:
        return self.mode.m

    @property
    def angular_factor(self) -> float:
        return self.mode.angular_factor

    @property
    def n_dof(self) -> int:
        return self.layout.n_dof

    def part_matrix(self, name: str) -> np.ndarray:
        rows = self.factor[self.blocks[name]]
        part = self.scale * (rows.T @ rows)
        return 0.5 * (part + part.T)


def assemble_mode_system(config: DomainConfig, mesh: RadialMesh, m: ModeIndex | int) -> ModeSystem:
    """Stiffness and mass for one Fourier mode."""
    mode = m if isinstance(m, ModeIndex) else ModeIndex(int(m))
    if mesh.n_elem != config.n_elem or mesh.nodes[0] != config.R0 or mesh.nodes[-1] != config.R1:
        raise ValueError("mesh was not built from this config")
    layout = DofLayout(config.n_elem)
    c_m = mode.angular_factor
    nodes = np.ascontiguousarray(mesh.nodes)
    xi = np.ascontiguousarray(mesh.ref_points)
    wi = np.ascontiguousarray(mesh.ref_weights)

    keep = layout.bulk_keep
    n_b, n = layout.n_bulk, layout.n_dof
    s_in, s_out = layout.surface_dofs
    t_in, t_out = layout.trace_dofs

    bulk = kernels.bulk_factor(nodes, xi, wi, mode.m, c_m)[:, keep]
    n_q = bulk.shape[0]
    # every factor row is normalised by sqrt(d) so that K = d F^T F
    factor = np.zeros((n_q + 4, n))
    factor[:n_q, :n_b] = bulk
    surf_ratio = config.delta / config.d
    for k, (R, s, t) in enumerate(((config.R0, s_in, t_in), (config.R1, s_out, t_out))):
        lb = laplace_beltrami_symbol(mode, R)
        factor[n_q + k, s] = math.sqrt(surf_ratio * c_m * R) * abs(lb)
        w = math.sqrt(c_m * R / config.kappa)
        factor[n_q + 2 + k, t] = w
        factor[n_q + 2 + k, s] = -w
    blocks = {
        "bulk": slice(0, n_q),
        "surface": slice(n_q, n_q + 2),
        "coupling": slice(n_q + 2, n_q + 4),
    }

    K = config.d * (factor.T @ factor)
    K = 0.5 * (K + K.T)

    M = np.zeros((n, n))
    M[:n_b, :n_b] = kernels.bulk_mass(nodes, xi, wi, c_m)[np.ix_(keep, keep)]
    M[s_in, s_in] = c_m * config.R0
    M[s_out, s_out] = c_m * config.R1
    M = 0.5 * (M + M.T)
    for arr in (K, M, factor):
        arr.setflags(write=False)
    return ModeSystem(mode, layout, K, M, factor, config.d, blocks)


# ---------------------------------------------------------------------------
# state vectors


@dataclass
class StateVector:
    """Coefficients per mode and angular branch (0 = cos, 1 = sin).

    ``coeffs`` has shape ``(m_max + 1, 2, n_dof)``; the sin branch of mode 0 is
    identically zero.
    """

    coeffs: np.ndarray
    config_hash: str = ""

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.ndim != 3 or self.coeffs.shape[1] != 2:
            raise LayoutError(f"coefficient array must be (modes, 2, n_dof), got {self.coeffs.shape}")
        if not np.all(np.isfinite(self.coeffs)):
            raise LayoutError("state vector has non-finite entries")
        if np.any(self.coeffs[0, 1] != 0.0):
            raise LayoutError("mode 0 has no sin branch")

    @property
    def m_max(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def n_dof(self) -> int:
        return self.coeffs.shape[2]

    def with_coeffs(self, coeffs) -> "StateVector":
        return StateVector(coeffs, self.config_hash)


BRANCHES = ("cos", "sin")


class Discretization:
    """Mesh, layout and all per-mode systems for one configuration."""

    def __init__(self, config: DomainConfig, mesh: RadialMesh | None = None):
        self.config = config
        self.mesh = mesh if mesh is not None else build_radial_mesh(config)
        self.layout = DofLayout(config.n_elem)
        self.systems = [assemble_mode_system(config, self.mesh, m) for m in range(config.m_max + 1)]
        self.config_hash = config.digest()

    @property
    def m_max(self) -> int:
        return self.config.m_max

    @property
    def n_dof(self) -> int:
        return self.layout.n_dof

    def zeros(self) -> StateVector:
        return StateVector(np.zeros((self.m_max + 1, 2, self.n_dof)), self.config_hash)

    def ones(self) -> StateVector:
        u = self.zeros()
        u.coeffs[0, 0] = self.layout.ones()
        return u

    def check(self, u: StateVector) -> None:
        if u.coeffs.shape != (self.m_max + 1, 2, self.n_dof):
            raise LayoutError(
                f"state layout {u.coeffs.shape} does not match discretization "
                f"{(self.m_max + 1, 2, self.n_dof)}"
            )
        if u.config_hash and u.config_hash != self.config_hash:
            raise LayoutError("state vector was built for a different configuration")

    def mass_apply(self, u: StateVector) -> np.ndarray:
        self.check(u)
        return u.coeffs @ self.mass_stack

    def m_inner(self, u: StateVector, v: StateVector) -> float:
        self.check(v)
        return float(np.sum(self.mass_apply(u) * v.coeffs))

    def m_norm(self, u: StateVector) -> float:
        return math.sqrt(max(self.m_inner(u, u), 0.0))

    def mu_mass(self, u: StateVector) -> float:
        """``<u, 1>_mu``; only the mode-0 cos branch contributes."""
        self.check(u)
        return float(self.layout.ones() @ self.systems[0].M @ u.coeffs[0, 0])

    def mu_total(self) -> float:
        return mu_total(self.config)

    @cached_property
    def mass_stack(self) -> np.ndarray:
        """All mode mass matrices as one ``(modes, n_dof, n_dof)`` array."""
        out = np.stack([sys.M for sys in self.systems])
        out.setflags(write=False)
        return out

    @cached_property
    def factor_stack(self) -> np.ndarray:
        out = np.stack([sys.factor for sys in self.systems])
        out.setflags(write=False)
        return out

    def m_norm_coeffs(self, coeffs: np.ndarray) -> float:
        """M-norm of a raw coefficient array ``(modes, 2, n_dof)``."""
        return math.sqrt(max(float(np.sum((coeffs @ self.mass_stack) * coeffs)), 0.0))


def form_energy(disc: Discretization, u: StateVector) -> float:
    """Energy form evaluated on ``u`` (sum over modes and branches).

    Computed as ``d |F u|^2``, which equals ``u^T K u`` but keeps kernel
    vectors at exactly zero.
    """
    disc.check(u)
    y = disc.factor_stack @ np.swapaxes(u.coeffs, 1, 2)
    return disc.config.d * float(np.sum(y * y))


def seminorm_parts(disc: Discretization, u: StateVector) -> tuple[float, float, float]:
    """``(d |Lap y|^2, delta |Lap_Gamma y_Gamma|^2, (d/kappa) |y - y_Gamma|^2_Gamma)``."""
    disc.check(u)
    parts = np.zeros(3)
    for m, sys in enumerate(disc.systems):
        for k, name in enumerate(("bulk", "surface", "coupling")):
            rows = sys.factor[sys.blocks[name]]
            y = rows @ u.coeffs[m].T
            parts[k] += sys.scale * float(np.sum(y * y))
    return float(parts[0]), float(parts[1]), float(parts[2])


# ---------------------------------------------------------------------------
# projection of closed-form data


def _fourier_coefficients(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """cos / sin coefficients along the last axis of uniformly sampled data."""
    n = samples.shape[-1]
    spec = np.fft.rfft(samples, axis=-1) / n
    a = 2.0 * spec.real
    b = -2.0 * spec.imag
    a[..., 0] *= 0.5
    b[..., 0] = 0.0
    if n % 2 == 0:
        a[..., -1] *= 0.5
        b[..., -1] = 0.0
    return a, b


def _mode_weights(n_modes: int) -> np.ndarray:
    w = np.full(n_modes, math.pi)
    w[0] = 2.0 * math.pi
    return w


def project_function(disc: Discretization, y, y_gamma=None, n_theta: int | None = None):
    """Mass-orthogonal projection of ``(y, y_Gamma)`` onto the discrete space.

    ``y(r, theta)`` is a vectorized callable; ``y_gamma`` is a pair of callables
    ``(g_inner(theta), g_outer(theta))`` or ``None`` for the trace of ``y``.

    Returns ``(state, tail_fraction)`` where ``tail_fraction`` is the share of
    the mu-energy carried by angular modes above ``m_max``.
    """
    cfg, mesh = disc.config, disc.mesh
    if n_theta is None:
        n_theta = max(256, 4 * (cfg.m_max + 1))
    theta = 2.0 * math.pi * np.arange(n_theta) / n_theta
    rq = mesh.quad_points.ravel()
    wq = mesh.quad_weights.ravel()
    bulk = np.asarray(y(rq[:, None], theta[None, :]), dtype=float) * np.ones((rq.size, n_theta))
    if y_gamma is None:
        surf = np.stack([np.asarray(y(R, theta), dtype=float) * np.ones(n_theta) for R in cfg.radii])
    else:
        surf = np.stack([np.asarray(g(theta), dtype=float) * np.ones(n_theta) for g in y_gamma])
    if not (np.all(np.isfinite(bulk)) and np.all(np.isfinite(surf))):
        raise ValueError("sampled data contains NaN or infinite values")

    a_bulk, b_bulk = _fourier_coefficients(bulk)  # (n_q, n_modes)
    a_surf, b_surf = _fourier_coefficients(surf)  # (2, n_modes)

    cw = _mode_weights(a_bulk.shape[1])
    radii = np.array(cfg.radii)
    per_mode = cw * (
        wq @ (rq[:, None] * (a_bulk**2 + b_bulk**2)) + radii @ (a_surf**2 + b_surf**2)
    )
    total = float(per_mode.sum())
    tail = float(per_mode[cfg.m_max + 1 :].sum()) / total if total > 0 else 0.0

    phi = kernels.basis_matrix(np.ascontiguousarray(mesh.nodes), rq)[:, disc.layout.bulk_keep]
    u = disc.zeros()
    n_b = disc.layout.n_bulk
    for m, sys in enumerate(disc.systems):
        if m >= a_bulk.shape[1]:
            break
        chol = sla.cho_factor(sys.M)
        for br, (cb, cs) in enumerate(((a_bulk, a_surf), (b_bulk, b_surf))):
            if m == 0 and br == 1:
                continue
            load = np.zeros(disc.n_dof)
            load[:n_b] = sys.angular_factor * (phi.T @ (wq * rq * cb[:, m]))
            load[n_b:] = sys.angular_factor * radii * cs[:, m]
            u.coeffs[m, br] = sla.cho_solve(chol, load)
    return u, tail


# ---------------------------------------------------------------------------
# text exchange formats


def write_matrix(path: str | Path, A: np.ndarray) -> None:
    """Dense row-major text dump, one matrix row per line."""
    np.savetxt(path, np.asarray(A), fmt="%.17g")


def read_matrix(path: str | Path) -> np.ndarray:
    return np.atleast_2d(np.loadtxt(path))


STATE_HEADER = ("mode", "branch", "dof_index", "value")


def write_state_csv(path: str | Path, u: StateVector) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(STATE_HEADER)
        for m in range(u.m_max + 1):
            for b, name in enumerate(BRANCHES):
                if m == 0 and b == 1:
                    continue
                for i, value in enumerate(u.coeffs[m, b]):
                    writer.writerow((m, name, i, f"{value:.17g}"))


def read_state_csv(path: str | Path, disc: Discretization) -> StateVector:
    u = disc.zeros()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != STATE_HEADER:
            raise LayoutError(f"{path}: expected header {','.join(STATE_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                m, branch, i, value = int(row[0]), row[1].strip(), int(row[2]), float(row[3])
            except (ValueError, IndexError):
                raise LayoutError(f"{path}:{lineno}: malformed row {row!r}") from None
            if branch not in BRANCHES or not 0 <= m <= disc.m_max or not 0 <= i < disc.n_dof:
                raise LayoutError(f"{path}:{lineno}: entry ({m}, {branch}, {i}) outside the layout")
            if m == 0 and branch == "sin":
                raise LayoutError(f"{path}:{lineno}: mode 0 has no sin branch")
            u.coeffs[m, BRANCHES.index(branch), i] = value
    return StateVector(u.coeffs, disc.config_hash)
