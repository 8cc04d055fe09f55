"""Pointwise evaluation of states on a tensor grid (angles x refined radii, plus both circles)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .assembly import Discretization, StateVector


@dataclass(frozen=True)
class GridPoint:
    """Location of a grid value: ``where`` is ``"bulk"``, ``"inner"`` or ``"outer"``."""

    where: str
    r: float
    theta: float
    value: float


class EvaluationGrid:
    """Tensor grid of ``n_theta`` angles times the radial nodes refined ``refine`` times.

    Bulk values ``y(r_i, theta_j)`` and the surface values ``y_Gamma`` on both
    circles are produced from the coefficient arrays by one matrix product per
    mode.
    """

    def __init__(self, disc: Discretization, n_theta: int = 128, refine: int = 4):
        if n_theta < 1 or refine < 1:
            raise ValueError("n_theta and refine must be positive")
        self.disc = disc
        self.n_theta = int(n_theta)
        self.refine = int(refine)
        nodes = disc.mesh.nodes
        sub = np.arange(refine) / refine
        r = (nodes[:-1, None] + np.diff(nodes)[:, None] * sub[None, :]).ravel()
        self.r = np.append(r, nodes[-1])
        self.theta = 2.0 * math.pi * np.arange(self.n_theta) / self.n_theta
        B = kernels.basis_matrix(np.ascontiguousarray(nodes), self.r)
        self.basis = np.ascontiguousarray(B[:, disc.layout.bulk_keep])
        m = np.arange(disc.m_max + 1)
        self.cos = np.cos(np.outer(m, self.theta))
        self.sin = np.sin(np.outer(m, self.theta))

    @property
    def shape(self) -> tuple[int, int]:
        return self.r.size, self.n_theta

    def refined(self) -> "EvaluationGrid":
        """Grid with twice the angles and twice the radial refinement."""
        return EvaluationGrid(self.disc, 2 * self.n_theta, 2 * self.refine)

    def _split(self, coeffs: np.ndarray):
        """Bulk radial profiles ``(..., n_r, modes, 2)`` and surface values ``(..., 2 circles, modes, 2)``."""
        n_b = self.disc.layout.n_bulk
        bulk = np.einsum("rk,...mbk->...rmb", self.basis, coeffs[..., :n_b], optimize=True)
        surf = np.moveaxis(coeffs[..., n_b:], -1, -3)
        return bulk, surf

    def _synth(self, profiles: np.ndarray) -> np.ndarray:
        return profiles[..., 0] @ self.cos + profiles[..., 1] @ self.sin

    def values_from_coeffs(self, coeffs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Field values for coefficient arrays of shape ``(..., modes, 2, n_dof)``.

        Returns ``(bulk (..., n_r, n_theta), surface (..., 2, n_theta))``.
        """
        bulk, surf = self._split(np.asarray(coeffs))
        return self._synth(bulk), self._synth(surf)

    def values(self, u: StateVector) -> tuple[np.ndarray, np.ndarray]:
        self.disc.check(u)
        return self.values_from_coeffs(u.coeffs)

    def minimum(self, u: StateVector) -> GridPoint:
        bulk, surf = self.values(u)
        return self._locate(bulk, surf, np.argmin)

    def maximum(self, u: StateVector) -> GridPoint:
        bulk, surf = self.values(u)
        return self._locate(bulk, surf, np.argmax)

    def sup_norm(self, u: StateVector) -> float:
        bulk, surf = self.values(u)
        return float(max(np.abs(bulk).max(), np.abs(surf).max()))

    def eigen_tables(self, dec) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvector values on the radial grid ``(modes, n_r, k)`` and circles ``(modes, 2, k)``."""
        key = id(dec)
        cached = getattr(self, "_tables", None)
        if cached is not None and cached[0] == key and cached[1] is dec:
            return cached[2]
        n_b = self.disc.layout.n_bulk
        vecs = dec.vector_stack
        bulk = self.basis @ vecs[:, :n_b, :]
        surf = np.ascontiguousarray(vecs[:, n_b:, :])
        self._tables = (key, dec, (bulk, surf))
        return bulk, surf

    def modal_extrema(self, dec, modal: np.ndarray, times, chunk: int = 16):
        """Grid minimum and maximum of ``sum_j exp(-lam_j t) a_j Phi_j`` for each time.

        ``modal`` holds the coefficients ``a`` as ``(modes, 2, k)``.  Returns
        ``(minima, maxima)`` arrays aligned with ``times``.
        """
        times = np.asarray(times, dtype=float)
        bulk_tab, surf_tab = self.eigen_tables(dec)
        active = [m for m in range(modal.shape[0]) if np.any(modal[m] != 0.0)]
        if not active:
            zeros = np.zeros(times.size)
            return zeros, zeros.copy()
        lam = dec.value_stack[active]  # (A, k)
        a = modal[active]  # (A, 2, k)
        trig = np.concatenate([self.cos[active], self.sin[active]])  # (2A, n_theta)
        n_act = len(active)
        mins = np.empty(times.size)
        maxs = np.empty(times.size)
        for start in range(0, times.size, chunk):
            t = times[start : start + chunk]
            c = np.exp(-t[:, None, None] * lam[None])[:, :, None, :] * a[None]  # (T, A, 2, k)
            bulk = np.empty((t.size, self.r.size, 2 * n_act))
            surf = np.empty((t.size, 2, 2 * n_act))
            for i in range(n_act):
                for b in range(2):
                    col = b * n_act + i
                    bulk[:, :, col] = c[:, i, b, :] @ bulk_tab[active[i]].T
                    surf[:, :, col] = c[:, i, b, :] @ surf_tab[active[i]].T
            fb = bulk @ trig
            fs = surf @ trig
            mins[start : start + t.size] = np.minimum(fb.min(axis=(1, 2)), fs.min(axis=(1, 2)))
            maxs[start : start + t.size] = np.maximum(fb.max(axis=(1, 2)), fs.max(axis=(1, 2)))
        return mins, maxs

    def _locate(self, bulk, surf, pick) -> GridPoint:
        ib = np.unravel_index(pick(bulk), bulk.shape)
        is_ = np.unravel_index(pick(surf), surf.shape)
        vb, vs = bulk[ib], surf[is_]
        better_surface = (vs < vb) if pick is np.argmin else (vs > vb)
        if better_surface:
            circle = ("inner", "outer")[is_[0]]
            return GridPoint(circle, self.disc.config.radii[is_[0]], float(self.theta[is_[1]]), float(vs))
        return GridPoint("bulk", float(self.r[ib[0]]), float(self.theta[ib[1]]), float(vb))
