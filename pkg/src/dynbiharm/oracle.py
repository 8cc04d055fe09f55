"""Independent finite-difference reference for the per-mode spectrum.

The radial problem of mode ``m`` is written as a second-order system
``w = L_m y``, ``d L_m w = lam y`` on a uniform node grid with one ghost node
beyond each circle.  ``L_m`` uses the conservative three-point stencil

    r_i h^2 (L_m y)_i ~ r_{i-1/2} y_{i-1} - (r_{i-1/2} + r_{i+1/2} + m^2 h^2 / r_i) y_i + r_{i+1/2} y_{i+1}

so constants are annihilated exactly whenever the node radii are dyadic.
Boundary rows (Neumann, Robin coupling, dynamic surface equation) use centred
differences through the ghost nodes.  The pencil is solved by shift-invert
Arnoldi and two grids are combined by Richardson extrapolation.

This module shares nothing with the Galerkin assembly beyond the config.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.optimize import brentq
from scipy.special import jvp, yvp

from .geometry import DomainConfig


class OracleError(RuntimeError):
    pass


def _grid(R0: float, R1: float, n: int):
    h = (R1 - R0) / n
    i = np.arange(n + 1)
    r = R0 + i * h
    return h, r, r - 0.5 * h, r + 0.5 * h


def _stencil(n: int, h: float, r, r_lo, r_hi, m: int):
    """Scaled three-point stencil rows for nodes 0..n over unknowns -1..n+1."""
    lower = r_lo
    upper = r_hi
    diag = -(r_lo + r_hi) - (m * m) * h * h / r
    return lower, diag, upper


def _shift_invert_eigs(A, B, k: int, sigma: float):
    n = A.shape[0]
    lu = spla.splu((A - sigma * B).tocsc())
    op = spla.LinearOperator((n, n), matvec=lambda x: lu.solve(B @ x), dtype=float)
    nev = min(k + 4, n - 2)
    vals = spla.eigs(op, k=nev, which="LM", tol=1e-14, maxiter=20000, return_eigenvectors=False)
    lam = sigma + 1.0 / vals
    if np.max(np.abs(lam.imag)) > 1e-6 * max(1.0, np.max(np.abs(lam.real))):
        raise OracleError("finite-difference pencil returned complex eigenvalues")
    lam = np.sort(lam.real)
    return lam[:k]


def fd_neumann_laplacian_eigs(R0: float, R1: float, m: int, n: int, k: int) -> np.ndarray:
    """Smallest ``k`` eigenvalues of ``-L_m`` with ``y' = 0`` at both circles."""
    h, r, r_lo, r_hi = _grid(R0, R1, n)
    size = n + 3  # y_{-1} .. y_{n+1}
    lower, diag, upper = _stencil(n, h, r, r_lo, r_hi, m)
    rows, cols, vals = [], [], []
    for i in range(n + 1):
        c = i + 1
        rows += [i, i, i]
        cols += [c - 1, c, c + 1]
        vals += [-lower[i], -diag[i], -upper[i]]
    rows += [n + 1, n + 1, n + 2, n + 2]
    cols += [0, 2, n + 2, n]
    vals += [1.0, -1.0, 1.0, -1.0]
    A = sp.csr_matrix((vals, (rows, cols)), shape=(size, size))
    B = sp.csr_matrix((r * h * h, (np.arange(n + 1), np.arange(1, n + 2))), shape=(size, size))
    return _shift_invert_eigs(A, B, k, sigma=-1.0)


def fd_mode_eigs(config: DomainConfig, m: int, n: int, k: int, sigma: float = -1.0) -> np.ndarray:
    """Smallest ``k`` eigenvalues of the coupled bulk-surface mode-``m`` problem."""
    R0, R1, d, delta, kappa = config.R0, config.R1, config.d, config.delta, config.kappa
    h, r, r_lo, r_hi = _grid(R0, R1, n)
    lower, diag, upper = _stencil(n, h, r, r_lo, r_hi, m)
    ny = n + 3

    def Y(i):
        return i + 1

    def W(i):
        return ny + i + 1

    S0, S1 = 2 * ny, 2 * ny + 1
    size = 2 * ny + 2
    rows, cols, vals = [], [], []
    brow, bcol, bval = [], [], []

    def put(row, col, val):
        rows.append(row)
        cols.append(col)
        vals.append(val)

    eq = 0
    # w_i = (L_m y)_i
    for i in range(n + 1):
        put(eq, W(i), r[i] * h * h)
        put(eq, Y(i - 1), -lower[i])
        put(eq, Y(i), -diag[i])
        put(eq, Y(i + 1), -upper[i])
        eq += 1
    # d (L_m w)_i = lam y_i
    for i in range(n + 1):
        put(eq, W(i - 1), d * lower[i])
        put(eq, W(i), d * diag[i])
        put(eq, W(i + 1), d * upper[i])
        brow.append(eq)
        bcol.append(Y(i))
        bval.append(r[i] * h * h)
        eq += 1
    # Neumann: y'(R) = 0
    put(eq, Y(1), 1.0)
    put(eq, Y(-1), -1.0)
    eq += 1
    put(eq, Y(n + 1), 1.0)
    put(eq, Y(n - 1), -1.0)
    eq += 1
    # Robin coupling kappa d_nu w = y - y_Gamma (scaled by 2h); d_nu = -d_r inside, +d_r outside
    for sign, lo, hi, node, s in ((-1.0, -1, 1, 0, S0), (1.0, n - 1, n + 1, n, S1)):
        put(eq, W(hi), sign * kappa)
        put(eq, W(lo), -sign * kappa)
        put(eq, Y(node), -2.0 * h)
        put(eq, s, 2.0 * h)
        eq += 1
    # dynamic surface equation delta (m^2/R^2)^2 y_Gamma - d d_nu w = lam y_Gamma
    for sign, lo, hi, R, s in ((-1.0, -1, 1, R0, S0), (1.0, n - 1, n + 1, R1, S1)):
        put(eq, s, delta * (m * m / (R * R)) ** 2)
        put(eq, W(hi), -d * sign / (2.0 * h))
        put(eq, W(lo), d * sign / (2.0 * h))
        brow.append(eq)
        bcol.append(s)
        bval.append(1.0)
        eq += 1
    assert eq == size
    A = sp.csr_matrix((vals, (rows, cols)), shape=(size, size))
    B = sp.csr_matrix((bval, (brow, bcol)), shape=(size, size))
    return _shift_invert_eigs(A, B, k, sigma)


def richardson(coarse: np.ndarray, fine: np.ndarray, order: int = 2) -> np.ndarray:
    f = 2.0**order
    return (f * np.asarray(fine) - np.asarray(coarse)) / (f - 1.0)


def oracle_mode_eigs(config: DomainConfig, m: int, k: int = 5, n: int = 4096) -> np.ndarray:
    """Richardson-extrapolated finite-difference eigenvalues on ``n/2`` and ``n`` intervals."""
    coarse = fd_mode_eigs(config, m, n // 2, k)
    fine = fd_mode_eigs(config, m, n, k)
    return richardson(coarse, fine)


# ---------------------------------------------------------------------------
# closed forms


def annulus_neumann_wavenumbers(R0: float, R1: float, m: int, count: int, k_max: float = 200.0) -> np.ndarray:
    """Wavenumbers ``k > 0`` of the Neumann Laplacian on the annulus for mode ``m``.

    Roots of ``J_m'(k R0) Y_m'(k R1) - J_m'(k R1) Y_m'(k R0)``.  For ``m = 0`` the
    constant (``k = 0``) is not included.
    """

    def f(k):
        return jvp(m, k * R0) * yvp(m, k * R1) - jvp(m, k * R1) * yvp(m, k * R0)

    grid = np.arange(1e-3, k_max, 1e-3)
    vals = f(grid)
    ok = np.isfinite(vals[:-1]) & np.isfinite(vals[1:])
    brackets = np.flatnonzero(ok & (np.sign(vals[:-1]) != np.sign(vals[1:])))
    roots = [brentq(f, grid[i], grid[i + 1], xtol=1e-15, rtol=1e-15) for i in brackets[:count]]
    if len(roots) < count:
        raise OracleError(f"found only {len(roots)} Bessel roots below k = {k_max}")
    return np.array(roots)


def decoupled_spectrum(config: DomainConfig, m: int, count: int) -> np.ndarray:
    """Spectrum of mode ``m`` in the limit ``kappa -> infinity``.

    Bulk and surface separate: the bulk operator is the square of the Neumann
    Laplacian (eigenvalues ``d k^4``) and each circle contributes
    ``delta m^4 / R^4``.
    """
    k = annulus_neumann_wavenumbers(config.R0, config.R1, m, count)
    vals = [config.d * k**4, [config.delta * m**4 / R**4 for R in config.radii]]
    if m == 0:
        vals.append([0.0])
    return np.sort(np.concatenate([np.asarray(v, dtype=float) for v in vals]))[:count]
