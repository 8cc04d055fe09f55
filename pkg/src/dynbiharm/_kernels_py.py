"""Pure numpy versions of the Hermite-cubic element kernels.

Global nodal layout: node ``j`` owns the value DOF ``2j`` and the radial
derivative DOF ``2j + 1``.  Element ``e`` touches DOFs ``2e .. 2e + 3``.
"""

import numpy as np


def hermite_shape(xi, h):
    """Values, first and second radial derivatives of the 4 Hermite cubics.

    Returns three arrays of shape ``xi.shape + (4,)``.  The second value
    function is formed as the exact negation of the first so that value-DOF
    sums of derivatives cancel without rounding.
    """
    xi = np.asarray(xi, dtype=float)
    h = np.broadcast_to(np.asarray(h, dtype=float), xi.shape)
    x2 = xi * xi
    x3 = x2 * xi
    v = np.stack([1.0 - 3.0 * x2 + 2.0 * x3, h * (xi - 2.0 * x2 + x3), 3.0 * x2 - 2.0 * x3, h * (x3 - x2)], axis=-1)
    d1_1 = (6.0 * x2 - 6.0 * xi) / h
    d2_1 = (12.0 * xi - 6.0) / (h * h)
    d1 = np.stack([d1_1, 1.0 - 4.0 * xi + 3.0 * x2, -d1_1, 3.0 * x2 - 2.0 * xi], axis=-1)
    d2 = np.stack([d2_1, (6.0 * xi - 4.0) / h, -d2_1, (6.0 * xi - 2.0) / h], axis=-1)
    return v, d1, d2


def bulk_factor(nodes, xi, wi, m, c_m):
    """Rows ``sqrt(c_m w r) * L_m phi_j(r_q)`` of the bulk energy factor.

    ``L_m = d^2/dr^2 + (1/r) d/dr - m^2/r^2``.  Shape ``(n_elem * nq, 2 (n_elem + 1))``.
    """
    nodes = np.asarray(nodes, dtype=float)
    h = np.diff(nodes)
    n_e, nq = h.size, xi.size
    r = nodes[:-1, None] + h[:, None] * xi[None, :]
    v, d1, d2 = hermite_shape(np.broadcast_to(xi, (n_e, nq)), h[:, None])
    rr = r[..., None]
    lm = d2 + d1 / rr - (m * m) * v / (rr * rr)
    scale = np.sqrt(c_m * (h[:, None] * wi[None, :]) * r)
    local = (scale[..., None] * lm).reshape(n_e * nq, 4)
    out = np.zeros((n_e * nq, 2 * (n_e + 1)))
    rows = np.arange(n_e * nq)
    first = 2 * np.repeat(np.arange(n_e), nq)
    for a in range(4):
        out[rows, first + a] = local[:, a]
    return out


def bulk_mass(nodes, xi, wi, c_m):
    """Consistent mass ``c_m int phi_i phi_j r dr``, dense ``(2(n+1), 2(n+1))``."""
    nodes = np.asarray(nodes, dtype=float)
    h = np.diff(nodes)
    n_e = h.size
    r = nodes[:-1, None] + h[:, None] * xi[None, :]
    v, _, _ = hermite_shape(np.broadcast_to(xi, r.shape), h[:, None])
    w = c_m * h[:, None] * wi[None, :] * r
    local = np.einsum("eq,eqa,eqb->eab", w, v, v)
    n = 2 * (n_e + 1)
    out = np.zeros((n, n))
    idx = 2 * np.arange(n_e)[:, None] + np.arange(4)[None, :]
    np.add.at(out, (idx[:, :, None], idx[:, None, :]), local)
    return out


def basis_matrix(nodes, points, deriv=0):
    """Hermite basis (or its ``deriv``-th radial derivative) at ``points``."""
    nodes = np.asarray(nodes, dtype=float)
    points = np.asarray(points, dtype=float)
    n_e = nodes.size - 1
    e = np.clip(np.searchsorted(nodes, points, side="right") - 1, 0, n_e - 1)
    h = nodes[e + 1] - nodes[e]
    xi = (points - nodes[e]) / h
    vals = hermite_shape(xi, h)[deriv]
    out = np.zeros((points.size, 2 * (n_e + 1)))
    rows = np.arange(points.size)
    for a in range(4):
        out[rows, 2 * e + a] = vals[:, a]
    return out
