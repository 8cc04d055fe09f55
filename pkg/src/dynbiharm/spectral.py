"""Per-mode generalized eigenproblems, the merged spectrum and the projection P."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.linalg as sla

from .assembly import BRANCHES, Discretization, ModeSystem, StateVector
from .geometry import DomainConfig

KERNEL_TOL = 1e-8


class SpectralError(RuntimeError):
    """Eigensolver failure for one mode."""


class InvariantViolation(RuntimeError):
    """A structural property of the discrete operator does not hold."""


def solve_mode_eigs(sys: ModeSystem, k: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Smallest ``k`` eigenpairs of ``K x = lam M x``, M-orthonormal, ascending.

    With ``M = L L^T`` and ``K = s F^T F`` the eigenvalues are ``s * sigma^2`` for
    the singular values ``sigma`` of ``F L^{-T}``.  Working with the factor keeps
    the absolute error of small eigenvalues near ``eps * sigma_max * sigma``
    instead of ``eps * lam_max``.
    """
    n = sys.n_dof
    k = n if k is None else int(k)
    if not 1 <= k <= n:
        raise ValueError(f"requested {k} eigenpairs but mode {sys.m} has n_dof = {n}")
    try:
        L = sla.cholesky(sys.M, lower=True)
    except sla.LinAlgError as exc:
        raise SpectralError(f"mode {sys.m}: mass matrix is not positive definite") from exc
    H = sla.solve_triangular(L, sys.factor.T, lower=True).T
    try:
        _, s, vt = sla.svd(H, full_matrices=False, lapack_driver="gesdd")
    except sla.LinAlgError:
        try:
            _, s, vt = sla.svd(H, full_matrices=False, lapack_driver="gesvd")
        except sla.LinAlgError as exc:
            raise SpectralError(f"mode {sys.m}: singular value iteration did not converge") from exc
    lam = sys.scale * s[::-1][:k] ** 2
    vecs = sla.solve_triangular(L.T, vt[::-1][:k].T, lower=False)
    # deterministic sign: largest-magnitude component positive
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(k)])
    signs[signs == 0] = 1.0
    return lam, vecs * signs


@dataclass(frozen=True)
class SpectrumEntry:
    n: int
    lam: float
    m: int
    branch: str
    multiplicity: int
    index: int  # column in the mode's eigenvector block


@dataclass
class SpectralDecomposition:
    disc: Discretization
    values: list  # per mode, ascending eigenvalues
    vectors: list = field(repr=False)  # per mode, (n_dof, k) M-orthonormal columns
    entries: list = field(repr=False)

    @property
    def config(self) -> DomainConfig:
        return self.disc.config

    @property
    def k_per_mode(self) -> int:
        return min(v.size for v in self.values)

    @property
    def complete(self) -> bool:
        return all(v.size == self.disc.n_dof for v in self.values)

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([e.lam for e in self.entries])

    @property
    def gap(self) -> float:
        """Smallest strictly positive eigenvalue."""
        return self.entries[1].lam

    def kernel_count(self) -> int:
        lam2 = self.gap
        return int(sum(1 for e in self.entries if e.lam < KERNEL_TOL * lam2))

    @cached_property
    def vector_stack(self) -> np.ndarray:
        """Eigenvectors of all modes as one ``(modes, n_dof, k)`` array."""
        out = np.stack(self.vectors)
        out.setflags(write=False)
        return out

    @cached_property
    def value_stack(self) -> np.ndarray:
        out = np.stack(self.values)
        out.setflags(write=False)
        return out

    def kernel_vector(self) -> np.ndarray:
        return self.vectors[0][:, 0]

    def coefficients(self, u: StateVector) -> np.ndarray:
        """Modal coefficients ``<u, Phi>_M`` as a ``(modes, 2, k)`` array."""
        self.disc.check(u)
        return self.modal(u.coeffs)

    @cached_property
    def mass_vectors(self) -> np.ndarray:
        """``M Phi`` per mode, so that modal coefficients are ``c @ (M Phi)``."""
        out = self.disc.mass_stack @ self.vector_stack
        out.setflags(write=False)
        return out

    @cached_property
    def mass_functional(self) -> np.ndarray:
        """``<Phi_j, 1>_M`` for the mode-0 eigenvectors."""
        return self.disc.layout.ones() @ self.mass_vectors[0]

    def modal(self, coeffs: np.ndarray) -> np.ndarray:
        return coeffs @ self.mass_vectors

    def nodal(self, modal: np.ndarray) -> np.ndarray:
        out = modal @ np.swapaxes(self.vector_stack, -1, -2)
        out[..., 0, 1, :] = 0.0
        return out

    def synthesize(self, modal: np.ndarray) -> StateVector:
        return StateVector(self.nodal(np.asarray(modal)), self.disc.config_hash)


def global_spectrum(source, k_per_mode: int | None = None, m_max: int | None = None) -> SpectralDecomposition:
    """Merged spectrum over modes ``0..m_max``.

    ``source`` is a ``Discretization`` or a ``DomainConfig``.  ``k_per_mode``
    defaults to the full mode dimension.  Sin branches reuse the cos solve and
    are listed as separate entries with multiplicity 2.
    """
    if isinstance(source, DomainConfig):
        if m_max is not None and m_max != source.m_max:
            source = source.replace(m_max=m_max)
        disc = Discretization(source)
    else:
        disc = source
        if m_max is not None and m_max != disc.m_max:
            raise ValueError("m_max differs from the discretization's m_max")
    n = disc.n_dof
    k = n if k_per_mode is None else int(k_per_mode)
    if k < 2:
        raise ValueError("k_per_mode must be >= 2")
    if k > n:
        raise ValueError(f"k_per_mode = {k} exceeds n_dof = {n}")

    values, vectors, raw = [], [], []
    for sys in disc.systems:
        lam, vecs = solve_mode_eigs(sys, k)
        values.append(lam)
        vectors.append(vecs)
        for j, value in enumerate(lam):
            for b in range(sys.mode.multiplicity):
                raw.append((value, sys.m, b, j, sys.mode.multiplicity))
    raw.sort(key=lambda e: (e[0], e[1], e[2]))
    entries = [
        SpectrumEntry(n=i + 1, lam=float(v), m=m, branch=BRANCHES[b], multiplicity=mult, index=j)
        for i, (v, m, b, j, mult) in enumerate(raw)
    ]
    dec = SpectralDecomposition(disc, values, vectors, entries)
    count = dec.kernel_count()
    if count != 1:
        raise InvariantViolation(f"expected a one-dimensional kernel, found {count} eigenvalues below {KERNEL_TOL}*lambda_2")
    if entries[0].m != 0:
        raise InvariantViolation("the zero eigenvalue does not belong to mode 0")
    return dec


def apply_projection_P(disc: Discretization, u: StateVector) -> StateVector:
    """mu-orthogonal projection onto the constants: ``(<u,1>_mu / mu(closure)) 1``."""
    ones = disc.layout.ones()
    M0 = disc.systems[0].M
    c = float(ones @ M0 @ u.coeffs[0, 0]) / float(ones @ M0 @ ones)
    out = disc.zeros()
    out.coeffs[0, 0] = c * ones
    return out


def projection_constant(disc: Discretization, u: StateVector) -> float:
    ones = disc.layout.ones()
    M0 = disc.systems[0].M
    return float(ones @ M0 @ u.coeffs[0, 0]) / float(ones @ M0 @ ones)


@dataclass(frozen=True)
class ProjectionP:
    """mu-orthogonal projection onto the constants for one discretization.

    ``P u = (<u,1>_mu / mu(closure)) 1``; idempotent, fixes the constants and
    is self-adjoint in the mass inner product.
    """

    disc: Discretization

    @property
    def mu_total(self) -> float:
        return self.disc.mu_total()

    def constant(self, u: StateVector) -> float:
        return projection_constant(self.disc, u)

    def __call__(self, u: StateVector) -> StateVector:
        return apply_projection_P(self.disc, u)


# ---------------------------------------------------------------------------
# refinement study


@dataclass(frozen=True)
class SmoothnessRow:
    n: int
    values: tuple  # eigenvalue at each resolution, coarse to fine
    orders: tuple  # observed orders between consecutive differences
    exact: bool
    monotone: bool


def eigenfunction_smoothness_report(decs, count: int = 10) -> list[SmoothnessRow]:
    """Observed convergence orders of the first ``count`` eigenvalues.

    ``decs`` are decompositions of one configuration on successively halved
    meshes (at least three, so that an order can be formed from two
    consecutive differences).
    """
    decs = list(decs)
    if len(decs) < 3:
        raise ValueError("need decompositions on at least three resolutions")
    base = decs[0].config
    for i, dec in enumerate(decs[1:], start=1):
        cfg = dec.config
        if cfg.replace(n_elem=base.n_elem) != base or cfg.n_elem != base.n_elem * 2**i:
            raise ValueError("decompositions must share a config and double n_elem at each level")
    count = min(count, min(len(d.entries) for d in decs))
    rows = []
    for j in range(count):
        vals = np.array([d.entries[j].lam for d in decs])
        scale = max(abs(v) for d in decs for v in (d.gap,))
        if np.all(np.abs(vals) < KERNEL_TOL * scale):
            rows.append(SmoothnessRow(j + 1, tuple(vals), (), True, True))
            continue
        diffs = np.abs(np.diff(vals))
        with np.errstate(divide="ignore"):
            orders = tuple(float(np.log2(diffs[i] / diffs[i + 1])) for i in range(diffs.size - 1))
        monotone = bool(np.all(diffs[1:] < diffs[:-1]))
        rows.append(SmoothnessRow(j + 1, tuple(vals), orders, False, monotone))
    return rows


# ---------------------------------------------------------------------------
# output


SPECTRUM_HEADER = ("n", "lambda", "mode", "branch", "multiplicity")


def write_spectrum_csv(path: str | Path, dec: SpectralDecomposition) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SPECTRUM_HEADER)
        for e in dec.entries:
            writer.writerow((e.n, f"{e.lam:.17g}", e.m, e.branch, e.multiplicity))


def mode_eigenvector_state(dec: SpectralDecomposition, entry: SpectrumEntry) -> StateVector:
    """The eigenfunction of one spectrum entry as a state vector."""
    u = dec.disc.zeros()
    u.coeffs[entry.m, BRANCHES.index(entry.branch)] = dec.vectors[entry.m][:, entry.index]
    return u


def kernel_vector_error(dec: SpectralDecomposition) -> float:
    """M-norm distance between the computed kernel eigenvector and ``1 / |1|_M``."""
    disc = dec.disc
    ones = disc.layout.ones()
    M0 = disc.systems[0].M
    target = ones / math.sqrt(ones @ M0 @ ones)
    x = dec.kernel_vector()
    x = x * np.sign(x @ M0 @ ones)
    e = x - target
    return math.sqrt(max(e @ M0 @ e, 0.0))
