"""Annulus geometry, radial mesh, quadrature and circle-reduced surface operators.

The bulk domain is the annulus ``R0 < r < R1``; its boundary consists of the two
circles ``r = R0`` (inner) and ``r = R1`` (outer).  Angular dependence is handled
with the real Fourier basis ``{1, cos(m theta), sin(m theta)}`` so that each
mode reduces to a radial problem.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np


class ConfigError(ValueError):
    """Invalid or unreadable configuration."""


@dataclass(frozen=True)
class DomainConfig:
    """Geometry, physics constants and discretization controls."""

    R0: float
    R1: float
    d: float
    delta: float
    kappa: float
    n_elem: int = 128
    m_max: int = 16
    quad_order: int = 6

    def __post_init__(self):
        for name in ("R0", "R1", "d", "delta", "kappa"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ConfigError(f"{name} must be finite, got {value!r}")
        if not 0.0 < self.R0 < self.R1:
            raise ConfigError(f"need 0 < R0 < R1, got R0={self.R0}, R1={self.R1}")
        for name in ("d", "delta", "kappa"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.n_elem < 2:
            raise ConfigError(f"n_elem must be >= 2, got {self.n_elem}")
        if self.quad_order < 4:
            raise ConfigError(f"quad_order must be >= 4, got {self.quad_order}")
        if self.m_max < 0:
            raise ConfigError(f"m_max must be >= 0, got {self.m_max}")

    @property
    def radii(self) -> tuple[float, float]:
        return (self.R0, self.R1)

    @property
    def coercivity_floor(self) -> float:
        """``min(d, delta, 1)``."""
        return min(self.d, self.delta, 1.0)

    def replace(self, **changes) -> "DomainConfig":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return DomainConfig(**values)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def digest(self) -> str:
        """Short stable hash used to tag state vectors."""
        text = ";".join(f"{k}={v!r}" for k, v in self.as_dict().items())
        return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class ModeIndex:
    """Fourier index ``m``; cos and sin branches share one radial system."""

    m: int

    def __post_init__(self):
        if self.m < 0:
            raise ValueError(f"Fourier index must be >= 0, got {self.m}")

    @property
    def multiplicity(self) -> int:
        return 1 if self.m == 0 else 2

    @property
    def angular_factor(self) -> float:
        """``int_0^{2pi} cos(m theta)^2 dtheta``."""
        return 2.0 * math.pi if self.m == 0 else math.pi


@dataclass(frozen=True)
class RadialMesh:
    nodes: np.ndarray
    quad_points: np.ndarray = field(repr=False)  # (n_elem, quad_order)
    quad_weights: np.ndarray = field(repr=False)  # (n_elem, quad_order)
    ref_points: np.ndarray = field(repr=False)  # Gauss points on [0, 1]
    ref_weights: np.ndarray = field(repr=False)

    @property
    def n_elem(self) -> int:
        return self.nodes.size - 1

    @property
    def spans(self) -> np.ndarray:
        return np.diff(self.nodes)

    def integrate(self, f) -> float:
        """Integrate ``f(r)`` over ``[R0, R1]`` with the element quadrature."""
        values = np.asarray(f(self.quad_points), dtype=float)
        return float(np.sum(values * self.quad_weights))


def gauss_legendre_unit(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre points and weights mapped to ``[0, 1]``."""
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def build_radial_mesh(config: DomainConfig, nodes: np.ndarray | None = None) -> RadialMesh:
    """Uniform mesh of ``n_elem`` elements on ``[R0, R1]`` with Gauss tables.

    ``nodes`` may be passed to use a graded mesh; it must start at ``R0``, end at
    ``R1`` and increase strictly.
    """
    if config.n_elem < 2:
        raise ConfigError(f"n_elem must be >= 2, got {config.n_elem}")
    if config.quad_order < 4:
        raise ConfigError(f"quad_order must be >= 4, got {config.quad_order}")
    if nodes is None:
        nodes = config.R0 + (config.R1 - config.R0) * np.arange(config.n_elem + 1) / config.n_elem
        nodes[-1] = config.R1
    else:
        nodes = np.asarray(nodes, dtype=float)
        if (
            nodes.ndim != 1
            or nodes.size != config.n_elem + 1
            or nodes[0] != config.R0
            or nodes[-1] != config.R1
            or np.any(np.diff(nodes) <= 0)
        ):
            raise ConfigError("graded nodes must increase strictly from R0 to R1 with n_elem + 1 entries")
    xi, wi = gauss_legendre_unit(config.quad_order)
    h = np.diff(nodes)
    points = nodes[:-1, None] + h[:, None] * xi[None, :]
    weights = h[:, None] * wi[None, :]
    for arr in (nodes, points, weights, xi, wi):
        arr.setflags(write=False)
    return RadialMesh(nodes, points, weights, xi, wi)


def laplace_beltrami_symbol(m: ModeIndex | int, R: float) -> float:
    """Action of the Laplace-Beltrami operator of a radius-``R`` circle on mode ``m``.

    ``cos(m theta)`` and ``sin(m theta)`` are eigenfunctions with eigenvalue
    ``-m^2 / R^2``; the bi-Laplace-Beltrami symbol is the square.
    """
    m = m.m if isinstance(m, ModeIndex) else int(m)
    if R <= 0:
        raise ValueError(f"radius must be positive, got {R}")
    return -float(m * m) / (R * R)


def mu_total(config: DomainConfig) -> float:
    """Measure of the closed annulus: area plus the length of both circles."""
    R0, R1 = config.R0, config.R1
    return math.pi * (R1 * R1 - R0 * R0) + 2.0 * math.pi * (R0 + R1)


# ---------------------------------------------------------------------------
# key = value configuration files

GEOMETRY_KEYS = {
    "R0": float,
    "R1": float,
    "d": float,
    "delta": float,
    "kappa": float,
    "n_elem": int,
    "m_max": int,
    "quad_order": int,
}
REQUIRED_KEYS = ("R0", "R1", "d", "delta", "kappa")
EVOLUTION_KEYS = {
    "T": float,
    "dt": float,
    "theta": float,
    "initial": str,
    "forcing": str,
    "record_every": int,
    "snapshot_every": int,
    "startup": int,
}


def _parse_value(key: str, raw: str, kind, lineno: int):
    try:
        if kind is int:
            value = float(raw)
            if not value.is_integer():
                raise ValueError
            return int(value)
        return kind(raw)
    except ValueError:
        raise ConfigError(f"line {lineno}: cannot parse {key} = {raw!r} as {kind.__name__}") from None


def parse_config_text(text: str) -> tuple[DomainConfig, dict]:
    """Parse ``key = value`` lines into a config and a dict of evolution settings.

    Blank lines and ``#`` comments are ignored.  Unknown or repeated keys are
    rejected with the offending line number.
    """
    geometry: dict = {}
    evolution: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line.strip()!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key in GEOMETRY_KEYS:
            target, kind = geometry, GEOMETRY_KEYS[key]
        elif key in EVOLUTION_KEYS:
            target, kind = evolution, EVOLUTION_KEYS[key]
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in target:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if not raw:
            raise ConfigError(f"line {lineno}: empty value for {key!r}")
        target[key] = _parse_value(key, raw, kind, lineno)
    missing = [k for k in REQUIRED_KEYS if k not in geometry]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")
    return DomainConfig(**geometry), evolution


def load_config(path: str | Path) -> tuple[DomainConfig, dict]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text)


def format_config(config: DomainConfig, evolution: dict | None = None) -> str:
    lines = [f"{k} = {v!r}" for k, v in config.as_dict().items()]
    for k, v in (evolution or {}).items():
        lines.append(f"{k} = {v}")
    return "\n".join(lines) + "\n"
