"""Frame-bundle coordinates, the basic horizontal fields, and their brackets.

A frame point is ``(x, F)`` with the columns of ``F`` the frame vectors.
Bundle coordinates are ``x`` followed by ``F`` flattened row-major, so the
component ``F[i, l]`` sits at index ``d + i*d + l``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import charts
from .errors import ConfigError, DomainExitError, SingularError

DET_GUARD = 1e-9


@dataclass(frozen=True)
class FramePoint:
    x: np.ndarray
    frame: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        F = np.asarray(self.frame, dtype=float)
        if F.shape != (x.size, x.size):
            raise ConfigError(f"frame must be {x.size}x{x.size}, got {F.shape}")
        if abs(np.linalg.det(F)) <= DET_GUARD:
            raise SingularError("frame is singular (|det| <= 1e-9)")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "frame", F)

    @property
    def dim(self):
        return self.x.size

    def coords(self):
        return np.concatenate([self.x, self.frame.ravel()])

    @classmethod
    def from_coords(cls, z, d):
        z = np.asarray(z, dtype=float)
        return cls(z[:d], z[d:].reshape(d, d))


@dataclass(frozen=True)
class BundleVector:
    base_part: np.ndarray
    vert_part: np.ndarray

    def coords(self):
        return np.concatenate([self.base_part, np.asarray(self.vert_part).ravel()])

    @classmethod
    def from_coords(cls, w, d):
        w = np.asarray(w, dtype=float)
        return cls(w[:d], w[d:].reshape(d, d))


def _xi_components(chart, m, z):
    """Coordinates of ``xi_m`` at bundle coordinates ``z`` (batched over leading axes)."""
    d = chart.dim
    x = z[..., :d]
    F = z[..., d:].reshape(z.shape[:-1] + (d, d))
    base = F[..., :, m]
    vert = -np.einsum("...ijk,...jl,...k->...il", chart.gamma(x), F, F[..., :, m])
    return np.concatenate([base, vert.reshape(z.shape[:-1] + (d * d,))], axis=-1)


def xi_field(chart, m, y: FramePoint) -> BundleVector:
    """The basic field ``xi_m``: horizontal, projecting to the ``m``-th frame vector."""
    if not 0 <= m < chart.dim:
        raise ConfigError(f"frame index {m} out of range for dimension {chart.dim}")
    chart.require(y.x)
    return BundleVector.from_coords(_xi_components(chart, m, y.coords()), chart.dim)


def bundle_field(chart, m):
    """``xi_m`` as a plain vector field on bundle coordinates, for flows."""
    return lambda z: _xi_components(chart, m, np.asarray(z, dtype=float))


def bundle_inside(chart):
    return lambda z: bool(np.all(chart.contains(np.asarray(z)[..., :chart.dim])))


def default_h(y: FramePoint):
    return 1e-4 * (1.0 + float(np.max(np.abs(y.coords()))))


def bracket_numeric(chart, m, n, y: FramePoint, h=None) -> BundleVector:
    """``[xi_m, xi_n]`` at ``y`` from central differences of the field components."""
    h = default_h(y) if h is None else float(h)
    if not h > 0:
        raise ConfigError("finite-difference step must be positive")
    d = chart.dim
    z = y.coords()
    N = z.size
    stencil = np.concatenate([z + h * np.eye(N), z - h * np.eye(N)])
    if not np.all(chart.contains(stencil[:, :d])):
        raise DomainExitError("finite-difference stencil leaves the chart domain", point=y.x)
    fm = _xi_components(chart, m, stencil)
    fn = _xi_components(chart, n, stencil)
    Jm = ((fm[:N] - fm[N:]) / (2 * h)).T  # J[a, b] = d xi^a / d z^b
    Jn = ((fn[:N] - fn[N:]) / (2 * h)).T
    xm = _xi_components(chart, m, z)
    xn = _xi_components(chart, n, z)
    return BundleVector.from_coords(Jn @ xm - Jm @ xn, d)


@dataclass
class BracketReport:
    pairs: list            # (m, n) in order
    base_deviation: list   # |pi_* [xi_m, xi_n] + T(u_m, u_n)|_max per pair
    vert_deviation: list   # |E + R(u_m, u_n)|_max per pair, or None when skipped
    symmetric: bool

    @property
    def max_base_deviation(self):
        return max(self.base_deviation, default=0.0)

    @property
    def max_vert_deviation(self):
        vals = [v for v in self.vert_deviation if v is not None]
        return max(vals) if vals else None


def vertical_endomorphism(bv: BundleVector, y: FramePoint):
    """Read a vertical vector as an endomorphism of the tangent space: ``V F^-1``."""
    return bv.vert_part @ np.linalg.inv(y.frame)


def verify_frame_bracket(chart, y: FramePoint, h=None, symmetric=None) -> BracketReport:
    """Compare ``pi_*[xi_m, xi_n]`` with ``-T(u_m, u_n)`` and, for a symmetric
    connection, the vertical endomorphism with ``-R(u_m, u_n)``."""
    chart.require(y.x)
    d = chart.dim
    F = y.frame
    T = charts.torsion_at(chart, y.x)
    if symmetric is None:
        symmetric = bool(np.max(np.abs(T), initial=0.0) <= 1e-12)
    R = charts.curvature_at(chart, y.x) if symmetric else None
    pairs, base_dev, vert_dev = [], [], []
    for m in range(d):
        for n in range(m + 1, d):
            b = bracket_numeric(chart, m, n, y, h)
            um, un = F[:, m], F[:, n]
            expect_base = -np.einsum("imn,m,n->i", T, um, un)
            pairs.append((m, n))
            base_dev.append(float(np.max(np.abs(b.base_part - expect_base))))
            if symmetric:
                expect = -np.einsum("ipqr,q,r->ip", R, um, un)
                vert_dev.append(float(np.max(np.abs(vertical_endomorphism(b, y) - expect))))
            else:
                vert_dev.append(None)
    return BracketReport(pairs, base_dev, vert_dev, symmetric)
