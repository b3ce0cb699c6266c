"""Closed-form quadrilaterals on the round sphere and the hyperbolic plane.

A right-handed orthonormal triple (P, u, v) on either model surface is a
3x3 group element whose columns are P, u, v.  The step operator acts by
right multiplication with a fixed matrix ``M(s)``, so vertices are first
columns of matrix powers.  Chart conventions match :mod:`geogap.charts`:

* sphere: ``X = r (sin th cos ph, sin th sin ph, cos th)``, so the ambient
  point ``(r, 0, 0)`` is the chart point ``(pi/2, 0)``;
* hyperboloid ``t^2 - x^2 - y^2 = r^2``:
  ``X = (r cosh(rho/r), r sinh(rho/r) cos ph, r sinh(rho/r) sin ph)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import charts
from .errors import ConfigError, DomainExitError
from .quadgap import QuadVertices

MODELS = ("sphere", "hyperboloid")
ETA = np.diag([-1.0, 1.0, 1.0])


def _model(model):
    if model not in MODELS:
        raise ConfigError(f"unknown oracle model {model!r}; expected sphere or hyperboloid")
    return model


@dataclass(frozen=True)
class OracleFrame:
    X: np.ndarray
    model: str
    radius: float = 1.0

    def check(self, tol=1e-12):
        X = np.asarray(self.X, dtype=float)
        if self.model == "sphere":
            return bool(np.allclose(X.T @ X, np.eye(3), atol=tol)
                        and abs(np.linalg.det(X) - 1.0) <= tol)
        return bool(np.allclose(X.T @ ETA @ X, ETA, atol=tol) and X[0, 0] > 0)


def step_matrix(model, s, dtype=float):
    """The matrix ``M(s)`` with ``T_s(X) = X M(s)`` (unit radius)."""
    _model(model)
    s = np.asarray(s, dtype=dtype)
    if model == "sphere":
        c, sn = np.cos(s), np.sin(s)
        return np.array([[c, 0, sn],
                         [sn, 0, -c],
                         [0, 1, 0]], dtype=dtype)
    ch, sh = np.cosh(s), np.sinh(s)
    return np.array([[ch, 0, -sh],
                     [sh, 0, -ch],
                     [0, 1, 0]], dtype=dtype)


def _inverse(model, M):
    # exact group inverses, no elimination
    if model == "sphere":
        return M.T
    eta = ETA.astype(M.dtype)
    return eta @ M.T @ eta


def _power(M, n):
    out = np.eye(3, dtype=M.dtype)
    for _ in range(n):
        out = out @ M
    return out


def oracle_vertices(model, radius, s, frame=None) -> QuadVertices:
    """Ambient vertices ``P0..P4, Q1, Q2`` starting from ``frame`` (identity by default)."""
    _model(model)
    r = float(radius)
    if not r > 0:
        raise ConfigError("radius must be positive")
    X = np.eye(3) if frame is None else np.asarray(frame, dtype=float)
    M = step_matrix(model, s / r)
    Minv = _inverse(model, M)
    ps = [r * (X @ _power(M, n))[:, 0] for n in range(5)]
    qs = [r * (X @ _power(Minv, n))[:, 0] for n in (1, 2)]
    return QuadVertices(*ps, *qs, float(s))


def oracle_gaps(model, radius, s, frame=None):
    """Ambient gaps ``(P4 - P0, P2 - Q2)`` evaluated in extended precision.

    The gaps are O(s^3) differences of O(1) vertices; forming them in
    ``np.longdouble`` keeps the cancellation error well below what a
    ladder extrapolation at double precision can resolve.
    """
    _model(model)
    ld = np.longdouble
    r = ld(radius)
    X = np.eye(3, dtype=ld) if frame is None else np.asarray(frame, dtype=ld)
    M = step_matrix(model, ld(s) / r, dtype=ld)
    Minv = _inverse(model, M)
    M2 = M @ M
    gi = r * (X @ (M2 @ M2 - np.eye(3, dtype=ld)))[:, 0]
    gii = r * (X @ (M2 - Minv @ Minv))[:, 0]
    return gi.astype(float), gii.astype(float)


def curvature(model, radius):
    return (1.0 if _model(model) == "sphere" else -1.0) / float(radius) ** 2


def oracle_gap_limits(model, radius):
    """Coefficients ``(a, b)`` with order-3 limit ``a u + b v``, i.e. ``(kappa/2)(u - v)``."""
    k = curvature(model, radius)
    return np.array([k / 2.0, -k / 2.0])


def oracle_gap_limit_ambient(model, radius, u=(0.0, 1.0, 0.0), v=(0.0, 0.0, 1.0)):
    a, b = oracle_gap_limits(model, radius)
    return a * np.asarray(u, dtype=float) + b * np.asarray(v, dtype=float)


# ---------------------------------------------------------------- chart <-> ambient

def _surface_residual(model, r, X):
    if model == "sphere":
        return abs(X @ X - r * r) / (r * r)
    return abs(-(X @ ETA @ X) - r * r) / (r * r)


def chart_to_ambient(model, radius, x, vec=None):
    """Ambient point for chart point ``x``; with ``vec`` also push the tangent forward."""
    _model(model)
    r = float(radius)
    a, ph = np.asarray(x, dtype=float)
    if model == "sphere":
        st, ct, sp, cp = np.sin(a), np.cos(a), np.sin(ph), np.cos(ph)
        X = r * np.array([st * cp, st * sp, ct])
        J = r * np.array([[ct * cp, -st * sp],
                          [ct * sp, st * cp],
                          [-st, 0.0]])
    else:
        b = a / r
        ch, sh, sp, cp = np.cosh(b), np.sinh(b), np.sin(ph), np.cos(ph)
        X = np.array([r * ch, r * sh * cp, r * sh * sp])
        J = np.array([[sh, 0.0],
                      [ch * cp, -r * sh * sp],
                      [ch * sp, r * sh * cp]])
    if vec is None:
        return X
    return X, J @ np.asarray(vec, dtype=float)


def _jacobian(model, r, x):
    return chart_to_ambient(model, r, x, np.eye(2))[1]


def ambient_to_chart(model, radius, X, vec=None, tol=1e-9):
    """Chart point for ambient ``X``; with ``vec`` also pull the tangent back."""
    _model(model)
    r = float(radius)
    X = np.asarray(X, dtype=float)
    if _surface_residual(model, r, X) > tol:
        raise ConfigError(f"point {X.tolist()} is not on the {model} of radius {r}")
    if model == "sphere":
        th = np.arccos(np.clip(X[2] / r, -1.0, 1.0))
        ph = np.arctan2(X[1], X[0])
        x = np.array([th, ph])
        lo, hi = charts.SPHERE_MARGIN, np.pi - charts.SPHERE_MARGIN
        if not lo < th < hi:
            raise DomainExitError(f"polar angle {th} lies in an excluded polar cap", point=x)
    else:
        rho = r * np.arccosh(max(X[0] / r, 1.0))
        ph = np.arctan2(X[2], X[1])
        x = np.array([rho, ph])
        lo, hi = charts.HYPERBOLOID_RHO
        if not lo < rho < hi:
            raise DomainExitError(f"rho = {rho} lies outside the chart domain ({lo}, {hi})", point=x)
    if vec is None:
        return x
    J = _jacobian(model, r, x)
    w, *_ = np.linalg.lstsq(J, np.asarray(vec, dtype=float), rcond=None)
    if np.linalg.norm(J @ w - vec) > 1e-9 * (1.0 + np.linalg.norm(vec)):
        raise ConfigError("vector is not tangent to the surface at this point")
    return x, w


def unwrap_phi(x, reference):
    """Shift the azimuth of ``x`` by a multiple of 2 pi to lie nearest ``reference``."""
    x = np.array(x, dtype=float)
    x[1] = reference[1] + (x[1] - reference[1] + np.pi) % (2 * np.pi) - np.pi
    return x


def hyperboloid_frame(rho, radius=1.0):
    """Unit-model frame at chart point ``(rho, 0)``: point, radial unit, angular unit."""
    b = rho / float(radius)
    ch, sh = np.cosh(b), np.sinh(b)
    return np.array([[ch, sh, 0.0], [sh, ch, 0.0], [0.0, 0.0, 1.0]])
