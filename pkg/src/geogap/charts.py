"""Coordinate charts carrying a connection, derived tensors, and the geometry catalog.

All fields accept a single point of shape ``(d,)`` or a batch ``(..., d)``
and return arrays with the batch shape prepended.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import exprparse as xp
from .errors import ConfigError, DomainExitError, SingularError
from .tensorlinalg import MAX_DIM, curvature_apply

Field = Callable[[np.ndarray], np.ndarray]

SPHERE_MARGIN = 0.2
HYPERBOLOID_RHO = (0.05, 4.0)


@dataclass(frozen=True)
class ConnectionChart:
    """A single chart with Christoffel field ``gamma(x)[..., i, j, k]``.

    ``dgamma(x)[..., i, j, k, l]`` is the partial of ``gamma[i, j, k]`` along
    ``x_l``; when absent, :func:`curvature_at` uses central differences.
    ``bounds`` holds one open interval per coordinate.
    """

    dim: int
    gamma: Field
    dgamma: Optional[Field] = None
    bounds: tuple = None
    metric: Optional[Field] = None
    name: str = "custom"
    params: dict = field(default_factory=dict)
    symmetric: Optional[bool] = None

    def __post_init__(self):
        if not 1 <= self.dim <= MAX_DIM:
            raise ConfigError(f"dimension must be in 1..{MAX_DIM}, got {self.dim}")
        if self.bounds is None:
            object.__setattr__(self, "bounds", tuple((-np.inf, np.inf) for _ in range(self.dim)))
        if len(self.bounds) != self.dim:
            raise ConfigError("one (lo, hi) interval is needed per coordinate")
        try:
            norm = tuple((-np.inf if lo is None else float(lo), np.inf if hi is None else float(hi))
                         for lo, hi in self.bounds)
        except (TypeError, ValueError):
            raise ConfigError(f"bounds must be (lo, hi) pairs, got {self.bounds!r}") from None
        if any(not lo < hi for lo, hi in norm):
            raise ConfigError("each bounds interval needs lo < hi")
        object.__setattr__(self, "bounds", norm)

    @property
    def lower(self):
        return np.array([b[0] for b in self.bounds], dtype=float)

    @property
    def upper(self):
        return np.array([b[1] for b in self.bounds], dtype=float)

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        return np.all((x > self.lower) & (x < self.upper) & np.isfinite(x), axis=-1)

    def require(self, x, what="point"):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ConfigError(f"{what} has {x.shape[-1]} coordinates, chart dimension is {self.dim}")
        if not np.all(self.contains(x)):
            raise DomainExitError(f"{what} {np.round(x, 12).tolist()} lies outside the chart domain "
                                  f"{list(self.bounds)}", point=x)
        return x


# ---------------------------------------------------------------- expression-backed fields

class ExprArray:
    """A numpy-shaped array of :class:`~geogap.exprparse.Expr` evaluated pointwise."""

    def __init__(self, exprs: np.ndarray, d: int):
        self.exprs = exprs
        self.d = d
        self._nonzero = [(idx, e) for idx, e in np.ndenumerate(exprs)
                         if not (isinstance(e, xp.Num) and e.value == 0.0)]

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1] + self.exprs.shape)
        for idx, e in self._nonzero:
            out[(Ellipsis,) + idx] = xp.evaluate(e, x)
        return out

    def diff(self):
        """Array with one extra trailing axis holding the partials along each coordinate."""
        out = np.empty(self.exprs.shape + (self.d,), dtype=object)
        for idx, e in np.ndenumerate(self.exprs):
            for k in range(self.d):
                out[idx + (k,)] = xp.diff(e, k + 1)
        return ExprArray(out, self.d)


def _index_key(key, rank, d):
    parts = [p.strip() for p in str(key).replace(";", ",").split(",")]
    if len(parts) != rank:
        raise ConfigError(f"index key {key!r} needs {rank} comma-separated 1-based indices")
    try:
        idx = tuple(int(p) - 1 for p in parts)
    except ValueError:
        raise ConfigError(f"index key {key!r} is not numeric") from None
    if any(i < 0 or i >= d for i in idx):
        raise ConfigError(f"index key {key!r} out of range for dimension {d}")
    return idx


def _as_expr(src, d):
    if isinstance(src, xp.Expr):
        return src
    if isinstance(src, (int, float)):
        return xp.Num(float(src))
    return xp.parse(str(src), d)


def expr_array(entries, rank, d, symmetric_pairs=False):
    """Build an :class:`ExprArray` from ``{"i,j,k": "expr"}`` (1-based keys)."""
    arr = np.empty((d,) * rank, dtype=object)
    arr.fill(xp.ZERO)
    for key, src in entries.items():
        idx = _index_key(key, rank, d)
        e = _as_expr(src, d)
        arr[idx] = e
        if symmetric_pairs:
            arr[idx[::-1]] = e
    return ExprArray(arr, d)


def custom(dim, gamma, bounds=None, name="custom", params=None):
    """Chart whose Christoffel symbols are given as expressions keyed ``"i,j,k"``."""
    g = expr_array(gamma, 3, dim)
    dg = g.diff()
    sym = all(g.exprs[i, j, k] == g.exprs[i, k, j]
              for i in range(dim) for j in range(dim) for k in range(dim))
    return ConnectionChart(dim, g, dg, bounds, None, name, dict(params or {}), sym)


def levi_civita(metric, dim, bounds=None, name="metric", params=None):
    """Levi-Civita connection of a metric given as expressions keyed ``"i,j"``.

    Entries given only once are mirrored (``g_ij = g_ji``).  Christoffels
    ``G^i_jk = 1/2 g^il (g_lj,k + g_lk,j - g_jk,l)`` and their first partials
    are evaluated from symbolic derivatives of the metric.
    """
    g = expr_array(metric, 2, dim, symmetric_pairs=True)
    dg = g.diff()        # [a, b, c] = g_ab,c
    ddg = dg.diff()      # [a, b, c, m] = g_ab,cm

    def _ginv(x):
        G = g(x)
        det = np.linalg.det(G)
        scale = np.prod(np.abs(np.diagonal(G, axis1=-2, axis2=-1)), axis=-1) + 1e-300
        if np.any(np.abs(det) <= 1e-12 * scale) or not np.all(np.isfinite(G)):
            raise SingularError("metric is singular at the requested point")
        return np.linalg.inv(G)

    def _first_kind(D):
        # C[l, j, k] = 1/2 (g_lj,k + g_lk,j - g_jk,l)
        return 0.5 * (D + np.swapaxes(D, -1, -2) - np.moveaxis(D, -1, -3))

    def gamma(x):
        return np.einsum("...il,...ljk->...ijk", _ginv(x), _first_kind(dg(x)))

    def dgamma(x):
        ginv = _ginv(x)
        D = dg(x)
        DD = ddg(x)
        C = _first_kind(D)
        # d_m C[l, j, k] from second derivatives
        dC = 0.5 * (DD + np.swapaxes(DD, -2, -3)
                    - np.moveaxis(DD, -2, -4))
        # d_m g^{il} = -g^{ia} g_ab,m g^{bl}
        dginv = -np.einsum("...ia,...abm,...bl->...ilm", ginv, D, ginv)
        return (np.einsum("...ilm,...ljk->...ijkm", dginv, C)
                + np.einsum("...il,...ljkm->...ijkm", ginv, dC))

    return ConnectionChart(dim, gamma, dgamma, bounds, g, name, dict(params or {}), True)


# ---------------------------------------------------------------- builtin catalog (closed forms)

def euclidean(d=2):
    d = int(d)

    def gamma(x):
        return np.zeros(np.shape(x)[:-1] + (d, d, d))

    def dgamma(x):
        return np.zeros(np.shape(x)[:-1] + (d, d, d, d))

    def metric(x):
        return np.broadcast_to(np.eye(d), np.shape(x)[:-1] + (d, d)).copy()

    return ConnectionChart(d, gamma, dgamma, None, metric, "euclidean", {"dim": d}, True)


def sphere(radius=1.0):
    """Round sphere of radius ``r`` in the chart (theta, phi), caps removed."""
    r = float(radius)

    def gamma(x):
        th = x[..., 0]
        G = np.zeros(np.shape(x)[:-1] + (2, 2, 2))
        G[..., 0, 1, 1] = -np.sin(th) * np.cos(th)
        G[..., 1, 0, 1] = G[..., 1, 1, 0] = np.cos(th) / np.sin(th)
        return G

    def dgamma(x):
        th = x[..., 0]
        D = np.zeros(np.shape(x)[:-1] + (2, 2, 2, 2))
        D[..., 0, 1, 1, 0] = -np.cos(2 * th)
        D[..., 1, 0, 1, 0] = D[..., 1, 1, 0, 0] = -1.0 / np.sin(th) ** 2
        return D

    def metric(x):
        th = x[..., 0]
        M = np.zeros(np.shape(x)[:-1] + (2, 2))
        M[..., 0, 0] = r * r
        M[..., 1, 1] = (r * np.sin(th)) ** 2
        return M

    bounds = ((SPHERE_MARGIN, np.pi - SPHERE_MARGIN), (-np.inf, np.inf))
    return ConnectionChart(2, gamma, dgamma, bounds, metric, "sphere", {"radius": r}, True)


def hyperboloid(radius=1.0):
    """Hyperbolic plane of curvature ``-1/r^2``, metric ``d rho^2 + r^2 sinh^2(rho/r) d phi^2``."""
    r = float(radius)

    def gamma(x):
        a = x[..., 0] / r
        G = np.zeros(np.shape(x)[:-1] + (2, 2, 2))
        G[..., 0, 1, 1] = -r * np.sinh(a) * np.cosh(a)
        G[..., 1, 0, 1] = G[..., 1, 1, 0] = np.cosh(a) / (r * np.sinh(a))
        return G

    def dgamma(x):
        a = x[..., 0] / r
        D = np.zeros(np.shape(x)[:-1] + (2, 2, 2, 2))
        D[..., 0, 1, 1, 0] = -np.cosh(2 * a)
        D[..., 1, 0, 1, 0] = D[..., 1, 1, 0, 0] = -1.0 / (r * np.sinh(a)) ** 2
        return D

    def metric(x):
        a = x[..., 0] / r
        M = np.zeros(np.shape(x)[:-1] + (2, 2))
        M[..., 0, 0] = 1.0
        M[..., 1, 1] = (r * np.sinh(a)) ** 2
        return M

    bounds = (HYPERBOLOID_RHO, (-np.inf, np.inf))
    return ConnectionChart(2, gamma, dgamma, bounds, metric, "hyperboloid", {"radius": r}, True)


def constant_torsion(c=0.3):
    """Plane with the single constant coefficient ``G^1_12 = c`` (torsion ``T^1_12 = -c``)."""
    c = float(c)
    G0 = np.zeros((2, 2, 2))
    G0[0, 0, 1] = c

    def gamma(x):
        return np.broadcast_to(G0, np.shape(x)[:-1] + (2, 2, 2)).copy()

    def dgamma(x):
        return np.zeros(np.shape(x)[:-1] + (2, 2, 2, 2))

    return ConnectionChart(2, gamma, dgamma, None, None, "constant_torsion", {"c": c}, c == 0.0)


BUILTINS = ("euclidean", "sphere", "hyperboloid", "constant_torsion")


def builtin(name, params=None):
    """Look up a catalog geometry by name."""
    params = dict(params or {})
    if name == "euclidean":
        d = int(params.get("dim", params.get("d", 2)))
        if not 1 <= d <= MAX_DIM:
            raise ConfigError(f"euclidean dimension must be in 1..{MAX_DIM}")
        return euclidean(d)
    if name in ("sphere", "hyperboloid"):
        r = float(params.get("radius", params.get("r", 1.0)))
        if not r > 0:
            raise ConfigError(f"radius must be positive, got {r}")
        return sphere(r) if name == "sphere" else hyperboloid(r)
    if name == "constant_torsion":
        return constant_torsion(float(params.get("c", 0.3)))
    raise ConfigError(f"unknown geometry {name!r}; expected one of {', '.join(BUILTINS)}")


def from_spec(spec: dict) -> ConnectionChart:
    """Resolve a geometry specification (the JSON form used by the CLI)."""
    if not isinstance(spec, dict):
        raise ConfigError("geometry spec must be a JSON object")
    kind = spec.get("kind", "builtin")
    bounds = spec.get("bounds")
    try:
        if kind == "builtin":
            return builtin(spec.get("name"), spec.get("params"))
        if kind == "custom":
            return custom(int(spec["dim"]), spec["gamma"], bounds)
        if kind == "metric":
            return levi_civita(spec["g"], int(spec["dim"]), bounds)
    except KeyError as exc:
        raise ConfigError(f"geometry spec is missing field {exc}") from None
    raise ConfigError(f"unknown geometry kind {kind!r}")


# ---------------------------------------------------------------- derived tensors

def torsion_at(chart, x):
    """``T[i, m, n] = G[i, n, m] - G[i, m, n]``."""
    x = chart.require(x)
    G = chart.gamma(x)
    return np.swapaxes(G, -1, -2) - G


def is_symmetric_at(chart, x, tol=0.0):
    return bool(np.max(np.abs(torsion_at(chart, x)), initial=0.0) <= tol)


def fd_step(x):
    return 1e-5 * (1.0 + np.abs(np.asarray(x, dtype=float)))


def dgamma_fd(chart, x, h=None):
    """Central-difference partials of gamma, last axis = derivative direction."""
    x = np.asarray(x, dtype=float)
    h = fd_step(x) if h is None else np.broadcast_to(np.asarray(h, dtype=float), x.shape)
    cols = []
    for l in range(chart.dim):
        e = np.zeros(chart.dim)
        e[l] = 1.0
        hl = h[..., l:l + 1]
        xp_, xm = x + hl * e, x - hl * e
        if not (np.all(chart.contains(xp_)) and np.all(chart.contains(xm))):
            raise DomainExitError("finite-difference stencil leaves the chart domain", point=x)
        cols.append((chart.gamma(xp_) - chart.gamma(xm)) / (2.0 * h[..., l, None, None, None]))
    return np.stack(cols, axis=-1)


def gamma_partials(chart, x):
    if chart.dgamma is not None:
        return chart.dgamma(x)
    return dgamma_fd(chart, x)


def curvature_at(chart, x):
    """Curvature ``R[i, p, q, r]`` with ``(R(u, v) w)^i = R[i, p, q, r] w^p u^q v^r``.

    ``R^i_pqr = G^i_pr,q - G^i_pq,r + G^i_jq G^j_pr - G^i_jr G^j_pq``, which is
    the component form of ``R(d_q, d_r) d_p``.  On symmetric charts the
    quadratic terms may be written with either lower index order.
    """
    x = chart.require(x)
    G = chart.gamma(x)
    D = gamma_partials(chart, x)            # D[i, j, k, l] = G^i_jk,l
    dterm = np.einsum("...iprq->...ipqr", D) - D
    quad = np.einsum("...ijq,...jpr->...ipqr", G, G)
    return dterm + quad - np.swapaxes(quad, -1, -2)


def sectional_curvature(chart, x, u, v):
    """``g(R(u, v) v, u) / (g(u, u) g(v, v) - g(u, v)^2)``; needs a metric."""
    if chart.metric is None:
        raise ConfigError("sectional curvature needs a metric")
    g = chart.metric(np.asarray(x, dtype=float))
    R = curvature_at(chart, x)
    num = u @ g @ curvature_apply(R, u, v, v)
    den = (u @ g @ u) * (v @ g @ v) - (u @ g @ v) ** 2
    return float(num / den)


def gaussian_curvature(chart, x):
    """Gaussian curvature from the coordinate basis of a 2-dimensional metric chart."""
    if chart.dim != 2:
        raise ConfigError("Gaussian curvature is defined here for dimension 2 only")
    if chart.metric is None:
        raise ConfigError("Gaussian curvature needs a metric")
    e1, e2 = np.eye(2)
    return sectional_curvature(chart, x, e1, e2)


def orthonormal_frame(chart, x):
    """Gram-Schmidt of the coordinate basis under the chart metric (columns)."""
    if chart.metric is None:
        raise ConfigError("orthonormal frame needs a metric")
    g = chart.metric(np.asarray(x, dtype=float))
    L = np.linalg.cholesky(g)
    # columns of inv(L^T) are g-orthonormal and upper-triangular in the coordinate basis
    return np.linalg.inv(L.T)
