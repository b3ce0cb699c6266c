"""Limits of gap ladders, tensor reconstruction from gaps, circle circumferences,
and the third-order Taylor polynomial of the quadrilateral vertex P2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import charts
from .errors import ConfigError, DomainExitError, FitError
from .odeflow import DEFAULT, IntegratorConfig, TransportState, geodesic_transport
from .quadgap import FrameTriple, gaps
from .tensorlinalg import contract_gamma

TORSION_GUARD = 1e-3
MAX_CONDITION = 1e10


def default_ladder(s_max=0.1, levels=6):
    """Geometric ladder ``s_max * 2**-k`` for ``k = 0 .. levels-1``."""
    if levels < 3:
        raise ConfigError("a ladder needs at least 3 levels")
    if not s_max > 0:
        raise ConfigError("s_max must be positive")
    return s_max * 2.0 ** -np.arange(levels)


def default_terms(n_samples):
    return min(4, max(2, n_samples - 2))


@dataclass
class LimitFit:
    limit: np.ndarray
    next_coeff: np.ndarray
    residual_rms: float
    slope_estimate: float
    condition: float
    terms: int
    order: int

    @property
    def model_mismatch(self):
        """True when the samples vanish more slowly than ``s**order`` (limit diverges)."""
        return bool(np.isfinite(self.slope_estimate) and self.slope_estimate < self.order - 0.5)


def slope_estimate(s_values, values):
    """Least-squares slope of ``log |value|`` against ``log s``."""
    s = np.asarray(s_values, dtype=float)
    v = np.asarray(values, dtype=float)
    mags = np.linalg.norm(v.reshape(len(s), -1), axis=1)
    keep = mags > 0
    if keep.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(s[keep]), np.log(mags[keep]), 1)[0])


def estimate_limit(samples, order, terms=None) -> LimitFit:
    """Leading coefficient of ``gap(s) = c_n s^n + c_{n+1} s^{n+1} + ...``.

    ``samples`` is a sequence of ``(s, gap)`` pairs (``gap`` scalar or vector).
    Fits ``gap / s^n`` by a polynomial in ``s`` with ``terms`` coefficients
    (default ``min(4, max(2, len(samples) - 2))``) so the first few
    remainder terms are absorbed rather than biasing the limit.
    """
    if len(samples) < 3:
        raise FitError("at least 3 samples are required")
    s = np.array([float(a) for a, _ in samples])
    g = np.array([np.atleast_1d(np.asarray(b, dtype=float)) for _, b in samples])
    if len(np.unique(s)) != len(s) or np.any(s == 0):
        raise FitError("sample abscissae must be distinct and nonzero")
    scalar = np.ndim(samples[0][1]) == 0
    terms = default_terms(len(s)) if terms is None else int(terms)
    if not 1 <= terms <= len(s):
        raise FitError(f"cannot fit {terms} terms to {len(s)} samples")
    y = g / s[:, None] ** order
    scale = np.max(np.abs(s))
    A = np.vander(s / scale, terms, increasing=True)
    cond = float(np.linalg.cond(A))
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise FitError(f"ill-conditioned extrapolation (condition number {cond:.3g})", cond)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    coef = coef / scale ** np.arange(terms)[:, None]
    resid = y - np.vander(s, terms, increasing=True) @ coef
    rms = float(np.sqrt(np.mean(resid ** 2))) if terms < len(s) else 0.0
    limit = coef[0]
    nxt = coef[1] if terms > 1 else np.zeros_like(limit)
    if scalar:
        limit, nxt = limit[0], nxt[0]
    return LimitFit(limit, nxt, rms, slope_estimate(s, g), cond, terms, order)


# ---------------------------------------------------------------- gap ladders

@dataclass
class GapReport:
    s_values: np.ndarray
    gaps: np.ndarray
    order: int
    limit: np.ndarray
    next_coeff: np.ndarray
    residual_rms: float
    slope_estimate: float
    condition: float = float("nan")

    @classmethod
    def from_samples(cls, s_values, values, order, terms=None):
        s = np.asarray(s_values, dtype=float)
        if np.any(np.diff(s) >= 0):
            raise FitError("ladder must be strictly decreasing")
        v = np.asarray(values, dtype=float)
        fit = estimate_limit(list(zip(s, v)), order, terms)
        return cls(s, v, order, fit.limit, fit.next_coeff, fit.residual_rms,
                   fit.slope_estimate, fit.condition)


def measure_gaps(chart, t: FrameTriple, s_values, cfg: IntegratorConfig = DEFAULT):
    """Arrays ``(G_I, G_II)`` of shape ``(len(s_values), d)``."""
    gi, gii = [], []
    for s in s_values:
        a, b = gaps(chart, t, s, cfg)
        gi.append(a)
        gii.append(b)
    return np.array(gi), np.array(gii)


# ---------------------------------------------------------------- reconstruction

@dataclass
class ReconstructedTensors:
    torsion: np.ndarray
    torsion_residual: np.ndarray
    curvature: Optional[np.ndarray] = None
    curvature_residual: Optional[np.ndarray] = None
    measurements: dict = field(default_factory=dict)


class _GapTable:
    """Caches order-2/order-3 gap limits per (u, v) pair at one base point."""

    def __init__(self, chart, P, ladder, cfg):
        self.chart = chart
        self.P = np.asarray(P, dtype=float)
        self.ladder = np.asarray(ladder, dtype=float)
        self.cfg = cfg
        self._ladders = {}

    def ladders(self, u, v):
        key = (tuple(np.round(u, 15)), tuple(np.round(v, 15)))
        if key not in self._ladders:
            self._ladders[key] = measure_gaps(self.chart, FrameTriple(self.P, u, v),
                                              self.ladder, self.cfg)
        return self._ladders[key]

    def _fit(self, values, order):
        """Limit plus an error bar: fit residual and the shift from dropping one term."""
        samples = list(zip(self.ladder, values))
        fit = estimate_limit(samples, order)
        spread = np.zeros_like(fit.limit)
        if fit.terms > 1:
            spread = np.abs(fit.limit - estimate_limit(samples, order, fit.terms - 1).limit)
        return fit.limit, spread + fit.residual_rms

    def order2(self, u, v):
        gi, gii = self.ladders(u, v)
        (li, ei), (lii, eii) = self._fit(gi, 2), self._fit(gii, 2)
        return -0.5 * (li + lii), 0.5 * np.abs(li - lii) + np.maximum(ei, eii)

    def curv(self, u, v):
        """``R(u, v)(u + v)`` and an error bar, from both gap kinds."""
        gi, gii = self.ladders(u, v)
        (li, ei), (lii, eii) = self._fit(gi, 3), self._fit(gii, 3)
        return li - lii, np.abs(li + lii) + ei + eii


def torsion_from_gaps(chart, P, cfg: IntegratorConfig = DEFAULT, ladder=None, _table=None):
    """Torsion ``T[i, m, n]`` from order-2 gap limits along coordinate pairs."""
    P = chart.require(P)
    ladder = default_ladder() if ladder is None else np.asarray(ladder, dtype=float)
    table = _table or _GapTable(chart, P, ladder, cfg)
    d = chart.dim
    T = np.zeros((d, d, d))
    res = np.zeros((d, d, d))
    E = np.eye(d)
    for m in range(d):
        for n in range(m + 1, d):
            val, r = table.order2(E[m], E[n])
            T[:, m, n], T[:, n, m] = val, -val
            res[:, m, n] = res[:, n, m] = r
    return ReconstructedTensors(T, res)


def curvature_from_gaps(chart, P, cfg: IntegratorConfig = DEFAULT, ladder=None,
                        torsion_guard=TORSION_GUARD):
    """Curvature ``R[i, p, q, r]`` of a symmetric connection from order-3 gap limits.

    Only the map ``(u, v) -> R(u, v)(u + v)`` is measured; the remaining
    components follow from the polarization identities

        R(u, v) u = 1/2 R(2u, v)(2u + v) - R(u, v)(u + v)
        R(u, v) w = 1/3 (R(u, v+w)(v+w) - R(u, v) v - R(u, w) w
                         + R(u+w, v)(u+w) - R(u, v) u - R(w, v) w)
    """
    P = chart.require(P)
    ladder = default_ladder() if ladder is None else np.asarray(ladder, dtype=float)
    table = _GapTable(chart, P, ladder, cfg)
    rec = torsion_from_gaps(chart, P, cfg, ladder, _table=table)
    worst = float(np.max(np.abs(rec.torsion), initial=0.0))
    if worst > torsion_guard:
        raise FitError(f"torsion entry {worst:.3g} exceeds guard {torsion_guard:g}; "
                       "curvature recovery needs a symmetric connection")

    def rxx(a, b):  # R(a, b) a
        g2, e2 = table.curv(2 * a, b)
        g1, e1 = table.curv(a, b)
        return 0.5 * g2 - g1, 0.5 * e2 + e1

    def ryy(a, b):  # R(a, b) b
        val, err = rxx(b, a)
        return -val, err

    d = chart.dim
    E = np.eye(d)
    R = np.zeros((d, d, d, d))
    res = np.zeros((d, d, d, d))
    for q in range(d):
        for r in range(q + 1, d):
            u, v = E[q], E[r]
            for p in range(d):
                if p == q:
                    val, err = rxx(u, v)
                elif p == r:
                    val, err = ryy(u, v)
                else:
                    w = E[p]
                    parts = [(+1, ryy(u, v + w)), (-1, ryy(u, v)), (-1, ryy(u, w)),
                             (+1, rxx(u + w, v)), (-1, rxx(u, v)), (-1, rxx(w, v))]
                    val = sum(sg * pv[0] for sg, pv in parts) / 3.0
                    err = sum(pv[1] for _, pv in parts) / 3.0
                R[:, p, q, r], R[:, p, r, q] = val, -val
                res[:, p, q, r] = res[:, p, r, q] = err
    rec.curvature = R
    rec.curvature_residual = res
    return rec


# ---------------------------------------------------------------- geodesic circles

@dataclass
class CircleResult:
    kappa: float
    limit: float
    r_values: np.ndarray
    deficits: np.ndarray      # (2 pi r - C(r)) / r^3
    circumferences: np.ndarray
    fit: LimitFit


def circumference(chart, P, r, n_directions, cfg: IntegratorConfig = DEFAULT, frame=None):
    """Length of the geodesic circle of radius ``r`` about ``P``.

    ``n_directions`` unit-speed geodesics are shot at equal angles; the
    endpoint polygon is measured with the metric at segment midpoints and
    scaled by the exact flat chord-to-arc ratio ``(pi/n) / sin(pi/n)``,
    which removes the leading polygon deficit so the measured value is
    accurate to ``O(r^3 / n^2)``.
    """
    n = int(n_directions)
    F = charts.orthonormal_frame(chart, P) if frame is None else frame
    ang = 2.0 * np.pi * np.arange(n) / n
    dirs = np.cos(ang)[:, None] * F[:, 0] + np.sin(ang)[:, None] * F[:, 1]
    start = TransportState(np.broadcast_to(P, dirs.shape).copy(), dirs)
    try:
        ends = geodesic_transport(chart, start, r, cfg).x
    except DomainExitError as exc:
        raise DomainExitError(f"geodesic circle of radius {r} leaves the chart: {exc}") from None
    nxt = np.roll(ends, -1, axis=0)
    delta = nxt - ends
    g = chart.metric(0.5 * (ends + nxt))
    seg = np.sqrt(np.einsum("ki,kij,kj->k", delta, g, delta))
    half = np.pi / n
    return float(np.sum(seg) * (half / np.sin(half)))


def bertrand_puiseux(chart, P, r_ladder=None, n_directions=4096, cfg: IntegratorConfig = DEFAULT,
                     terms=None) -> CircleResult:
    """Gaussian curvature from ``(2 pi r - C(r)) / r^3 -> pi kappa / 3``."""
    if chart.dim != 2 or chart.metric is None:
        raise ConfigError("circumference curvature needs a 2-dimensional chart with a metric")
    if n_directions < 64:
        raise ConfigError("at least 64 directions are required")
    P = chart.require(P)
    r_values = default_ladder(0.1, 5) if r_ladder is None else np.asarray(r_ladder, dtype=float)
    F = charts.orthonormal_frame(chart, P)
    circ = np.array([circumference(chart, P, r, n_directions, cfg, F) for r in r_values])
    deficits = (2.0 * np.pi * r_values - circ) / r_values ** 3
    fit = estimate_limit(list(zip(r_values, deficits)), 0, terms)
    return CircleResult(3.0 * float(fit.limit) / np.pi, float(fit.limit), r_values, deficits, circ, fit)


# ---------------------------------------------------------------- Taylor polynomial of P2

def _cubic(G, D, w):
    # (-G^i_pq,r + G^i_jr G^j_pq + G^i_rk G^k_pq) w^p w^q w^r
    return (-np.einsum("ipqr,p,q,r->i", D, w, w, w)
            + np.einsum("ijr,jpq,p,q,r->i", G, G, w, w, w)
            + np.einsum("irk,kpq,p,q,r->i", G, G, w, w, w))


def _p2(x0, G, D, u, v, s):
    first = u + v
    second = -0.5 * (contract_gamma(G, u, u) + contract_gamma(G, v, v)) - contract_gamma(G, v, u)
    third = _cubic(G, D, u) + _cubic(G, D, v)
    # mixed s^2 t and s t^2 terms of the two-leg expansion
    uuv = (-np.einsum("ijkl,j,k,l->i", D, v, u, u)
           + np.einsum("ijb,jca,a,b,c->i", G, G, u, u, v)
           + np.einsum("ick,kba,a,b,c->i", G, G, u, u, v))
    uvv = (-np.einsum("ibca,a,b,c->i", D, u, v, v)
           + np.einsum("ijb,jca,a,b,c->i", G, G, u, v, v)
           + np.einsum("ick,kba,a,b,c->i", G, G, u, v, v))
    return x0 + s * first + s ** 2 * second + s ** 3 / 6.0 * third + s ** 3 / 2.0 * (uuv + uvv)


def taylor_p2(chart, t: FrameTriple, s):
    """Third-order Taylor polynomials of the vertices ``P2(s)`` and ``Q2(s)``.

    Built from the Christoffel symbols and their first partials at ``t.P``;
    ``Q2`` is the same polynomial with ``u`` and ``v`` exchanged.  Agrees
    with the integrated vertices up to ``O(s^4)``.
    """
    if chart.dgamma is None:
        raise ConfigError("Taylor polynomial needs analytic Christoffel partials (dgamma)")
    P = chart.require(t.P)
    G = chart.gamma(P)
    D = chart.dgamma(P)
    return _p2(P, G, D, t.u, t.v, s), _p2(P, G, D, t.v, t.u, s)
