"""The step operator on (point, u, v) triples, geodesic quadrilaterals, and gap functions.

``apply_T`` moves along the geodesic with tangent ``u`` for parameter ``s``
and returns ``(endpoint, transported v, -transported u)``.  Iterating it
traces the open quadrilateral ``P0 .. P4``; iterating the inverse traces
``Q1, Q2``.  Gaps are coordinate differences in the working chart.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainExitError
from .odeflow import DEFAULT, IntegratorConfig, TransportState, flow, geodesic_transport


@dataclass(frozen=True)
class FrameTriple:
    P: np.ndarray
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        for name in ("P", "u", "v"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))

    def scaled(self, lam):
        return FrameTriple(self.P, lam * self.u, lam * self.v)


@dataclass(frozen=True)
class QuadVertices:
    P0: np.ndarray
    P1: np.ndarray
    P2: np.ndarray
    P3: np.ndarray
    P4: np.ndarray
    Q1: np.ndarray
    Q2: np.ndarray
    s: float

    def as_dict(self):
        return {k: getattr(self, k) for k in ("P0", "P1", "P2", "P3", "P4", "Q1", "Q2")}

    @property
    def gap_I(self):
        return self.P4 - self.P0

    @property
    def gap_II(self):
        return self.P2 - self.Q2


def apply_T(chart, t: FrameTriple, s, cfg: IntegratorConfig = DEFAULT) -> FrameTriple:
    out = geodesic_transport(chart, TransportState(t.P, t.u, (t.v,)), s, cfg)
    return FrameTriple(out.x, out.carried[0], -out.tangent)


def apply_T_inv(chart, t: FrameTriple, s, cfg: IntegratorConfig = DEFAULT) -> FrameTriple:
    """Two-sided inverse of :func:`apply_T`.

    If ``apply_T(P', u', v') = (P, u, v)`` then the geodesic from ``P'`` along
    ``u'`` arrives at ``P`` with velocity ``-v``; reversing it, ``P'`` is
    reached from ``P`` along ``v``, ``u'`` is minus the arrival velocity and
    ``v'`` is ``u`` carried along the same geodesic.
    """
    out = geodesic_transport(chart, TransportState(t.P, t.v, (t.u,)), s, cfg)
    return FrameTriple(out.x, -out.tangent, out.carried[0])


def _leg(fn, chart, t, s, cfg, leg):
    try:
        return fn(chart, t, s, cfg)
    except DomainExitError as exc:
        raise DomainExitError(f"leg {leg}: {exc}", step=exc.step, point=exc.point, leg=leg) from None


def quad_vertices(chart, t: FrameTriple, s, cfg: IntegratorConfig = DEFAULT) -> QuadVertices:
    chart.require(t.P, "P0")
    ps = [t.P]
    cur = t
    for n in range(1, 5):
        cur = _leg(apply_T, chart, cur, s, cfg, f"P{n - 1}->P{n}")
        ps.append(cur.P)
    q1 = _leg(apply_T_inv, chart, t, s, cfg, "P0->Q1")
    q2 = _leg(apply_T_inv, chart, q1, s, cfg, "Q1->Q2")
    return QuadVertices(*ps, q1.P, q2.P, float(s))


def gaps(chart, t: FrameTriple, s, cfg: IntegratorConfig = DEFAULT):
    """Both gaps ``(P4 - P0, P2 - Q2)`` from a single quadrilateral construction."""
    q = quad_vertices(chart, t, s, cfg)
    return q.gap_I, q.gap_II


def gap_GI(chart, t: FrameTriple, s, cfg: IntegratorConfig = DEFAULT):
    return gaps(chart, t, s, cfg)[0]


def gap_GII(chart, t: FrameTriple, s, cfg: IntegratorConfig = DEFAULT):
    return gaps(chart, t, s, cfg)[1]


# ---------------------------------------------------------------- flow commutators

def flow_vertices(xi, eta, x0, s, cfg: IntegratorConfig = DEFAULT, inside=None):
    """Vertices ``P0..P4, Q1, Q2`` of the flow quadrilaterals of two vector fields."""
    neg_xi = lambda x: -xi(x)   # noqa: E731
    neg_eta = lambda x: -eta(x)  # noqa: E731
    p0 = np.asarray(x0, dtype=float)
    p1 = flow(xi, p0, s, cfg, inside)
    p2 = flow(eta, p1, s, cfg, inside)
    p3 = flow(neg_xi, p2, s, cfg, inside)
    p4 = flow(neg_eta, p3, s, cfg, inside)
    q1 = flow(eta, p0, s, cfg, inside)
    q2 = flow(xi, q1, s, cfg, inside)
    return QuadVertices(p0, p1, p2, p3, p4, q1, q2, float(s))


def flow_gap_FI(xi, eta, x0, s, cfg: IntegratorConfig = DEFAULT, inside=None):
    """``psi_{-s} phi_{-s} psi_s phi_s (x0) - x0``."""
    return flow_vertices(xi, eta, x0, s, cfg, inside).gap_I


def flow_gap_FII(xi, eta, x0, s, cfg: IntegratorConfig = DEFAULT, inside=None):
    """``psi_s phi_s (x0) - phi_s psi_s (x0)``."""
    return flow_vertices(xi, eta, x0, s, cfg, inside).gap_II
