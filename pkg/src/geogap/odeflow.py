"""Fixed-step classical RK4 for geodesics, parallel transport, and vector-field flows.

Steps are equal in size, ``n = ceil(|s| * steps_per_unit)``, so the
discretization error of a gap is a smooth function of ``s``.  All state
arrays may carry leading batch axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, DomainExitError


@dataclass(frozen=True)
class IntegratorConfig:
    steps_per_unit: int = 512
    scheme: str = "rk4"

    def __post_init__(self):
        if int(self.steps_per_unit) != self.steps_per_unit or self.steps_per_unit < 16:
            raise ConfigError(f"steps_per_unit must be an integer >= 16, got {self.steps_per_unit}")
        if self.scheme != "rk4":
            raise ConfigError(f"unsupported scheme {self.scheme!r}")

    def steps(self, s):
        return int(math.ceil(abs(s) * self.steps_per_unit))


DEFAULT = IntegratorConfig()


@dataclass(frozen=True)
class TransportState:
    """Position, geodesic tangent, and vectors parallel-transported along it."""

    x: np.ndarray
    tangent: np.ndarray
    carried: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "tangent", np.asarray(self.tangent, dtype=float))
        object.__setattr__(self, "carried", tuple(np.asarray(c, dtype=float) for c in self.carried))

    def pack(self):
        return np.stack((self.x, self.tangent) + self.carried, axis=-2)

    @classmethod
    def unpack(cls, y):
        return cls(y[..., 0, :], y[..., 1, :], tuple(y[..., k, :] for k in range(2, y.shape[-2])))


def rk4(rhs: Callable, y0, s, cfg: IntegratorConfig = DEFAULT, inside: Callable = None):
    """Integrate ``dy/dt = rhs(y)`` from 0 to ``s`` in equal RK4 steps.

    ``inside(y)`` (optional) is checked after every step; on failure a
    :class:`DomainExitError` reports the step index.
    """
    y = np.array(y0, dtype=float)
    n = cfg.steps(s)
    if n == 0:
        return y
    h = s / n
    for step in range(1, n + 1):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise DomainExitError(f"non-finite state at step {step} of {n}", step=step)
        if inside is not None and not inside(y):
            raise DomainExitError(f"trajectory left the chart domain at step {step} of {n}",
                                  step=step)
    return y


def geodesic_rhs(chart):
    """Right-hand side of the joint geodesic + parallel-transport system on packed states."""

    def rhs(y):
        x = y[..., 0, :]
        t = y[..., 1, :]
        G = chart.gamma(x)
        dy = np.empty_like(y)
        dy[..., 0, :] = t
        # tangent and carried vectors share dv^i = -G^i_jk v^j t^k
        dy[..., 1:, :] = -np.einsum("...ijk,...mj,...k->...mi", G, y[..., 1:, :], t)
        return dy

    return rhs


def geodesic_transport(chart, state: TransportState, s: float, cfg: IntegratorConfig = DEFAULT):
    """Follow the geodesic with initial tangent ``state.tangent`` for parameter ``s``."""
    if s == 0:
        return state
    chart.require(state.x, "start point")
    y = rk4(geodesic_rhs(chart), state.pack(), s, cfg,
            inside=lambda y: bool(np.all(chart.contains(y[..., 0, :]))))
    return TransportState.unpack(y)


def flow(vector_field: Callable, x0: Sequence[float], s: float, cfg: IntegratorConfig = DEFAULT,
         inside: Callable = None):
    """Endpoint of the integral curve of ``vector_field`` through ``x0`` at time ``s``."""
    x0 = np.asarray(x0, dtype=float)
    if s == 0:
        return x0.copy()
    if inside is not None and not inside(x0):
        raise DomainExitError("flow start point lies outside the domain", point=x0)
    return rk4(vector_field, x0, s, cfg, inside=inside)
